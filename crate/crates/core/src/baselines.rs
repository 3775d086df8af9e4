//! Comparison estimators: OLS, ridge, forward selection under the classical
//! AIC, and the Lasso by cyclic coordinate descent.
//!
//! Every estimator works on a [`StandardizedDesign`], so the intercept is
//! unpenalized and recovered by [`unstandardize_coefficients`].

use ndarray::{Array1, Array2};

use crate::data::{standardize, unstandardize_coefficients, Dataset, SparseCoefficients, StandardizedDesign};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, geometric_grid_desc, spd_solve, sum_sq};
use crate::model_selection::kfold_split;

const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tuning {
    Cv10,
    Oracle,
}

fn gram(g: &StandardizedDesign) -> Array2<f64> {
    let p = g.p();
    let mut a = Array2::zeros((p, p));
    for j in 0..p {
        for k in j..p {
            let v = dot(g.column(j), g.column(k));
            a[[j, k]] = v;
            a[[k, j]] = v;
        }
    }
    a
}

fn gty(g: &StandardizedDesign) -> Vec<f64> {
    let y = g.y_centered();
    (0..g.p()).map(|j| dot(g.column(j), y)).collect()
}

/// Least squares on all columns. Requires `p < n` and full column rank.
pub fn ols_fit(g: &StandardizedDesign) -> Result<SparseCoefficients> {
    if g.p() >= g.n() {
        return Err(Error::SingularDesign);
    }
    let theta = spd_solve(&gram(g), &gty(g), SINGULAR_TOL)?;
    unstandardize_coefficients(theta.as_slice().expect("contiguous"), g.transform())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeConfig {
    pub lambda_grid: Vec<f64>,
    pub tuning: Tuning,
    pub folds: usize,
}

impl Default for RidgeConfig {
    fn default() -> Self {
        let mut lambda_grid = geometric_grid_desc(1e4, 1e-4, 50);
        lambda_grid.reverse();
        Self { lambda_grid, tuning: Tuning::Cv10, folds: 10 }
    }
}

impl RidgeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_grid.is_empty()
            || self.lambda_grid.iter().any(|l| !(*l > 0.0))
            || self.lambda_grid.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidConfig("ridge grid must be positive and strictly ascending".into()));
        }
        Ok(())
    }
}

/// Ridge solver that factors once per penalty, reusing `GᵀG` (`p ≤ n`) or
/// `GGᵀ` (`p > n`) across a grid.
pub struct RidgeSolver<'a> {
    g: &'a StandardizedDesign,
    primal: bool,
    kernel: Array2<f64>,
    rhs: Vec<f64>,
}

impl<'a> RidgeSolver<'a> {
    pub fn new(g: &'a StandardizedDesign) -> Self {
        if g.p() <= g.n() {
            Self { g, primal: true, kernel: gram(g), rhs: gty(g) }
        } else {
            let n = g.n();
            let mut k = Array2::zeros((n, n));
            for j in 0..g.p() {
                let c = g.column(j);
                for a in 0..n {
                    if c[a] != 0.0 {
                        for b in 0..n {
                            k[[a, b]] += c[a] * c[b];
                        }
                    }
                }
            }
            Self { g, primal: false, kernel: k, rhs: g.y_centered().to_vec() }
        }
    }

    /// Standardized coefficients minimizing `‖y − Gθ‖² + λ‖θ‖²`.
    pub fn theta(&self, lambda: f64) -> Result<Vec<f64>> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!("ridge penalty {lambda} must be nonnegative")));
        }
        let mut a = self.kernel.clone();
        a.diag_mut().mapv_inplace(|d| d + lambda);
        let sol = spd_solve(&a, &self.rhs, if lambda > 0.0 { 0.0 } else { SINGULAR_TOL })?;
        if self.primal {
            Ok(sol.to_vec())
        } else {
            let alpha = sol.as_slice().expect("contiguous");
            Ok((0..self.g.p()).map(|j| dot(self.g.column(j), alpha)).collect())
        }
    }

    pub fn fit(&self, lambda: f64) -> Result<SparseCoefficients> {
        unstandardize_coefficients(&self.theta(lambda)?, self.g.transform())
    }
}

pub fn ridge_fit(g: &StandardizedDesign, lambda: f64) -> Result<SparseCoefficients> {
    RidgeSolver::new(g).fit(lambda)
}

#[derive(Debug, Clone)]
pub struct RidgeCv {
    pub coefficients: SparseCoefficients,
    pub lambda: f64,
    pub cv_error: Vec<f64>,
}

/// K-fold cross-validated ridge over `cfg.lambda_grid`.
pub fn ridge_cv(d: &Dataset, cfg: &RidgeConfig, seed: u64) -> Result<RidgeCv> {
    cfg.validate()?;
    let n = d.n();
    let folds = kfold_split(n, cfg.folds, seed, None)?;
    let mut sse = vec![0.0; cfg.lambda_grid.len()];
    for k in 0..cfg.folds {
        let (train, test) = split_rows(&folds, k);
        let dtrain = d.subset(&train)?;
        let gtrain = standardize(&dtrain)?;
        let solver = RidgeSolver::new(&gtrain);
        let xtest = d.x().select(ndarray::Axis(0), &test);
        for (l, &lambda) in cfg.lambda_grid.iter().enumerate() {
            let pred = solver.fit(lambda)?.predict(xtest.view())?;
            sse[l] += test.iter().zip(pred.iter()).map(|(&i, f)| (d.y()[i] - f).powi(2)).sum::<f64>();
        }
    }
    let cv_error: Vec<f64> = sse.iter().map(|s| s / n as f64).collect();
    let best = argmin_first(&cv_error);
    let lambda = cfg.lambda_grid[best];
    let coefficients = ridge_fit(&standardize(d)?, lambda)?;
    Ok(RidgeCv { coefficients, lambda, cv_error })
}

pub(crate) fn split_rows(folds: &[usize], k: usize) -> (Vec<usize>, Vec<usize>) {
    let train = (0..folds.len()).filter(|&i| folds[i] != k).collect();
    let test = (0..folds.len()).filter(|&i| folds[i] == k).collect();
    (train, test)
}

pub(crate) fn argmin_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct ForwardSelection {
    pub coefficients: SparseCoefficients,
    /// Columns in order of entry.
    pub order: Vec<usize>,
    /// RSS with `k` variables, `k = 0..=order.len()`.
    pub rss_path: Vec<f64>,
    /// AIC with `k` variables, `k = 0..=order.len()`.
    pub aic_path: Vec<f64>,
}

/// `n·log(RSS/n) + 2·(k + 1)`.
pub fn classical_aic(rss: f64, k: usize, n: usize) -> f64 {
    let nf = n as f64;
    nf * (rss / nf).ln() + 2.0 * (k as f64 + 1.0)
}

/// Greedy forward selection: each step adds the column giving the smallest
/// RSS of the refitted least-squares model, until the AIC stops decreasing.
/// At most `n − 2` columns enter so the fit never interpolates.
pub fn forward_select_aic(g: &StandardizedDesign) -> Result<ForwardSelection> {
    let (n, p) = (g.n(), g.p());
    if p == 0 {
        return Err(Error::EmptyDesign);
    }
    let mut resid = g.y_centered().to_vec();
    let mut cols: Vec<Vec<f64>> = (0..p).map(|j| g.column(j).to_vec()).collect();
    let mut available = vec![true; p];
    let mut rss = sum_sq(&resid);
    let mut order = Vec::new();
    let mut rss_path = vec![rss];
    let mut aic_path = vec![classical_aic(rss, 0, n)];
    let max_k = p.min(n.saturating_sub(2));

    while order.len() < max_k && rss > 0.0 {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..p {
            if !available[j] {
                continue;
            }
            let nn = sum_sq(&cols[j]);
            if nn <= 1e-10 * n as f64 {
                continue;
            }
            let red = dot(&resid, &cols[j]).powi(2) / nn;
            if best.is_none_or(|(_, b)| red > b) {
                best = Some((j, red));
            }
        }
        let Some((j, red)) = best else { break };
        let new_rss = rss - red;
        if !(new_rss > 0.0) {
            break;
        }
        let new_aic = classical_aic(new_rss, order.len() + 1, n);
        if new_aic >= *aic_path.last().expect("nonempty") {
            break;
        }
        let norm = sum_sq(&cols[j]).sqrt();
        let q: Vec<f64> = cols[j].iter().map(|v| v / norm).collect();
        let rq = dot(&resid, &q);
        axpy(-rq, &q, &mut resid);
        available[j] = false;
        for (l, col) in cols.iter_mut().enumerate() {
            if available[l] {
                let c = dot(&q, col);
                axpy(-c, &q, col);
            }
        }
        rss = sum_sq(&resid);
        order.push(j);
        rss_path.push(rss);
        aic_path.push(new_aic);
    }

    let mut theta = vec![0.0; p];
    if !order.is_empty() {
        let k = order.len();
        let mut a = Array2::zeros((k, k));
        let mut b = vec![0.0; k];
        for (r, &jr) in order.iter().enumerate() {
            b[r] = dot(g.column(jr), g.y_centered());
            for (c, &jc) in order.iter().enumerate() {
                a[[r, c]] = dot(g.column(jr), g.column(jc));
            }
        }
        let sol = spd_solve(&a, &b, SINGULAR_TOL)?;
        for (r, &jr) in order.iter().enumerate() {
            theta[jr] = sol[r];
        }
    }
    let coefficients = unstandardize_coefficients(&theta, g.transform())?;
    Ok(ForwardSelection { coefficients, order, rss_path, aic_path })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoConfig {
    pub n_lambda: usize,
    /// Smallest penalty as a fraction of `λ_max`.
    pub lambda_ratio: f64,
    pub tol: f64,
    pub max_sweeps: usize,
    pub folds: usize,
    pub tuning: Tuning,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self { n_lambda: 100, lambda_ratio: 1e-3, tol: 1e-8, max_sweeps: 10_000, folds: 10, tuning: Tuning::Cv10 }
    }
}

#[derive(Debug, Clone)]
pub struct LassoFit {
    /// Standardized coefficients.
    pub theta: Vec<f64>,
    pub sweeps: usize,
    pub kkt_gap: f64,
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Smallest penalty with an all-zero solution: `max_j |⟨y, g_j⟩_(n)|`.
pub fn lambda_max(g: &StandardizedDesign) -> f64 {
    let y = g.y_centered();
    (0..g.p()).map(|j| g.inner(y, g.column(j)).abs()).fold(0.0, f64::max)
}

/// Largest KKT violation of `theta` for penalty `lambda`.
pub fn kkt_gap(g: &StandardizedDesign, theta: &[f64], lambda: f64) -> f64 {
    let mut r = g.y_centered().to_vec();
    for (j, &t) in theta.iter().enumerate() {
        if t != 0.0 {
            axpy(-t, g.column(j), &mut r);
        }
    }
    (0..g.p())
        .map(|j| {
            let c = g.inner(&r, g.column(j));
            if theta[j] == 0.0 {
                (c.abs() - lambda).max(0.0)
            } else {
                (c - lambda * theta[j].signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Minimizes `(2n)⁻¹‖y − Gθ‖² + λ‖θ‖₁` by cyclic coordinate descent with an
/// active-set inner loop.
pub fn lasso_cd(g: &StandardizedDesign, lambda: f64, cfg: &LassoConfig, warm: Option<&[f64]>) -> Result<LassoFit> {
    let (n, p) = (g.n(), g.p());
    if !(lambda >= 0.0) {
        return Err(Error::InvalidConfig(format!("lasso penalty {lambda} must be nonnegative")));
    }
    let mut theta = match warm {
        Some(w) if w.len() == p => w.to_vec(),
        Some(w) => return Err(Error::DimensionMismatch { expected: p, found: w.len() }),
        None => vec![0.0; p],
    };
    let nf = n as f64;
    let y = g.y_centered();
    let mut r = vec![0.0; n];
    let mut sweeps = 0;

    let resync = |theta: &[f64], r: &mut Vec<f64>| {
        r.copy_from_slice(y);
        for (j, &t) in theta.iter().enumerate() {
            if t != 0.0 {
                axpy(-t, g.column(j), r);
            }
        }
    };
    let sweep = |theta: &mut [f64], r: &mut [f64], only_active: bool| -> f64 {
        let mut max_delta = 0.0_f64;
        for j in 0..p {
            if only_active && theta[j] == 0.0 {
                continue;
            }
            let col = g.column(j);
            let old = theta[j];
            let z = old + dot(r, col) / nf;
            let new = soft_threshold(z, lambda);
            if new != old {
                axpy(old - new, col, r);
                theta[j] = new;
                max_delta = max_delta.max((new - old).abs());
            }
        }
        max_delta
    };

    loop {
        resync(&theta, &mut r);
        let delta = sweep(&mut theta, &mut r, false);
        sweeps += 1;
        if delta < cfg.tol {
            break;
        }
        loop {
            if sweeps >= cfg.max_sweeps {
                return Err(Error::NoConvergence { sweeps, kkt_gap: kkt_gap(g, &theta, lambda) });
            }
            let d = sweep(&mut theta, &mut r, true);
            sweeps += 1;
            if d < cfg.tol {
                break;
            }
        }
        if sweeps >= cfg.max_sweeps {
            return Err(Error::NoConvergence { sweeps, kkt_gap: kkt_gap(g, &theta, lambda) });
        }
    }
    let gap = kkt_gap(g, &theta, lambda);
    Ok(LassoFit { theta, sweeps, kkt_gap: gap })
}

#[derive(Debug, Clone)]
pub struct LassoPath {
    /// Descending penalties.
    pub lambdas: Vec<f64>,
    pub thetas: Vec<Vec<f64>>,
}

impl LassoPath {
    pub fn coefficients(&self, g: &StandardizedDesign, l: usize) -> Result<SparseCoefficients> {
        unstandardize_coefficients(&self.thetas[l], g.transform())
    }
}

/// Grid from `λ_max` down to `λ_max · lambda_ratio`.
pub fn lasso_grid(lambda_max: f64, cfg: &LassoConfig) -> Vec<f64> {
    if lambda_max <= 0.0 {
        return vec![0.0; cfg.n_lambda.max(1)];
    }
    geometric_grid_desc(lambda_max, lambda_max * cfg.lambda_ratio, cfg.n_lambda.max(1))
}

/// Warm-started solutions over `lambdas` (descending).
pub fn lasso_path(g: &StandardizedDesign, lambdas: &[f64], cfg: &LassoConfig) -> Result<LassoPath> {
    let mut thetas = Vec::with_capacity(lambdas.len());
    let mut warm = vec![0.0; g.p()];
    for &lambda in lambdas {
        let fit = lasso_cd(g, lambda, cfg, Some(&warm))?;
        warm.clone_from(&fit.theta);
        thetas.push(fit.theta);
    }
    Ok(LassoPath { lambdas: lambdas.to_vec(), thetas })
}

#[derive(Debug, Clone)]
pub struct LassoCv {
    pub coefficients: SparseCoefficients,
    pub lambda: f64,
    pub index: usize,
    pub lambdas: Vec<f64>,
    pub cv_error: Vec<f64>,
    /// Held-out prediction of row `i` at grid point `l`.
    pub held_out: Array2<f64>,
    pub folds: Vec<usize>,
}

/// K-fold cross-validated Lasso. The grid comes from the full data; each
/// fold standardizes its own training rows.
pub fn lasso_cv(d: &Dataset, cfg: &LassoConfig, seed: u64) -> Result<LassoCv> {
    let n = d.n();
    if n < cfg.folds {
        return Err(Error::BadFoldCount { k: cfg.folds, n });
    }
    let full = standardize(d)?;
    let lambdas = lasso_grid(lambda_max(&full), cfg);
    let folds = kfold_split(n, cfg.folds, seed, None)?;
    let mut held_out = Array2::zeros((n, lambdas.len()));
    for k in 0..cfg.folds {
        let (train, test) = split_rows(&folds, k);
        let gtrain = standardize(&d.subset(&train)?)?;
        let path = lasso_path(&gtrain, &lambdas, cfg)?;
        let xtest = d.x().select(ndarray::Axis(0), &test);
        for l in 0..lambdas.len() {
            let pred = path.coefficients(&gtrain, l)?.predict(xtest.view())?;
            for (&i, f) in test.iter().zip(pred.iter()) {
                held_out[[i, l]] = *f;
            }
        }
    }
    let y = d.y();
    let cv_error: Vec<f64> = (0..lambdas.len())
        .map(|l| (0..n).map(|i| (y[i] - held_out[[i, l]]).powi(2)).sum::<f64>() / n as f64)
        .collect();
    let index = argmin_first(&cv_error);
    let path = lasso_path(&full, &lambdas[..=index], cfg)?;
    let coefficients = path.coefficients(&full, index)?;
    Ok(LassoCv { coefficients, lambda: lambdas[index], index, lambdas, cv_error, held_out, folds })
}

/// Exact MSE at every grid point of a Lasso path, for oracle tuning.
pub fn lasso_path_mse(
    path: &LassoPath,
    g: &StandardizedDesign,
    truth: &SparseCoefficients,
    v: ndarray::ArrayView2<'_, f64>,
) -> Result<Vec<f64>> {
    (0..path.lambdas.len())
        .map(|l| crate::data::exact_mse(&path.coefficients(g, l)?, truth, v))
        .collect()
}

/// Grid index with the smallest value and that value.
pub fn oracle_pick(mse: &[f64]) -> (usize, f64) {
    let i = argmin_first(mse);
    (i, mse[i])
}

/// Averages equal-length per-replication curves.
pub fn column_means(per_rep: &[Vec<f64>]) -> Array1<f64> {
    let len = per_rep.first().map_or(0, Vec::len);
    let mut acc = Array1::zeros(len);
    for row in per_rep {
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
    acc / per_rep.len().max(1) as f64
}
