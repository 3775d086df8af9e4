//! Boosting hat matrix, trace degrees of freedom, information-criterion
//! stopping, oracle stopping and cross-validation folds.
//!
//! The boosting operator after `m` steps is
//! `B_m = I − (I − νH_{S_m})···(I − νH_{S_1})` with `H_j = x_j x_jᵀ / ‖x_j‖²`.
//! Two trackers maintain it: [`HatState`] keeps the dense `n × n` matrix, and
//! [`SubspaceHat`] keeps the same operator restricted to the span of the
//! columns selected so far, which costs `O(k²)` per step for `k` distinct
//! columns instead of `O(n²)`.

use std::io::Write;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::boosting::{BoostPath, Variant, RESYNC_EVERY};
use crate::data::{SparseCoefficients, StandardizedDesign};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, sum_sq};

/// Probabilities are clamped to `[δ, 1 − δ]` before taking logs.
pub const BERNOULLI_CLAMP: f64 = 1e-6;

/// Dense boosting hat matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HatState {
    pub b: Array2<f64>,
    pub trace: f64,
    pub m: usize,
}

impl HatState {
    /// `B_0 = 0`.
    pub fn new(n: usize) -> Self {
        Self { b: Array2::zeros((n, n)), trace: 0.0, m: 0 }
    }

    pub fn n(&self) -> usize {
        self.b.nrows()
    }

    /// Rank-one update `B ← B + (ν/‖x‖²) x rᵀ` with `r = (I − B)ᵀ x`, which is
    /// `I − (I − νH_x)(I − B)` written without forming the product.
    pub fn update(&mut self, x: &[f64], nu: f64) -> Result<()> {
        let n = self.n();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: x.len() });
        }
        let xx = sum_sq(x);
        if !(xx > 0.0) {
            return Err(Error::ZeroColumn);
        }
        let mut r = x.to_vec();
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                let row = self.b.row(i);
                axpy(-xi, row.as_slice().expect("row-major"), &mut r);
            }
        }
        let c = nu / xx;
        for (i, &xi) in x.iter().enumerate() {
            let mut row = self.b.row_mut(i);
            axpy(c * xi, &r, row.as_slice_mut().expect("row-major"));
        }
        self.trace += c * dot(x, &r);
        self.m += 1;
        Ok(())
    }

    /// Diagonal sum of the stored matrix.
    pub fn exact_trace(&self) -> f64 {
        self.b.diag().sum()
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        self.b.rows().into_iter().map(|row| dot(row.as_slice().expect("row-major"), y)).collect()
    }
}

/// Functional form of [`HatState::update`].
pub fn hat_update(mut state: HatState, x_col: &[f64], nu: f64) -> Result<HatState> {
    state.update(x_col, nu)?;
    Ok(state)
}

/// Boosting hat operator tracked in an orthonormal basis `Q` of the selected
/// columns: `B_m = Q C_m Qᵀ`. Also tracks `B_m y` for one fixed response.
#[derive(Debug, Clone)]
pub struct SubspaceHat {
    n: usize,
    basis: Vec<Vec<f64>>,
    coords: Vec<Option<Vec<f64>>>,
    c: Vec<Vec<f64>>,
    y_coords: Vec<f64>,
    y_perp: Vec<f64>,
    w: Vec<f64>,
    trace: f64,
    m: usize,
}

impl SubspaceHat {
    pub fn new(p: usize, y: &[f64]) -> Self {
        Self {
            n: y.len(),
            basis: Vec::new(),
            coords: vec![None; p],
            c: Vec::new(),
            y_coords: Vec::new(),
            y_perp: y.to_vec(),
            w: Vec::new(),
            trace: 0.0,
            m: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// `‖y − B_m y‖²`.
    pub fn rss(&self) -> f64 {
        let inside: f64 = self.y_coords.iter().zip(&self.w).map(|(a, b)| (a - b) * (a - b)).sum();
        sum_sq(&self.y_perp) + inside
    }

    /// `B_m y` in the original coordinates.
    pub fn fitted(&self) -> Vec<f64> {
        let mut f = vec![0.0; self.n];
        for (q, &wl) in self.basis.iter().zip(&self.w) {
            axpy(wl, q, &mut f);
        }
        f
    }

    fn coordinates(&mut self, j: usize, x: &[f64]) -> Vec<f64> {
        if self.coords[j].is_none() {
            let mut a: Vec<f64> = self.basis.iter().map(|q| dot(q, x)).collect();
            let mut resid = x.to_vec();
            for (q, &al) in self.basis.iter().zip(&a) {
                axpy(-al, q, &mut resid);
            }
            // Second Gram-Schmidt pass.
            for (q, al) in self.basis.iter().zip(a.iter_mut()) {
                let corr = dot(q, &resid);
                *al += corr;
                axpy(-corr, q, &mut resid);
            }
            let norm = sum_sq(&resid).sqrt();
            if self.basis.len() < self.n && norm > 1e-9 * sum_sq(x).sqrt() {
                let q: Vec<f64> = resid.iter().map(|v| v / norm).collect();
                a.push(norm);
                let yc = dot(&q, &self.y_perp);
                axpy(-yc, &q, &mut self.y_perp);
                self.y_coords.push(yc);
                self.w.push(0.0);
                for row in &mut self.c {
                    row.push(0.0);
                }
                self.basis.push(q);
                self.c.push(vec![0.0; self.basis.len()]);
            }
            self.coords[j] = Some(a);
        }
        let mut a = self.coords[j].clone().expect("set above");
        a.resize(self.basis.len(), 0.0);
        a
    }

    /// Applies one boosting step that selected column `j` with values `x`.
    pub fn update(&mut self, j: usize, x: &[f64], nu: f64) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: x.len() });
        }
        let a = self.coordinates(j, x);
        let aa = sum_sq(&a);
        if !(aa > 0.0) {
            return Err(Error::ZeroColumn);
        }
        let k = a.len();
        let mut rho = a.clone();
        for (i, &ai) in a.iter().enumerate() {
            if ai != 0.0 {
                axpy(-ai, &self.c[i], &mut rho);
            }
        }
        let scale = nu / aa;
        for i in 0..k {
            if a[i] != 0.0 {
                axpy(scale * a[i], &rho, &mut self.c[i]);
            }
        }
        self.trace += scale * dot(&a, &rho);
        let ry = dot(&rho, &self.y_coords);
        axpy(scale * ry, &a, &mut self.w);
        self.m += 1;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HatBackend {
    Dense,
    #[default]
    Subspace,
}

enum Tracker {
    Dense { hat: HatState, fitted: Vec<f64>, y: Vec<f64> },
    Subspace(SubspaceHat),
}

impl Tracker {
    fn new(backend: HatBackend, g: &StandardizedDesign) -> Self {
        match backend {
            HatBackend::Dense => Tracker::Dense {
                hat: HatState::new(g.n()),
                fitted: vec![0.0; g.n()],
                y: g.y_centered().to_vec(),
            },
            HatBackend::Subspace => Tracker::Subspace(SubspaceHat::new(g.p(), g.y_centered())),
        }
    }

    fn step(&mut self, j: usize, x: &[f64], nu: f64) -> Result<()> {
        match self {
            Tracker::Dense { hat, fitted, y } => {
                // Fitted values are updated with the same rank-one term as B.
                let n = hat.n();
                let mut r = x.to_vec();
                for (i, &xi) in x.iter().enumerate() {
                    if xi != 0.0 {
                        axpy(-xi, hat.b.row(i).as_slice().expect("row-major"), &mut r);
                    }
                }
                let coef = nu / sum_sq(x) * dot(&r, y);
                hat.update(x, nu)?;
                debug_assert_eq!(fitted.len(), n);
                axpy(coef, x, fitted);
                Ok(())
            }
            Tracker::Subspace(s) => s.update(j, x, nu),
        }
    }

    fn trace(&self) -> f64 {
        match self {
            Tracker::Dense { hat, .. } => hat.trace,
            Tracker::Subspace(s) => s.trace(),
        }
    }

    fn rss(&self) -> f64 {
        match self {
            Tracker::Dense { fitted, y, .. } => y.iter().zip(fitted).map(|(a, b)| (a - b) * (a - b)).sum(),
            Tracker::Subspace(s) => s.rss(),
        }
    }

    fn fitted(&self) -> Vec<f64> {
        match self {
            Tracker::Dense { fitted, .. } => fitted.clone(),
            Tracker::Subspace(s) => s.fitted(),
        }
    }
}

/// Corrected AIC, `log(σ̂²) + (1 + tr/n) / (1 − (tr + 2)/n)` with `σ̂² = rss/n`.
pub fn aicc(rss: f64, trace: f64, n: usize) -> Result<f64> {
    let nf = n as f64;
    let denom = 1.0 - (trace + 2.0) / nf;
    if !(denom > 0.0) {
        return Err(Error::DegenerateDenominator { trace, n });
    }
    let sigma2 = rss / nf;
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::ZeroSigma);
    }
    Ok(sigma2.ln() + (1.0 + trace / nf) / denom)
}

/// `−2 · Bernoulli log-likelihood + 2 · trace`, probabilities clamped to
/// `[δ, 1 − δ]`.
pub fn aic_bernoulli(y: &[f64], fitted: &[f64], trace: f64) -> Result<f64> {
    if y.len() != fitted.len() {
        return Err(Error::DimensionMismatch { expected: y.len(), found: fitted.len() });
    }
    let mut loglik = 0.0;
    for (&yi, &fi) in y.iter().zip(fitted) {
        let p = fi.clamp(BERNOULLI_CLAMP, 1.0 - BERNOULLI_CLAMP);
        loglik += yi * p.ln() + (1.0 - yi) * (1.0 - p).ln();
    }
    Ok(-2.0 * loglik + 2.0 * trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoppingRule {
    Aicc,
    AicBernoulli,
    Oracle,
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingResult {
    pub m_hat: usize,
    /// Criterion at iteration `m`, indexed by `m`; `None` where `m` is not a
    /// valid candidate.
    pub criterion_values: Vec<Option<f64>>,
    pub rule: StoppingRule,
}

/// Smallest `m` attaining the minimum over the valid entries.
pub fn select_m(values: &[Option<f64>], rule: StoppingRule) -> Result<StoppingResult> {
    let mut best: Option<(usize, f64)> = None;
    for (m, v) in values.iter().enumerate() {
        if let Some(v) = *v {
            if v.is_nan() {
                continue;
            }
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((m, v));
            }
        }
    }
    let (m_hat, _) = best.ok_or(Error::NoValidIteration)?;
    Ok(StoppingResult { m_hat, criterion_values: values.to_vec(), rule })
}

fn require_l2(path: &BoostPath) -> Result<()> {
    if path.config.variant != Variant::L2Boost {
        return Err(Error::InvalidConfig("hat-matrix degrees of freedom are only defined for L2 boosting".into()));
    }
    Ok(())
}

/// Runs the hat recursion along `path`, fills in `trace` and `criterion` on
/// every step and returns the AICc-minimizing iteration. Iterations with a
/// non-positive denominator or zero variance are skipped.
pub fn aicc_stop(path: &mut BoostPath, g: &StandardizedDesign, backend: HatBackend) -> Result<StoppingResult> {
    require_l2(path)?;
    let n = g.n();
    let nu = path.config.nu;
    let mut tracker = Tracker::new(backend, g);
    let mut values = vec![None; path.len() + 1];
    for (m, step) in path.steps.iter_mut().enumerate() {
        tracker.step(step.index, g.column(step.index), nu)?;
        let trace = tracker.trace();
        step.trace = Some(trace);
        step.criterion = aicc(tracker.rss(), trace, n).ok();
        values[m + 1] = step.criterion;
    }
    select_m(&values, StoppingRule::Aicc)
}

/// Bernoulli-AIC stopping for 0/1 labels. Fitted probabilities are
/// `prob_shift + y_center + (B_m y_c)_i`; `prob_shift` is `1/2` when the
/// response was coded as `±1/2` and `0` for `0/1` coding.
pub fn bernoulli_aic_stop(
    path: &mut BoostPath,
    g: &StandardizedDesign,
    labels: &[f64],
    prob_shift: f64,
    backend: HatBackend,
) -> Result<StoppingResult> {
    require_l2(path)?;
    if labels.len() != g.n() {
        return Err(Error::DimensionMismatch { expected: g.n(), found: labels.len() });
    }
    let nu = path.config.nu;
    let base = prob_shift + g.transform().y_center;
    let mut tracker = Tracker::new(backend, g);
    let mut values = vec![None; path.len() + 1];
    for (m, step) in path.steps.iter_mut().enumerate() {
        tracker.step(step.index, g.column(step.index), nu)?;
        let trace = tracker.trace();
        let probs: Vec<f64> = tracker.fitted().iter().map(|f| base + f).collect();
        step.trace = Some(trace);
        step.criterion = Some(aic_bernoulli(labels, &probs, trace)?);
        values[m + 1] = step.criterion;
    }
    select_m(&values, StoppingRule::AicBernoulli)
}

/// Iteration `0..=M` minimizing the exact MSE against a known truth for
/// `X ~ N(0, V)`.
pub fn oracle_stop(path: &BoostPath, truth: &SparseCoefficients, v: ArrayView2<'_, f64>) -> Result<StoppingResult> {
    let p = path.p();
    if truth.p() != p {
        return Err(Error::DimensionMismatch { expected: p, found: truth.p() });
    }
    if v.dim() != (p, p) {
        return Err(Error::DimensionMismatch { expected: p, found: v.nrows() });
    }
    let tr = &path.transform;
    let mut d: Vec<f64> = truth.beta.iter().map(|b| -b).collect();
    let mut vd: Vec<f64> = v.dot(&ndarray::ArrayView1::from(&d)).to_vec();
    let mut quad = dot(&d, &vd);
    let mut intercept = tr.y_center;
    let mut values = Vec::with_capacity(path.len() + 1);
    let bias = intercept - truth.intercept;
    values.push(Some((bias * bias + quad).max(0.0)));
    for (m, s) in path.steps.iter().enumerate() {
        let j = s.index;
        let db = s.increment / tr.scales[j];
        if db != 0.0 {
            intercept -= db * tr.centers[j];
            quad += 2.0 * db * vd[j] + db * db * v[[j, j]];
            d[j] += db;
            for (i, vdi) in vd.iter_mut().enumerate() {
                *vdi += db * v[[i, j]];
            }
        }
        if (m + 1) % RESYNC_EVERY == 0 {
            quad = dot(&d, &vd);
        }
        let bias = intercept - truth.intercept;
        values.push(Some((bias * bias + quad).max(0.0)));
    }
    select_m(&values, StoppingRule::Oracle)
}

/// Fold id for each of `n` observations. With `strata`, observations are
/// dealt round-robin class by class so per-class fold counts differ by at
/// most one.
pub fn kfold_split(n: usize, k: usize, seed: u64, strata: Option<&[usize]>) -> Result<Vec<usize>> {
    if k < 2 || k > n {
        return Err(Error::BadFoldCount { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(crate::simulation::FOLD_STREAM);
    let order: Vec<usize> = match strata {
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            idx
        }
        Some(labels) => {
            if labels.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: labels.len() });
            }
            let mut classes: Vec<usize> = labels.to_vec();
            classes.sort_unstable();
            classes.dedup();
            let mut order = Vec::with_capacity(n);
            for c in classes {
                let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
                members.shuffle(&mut rng);
                order.extend(members);
            }
            order
        }
    };
    let mut folds = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        folds[i] = pos % k;
    }
    Ok(folds)
}

/// Writes `m,trace,rss,criterion` for every step of an annotated path.
pub fn write_criterion_csv<W: Write>(path: &BoostPath, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["m", "trace", "rss", "criterion"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (i, s) in path.steps.iter().enumerate() {
        wtr.write_record([(i + 1).to_string(), opt(s.trace), s.rss.to_string(), opt(s.criterion)])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aicc_null_fit() {
        let v = aicc(20.0, 0.0, 20).unwrap();
        assert!((v - 1.0 / 0.9).abs() < 1e-15);
        assert!(matches!(aicc(1.0, 18.0, 20), Err(Error::DegenerateDenominator { .. })));
        assert_eq!(aicc(0.0, 1.0, 20), Err(Error::ZeroSigma));
    }

    #[test]
    fn aicc_penalty_is_monotone() {
        let mut prev = f64::NEG_INFINITY;
        for t in 0..17 {
            let v = aicc(5.0, t as f64 + 0.5, 20).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn bernoulli_coin_flip() {
        let v = aic_bernoulli(&[0.0, 1.0, 1.0, 0.0], &[0.5; 4], 0.0).unwrap();
        assert!((v - (-8.0 * 0.5_f64.ln())).abs() < 1e-12);
        assert!((v - 5.545177444479562).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_perfect_fit_is_clamped() {
        let y = [0.0, 1.0, 1.0];
        let v = aic_bernoulli(&y, &y, 0.0).unwrap();
        let expected = -2.0 * 3.0 * (1.0 - BERNOULLI_CLAMP).ln();
        assert!((v - expected).abs() < 1e-15);
        assert!(v < 1e-4);
    }

    #[test]
    fn select_first_minimizer() {
        let r = select_m(&[None, Some(3.0), Some(1.0), Some(2.0)], StoppingRule::Aicc).unwrap();
        assert_eq!(r.m_hat, 2);
        let r = select_m(&[None, Some(1.0), Some(1.0), Some(5.0)], StoppingRule::Aicc).unwrap();
        assert_eq!(r.m_hat, 1);
        let r = select_m(&[None, None, Some(4.0)], StoppingRule::Aicc).unwrap();
        assert_eq!(r.m_hat, 2);
        assert_eq!(select_m(&[None, None], StoppingRule::Aicc), Err(Error::NoValidIteration));
    }

    #[test]
    fn first_hat_step_has_trace_nu() {
        let x = [1.0, -2.0, 0.5, 3.0];
        let h = hat_update(HatState::new(4), &x, 0.3).unwrap();
        assert!((h.trace - 0.3).abs() < 1e-15);
        assert!((h.exact_trace() - 0.3).abs() < 1e-15);
        assert_eq!(HatState::new(4).update(&[0.0; 4], 0.3), Err(Error::ZeroColumn));
    }

    #[test]
    fn repeated_full_step_is_idempotent() {
        let x = [1.0, -2.0, 0.5, 3.0];
        let mut h = HatState::new(4);
        for _ in 0..5 {
            h.update(&x, 1.0).unwrap();
            assert!((h.trace - 1.0).abs() < 1e-14);
        }
        let xx: f64 = x.iter().map(|v| v * v).sum();
        for i in 0..4 {
            for j in 0..4 {
                assert!((h.b[[i, j]] - x[i] * x[j] / xx).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn kfold_loo_and_balance() {
        let f = kfold_split(10, 10, 3, None).unwrap();
        let mut sorted = f.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());

        let labels = [0, 0, 0, 0, 0, 1, 1, 1, 1];
        let f = kfold_split(9, 3, 11, Some(&labels)).unwrap();
        for k in 0..3 {
            let ones = (0..9).filter(|&i| f[i] == k && labels[i] == 1).count();
            assert!((1..=2).contains(&ones));
            let size = f.iter().filter(|&&x| x == k).count();
            assert_eq!(size, 3);
        }
        assert!(kfold_split(5, 1, 0, None).is_err());
        assert!(kfold_split(5, 6, 0, None).is_err());
    }

    #[test]
    fn kfold_deterministic() {
        let a = kfold_split(50, 10, 42, None).unwrap();
        assert_eq!(a, kfold_split(50, 10, 42, None).unwrap());
        assert_ne!(a, kfold_split(50, 10, 43, None).unwrap());
    }
}
