//! Gaussian-design generative models and the seeded Monte Carlo benchmark.
//!
//! Replication `r` of a run draws everything from seed `base_seed + r`:
//! stream [`DATA_STREAM`] of a [`ChaCha8Rng`] for the data (and random
//! coefficients), and stream [`FOLD_STREAM`] for cross-validation folds.

use std::fmt::Write as _;
use std::io::Write;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::baselines::{
    forward_select_aic, lambda_max, lasso_cv, lasso_grid, lasso_path, lasso_path_mse, ols_fit, oracle_pick,
    ridge_cv, LassoConfig, RidgeConfig, RidgeSolver,
};
use crate::boosting::{boost_fit, BoostConfig};
use crate::data::{exact_mse, standardize, Dataset, SparseCoefficients};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, pairwise_sum};
use crate::model_selection::{aicc_stop, oracle_stop, HatBackend};

/// Name of the generator recorded in report headers.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9), seed_from_u64(base_seed + rep)";
pub const DATA_STREAM: u64 = 0;
pub const FOLD_STREAM: u64 = 1;

/// Off-diagonal entries of the banded covariance.
pub const BAND_FIRST: f64 = 0.677;
pub const BAND_SECOND: f64 = 0.323;
/// Signal scaling that equalizes the signal-to-noise ratio with the banded design.
pub const BANDED_SIGNAL_SCALE: f64 = 0.779;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Covariance {
    Identity,
    Banded,
}

#[derive(Debug, Clone)]
pub struct SimulationModel {
    pub label: String,
    pub p: usize,
    pub v: Array2<f64>,
    /// Lower Cholesky factor of `v`; `None` for the identity.
    factor: Option<Array2<f64>>,
    pub beta_true: Array1<f64>,
    pub intercept_true: f64,
    pub noise_sd: f64,
    /// When set, coefficients are redrawn per replication as `N(0, σ_j²)`.
    pub random_beta_variances: Option<Vec<f64>>,
}

impl SimulationModel {
    pub fn new(
        label: impl Into<String>,
        v: Array2<f64>,
        beta_true: Array1<f64>,
        intercept_true: f64,
        noise_sd: f64,
    ) -> Result<Self> {
        let p = v.nrows();
        if v.ncols() != p {
            return Err(Error::DimensionMismatch { expected: p, found: v.ncols() });
        }
        if beta_true.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: beta_true.len() });
        }
        if !(noise_sd >= 0.0) {
            return Err(Error::InvalidConfig("noise standard deviation must be nonnegative".into()));
        }
        let factor = if v == Array2::eye(p) { None } else { Some(cholesky(v.view())?) };
        Ok(Self { label: label.into(), p, v, factor, beta_true, intercept_true, noise_sd, random_beta_variances: None })
    }

    pub fn truth(&self) -> SparseCoefficients {
        SparseCoefficients::new(self.intercept_true, self.beta_true.clone())
    }

    /// `E|f(X)|²` for the fixed coefficients.
    pub fn signal_second_moment(&self) -> f64 {
        self.intercept_true.powi(2) + self.beta_true.dot(&self.v.dot(&self.beta_true))
    }

    pub fn snr(&self) -> f64 {
        self.signal_second_moment() / self.noise_sd.powi(2)
    }
}

/// Banded Toeplitz covariance with ones on the diagonal, [`BAND_FIRST`] on
/// the first and [`BAND_SECOND`] on the second off-diagonals.
pub fn banded_covariance(p: usize) -> Array2<f64> {
    Array2::from_shape_fn((p, p), |(i, j)| match i.abs_diff(j) {
        0 => 1.0,
        1 => BAND_FIRST,
        2 => BAND_SECOND,
        _ => 0.0,
    })
}

/// `f(X) = a(1 + 5X₁ + 2X₂ + X₃)`, noise SD 2, with `a = 1` for independent
/// predictors and `a = 0.779` for the banded covariance.
pub fn sparse_three_predictor_model(p: usize, cov: Covariance) -> Result<SimulationModel> {
    if p < 3 {
        return Err(Error::InvalidConfig(format!("sparse model needs p >= 3, got {p}")));
    }
    let (v, a, tag) = match cov {
        Covariance::Identity => (Array2::eye(p), 1.0, "iid"),
        Covariance::Banded => (banded_covariance(p), BANDED_SIGNAL_SCALE, "block"),
    };
    let mut beta = Array1::zeros(p);
    beta[0] = 5.0 * a;
    beta[1] = 2.0 * a;
    beta[2] = a;
    SimulationModel::new(format!("{tag}-p{p}"), v, beta, a, 2.0)
}

/// `f(X) = 0.2 + 0.2 Σ_j X_j` over `p = 100` banded-correlated predictors,
/// noise SD 0.5.
pub fn equal_coefficient_model() -> Result<SimulationModel> {
    let p = 100;
    SimulationModel::new("dense-p100", banded_covariance(p), Array1::from_elem(p, 0.2), 0.2, 0.5)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KappaSolution {
    pub kappa: f64,
    pub p: usize,
    /// Prior variances `σ_j² = λ_j / (n κ a_j)` for `j = 1..=p`.
    pub variances: Vec<f64>,
}

const KAPPA_EXPONENT: f64 = 0.51;
const KAPPA_MAX_TERMS: usize = 100_000_000;

fn kappa_terms(kappa: f64) -> usize {
    // Largest j with j^0.51 ≤ 1/κ.
    let mut j = (1.0 / kappa).powf(1.0 / KAPPA_EXPONENT).floor() as usize;
    while j > 0 && (j as f64).powf(KAPPA_EXPONENT) > 1.0 / kappa {
        j -= 1;
    }
    while ((j + 1) as f64).powf(KAPPA_EXPONENT) <= 1.0 / kappa {
        j += 1;
    }
    j
}

/// Right-hand side `σ²/n Σ_j a_j (1 − κ a_j)₊` of the κ fixed point.
pub fn kappa_rhs(kappa: f64, n: usize, noise_var: f64) -> Result<f64> {
    let terms = kappa_terms(kappa);
    if terms > KAPPA_MAX_TERMS {
        return Err(Error::FixedPointFailure(format!("κ = {kappa:e} needs {terms} terms")));
    }
    let s: f64 = (1..=terms)
        .map(|j| {
            let a = (j as f64).powf(KAPPA_EXPONENT);
            a * (1.0 - kappa * a).max(0.0)
        })
        .sum();
    Ok(noise_var / n as f64 * s)
}

/// Solves `κ = σ²/n Σ_j a_j (1 − κ a_j)₊` with `a_j = j^0.51` by bisection.
pub fn solve_kappa(n: usize, noise_var: f64) -> Result<KappaSolution> {
    if n < 2 {
        return Err(Error::InvalidConfig("n must be at least 2".into()));
    }
    if noise_var == 0.0 {
        return Ok(KappaSolution { kappa: 0.0, p: 0, variances: Vec::new() });
    }
    if !(noise_var > 0.0) {
        return Err(Error::FixedPointFailure("noise variance must be nonnegative".into()));
    }
    let h = |k: f64| kappa_rhs(k, n, noise_var).map(|r| r - k);
    // RHS vanishes for κ ≥ 1, so h(1) = −1.
    let mut hi = 1.0;
    let mut lo = 0.5;
    while h(lo)? <= 0.0 {
        hi = lo;
        lo *= 0.5;
        if lo < 1e-12 {
            return Err(Error::FixedPointFailure("no sign change in bracket".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let kappa = 0.5 * (lo + hi);
    let p = kappa_terms(kappa);
    let variances = (1..=p)
        .map(|j| {
            let a = (j as f64).powf(KAPPA_EXPONENT);
            (1.0 - kappa * a).max(0.0) / (n as f64 * kappa * a)
        })
        .collect();
    Ok(KappaSolution { kappa, p, variances })
}

/// Independent standard normal predictors, coefficients drawn per replication
/// from `N(0, σ_j²)` with the decaying variances of [`solve_kappa`], no
/// intercept.
pub fn decaying_coefficient_model(n: usize, noise_sd: f64) -> Result<SimulationModel> {
    let sol = solve_kappa(n, noise_sd * noise_sd)?;
    if sol.p == 0 {
        return Err(Error::FixedPointFailure("zero-dimensional solution".into()));
    }
    let mut m = SimulationModel::new(format!("ell1-n{n}"), Array2::eye(sol.p), Array1::zeros(sol.p), 0.0, noise_sd)?;
    m.random_beta_variances = Some(sol.variances);
    Ok(m)
}

#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub dataset: Dataset,
    /// Coefficients that generated this draw.
    pub truth: SparseCoefficients,
}

/// Draws `n` rows `X ~ N(0, V)`, `Y = μ + βᵀX + ε`. Deterministic in
/// `(model, n, seed)`.
pub fn draw(model: &SimulationModel, n: usize, seed: u64) -> Result<SimulatedData> {
    if n < 2 {
        return Err(Error::InvalidConfig("n must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(DATA_STREAM);
    let p = model.p;
    let beta = match &model.random_beta_variances {
        Some(vars) => vars.iter().map(|v| v.sqrt() * rng.sample::<f64, _>(StandardNormal)).collect(),
        None => model.beta_true.clone(),
    };
    let mut x = Array2::zeros((n, p));
    let mut z = vec![0.0; p];
    let mut y = Array1::zeros(n);
    for i in 0..n {
        for zj in z.iter_mut() {
            *zj = rng.sample(StandardNormal);
        }
        let mut row = x.row_mut(i);
        match &model.factor {
            None => row.iter_mut().zip(&z).for_each(|(r, v)| *r = *v),
            Some(l) => {
                for a in 0..p {
                    let mut s = 0.0;
                    for b in 0..=a {
                        s += l[[a, b]] * z[b];
                    }
                    row[a] = s;
                }
            }
        }
        let eps: f64 = rng.sample(StandardNormal);
        y[i] = model.intercept_true + row.dot(&beta) + model.noise_sd * eps;
    }
    let dataset = Dataset::new(x, y)?;
    Ok(SimulatedData { dataset, truth: SparseCoefficients::new(model.intercept_true, beta) })
}

pub fn draw_dataset(model: &SimulationModel, n: usize, seed: u64) -> Result<Dataset> {
    Ok(draw(model, n, seed)?.dataset)
}

/// A model together with its sample size.
#[derive(Debug, Clone)]
pub struct Setting {
    pub label: String,
    pub model: SimulationModel,
    pub n: usize,
}

impl Setting {
    pub fn new(model: SimulationModel, n: usize) -> Self {
        // Models whose construction depends on n already carry it in their label.
        let suffix = format!("-n{n}");
        let label = if model.label.ends_with(&suffix) { model.label.clone() } else { format!("{}{suffix}", model.label) };
        Self { label, model, n }
    }

    /// Parses `iid-p<P>[-n<N>]`, `block-p<P>[-n<N>]`, `ell1[-n<N>]` and
    /// `dense[-n<N>]`. Defaults: `n = 20`, except `n = 100` for `ell1`.
    pub fn parse(label: &str) -> Result<Setting> {
        let bad = || Error::InvalidConfig(format!("unknown setting '{label}'"));
        let parts: Vec<&str> = label.split('-').collect();
        let num = |s: &str, prefix: char| -> Result<usize> {
            s.strip_prefix(prefix).and_then(|v| v.parse().ok()).ok_or_else(bad)
        };
        let (model, rest, default_n) = match parts.first().copied() {
            Some(kind @ ("iid" | "block")) => {
                let p = num(parts.get(1).ok_or_else(bad)?, 'p')?;
                let cov = if kind == "iid" { Covariance::Identity } else { Covariance::Banded };
                (sparse_three_predictor_model(p, cov)?, &parts[2..], 20)
            }
            Some("dense") => {
                let rest = if parts.get(1) == Some(&"p100") { &parts[2..] } else { &parts[1..] };
                (equal_coefficient_model()?, rest, 20)
            }
            Some("ell1") => {
                let n = match parts.get(1) {
                    Some(s) => num(s, 'n')?,
                    None => 100,
                };
                if parts.len() > 2 {
                    return Err(bad());
                }
                return Ok(Setting::new(decaying_coefficient_model(n, 1.0)?, n));
            }
            _ => return Err(bad()),
        };
        let n = match rest {
            [] => default_n,
            [s] => num(s, 'n')?,
            _ => return Err(bad()),
        };
        Ok(Setting::new(model, n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    L2Boost,
    L2BoostOracle,
    Lasso,
    LassoOracle,
    ForwardAic,
    RidgeOracle,
    RidgeCv,
    Ols,
    /// Returns the generating coefficients; a harness check.
    Truth,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::L2Boost,
        Method::L2BoostOracle,
        Method::Lasso,
        Method::LassoOracle,
        Method::ForwardAic,
        Method::RidgeOracle,
        Method::RidgeCv,
        Method::Ols,
        Method::Truth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::L2Boost => "L2Boost",
            Method::L2BoostOracle => "L2Boost*",
            Method::Lasso => "Lasso",
            Method::LassoOracle => "Lasso*",
            Method::ForwardAic => "fwd.var.sel.",
            Method::RidgeOracle => "ridge*",
            Method::RidgeCv => "ridge",
            Method::Ols => "OLS",
            Method::Truth => "truth",
        }
    }

    pub fn tuning(self) -> &'static str {
        match self {
            Method::L2Boost => "aicc",
            Method::L2BoostOracle | Method::LassoOracle | Method::RidgeOracle => "oracle",
            Method::Lasso | Method::RidgeCv => "cv10",
            Method::ForwardAic => "aic",
            Method::Ols | Method::Truth => "none",
        }
    }

    pub fn parse(s: &str) -> Result<Method> {
        let key = s.to_ascii_lowercase();
        Ok(match key.as_str() {
            "l2boost" => Method::L2Boost,
            "l2boost*" | "l2boost-oracle" => Method::L2BoostOracle,
            "lasso" => Method::Lasso,
            "lasso*" | "lasso-oracle" => Method::LassoOracle,
            "fwd.var.sel." | "forward" | "forward-aic" => Method::ForwardAic,
            "ridge*" | "ridge-oracle" => Method::RidgeOracle,
            "ridge" | "ridge-cv" => Method::RidgeCv,
            "ols" => Method::Ols,
            "truth" => Method::Truth,
            _ => return Err(Error::InvalidConfig(format!("unknown method '{s}'"))),
        })
    }
}

/// How oracle-tuned methods pick their tuning parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OracleScope {
    /// One value per setting, minimizing the MSE averaged over replications.
    #[default]
    PerSetting,
    /// A separate minimizer in every replication.
    PerReplication,
}

#[derive(Debug, Clone, Default)]
pub struct BenchmarkOptions {
    pub boost: BoostConfig,
    pub lasso: LassoConfig,
    pub ridge: RidgeConfig,
    pub hat: HatBackend,
    pub oracle: OracleScope,
}

/// One method on one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub setting: String,
    pub method: Method,
    /// Selected iteration or penalty; absent for untuned methods.
    pub tuning: Option<f64>,
    pub rep: usize,
    pub mse: f64,
    pub active: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub setting: String,
    pub method: Method,
    pub mean: f64,
    pub se: f64,
    pub count: usize,
    pub failures: usize,
    /// The method does not apply to the setting (OLS with `p ≥ n`).
    pub missing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub setting: String,
    pub method: Method,
    pub rep: usize,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub base_seed: u64,
    pub reps: usize,
    pub settings: Vec<String>,
    pub methods: Vec<Method>,
    pub records: Vec<Record>,
    pub cells: Vec<Cell>,
    pub failures: Vec<Failure>,
}

/// Mean and standard error (sample SD / √count), summing in the given order.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let k = values.len();
    if k == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(values) / k as f64;
    if k == 1 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    let sd = (pairwise_sum(&dev) / (k - 1) as f64).sqrt();
    (mean, sd / (k as f64).sqrt())
}

/// An oracle method reports its exact MSE over the whole tuning grid.
struct Curve {
    mse: Vec<f64>,
    tuning: Vec<f64>,
    active: Vec<usize>,
}

enum Outcome {
    Value { mse: f64, tuning: Option<f64>, active: usize },
    Curve(Curve),
    NotApplicable,
}

fn run_replication(
    setting: &Setting,
    methods: &[Method],
    seed: u64,
    opts: &BenchmarkOptions,
) -> Vec<(Method, Result<Outcome>)> {
    let sim = match draw(&setting.model, setting.n, seed) {
        Ok(s) => s,
        Err(e) => return methods.iter().map(|m| (*m, Err(e.clone()))).collect(),
    };
    let v = setting.model.v.view();
    let truth = &sim.truth;
    let design = standardize(&sim.dataset);

    let mut boost_path = None;
    let mut out = Vec::with_capacity(methods.len());
    for &method in methods {
        let res = (|| -> Result<Outcome> {
            let g = design.as_ref().map_err(Clone::clone)?;
            let value = |c: SparseCoefficients, tuning: Option<f64>| -> Result<Outcome> {
                Ok(Outcome::Value { mse: exact_mse(&c, truth, v)?, tuning, active: c.active_set.len() })
            };
            match method {
                Method::L2Boost | Method::L2BoostOracle => {
                    if boost_path.is_none() {
                        let mut path = boost_fit(g, &opts.boost)?;
                        let aicc = aicc_stop(&mut path, g, opts.hat).map(|r| r.m_hat);
                        boost_path = Some((path, aicc));
                    }
                    let (path, aicc) = boost_path.as_ref().expect("set above");
                    if method == Method::L2Boost {
                        let m = aicc.clone()?;
                        return value(path.coefficients_at(m)?, Some(m as f64));
                    }
                    let values = oracle_stop(path, truth, v)?.criterion_values;
                    let mse: Vec<f64> = values.iter().map(|c| c.expect("oracle defines every m")).collect();
                    let mut seen = vec![false; path.p()];
                    let mut active = vec![0];
                    for s in &path.steps {
                        let last = *active.last().expect("nonempty");
                        let new = !seen[s.index] && s.increment != 0.0;
                        seen[s.index] |= new;
                        active.push(last + usize::from(new));
                    }
                    // The path stops early only when the fit is exact; later
                    // iterations would not move it.
                    let tuning = (0..=opts.boost.m_max).map(|m| m as f64).collect();
                    Ok(Outcome::Curve(Curve { mse: pad(mse, opts.boost.m_max + 1), tuning, active: pad(active, opts.boost.m_max + 1) }))
                }
                Method::Lasso => {
                    let cv = lasso_cv(&sim.dataset, &opts.lasso, seed)?;
                    value(cv.coefficients, Some(cv.lambda))
                }
                Method::LassoOracle => {
                    let lambdas = lasso_grid(lambda_max(g), &opts.lasso);
                    let path = lasso_path(g, &lambdas, &opts.lasso)?;
                    let mse = lasso_path_mse(&path, g, truth, v)?;
                    let active = path.thetas.iter().map(|t| t.iter().filter(|x| **x != 0.0).count()).collect();
                    Ok(Outcome::Curve(Curve { mse, tuning: lambdas, active }))
                }
                Method::ForwardAic => value(forward_select_aic(g)?.coefficients, None),
                Method::RidgeOracle => {
                    let solver = RidgeSolver::new(g);
                    let mse = opts
                        .ridge
                        .lambda_grid
                        .iter()
                        .map(|&l| exact_mse(&solver.fit(l)?, truth, v))
                        .collect::<Result<Vec<f64>>>()?;
                    let active = vec![g.p(); mse.len()];
                    Ok(Outcome::Curve(Curve { mse, tuning: opts.ridge.lambda_grid.clone(), active }))
                }
                Method::RidgeCv => {
                    let cv = ridge_cv(&sim.dataset, &opts.ridge, seed)?;
                    value(cv.coefficients, Some(cv.lambda))
                }
                Method::Ols => {
                    if g.p() >= g.n() {
                        return Ok(Outcome::NotApplicable);
                    }
                    value(ols_fit(g)?, None)
                }
                Method::Truth => value(truth.clone(), None),
            }
        })();
        out.push((method, res));
    }
    out
}

fn pad<T: Copy>(mut v: Vec<T>, len: usize) -> Vec<T> {
    if let Some(&last) = v.last() {
        v.resize(len, last);
    }
    v
}

/// Runs every method on `reps` replications of every setting.
pub fn run_benchmark(
    settings: &[Setting],
    methods: &[Method],
    reps: usize,
    base_seed: u64,
    opts: &BenchmarkOptions,
) -> Result<BenchmarkReport> {
    opts.boost.validate()?;
    opts.ridge.validate()?;
    let mut records = Vec::new();
    let mut cells = Vec::new();
    let mut failures = Vec::new();

    for setting in settings {
        let per_rep: Vec<Vec<(Method, Result<Outcome>)>> = (0..reps)
            .into_par_iter()
            .map(|r| run_replication(setting, methods, base_seed.wrapping_add(r as u64), opts))
            .collect();

        for (mi, &method) in methods.iter().enumerate() {
            let mut values = Vec::new();
            let mut curves = Vec::new();
            let mut missing = false;
            let mut nfail = 0;
            for (rep, outcomes) in per_rep.iter().enumerate() {
                match &outcomes[mi].1 {
                    Ok(Outcome::Value { mse, tuning, active }) => {
                        values.push(*mse);
                        records.push(Record {
                            setting: setting.label.clone(),
                            method,
                            tuning: *tuning,
                            rep,
                            mse: *mse,
                            active: *active,
                        });
                    }
                    Ok(Outcome::Curve(c)) => curves.push((rep, c)),
                    Ok(Outcome::NotApplicable) => missing = true,
                    Err(e) => {
                        nfail += 1;
                        failures.push(Failure {
                            setting: setting.label.clone(),
                            method,
                            rep,
                            error: e.to_string(),
                        });
                    }
                }
            }
            if !curves.is_empty() {
                let common = match opts.oracle {
                    OracleScope::PerSetting => {
                        // Grid positions are shared across replications; for the
                        // Lasso that is the position relative to each λ_max.
                        let len = curves.iter().map(|(_, c)| c.mse.len()).min().unwrap_or(0);
                        let avg: Vec<f64> = (0..len)
                            .map(|l| pairwise_sum(&curves.iter().map(|(_, c)| c.mse[l]).collect::<Vec<_>>()))
                            .collect();
                        Some(oracle_pick(&avg).0)
                    }
                    OracleScope::PerReplication => None,
                };
                for (rep, c) in &curves {
                    let best = common.unwrap_or_else(|| oracle_pick(&c.mse).0);
                    values.push(c.mse[best]);
                    records.push(Record {
                        setting: setting.label.clone(),
                        method,
                        tuning: Some(c.tuning[best]),
                        rep: *rep,
                        mse: c.mse[best],
                        active: c.active[best],
                    });
                }
            }
            let (mean, se) = mean_se(&values);
            cells.push(Cell {
                setting: setting.label.clone(),
                method,
                mean,
                se,
                count: values.len(),
                failures: nfail,
                missing: missing && values.is_empty(),
            });
        }
    }

    Ok(BenchmarkReport {
        base_seed,
        reps,
        settings: settings.iter().map(|s| s.label.clone()).collect(),
        methods: methods.to_vec(),
        records,
        cells,
        failures,
    })
}

impl BenchmarkReport {
    pub fn cell(&self, setting: &str, method: Method) -> Option<&Cell> {
        self.cells.iter().find(|c| c.setting == setting && c.method == method)
    }

    pub fn records_for<'a>(&'a self, setting: &'a str, method: Method) -> impl Iterator<Item = &'a Record> + 'a {
        self.records.iter().filter(move |r| r.setting == setting && r.method == method)
    }

    /// Long format: `setting,method,tuning,rep,mse,active`.
    pub fn write_long_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["setting", "method", "tuning", "rep", "mse", "active"])?;
        for r in &self.records {
            wtr.write_record([
                r.setting.clone(),
                r.method.name().to_string(),
                r.tuning.map(|t| t.to_string()).unwrap_or_default(),
                r.rep.to_string(),
                r.mse.to_string(),
                r.active.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Methods as rows, settings as columns, cells `mean (se)`.
    pub fn summary_markdown(&self, header: &str) -> String {
        let mut s = String::new();
        if !header.is_empty() {
            for line in header.lines() {
                let _ = writeln!(s, "<!-- {line} -->");
            }
            s.push('\n');
        }
        let _ = write!(s, "| Method |");
        for st in &self.settings {
            let _ = write!(s, " {st} |");
        }
        s.push('\n');
        let _ = write!(s, "|---|");
        for _ in &self.settings {
            s.push_str("---|");
        }
        s.push('\n');
        for &m in &self.methods {
            let _ = write!(s, "| {} |", m.name());
            for st in &self.settings {
                let cell = self.cell(st, m);
                let text = match cell {
                    Some(c) if c.missing => "—".to_string(),
                    Some(c) if c.count == 0 => "failed".to_string(),
                    Some(c) if c.failures > 0 => format!("{:.3} ({:.3}) [{} failed]", c.mean, c.se, c.failures),
                    Some(c) => format!("{:.3} ({:.3})", c.mean, c.se),
                    None => "—".to_string(),
                };
                let _ = write!(s, " {text} |");
            }
            s.push('\n');
        }
        s
    }
}
