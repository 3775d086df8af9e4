//! Python bindings. Matrices cross the boundary as lists of rows.

use l2boost::boosting::{boost_fit, BoostConfig, BoostPath, Variant};
use l2boost::classification::{cv_misclassification, CvScheme, ResponseCoding};
use l2boost::data::{standardize, Dataset, SparseCoefficients};
use l2boost::model_selection::{aicc_stop, HatBackend};
use l2boost::simulation::{run_benchmark, BenchmarkOptions, Method, Setting};
use ndarray::{Array1, Array2};
use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: l2boost::Error) -> PyErr {
    use l2boost::Error as E;
    match e {
        E::BoundViolation { .. } => PyRuntimeError::new_err(e.to_string()),
        E::ZeroColumn
        | E::DegenerateDenominator { .. }
        | E::ZeroSigma
        | E::NoValidIteration
        | E::SingularDesign
        | E::NoConvergence { .. }
        | E::NotPositiveDefinite
        | E::FixedPointFailure(_) => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != p) {
        return Err(PyValueError::new_err("rows have different lengths"));
    }
    Array2::from_shape_vec((n, p), rows.into_iter().flatten().collect()).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn parse_variant(s: &str) -> PyResult<Variant> {
    match s {
        "l2boost" => Ok(Variant::L2Boost),
        "fslr" => Ok(Variant::Fslr),
        _ => Err(PyValueError::new_err(format!("unknown variant `{s}` (expected l2boost or fslr)"))),
    }
}

/// A fitted boosting path together with the selected stopping iteration.
#[pyclass(frozen)]
pub struct BoostModel {
    path: BoostPath,
    coefficients: SparseCoefficients,
    #[pyo3(get)]
    m_hat: usize,
    /// Criterion per iteration (`None` where undefined); empty for fixed stopping.
    #[pyo3(get)]
    criterion: Vec<Option<f64>>,
}

#[pymethods]
impl BoostModel {
    #[getter]
    fn intercept(&self) -> f64 {
        self.coefficients.intercept
    }

    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.coefficients.beta.to_vec()
    }

    #[getter]
    fn active_set(&self) -> Vec<usize> {
        self.coefficients.active_set.clone()
    }

    /// Selected column at every iteration (0-based).
    #[getter]
    fn path_indices(&self) -> Vec<usize> {
        self.path.steps.iter().map(|s| s.index).collect()
    }

    #[getter]
    fn rss(&self) -> Vec<f64> {
        (0..=self.path.len()).map(|m| self.path.rss_at(m)).collect()
    }

    #[getter]
    fn numerical_stop(&self) -> bool {
        self.path.numerical_stop
    }

    /// Predictions at the selected iteration, or at `m` when given.
    #[pyo3(signature = (x, m=None))]
    fn predict(&self, x: Vec<Vec<f64>>, m: Option<usize>) -> PyResult<Vec<f64>> {
        let x = matrix(x)?;
        let pred = match m {
            None => self.coefficients.predict(x.view()),
            Some(m) => self.path.predict(m, x.view()),
        };
        Ok(pred.map_err(to_py)?.to_vec())
    }

    /// `(intercept, coefficients)` after `m` iterations.
    fn coefficients_at(&self, m: usize) -> PyResult<(f64, Vec<f64>)> {
        let c = self.path.coefficients_at(m).map_err(to_py)?;
        Ok((c.intercept, c.beta.to_vec()))
    }

    fn __repr__(&self) -> String {
        format!("BoostModel(m_hat={}, active={}, path_length={})", self.m_hat, self.coefficients.active_set.len(), self.path.len())
    }
}

/// Boosts `y` on the columns of `x`; `stopping` is `"aicc"` or `"fixed"`.
#[pyfunction]
#[pyo3(signature = (x, y, nu=0.1, m_max=1000, variant="l2boost", stopping="aicc"))]
fn fit(
    py: Python<'_>,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    nu: f64,
    m_max: usize,
    variant: &str,
    stopping: &str,
) -> PyResult<BoostModel> {
    let x = matrix(x)?;
    let variant = parse_variant(variant)?;
    let fixed = match stopping {
        "aicc" => false,
        "fixed" => true,
        _ => return Err(PyValueError::new_err(format!("unknown stopping rule `{stopping}`"))),
    };
    py.detach(move || {
        let d = Dataset::new(x, Array1::from(y))?;
        let g = standardize(&d)?;
        let cfg = BoostConfig { nu, m_max, variant };
        cfg.validate()?;
        let mut path = boost_fit(&g, &cfg)?;
        let (m_hat, criterion) = if fixed {
            (path.len(), Vec::new())
        } else {
            let s = aicc_stop(&mut path, &g, HatBackend::Subspace)?;
            (s.m_hat, s.criterion_values)
        };
        let coefficients = path.coefficients_at(m_hat)?;
        Ok(BoostModel { path, coefficients, m_hat, criterion })
    })
    .map_err(to_py)
}

/// Long-format benchmark rows `(setting, method, tuning, rep, mse, active)`.
#[pyfunction]
#[pyo3(signature = (settings, methods, reps=50, seed=1))]
fn simulate(
    py: Python<'_>,
    settings: Vec<String>,
    methods: Vec<String>,
    reps: usize,
    seed: u64,
) -> PyResult<Vec<(String, String, Option<f64>, usize, f64, usize)>> {
    let settings = settings.iter().map(|s| Setting::parse(s)).collect::<l2boost::Result<Vec<_>>>().map_err(to_py)?;
    let methods = methods.iter().map(|s| Method::parse(s)).collect::<l2boost::Result<Vec<_>>>().map_err(to_py)?;
    let report = py
        .detach(|| run_benchmark(&settings, &methods, reps, seed, &BenchmarkOptions::default()))
        .map_err(to_py)?;
    Ok(report
        .records
        .into_iter()
        .map(|r| (r.setting, r.method.name().to_string(), r.tuning, r.rep, r.mse, r.active))
        .collect())
}

/// `(rate, per_repeat_rates)` from repeated stratified random splits.
#[pyfunction]
#[pyo3(signature = (x, labels, repeats=50, seed=1, coding="zero-one"))]
fn classify_cv(
    py: Python<'_>,
    x: Vec<Vec<f64>>,
    labels: Vec<u8>,
    repeats: usize,
    seed: u64,
    coding: &str,
) -> PyResult<(f64, Vec<f64>)> {
    let coding = match coding {
        "zero-one" => ResponseCoding::ZeroOne,
        "centered" => ResponseCoding::Centered,
        _ => return Err(PyValueError::new_err(format!("unknown coding `{coding}`"))),
    };
    let x = matrix(x)?;
    let y: Array1<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let scheme = CvScheme { repeats, seed, ..Default::default() };
    let r = py
        .detach(|| {
            let d = Dataset::new(x, y)?;
            cv_misclassification(&d, &scheme, &BoostConfig::default(), coding, HatBackend::Subspace)
        })
        .map_err(to_py)?;
    Ok((r.rate, r.per_repeat))
}

/// Remainder bound `B (1 + ν(2 − ν) m b²)^{−b/(2(2+b))}`.
#[pyfunction]
#[pyo3(signature = (b_bound, m, b, nu=1.0))]
fn temlyakov_bound(b_bound: f64, m: usize, b: f64, nu: f64) -> f64 {
    l2boost::greedy::temlyakov_bound(b_bound, m, b, nu)
}

/// `(kappa, p, variances)` for the decaying-coefficient model.
#[pyfunction]
#[pyo3(signature = (n, noise_var=1.0))]
fn solve_kappa(n: usize, noise_var: f64) -> PyResult<(f64, usize, Vec<f64>)> {
    let s = l2boost::simulation::solve_kappa(n, noise_var).map_err(to_py)?;
    Ok((s.kappa, s.p, s.variances))
}

/// Per-instance `(instance, dim, p, max_ratio, status)`; `max_ratio` is the
/// violating ratio when `status == "violation"`.
#[pyfunction]
#[pyo3(signature = (instances, b=1.0, nu=1.0, steps=200, seed=1))]
fn greedy_check(
    py: Python<'_>,
    instances: usize,
    b: f64,
    nu: f64,
    steps: usize,
    seed: u64,
) -> PyResult<Vec<(usize, usize, usize, Option<f64>, String)>> {
    let reports = py
        .detach(|| l2boost::greedy::verify_random_instances(instances, b, nu, steps, seed))
        .map_err(to_py)?;
    Ok(reports
        .into_iter()
        .map(|r| {
            let (ratio, status) = match r.result {
                Ok(rep) => (Some(rep.max_ratio), "ok"),
                Err(l2boost::Error::BoundViolation { norm, bound, .. }) => (Some(norm / bound), "violation"),
                Err(_) => (None, "error"),
            };
            (r.instance, r.dim, r.p, ratio, status.to_string())
        })
        .collect())
}

#[pymodule]
fn l2boost_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", l2boost::VERSION)?;
    m.add_class::<BoostModel>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(classify_cv, m)?)?;
    m.add_function(wrap_pyfunction!(temlyakov_bound, m)?)?;
    m.add_function(wrap_pyfunction!(solve_kappa, m)?)?;
    m.add_function(wrap_pyfunction!(greedy_check, m)?)?;
    Ok(())
}
