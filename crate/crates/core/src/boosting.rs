//! The L2 boosting iteration with shrinkage, and forward stagewise linear
//! regression (FSLR) as a comparison variant.

use std::io::Write;

use ndarray::{Array1, ArrayView2};

use crate::base_learner::componentwise_ls;
use crate::data::{unstandardize_coefficients, SparseCoefficients, Standardization, StandardizedDesign};
use crate::error::{Error, Result};
use crate::linalg::{axpy, sum_sq};

/// Residuals are recomputed from the coefficient vector this often.
pub const RESYNC_EVERY: usize = 500;

/// RSS at or below this fraction of the initial RSS counts as numerical zero.
pub const RSS_UNDERFLOW: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    L2Boost,
    Fslr,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostConfig {
    pub nu: f64,
    pub m_max: usize,
    pub variant: Variant,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self { nu: 0.1, m_max: 5000, variant: Variant::L2Boost }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(Error::InvalidConfig(format!("nu = {} must lie in (0, 1]", self.nu)));
        }
        if self.m_max < 1 {
            return Err(Error::InvalidConfig("m_max must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostStep {
    pub index: usize,
    /// Unshrunk least-squares coefficient from the base learner.
    pub coefficient: f64,
    /// Change of the standardized coefficient of `index`.
    pub increment: f64,
    /// RSS after this step.
    pub rss: f64,
    pub trace: Option<f64>,
    pub criterion: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BoostPath {
    pub config: BoostConfig,
    pub transform: Standardization,
    pub rss0: f64,
    pub steps: Vec<BoostStep>,
    /// Set when the RSS underflowed and the path was truncated.
    pub numerical_stop: bool,
}

pub fn boost_fit(g: &StandardizedDesign, cfg: &BoostConfig) -> Result<BoostPath> {
    cfg.validate()?;
    if g.p() == 0 {
        return Err(Error::EmptyDesign);
    }
    let y = g.y_centered();
    let mut u = y.to_vec();
    let mut theta = vec![0.0; g.p()];
    let rss0 = sum_sq(&u);
    let mut steps = Vec::with_capacity(cfg.m_max);
    let mut numerical_stop = rss0 == 0.0;

    if !numerical_stop {
        for m in 1..=cfg.m_max {
            let fit = componentwise_ls(g, &u)?;
            let increment = match cfg.variant {
                Variant::L2Boost => cfg.nu * fit.coefficient,
                Variant::Fslr if fit.coefficient == 0.0 => 0.0,
                Variant::Fslr => cfg.nu * fit.coefficient.signum(),
            };
            let col = g.column(fit.index);
            axpy(-increment, col, &mut u);
            theta[fit.index] += increment;
            if m % RESYNC_EVERY == 0 {
                u.copy_from_slice(y);
                for (j, &t) in theta.iter().enumerate() {
                    if t != 0.0 {
                        axpy(-t, g.column(j), &mut u);
                    }
                }
            }
            let rss = sum_sq(&u);
            steps.push(BoostStep {
                index: fit.index,
                coefficient: fit.coefficient,
                increment,
                rss,
                trace: None,
                criterion: None,
            });
            if rss <= RSS_UNDERFLOW * rss0 {
                numerical_stop = true;
                break;
            }
        }
    }

    Ok(BoostPath { config: *cfg, transform: g.transform().clone(), rss0, steps, numerical_stop })
}

impl BoostPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn p(&self) -> usize {
        self.transform.scales.len()
    }

    /// RSS after iteration `m`, with `m = 0` the RSS of the centered response.
    pub fn rss_at(&self, m: usize) -> f64 {
        if m == 0 {
            self.rss0
        } else {
            self.steps[m - 1].rss
        }
    }

    fn check(&self, m: usize) -> Result<()> {
        if m > self.len() {
            return Err(Error::IterationOutOfRange { m, len: self.len() });
        }
        Ok(())
    }

    /// Standardized coefficients after `m` iterations.
    pub fn theta_at(&self, m: usize) -> Result<Vec<f64>> {
        self.check(m)?;
        let mut theta = vec![0.0; self.p()];
        for s in &self.steps[..m] {
            theta[s.index] += s.increment;
        }
        Ok(theta)
    }

    /// Coefficients on the original scale after `m` iterations.
    pub fn coefficients_at(&self, m: usize) -> Result<SparseCoefficients> {
        unstandardize_coefficients(&self.theta_at(m)?, &self.transform)
    }

    /// Predictions on raw (unstandardized) rows after `m` iterations.
    pub fn predict(&self, m: usize, rows: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        self.coefficients_at(m)?.predict(rows)
    }

    /// Writes `m,index,increment,rss,trace,criterion`; missing values are empty.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["m", "index", "increment", "rss", "trace", "criterion"])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for (i, s) in self.steps.iter().enumerate() {
            wtr.write_record([
                (i + 1).to_string(),
                s.index.to_string(),
                s.increment.to_string(),
                s.rss.to_string(),
                opt(s.trace),
                opt(s.criterion),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{standardize, Dataset};
    use ndarray::array;

    fn fit(x: ndarray::Array2<f64>, y: ndarray::Array1<f64>, cfg: BoostConfig) -> (StandardizedDesign, BoostPath) {
        let g = standardize(&Dataset::new(x, y).unwrap()).unwrap();
        let path = boost_fit(&g, &cfg).unwrap();
        (g, path)
    }

    #[test]
    fn single_column_nu_one_is_ols_after_one_step() {
        let x = array![[1.0], [2.0], [4.0], [7.0]];
        let y = array![1.0, 3.5, 4.0, 9.0];
        let (_, path) = fit(x, y, BoostConfig { nu: 1.0, m_max: 5, variant: Variant::L2Boost });
        // OLS slope by hand: x̄ = 3.5, ȳ = 4.375, Sxy = 25.75, Sxx = 21.
        let c = path.coefficients_at(1).unwrap();
        assert!((c.beta[0] - 25.75 / 21.0).abs() < 1e-12);
        for s in &path.steps[1..] {
            assert!(s.increment.abs() < 1e-14);
        }
    }

    #[test]
    fn m_zero_is_mean_prediction() {
        let x = array![[1.0, 0.0], [2.0, 1.0], [4.0, 0.5]];
        let y = array![1.0, 2.0, 6.0];
        let (_, path) = fit(x.clone(), y, BoostConfig { m_max: 3, ..Default::default() });
        let pred = path.predict(0, x.view()).unwrap();
        assert!(pred.iter().all(|v| (*v - 3.0).abs() < 1e-15));
        assert!(path.coefficients_at(0).unwrap().active_set.is_empty());
        assert!(matches!(path.predict(4, x.view()), Err(Error::IterationOutOfRange { .. })));
    }

    #[test]
    fn first_step_single_coefficient() {
        let x = array![[1.0, 0.3], [2.0, -1.0], [4.0, 0.5], [3.0, 2.0]];
        let y = array![1.0, 2.0, 6.0, 4.0];
        let (_, path) = fit(x, y, BoostConfig { nu: 0.1, m_max: 2, variant: Variant::L2Boost });
        let c = path.coefficients_at(1).unwrap();
        assert_eq!(c.active_set.len(), 1);
        let s = &path.steps[0];
        let expected = 0.1 * s.coefficient / path.transform.scales[s.index];
        assert!((c.beta[s.index] - expected).abs() < 1e-15);
    }

    #[test]
    fn fslr_increments_have_magnitude_nu() {
        let x = array![[1.0, 0.3], [2.0, -1.0], [4.0, 0.5], [3.0, 2.0], [0.0, 1.0]];
        let y = array![1.0, 2.0, 6.0, 4.0, -1.0];
        let (_, path) = fit(x, y, BoostConfig { nu: 0.05, m_max: 50, variant: Variant::Fslr });
        assert!(path.steps.iter().all(|s| (s.increment.abs() - 0.05).abs() < 1e-15));
    }

    #[test]
    fn bad_config_rejected() {
        assert!(BoostConfig { nu: 0.0, ..Default::default() }.validate().is_err());
        assert!(BoostConfig { nu: 1.5, ..Default::default() }.validate().is_err());
        assert!(BoostConfig { m_max: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn constant_response_stops_immediately() {
        let (_, path) = fit(array![[1.0], [2.0], [3.0]], array![2.0, 2.0, 2.0], BoostConfig::default());
        assert!(path.is_empty());
        assert!(path.numerical_stop);
    }
}
