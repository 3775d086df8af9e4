//! The weak greedy algorithm over a finite dictionary and the uniform
//! remainder bound for targets with ℓ¹-bounded coefficients.

use ndarray::Array2;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::data::StandardizedDesign;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot};

const UNIT_NORM_TOL: f64 = 1e-10;
/// Relative slack for rounding when comparing a norm with its bound.
const BOUND_SLACK: f64 = 1e-12;

/// Dictionary elements are the columns of `vectors`; the inner product is
/// `Σ a_i b_i / divisor`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDictionary {
    pub vectors: Array2<f64>,
    pub divisor: f64,
    pub target: Vec<f64>,
    /// Coefficients of the target in the dictionary, when known.
    pub coeffs: Option<Vec<f64>>,
    /// `Σ|β_j|` when `coeffs` is known.
    pub b_bound: Option<f64>,
}

impl FiniteDictionary {
    /// Target `f = Σ β_j g_j` under the Euclidean inner product.
    pub fn new(vectors: Array2<f64>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != vectors.ncols() {
            return Err(Error::DimensionMismatch { expected: vectors.ncols(), found: coeffs.len() });
        }
        let target = vectors.dot(&ndarray::ArrayView1::from(&coeffs)).to_vec();
        let b = coeffs.iter().map(|c| c.abs()).sum();
        let d = Self { vectors, divisor: 1.0, target, coeffs: Some(coeffs), b_bound: Some(b) };
        d.check_norms()?;
        Ok(d)
    }

    /// The standardized columns under `⟨·,·⟩_(n)` with the centered response
    /// as target; no coefficient representation is assumed.
    pub fn from_design(g: &StandardizedDesign) -> Result<Self> {
        let d = Self {
            vectors: g.g().to_owned(),
            divisor: g.n() as f64,
            target: g.y_centered().to_vec(),
            coeffs: None,
            b_bound: None,
        };
        d.check_norms()?;
        Ok(d)
    }

    /// Gaussian directions normalized to unit length with Gaussian coefficients.
    pub fn random(dim: usize, p: usize, seed: u64) -> Result<Self> {
        if dim == 0 || p == 0 {
            return Err(Error::EmptyDesign);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vectors = Array2::zeros((dim, p));
        for mut col in vectors.columns_mut() {
            loop {
                col.iter_mut().for_each(|v: &mut f64| *v = rng.sample(StandardNormal));
                let norm = col.dot(&col).sqrt();
                if norm > 1e-8 {
                    col /= norm;
                    break;
                }
            }
        }
        let coeffs = (0..p).map(|_| rng.sample(StandardNormal)).collect();
        Self::new(vectors, coeffs)
    }

    fn check_norms(&self) -> Result<()> {
        for (j, col) in self.vectors.columns().into_iter().enumerate() {
            let norm = (col.dot(&col) / self.divisor).sqrt();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::InvalidData(format!("dictionary element {j} has norm {norm}")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn len(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn element(&self, j: usize) -> Vec<f64> {
        self.vectors.column(j).to_vec()
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        dot(a, b) / self.divisor
    }

    pub fn norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    /// Largest absolute inner product; ties to the smallest index.
    ExactMax,
    /// Uniform among indices reaching `b` times the maximum.
    BWeakRandom { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyStep {
    pub index: usize,
    /// `⟨R^{m−1} f, g_index⟩`.
    pub inner: f64,
    /// `‖R^m f‖`.
    pub norm: f64,
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyTrace {
    pub initial_norm: f64,
    pub steps: Vec<GreedyStep>,
    pub remainder: Vec<f64>,
}

/// `B (1 + ν(2 − ν) m b²)^{−b / (2(2 + b))}`.
pub fn temlyakov_bound(b_bound: f64, m: usize, b: f64, nu: f64) -> f64 {
    let base = 1.0 + nu * (2.0 - nu) * m as f64 * b * b;
    b_bound * base.powf(-b / (2.0 * (2.0 + b)))
}

fn check_params(b: f64, nu: f64) -> Result<()> {
    if !(b > 0.0 && b <= 1.0) {
        return Err(Error::BadWeakness(b));
    }
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::InvalidConfig(format!("nu = {nu} must lie in (0, 1]")));
    }
    Ok(())
}

/// Runs `m_steps` of `R^m = R^{m−1} − ν ⟨R^{m−1}, g_{S_m}⟩ g_{S_m}`.
pub fn weak_greedy(d: &FiniteDictionary, b: f64, nu: f64, m_steps: usize, selector: Selector) -> Result<GreedyTrace> {
    check_params(b, nu)?;
    if d.is_empty() {
        return Err(Error::EmptyDesign);
    }
    let mut rng = match selector {
        Selector::BWeakRandom { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        Selector::ExactMax => None,
    };
    let columns: Vec<Vec<f64>> = (0..d.len()).map(|j| d.element(j)).collect();
    let mut r = d.target.clone();
    let initial_norm = d.norm(&r);
    let mut steps = Vec::with_capacity(m_steps);
    let mut ips = vec![0.0; d.len()];
    for m in 1..=m_steps {
        for (ip, col) in ips.iter_mut().zip(&columns) {
            *ip = dot(&r, col) / d.divisor;
        }
        let mut best = 0;
        for j in 1..ips.len() {
            if ips[j].abs() > ips[best].abs() {
                best = j;
            }
        }
        let index = match rng.as_mut() {
            None => best,
            Some(rng) => {
                let level = b * ips[best].abs();
                let ok: Vec<usize> = (0..ips.len()).filter(|&j| ips[j].abs() >= level).collect();
                *ok.choose(rng).expect("the maximizer qualifies")
            }
        };
        let inner = ips[index];
        axpy(-(nu * inner), &columns[index], &mut r);
        let bound = d.b_bound.map(|bb| temlyakov_bound(bb, m, b, nu));
        steps.push(GreedyStep { index, inner, norm: d.norm(&r), bound });
    }
    Ok(GreedyTrace { initial_norm, steps, remainder: r })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    /// Largest `‖R^m f‖ / bound(m)` over `m = 0..=m_steps`.
    pub max_ratio: f64,
    pub worst_step: usize,
}

/// Checks `‖R^m f‖ ≤ bound(m)` for every step; a violation is an error.
pub fn verify_bound(d: &FiniteDictionary, b: f64, nu: f64, m_steps: usize, selector: Selector) -> Result<BoundReport> {
    let bb = d
        .b_bound
        .ok_or_else(|| Error::InvalidConfig("dictionary has no coefficient bound".into()))?;
    let trace = weak_greedy(d, b, nu, m_steps, selector)?;
    let norms = std::iter::once(trace.initial_norm).chain(trace.steps.iter().map(|s| s.norm));
    let mut report = BoundReport { max_ratio: 0.0, worst_step: 0 };
    for (m, norm) in norms.enumerate() {
        let bound = temlyakov_bound(bb, m, b, nu);
        if norm > bound * (1.0 + BOUND_SLACK) {
            return Err(Error::BoundViolation { step: m, norm, bound });
        }
        let ratio = if bound > 0.0 { norm / bound } else { 0.0 };
        if ratio > report.max_ratio {
            report = BoundReport { max_ratio: ratio, worst_step: m };
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceReport {
    pub instance: usize,
    pub dim: usize,
    pub p: usize,
    pub result: std::result::Result<BoundReport, Error>,
}

/// Bound checks on random dictionaries; instance `i` uses seed `seed + i`
/// with dimension in `2..=40` and size in `2..=60`.
pub fn verify_random_instances(instances: usize, b: f64, nu: f64, m_steps: usize, seed: u64) -> Result<Vec<InstanceReport>> {
    check_params(b, nu)?;
    Ok((0..instances)
        .into_par_iter()
        .map(|i| {
            let s = seed.wrapping_add(i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            rng.set_stream(1);
            let dim = rng.random_range(2..=40);
            let p = rng.random_range(2..=60);
            let result = FiniteDictionary::random(dim, p, s).and_then(|d| {
                let selector = if b < 1.0 { Selector::BWeakRandom { seed: s } } else { Selector::ExactMax };
                verify_bound(&d, b, nu, m_steps, selector)
            });
            InstanceReport { instance: i, dim, p, result }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_at_zero_is_b() {
        assert_eq!(temlyakov_bound(2.5, 0, 0.7, 0.3), 2.5);
    }

    #[test]
    fn bound_plug_in() {
        let v = temlyakov_bound(1.0, 4, 1.0, 1.0);
        assert!((v - 5f64.powf(-1.0 / 6.0)).abs() < 1e-15);
        assert!((v - 0.7647).abs() < 1e-4);
    }

    #[test]
    fn half_weakness_exponent() {
        // b = 1/2, ν = 1: (1 + m/4)^{−1/10}.
        for m in [1, 10, 100] {
            let v = temlyakov_bound(3.0, m, 0.5, 1.0);
            assert!((v - 3.0 * (1.0 + m as f64 / 4.0).powf(-0.1)).abs() < 1e-14);
        }
    }

    #[test]
    fn orthonormal_one_step() {
        let d = FiniteDictionary::new(Array2::eye(3), vec![1.0, 0.0, 0.0]).unwrap();
        let t = weak_greedy(&d, 1.0, 1.0, 1, Selector::ExactMax).unwrap();
        assert_eq!(t.steps[0].index, 0);
        assert_eq!(t.steps[0].norm, 0.0);
    }

    #[test]
    fn bad_weakness() {
        let d = FiniteDictionary::new(Array2::eye(2), vec![1.0, 1.0]).unwrap();
        assert_eq!(weak_greedy(&d, 0.0, 1.0, 1, Selector::ExactMax).unwrap_err(), Error::BadWeakness(0.0));
        assert_eq!(weak_greedy(&d, 1.5, 1.0, 1, Selector::ExactMax).unwrap_err(), Error::BadWeakness(1.5));
    }

    #[test]
    fn zero_target_never_violates() {
        let d = FiniteDictionary::new(Array2::eye(4), vec![0.0; 4]).unwrap();
        let r = verify_bound(&d, 0.5, 1.0, 10, Selector::ExactMax).unwrap();
        assert_eq!(r.max_ratio, 0.0);
    }

    #[test]
    fn non_unit_elements_rejected() {
        let v = ndarray::array![[2.0, 0.0], [0.0, 1.0]];
        assert!(FiniteDictionary::new(v, vec![1.0, 1.0]).is_err());
    }
}
