//! Componentwise linear least squares: regress the residuals on each column
//! separately and keep the single column that reduces the RSS most.

use crate::data::StandardizedDesign;
use crate::error::{Error, Result};
use crate::linalg::{dot, sum_sq};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseFit {
    /// Zero-based selected column.
    pub index: usize,
    /// Least-squares coefficient of the residuals on the selected column.
    pub coefficient: f64,
    /// RSS after the unshrunk fit.
    pub rss_after: f64,
    /// `⟨u, g_index⟩_(n)`; equals `coefficient` for unit-norm columns.
    pub correlation: f64,
}

/// With unit empirical norm the least-squares coefficient on column `j` is
/// `⟨u, g_j⟩_(n)` and the RSS reduction is `n·⟨u, g_j⟩²_(n)`, so the best
/// column maximizes the absolute inner product. Exact ties go to the smallest
/// index.
pub fn componentwise_ls(g: &StandardizedDesign, u: &[f64]) -> Result<BaseFit> {
    let p = g.p();
    let n = g.n();
    if p == 0 {
        return Err(Error::EmptyDesign);
    }
    if u.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: u.len() });
    }
    let nf = n as f64;
    let mut best = 0;
    let mut best_ip = dot(u, g.column(0)) / nf;
    for j in 1..p {
        let ip = dot(u, g.column(j)) / nf;
        if ip.abs() > best_ip.abs() {
            best = j;
            best_ip = ip;
        }
    }
    let rss_after = (sum_sq(u) - nf * best_ip * best_ip).max(0.0);
    Ok(BaseFit { index: best, coefficient: best_ip, rss_after, correlation: best_ip })
}
