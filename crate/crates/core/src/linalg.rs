//! Small dense kernels shared by the estimators.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};

/// Fixed-order dot product with four independent accumulators.
///
/// The combining order never changes, so repeated calls on the same data are
/// bit-identical regardless of caller.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let chunks = a.len() / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..chunks {
        let i = 4 * c;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (s0 + s1) + (s2 + s3) + tail
}

#[inline]
pub fn sum_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Pairwise (cascade) summation in slice order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2..=8 => v.iter().fold(0.0, |s, x| s + x),
        n => {
            let (l, r) = v.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

pub fn mean(v: &[f64]) -> f64 {
    pairwise_sum(v) / v.len() as f64
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
///
/// Fails with [`Error::NotPositiveDefinite`] when a pivot is not strictly positive.
pub fn cholesky(a: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: a.ncols() });
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let djj = d.sqrt();
        l[[j, j]] = djj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / djj;
        }
    }
    Ok(l)
}

/// Solve `L Lᵀ x = b` given the lower factor `L`.
pub fn cholesky_solve(l: &Array2<f64>, b: &[f64]) -> Array1<f64> {
    let n = l.nrows();
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * z[k];
        }
        z[i] = s / l[[i, i]];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in (i + 1)..n {
            s -= l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    Array1::from(x)
}

/// Solve the SPD system `a x = b` with one step of iterative refinement.
///
/// A pivot smaller than `rel_tol` times the largest diagonal entry is reported
/// as [`Error::SingularDesign`].
pub fn spd_solve(a: &Array2<f64>, b: &[f64], rel_tol: f64) -> Result<Array1<f64>> {
    let max_diag = a.diag().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let l = cholesky(a.view()).map_err(|_| Error::SingularDesign)?;
    let min_pivot = l.diag().iter().fold(f64::INFINITY, |m, v| m.min(v * v));
    if min_pivot <= rel_tol * max_diag {
        return Err(Error::SingularDesign);
    }
    let mut x = cholesky_solve(&l, b);
    let ax = a.dot(&x);
    let resid: Vec<f64> = b.iter().zip(ax.iter()).map(|(bi, ai)| bi - ai).collect();
    let dx = cholesky_solve(&l, &resid);
    x += &dx;
    Ok(x)
}

/// `n` geometrically spaced points from `hi` down to `lo` (both included).
pub fn geometric_grid_desc(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    let (lh, ll) = (hi.ln(), lo.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                hi
            } else if i == n - 1 {
                lo
            } else {
                (lh + (ll - lh) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cholesky_reconstructs() {
        let a = array![[4.0, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]];
        let l = cholesky(a.view()).unwrap();
        let back = l.dot(&l.t());
        for (x, y) in back.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        assert_eq!(cholesky(a.view()), Err(Error::NotPositiveDefinite));
    }

    #[test]
    fn spd_solve_matches() {
        let a = array![[4.0, 1.0], [1.0, 3.0]];
        let x = spd_solve(&a, &[1.0, 2.0], 1e-14).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn dot_handles_tails() {
        let a: Vec<f64> = (1..=7).map(f64::from).collect();
        assert_eq!(dot(&a, &a), 140.0);
        assert_eq!(pairwise_sum(&a), 28.0);
    }

    #[test]
    fn grid_endpoints_exact() {
        let g = geometric_grid_desc(1e4, 1e-4, 50);
        assert_eq!(g.len(), 50);
        assert_eq!(g[0], 1e4);
        assert_eq!(g[49], 1e-4);
        assert!(g.windows(2).all(|w| w[0] > w[1]));
    }
}
