//! Data containers, column standardization and exact population MSE for
//! Gaussian designs.

use std::io::Read;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ShapeBuilder};

use crate::error::{Error, Result};
use crate::linalg::{dot, pairwise_sum};

/// Raw regression data: `n` rows of `p` predictors and a response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array1<f64>,
    column_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        Self::with_names(x, y, None)
    }

    pub fn with_names(x: Array2<f64>, y: Array1<f64>, column_names: Option<Vec<String>>) -> Result<Self> {
        let (n, p) = x.dim();
        if n < 2 {
            return Err(Error::InvalidData(format!("need at least 2 rows, got {n}")));
        }
        if p < 1 {
            return Err(Error::EmptyDesign);
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: y.len() });
        }
        if let Some(names) = &column_names {
            if names.len() != p {
                return Err(Error::DimensionMismatch { expected: p, found: names.len() });
            }
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite entry".into()));
        }
        Ok(Self { x, y, column_names })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    /// Name of column `j`, falling back to `x{j}`.
    pub fn column_name(&self, j: usize) -> String {
        match &self.column_names {
            Some(names) => names[j].clone(),
            None => format!("x{j}"),
        }
    }

    /// Rows selected by index, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Result<Dataset> {
        let x = self.x.select(ndarray::Axis(0), rows);
        let y = self.y.select(ndarray::Axis(0), rows);
        Dataset::with_names(x, y, self.column_names.clone())
    }

    /// Reads a CSV file with a header row; `response` names the response
    /// column and every other column becomes a predictor.
    pub fn from_csv_path(path: impl AsRef<Path>, response: &str) -> Result<Dataset> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file, response)
    }

    pub fn from_csv_reader<R: Read>(reader: R, response: &str) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        let resp_idx = headers
            .iter()
            .position(|h| h == response)
            .ok_or_else(|| Error::InvalidData(format!("response column '{response}' not found")))?;
        let names: Vec<String> =
            headers.iter().enumerate().filter(|(i, _)| *i != resp_idx).map(|(_, h)| h.clone()).collect();
        let p = names.len();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != headers.len() {
                return Err(Error::InvalidData(format!("row {} has {} fields", row + 1, rec.len())));
            }
            for (i, field) in rec.iter().enumerate() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::InvalidData(format!("row {}: '{field}' is not a number", row + 1)))?;
                if i == resp_idx {
                    ys.push(v);
                } else {
                    xs.push(v);
                }
            }
        }
        let n = ys.len();
        let x = Array2::from_shape_vec((n, p), xs).map_err(|e| Error::InvalidData(e.to_string()))?;
        Dataset::with_names(x, Array1::from(ys), Some(names))
    }
}

/// Affine maps between the original and the standardized coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub centers: Array1<f64>,
    pub scales: Array1<f64>,
    pub y_center: f64,
}

/// Centered design with unit empirical norm columns, `n⁻¹ Σᵢ g_ij² = 1`.
///
/// Columns are stored contiguously so that the per-column scans of the base
/// learner read linear memory.
#[derive(Debug, Clone)]
pub struct StandardizedDesign {
    g: Array2<f64>,
    transform: Standardization,
    y_centered: Array1<f64>,
}

fn centered_mean(v: ArrayView1<'_, f64>) -> f64 {
    let n = v.len() as f64;
    let c0 = v.iter().sum::<f64>() / n;
    c0 + v.iter().map(|x| x - c0).sum::<f64>() / n
}

/// Centers every column and the response, then rescales columns to unit
/// empirical norm.
pub fn standardize(d: &Dataset) -> Result<StandardizedDesign> {
    let (n, p) = d.x.dim();
    let nf = n as f64;
    let mut g = Array2::<f64>::zeros((n, p).f());
    let mut centers = Array1::zeros(p);
    let mut scales = Array1::zeros(p);
    for j in 0..p {
        let col = d.x.column(j);
        let c = centered_mean(col);
        let var = col.iter().map(|x| (x - c) * (x - c)).sum::<f64>() / nf;
        let scale = var.sqrt();
        let magnitude = col.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !(scale > 1e-12 * magnitude) || scale == 0.0 {
            return Err(Error::ZeroVarianceColumn(j));
        }
        centers[j] = c;
        scales[j] = scale;
        for (gi, xi) in g.column_mut(j).iter_mut().zip(col.iter()) {
            *gi = (xi - c) / scale;
        }
    }
    let y_center = centered_mean(d.y.view());
    let y_centered = d.y.mapv(|v| v - y_center);
    Ok(StandardizedDesign { g, transform: Standardization { centers, scales, y_center }, y_centered })
}

impl StandardizedDesign {
    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn p(&self) -> usize {
        self.g.ncols()
    }

    /// Column `j` as a contiguous slice.
    pub fn column(&self, j: usize) -> &[f64] {
        self.g.column(j).to_slice().expect("columns are stored contiguously")
    }

    pub fn g(&self) -> ArrayView2<'_, f64> {
        self.g.view()
    }

    pub fn y_centered(&self) -> &[f64] {
        self.y_centered.as_slice().expect("contiguous")
    }

    pub fn transform(&self) -> &Standardization {
        &self.transform
    }

    /// Same design, different (already centered) response. Used when the
    /// response is re-coded but the predictors are unchanged.
    pub fn with_centered_response(&self, y_centered: Array1<f64>, y_center: f64) -> Result<Self> {
        if y_centered.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: y_centered.len() });
        }
        let mut out = self.clone();
        out.y_centered = y_centered;
        out.transform.y_center = y_center;
        Ok(out)
    }

    /// Empirical inner product `⟨a, b⟩_(n)`.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        dot(a, b) / self.n() as f64
    }

    /// Fitted values `y_center + G θ` on the training rows.
    pub fn fitted_standardized(&self, theta: &[f64]) -> Array1<f64> {
        let mut f = Array1::from_elem(self.n(), self.transform.y_center);
        for (j, &t) in theta.iter().enumerate() {
            if t != 0.0 {
                for (fi, gi) in f.iter_mut().zip(self.column(j)) {
                    *fi += t * gi;
                }
            }
        }
        f
    }
}

/// Intercept and coefficients on the original predictor scale.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCoefficients {
    pub intercept: f64,
    pub beta: Array1<f64>,
    pub active_set: Vec<usize>,
}

impl SparseCoefficients {
    pub fn new(intercept: f64, beta: Array1<f64>) -> Self {
        let active_set = beta.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, _)| j).collect();
        Self { intercept, beta, active_set }
    }

    pub fn zeros(intercept: f64, p: usize) -> Self {
        Self::new(intercept, Array1::zeros(p))
    }

    pub fn p(&self) -> usize {
        self.beta.len()
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        if x.ncols() != self.p() {
            return Err(Error::DimensionMismatch { expected: self.p(), found: x.ncols() });
        }
        Ok(x.dot(&self.beta) + self.intercept)
    }
}

/// Maps standardized-scale coefficients back to the original predictor scale.
pub fn unstandardize_coefficients(theta: &[f64], s: &Standardization) -> Result<SparseCoefficients> {
    let p = s.scales.len();
    if theta.len() != p {
        return Err(Error::DimensionMismatch { expected: p, found: theta.len() });
    }
    let beta: Array1<f64> = theta.iter().zip(s.scales.iter()).map(|(t, sc)| t / sc).collect();
    let shift: Vec<f64> = beta.iter().zip(s.centers.iter()).map(|(b, c)| b * c).collect();
    let intercept = s.y_center - pairwise_sum(&shift);
    Ok(SparseCoefficients::new(intercept, beta))
}

/// Exact `E[(f̂(X) − f(X))²]` for `X ~ N(0, V)`:
/// `(μ̂ − μ)² + (β̂ − β)ᵀ V (β̂ − β)`.
pub fn exact_mse(est: &SparseCoefficients, truth: &SparseCoefficients, v: ArrayView2<'_, f64>) -> Result<f64> {
    let p = truth.p();
    if est.p() != p {
        return Err(Error::DimensionMismatch { expected: p, found: est.p() });
    }
    if v.dim() != (p, p) {
        return Err(Error::DimensionMismatch { expected: p, found: v.nrows() });
    }
    let d = &est.beta - &truth.beta;
    let quad = d.dot(&v.dot(&d));
    let bias = est.intercept - truth.intercept;
    Ok((bias * bias + quad).max(0.0))
}
