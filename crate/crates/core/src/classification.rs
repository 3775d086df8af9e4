//! Two-class problems through least-squares boosting of a 0/1 (or ±1/2)
//! response: microarray preprocessing, the plug-in rule, a repeated
//! random-split misclassification estimate, and gene rankings.

use std::io::Read;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::boosting::{boost_fit, BoostConfig, BoostPath};
use crate::data::{standardize, Dataset, SparseCoefficients};
use crate::error::{Error, Result};
use crate::model_selection::{bernoulli_aic_stop, HatBackend, StoppingResult};
use crate::simulation::FOLD_STREAM;

pub const EXPRESSION_FLOOR: f64 = 100.0;
pub const EXPRESSION_CEILING: f64 = 16_000.0;

/// Raw expression values, samples as rows and genes as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionMatrix {
    pub raw: Array2<f64>,
    pub labels: Vec<u8>,
    pub gene_names: Vec<String>,
}

impl ExpressionMatrix {
    pub fn new(raw: Array2<f64>, labels: Vec<u8>, gene_names: Vec<String>) -> Result<Self> {
        if labels.len() != raw.nrows() {
            return Err(Error::DimensionMismatch { expected: raw.nrows(), found: labels.len() });
        }
        if gene_names.len() != raw.ncols() {
            return Err(Error::DimensionMismatch { expected: raw.ncols(), found: gene_names.len() });
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite expression value".into()));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::InvalidData("labels must be 0 or 1".into()));
        }
        Ok(Self { raw, labels, gene_names })
    }

    pub fn from_csv_path(path: impl AsRef<Path>, label_column: &str) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::from_csv_reader(f, label_column)
    }

    /// Header row of gene names plus one 0/1 label column.
    pub fn from_csv_reader<R: Read>(reader: R, label_column: &str) -> Result<Self> {
        let d = Dataset::from_csv_reader(reader, label_column)?;
        let labels = d
            .y()
            .iter()
            .map(|&v| match v {
                0.0 => Ok(0),
                1.0 => Ok(1),
                _ => Err(Error::InvalidData(format!("label {v} is not 0 or 1"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        let names = (0..d.p()).map(|j| d.column_name(j)).collect();
        Self::new(d.x().to_owned(), labels, names)
    }
}

/// Standardizes each row to mean 0 and variance 1 (divisor = row length).
pub fn standardize_rows(x: &mut Array2<f64>) -> Result<()> {
    let p = x.ncols() as f64;
    for (i, mut row) in x.axis_iter_mut(Axis(0)).enumerate() {
        let mean = row.sum() / p;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / p;
        if !(var > 0.0) {
            return Err(Error::ZeroVarianceSample(i));
        }
        let sd = var.sqrt();
        row.mapv_inplace(|v| (v - mean) / sd);
    }
    Ok(())
}

/// Clip to `[100, 16000]`, take `log10`, then standardize every sample.
pub fn preprocess_microarray(e: &ExpressionMatrix) -> Result<Dataset> {
    if e.raw.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidData("negative expression value".into()));
    }
    let mut x = e.raw.mapv(|v| v.clamp(EXPRESSION_FLOOR, EXPRESSION_CEILING).log10());
    standardize_rows(&mut x)?;
    let y = e.labels.iter().map(|&l| f64::from(l)).collect();
    Dataset::with_names(x, y, Some(e.gene_names.clone()))
}

/// `1` exactly when the estimated probability exceeds `1/2`.
pub fn plugin_classify(fitted: &[f64]) -> Vec<u8> {
    fitted.iter().map(|&f| u8::from(f > 0.5)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResponseCoding {
    /// Fit the 0/1 labels directly.
    #[default]
    ZeroOne,
    /// Fit `y − 1/2`; the threshold for the fitted values becomes 0.
    Centered,
}

impl ResponseCoding {
    /// Offset added to fitted values to obtain probabilities.
    pub fn prob_shift(self) -> f64 {
        match self {
            ResponseCoding::ZeroOne => 0.0,
            ResponseCoding::Centered => 0.5,
        }
    }
}

fn binary_labels(d: &Dataset) -> Result<Vec<u8>> {
    let labels = d
        .y()
        .iter()
        .map(|&v| match v {
            0.0 => Ok(0),
            1.0 => Ok(1),
            _ => Err(Error::InvalidData(format!("response {v} is not 0 or 1"))),
        })
        .collect::<Result<Vec<u8>>>()?;
    Ok(labels)
}

/// Boosting fit on a binary response, stopped by the Bernoulli AIC.
#[derive(Debug, Clone)]
pub struct Classifier {
    pub path: BoostPath,
    pub stop: StoppingResult,
    /// Coefficients for the coded response.
    pub coefficients: SparseCoefficients,
    pub coding: ResponseCoding,
}

impl Classifier {
    pub fn fit(d: &Dataset, cfg: &BoostConfig, coding: ResponseCoding, backend: HatBackend) -> Result<Self> {
        let labels = binary_labels(d)?;
        let shift = coding.prob_shift();
        let coded = Dataset::with_names(
            d.x().to_owned(),
            d.y().mapv(|v| v - shift),
            d.column_names().map(<[String]>::to_vec),
        )?;
        let g = standardize(&coded)?;
        let mut path = boost_fit(&g, cfg)?;
        let labels: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
        let stop = bernoulli_aic_stop(&mut path, &g, &labels, shift, backend)?;
        let coefficients = path.coefficients_at(stop.m_hat)?;
        Ok(Self { path, stop, coefficients, coding })
    }

    /// Estimated conditional probabilities of class 1 (may leave `[0, 1]`).
    pub fn probabilities(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        Ok(self.coefficients.predict(x)? + self.coding.prob_shift())
    }

    pub fn classify(&self, x: ArrayView2<'_, f64>) -> Result<Vec<u8>> {
        Ok(plugin_classify(self.probabilities(x)?.as_slice().expect("contiguous")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvScheme {
    pub train_fraction: f64,
    pub repeats: usize,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for CvScheme {
    fn default() -> Self {
        Self { train_fraction: 2.0 / 3.0, repeats: 50, seed: 1, stratified: true }
    }
}

impl CvScheme {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig("train_fraction must lie in (0, 1)".into()));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be positive".into()));
        }
        Ok(())
    }
}

/// Training and test rows for one repeat. Stratified splits put
/// `floor(fraction · n_c)` rows of each class into training.
pub fn train_test_split(labels: &[u8], fraction: f64, stratified: bool, rng: &mut impl Rng) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = labels.len();
    let mut train = Vec::new();
    let mut test = Vec::new();
    if stratified {
        for class in [0u8, 1] {
            let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
            members.shuffle(rng);
            let k = (fraction * members.len() as f64).floor() as usize;
            train.extend_from_slice(&members[..k]);
            test.extend_from_slice(&members[k..]);
        }
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        let k = (fraction * n as f64).floor() as usize;
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    for class in [0u8, 1] {
        if !train.iter().any(|&i| labels[i] == class) {
            return Err(Error::DegenerateSplit(format!("class {class} missing from training rows")));
        }
    }
    if test.is_empty() {
        return Err(Error::DegenerateSplit("empty test set".into()));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub rate: f64,
    pub per_repeat: Vec<f64>,
    pub m_hats: Vec<usize>,
    /// `(row, predicted class)` for the test rows of every repeat.
    pub predictions: Vec<Vec<(usize, u8)>>,
}

/// Repeated random splits: fit on the training part with Bernoulli-AIC
/// stopping, classify the test part. Repeat `r` draws its split from seed
/// `scheme.seed + r`.
pub fn cv_misclassification(
    d: &Dataset,
    scheme: &CvScheme,
    cfg: &BoostConfig,
    coding: ResponseCoding,
    backend: HatBackend,
) -> Result<CvResult> {
    scheme.validate()?;
    let labels = binary_labels(d)?;
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(Error::DegenerateSplit("only one class present".into()));
    }
    let runs: Vec<Result<(f64, usize, Vec<(usize, u8)>)>> = (0..scheme.repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(scheme.seed.wrapping_add(r as u64));
            rng.set_stream(FOLD_STREAM);
            let (train, test) = train_test_split(&labels, scheme.train_fraction, scheme.stratified, &mut rng)?;
            let model = Classifier::fit(&d.subset(&train)?, cfg, coding, backend)?;
            let xtest = d.x().select(Axis(0), &test);
            let pred = model.classify(xtest.view())?;
            let wrong = test.iter().zip(&pred).filter(|(&i, &c)| labels[i] != c).count();
            let rate = wrong as f64 / test.len() as f64;
            Ok((rate, model.stop.m_hat, test.into_iter().zip(pred).collect()))
        })
        .collect();
    let mut per_repeat = Vec::with_capacity(scheme.repeats);
    let mut m_hats = Vec::with_capacity(scheme.repeats);
    let mut predictions = Vec::with_capacity(scheme.repeats);
    for run in runs {
        let (rate, m, pred) = run?;
        per_repeat.push(rate);
        m_hats.push(m);
        predictions.push(pred);
    }
    let rate = per_repeat.iter().sum::<f64>() / per_repeat.len() as f64;
    Ok(CvResult { rate, per_repeat, m_hats, predictions })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaledCoefficient {
    pub index: usize,
    pub name: String,
    pub coefficient: f64,
    /// `β̂_j · sd_j`, with `sd_j` the standard deviation (divisor n) of column `j`.
    pub scaled: f64,
}

/// Active coefficients times their column standard deviation, ascending.
pub fn scaled_coefficients(coef: &SparseCoefficients, d: &Dataset) -> Result<Vec<ScaledCoefficient>> {
    if coef.p() != d.p() {
        return Err(Error::DimensionMismatch { expected: d.p(), found: coef.p() });
    }
    let n = d.n() as f64;
    let x = d.x();
    let mut out: Vec<ScaledCoefficient> = coef
        .active_set
        .iter()
        .map(|&j| {
            let col = x.column(j);
            let mean = col.sum() / n;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            ScaledCoefficient { index: j, name: d.column_name(j), coefficient: coef.beta[j], scaled: coef.beta[j] * sd }
        })
        .collect();
    out.sort_by(|a, b| a.scaled.total_cmp(&b.scaled).then(a.index.cmp(&b.index)));
    Ok(out)
}

/// Midranks (1-based) of `v`.
pub fn midranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, PartialEq)]
pub struct WilcoxonRanking {
    /// Rank sum of class 1 minus its null mean `n₁(n + 1)/2`, per gene.
    pub scores: Vec<f64>,
    /// Genes by decreasing `|score|`, ties by index.
    pub ranking: Vec<usize>,
}

pub fn wilcoxon_rank_genes(d: &Dataset) -> Result<WilcoxonRanking> {
    let labels = binary_labels(d)?;
    let n1 = labels.iter().filter(|&&l| l == 1).count();
    if n1 == 0 || n1 == labels.len() {
        return Err(Error::InvalidData("both classes must be present".into()));
    }
    let null_mean = n1 as f64 * (labels.len() + 1) as f64 / 2.0;
    let scores: Vec<f64> = d
        .x()
        .axis_iter(Axis(1))
        .map(|col| {
            let ranks = midranks(&col.to_vec());
            ranks.iter().zip(&labels).filter(|(_, &l)| l == 1).map(|(r, _)| r).sum::<f64>() - null_mean
        })
        .collect();
    let mut ranking: Vec<usize> = (0..scores.len()).collect();
    ranking.sort_by(|&a, &b| scores[b].abs().total_cmp(&scores[a].abs()).then(a.cmp(&b)));
    Ok(WilcoxonRanking { scores, ranking })
}

/// `P[Y = 1 | X = x] = 1/2 + βᵀx` with `X` uniform on `[−1, 1]^p`; requires
/// `Σ|β_j| ≤ 1/2` so probabilities stay in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProbabilityModel {
    pub beta: Vec<f64>,
}

impl LinearProbabilityModel {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::EmptyDesign);
        }
        if beta.iter().map(|b| b.abs()).sum::<f64>() > 0.5 + 1e-12 {
            return Err(Error::InvalidConfig("sum of |beta| must not exceed 1/2".into()));
        }
        Ok(Self { beta })
    }

    pub fn p(&self) -> usize {
        self.beta.len()
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        0.5 + x.iter().zip(&self.beta).map(|(a, b)| a * b).sum::<f64>()
    }

    fn draw_x(&self, n: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        Array2::from_shape_simple_fn((n, self.p()), || rng.random_range(-1.0..1.0))
    }

    pub fn draw(&self, n: usize, seed: u64) -> Result<Dataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = self.draw_x(n, &mut rng);
        let y: Array1<f64> = x
            .rows()
            .into_iter()
            .map(|row| {
                let f = self.probability(row.as_slice().expect("row-major"));
                if rng.random::<f64>() < f {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Dataset::new(x, y)
    }

    /// Monte Carlo estimate of `E[min{f(X), 1 − f(X)}]`.
    pub fn bayes_risk(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = self.draw_x(samples, &mut rng);
        let total: f64 = x
            .rows()
            .into_iter()
            .map(|row| {
                let f = self.probability(row.as_slice().expect("row-major"));
                f.min(1.0 - f)
            })
            .sum();
        total / samples as f64
    }
}
