//! Synthetic collinear regression datasets, correlation statistics, the
//! learner-facing feature map, the optimal inclusion model and the
//! model-selection costs.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::rng_from_seed;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid dataset spec: {0}")]
    InvalidSpec(String),
    #[error("column {column} has zero sample variance")]
    ZeroVarianceColumn { column: usize },
    #[error("correlation undefined for a zero-variance input")]
    ZeroVariance,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("dataset file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Generation recipe for one synthetic dataset.
///
/// Independent columns are iid standard normal. Collinear columns share one
/// standard-normal latent factor `u` and add `collinear_noise`-scaled noise.
/// The response is `Y = X_ind · coef_independent + coef_latent · u + output_noise · ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct DatasetSpec<F> {
    pub n_samples: usize,
    pub n_independent: usize,
    pub n_collinear: usize,
    pub collinear_noise: F,
    pub output_noise: F,
    /// Empty means all ones.
    pub coef_independent: Vec<F>,
    pub coef_latent: F,
    pub seed: u64,
}

impl<F: Scalar> Default for DatasetSpec<F> {
    fn default() -> Self {
        Self {
            n_samples: 200,
            n_independent: 10,
            n_collinear: 15,
            collinear_noise: F::lit(0.1),
            output_noise: F::one(),
            coef_independent: Vec::new(),
            coef_latent: F::lit(2.0),
            seed: 0,
        }
    }
}

impl<F: Scalar> DatasetSpec<F> {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn dim(&self) -> usize {
        self.n_independent + self.n_collinear
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: &str| Err(DataError::InvalidSpec(m.to_owned()));
        if self.dim() == 0 {
            return bad("n_independent + n_collinear must be at least 1");
        }
        if self.n_samples < 3 {
            return bad("n_samples must be at least 3");
        }
        if !(self.collinear_noise > F::zero()) {
            return bad("collinear_noise must be positive");
        }
        if !(self.output_noise >= F::zero()) {
            return bad("output_noise must be non-negative");
        }
        if !self.coef_independent.is_empty() && self.coef_independent.len() != self.n_independent {
            return bad("coef_independent length must equal n_independent");
        }
        if self.coef_independent.iter().any(|c| !c.is_finite()) || !self.coef_latent.is_finite() {
            return bad("coefficients must be finite");
        }
        Ok(())
    }

    fn independent_coef(&self, i: usize) -> F {
        self.coef_independent.get(i).copied().unwrap_or_else(F::one)
    }
}

/// Binary inclusion vector over covariates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Model(Vec<bool>);

impl Model {
    pub fn empty(d: usize) -> Self {
        Self(vec![false; d])
    }

    pub fn full(d: usize) -> Self {
        Self(vec![true; d])
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    /// Parses a `0`/`1` string such as `"0110"`.
    pub fn parse_bits(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Self)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn includes(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, on: bool) {
        self.0[i] = on;
    }

    pub fn included(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Regression data with labelled column groups and precomputed statistics.
#[derive(Debug, Clone)]
pub struct Dataset<F> {
    columns: Vec<Vec<F>>,
    y: Vec<F>,
    independent_idx: Vec<usize>,
    collinear_idx: Vec<usize>,
    corr_to_output: Vec<F>,
    corr_matrix: Vec<F>,
    ranking: Vec<usize>,
    optimal: Model,
    spec: Option<DatasetSpec<F>>,
}

impl<F: Scalar> Dataset<F> {
    /// Builds a dataset from raw columns and its column groups, computing all
    /// correlation statistics.
    pub fn from_columns(
        columns: Vec<Vec<F>>,
        y: Vec<F>,
        independent_idx: Vec<usize>,
        collinear_idx: Vec<usize>,
    ) -> Result<Self, DataError> {
        let d = columns.len();
        if d == 0 {
            return Err(DataError::Invalid("no columns".into()));
        }
        let n = y.len();
        if n < 3 {
            return Err(DataError::Invalid("at least 3 samples are required".into()));
        }
        for c in &columns {
            if c.len() != n {
                return Err(DataError::LengthMismatch { left: c.len(), right: n });
            }
        }
        let mut seen = vec![false; d];
        for &i in independent_idx.iter().chain(&collinear_idx) {
            if i >= d || seen[i] {
                return Err(DataError::Invalid(
                    "column groups must partition the columns".into(),
                ));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(DataError::Invalid(
                "column groups must partition the columns".into(),
            ));
        }

        let standardized: Vec<Vec<F>> = columns
            .iter()
            .enumerate()
            .map(|(i, c)| standardize(c).ok_or(DataError::ZeroVarianceColumn { column: i }))
            .collect::<Result<_, _>>()?;
        let y_std = standardize(&y).ok_or(DataError::ZeroVariance)?;

        let mut corr_matrix = vec![F::zero(); d * d];
        for i in 0..d {
            corr_matrix[i * d + i] = F::one();
            for j in (i + 1)..d {
                let r = clamp_unit(dot(&standardized[i], &standardized[j]));
                corr_matrix[i * d + j] = r;
                corr_matrix[j * d + i] = r;
            }
        }
        let corr_to_output: Vec<F> = standardized
            .iter()
            .map(|c| clamp_unit(dot(c, &y_std)))
            .collect();

        let mut ranking: Vec<usize> = (0..d).collect();
        ranking.sort_by(|&a, &b| {
            corr_to_output[b]
                .abs()
                .partial_cmp(&corr_to_output[a].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });

        let mut ds = Self {
            columns,
            y,
            independent_idx,
            collinear_idx,
            corr_to_output,
            corr_matrix,
            ranking,
            optimal: Model::empty(d),
            spec: None,
        };
        ds.optimal = compute_optimal(&ds);
        Ok(ds)
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn n_samples(&self) -> usize {
        self.y.len()
    }

    pub fn column(&self, i: usize) -> &[F] {
        &self.columns[i]
    }

    pub fn y(&self) -> &[F] {
        &self.y
    }

    pub fn independent_idx(&self) -> &[usize] {
        &self.independent_idx
    }

    pub fn collinear_idx(&self) -> &[usize] {
        &self.collinear_idx
    }

    pub fn is_collinear(&self, i: usize) -> bool {
        self.collinear_idx.contains(&i)
    }

    /// Signed Pearson correlation of column `i` with the response.
    pub fn corr_to_output(&self, i: usize) -> F {
        self.corr_to_output[i]
    }

    /// Signed Pearson correlation between columns `i` and `j`.
    pub fn corr(&self, i: usize, j: usize) -> F {
        self.corr_matrix[i * self.dim() + j]
    }

    /// Columns in descending `|corr to Y|`, ties by lowest index.
    pub fn ranking(&self) -> &[usize] {
        &self.ranking
    }

    /// The teaching target; see [`optimal_model`].
    pub fn optimal(&self) -> &Model {
        &self.optimal
    }

    pub fn spec(&self) -> Option<&DatasetSpec<F>> {
        self.spec.as_ref()
    }
}

fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn clamp_unit<F: Scalar>(r: F) -> F {
    r.max(-F::one()).min(F::one())
}

/// Centers and scales to unit sum of squares; `None` for zero variance.
fn standardize<F: Scalar>(x: &[F]) -> Option<Vec<F>> {
    let n = F::from_usize_lossy(x.len());
    let mean = x.iter().copied().sum::<F>() / n;
    let centered: Vec<F> = x.iter().map(|&v| v - mean).collect();
    let ss = dot(&centered, &centered);
    if !(ss > F::zero()) || !ss.is_finite() {
        return None;
    }
    let norm = ss.sqrt();
    Some(centered.into_iter().map(|v| v / norm).collect())
}

/// Draws a dataset; bit-reproducible for a fixed seed.
pub fn generate_dataset<F: Scalar>(spec: &DatasetSpec<F>) -> Result<Dataset<F>, DataError> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let n = spec.n_samples;
    let mut normal = || F::lit(rng.sample::<f64, _>(StandardNormal));

    let latent: Vec<F> = (0..n).map(|_| normal()).collect();
    let mut columns = Vec::with_capacity(spec.dim());
    for _ in 0..spec.n_independent {
        columns.push((0..n).map(|_| normal()).collect::<Vec<F>>());
    }
    for _ in 0..spec.n_collinear {
        columns.push(
            latent
                .iter()
                .map(|&u| u + spec.collinear_noise * normal())
                .collect::<Vec<F>>(),
        );
    }
    let y: Vec<F> = (0..n)
        .map(|r| {
            let signal: F = (0..spec.n_independent)
                .map(|i| spec.independent_coef(i) * columns[i][r])
                .sum();
            signal + spec.coef_latent * latent[r] + spec.output_noise * normal()
        })
        .collect();

    let independent_idx = (0..spec.n_independent).collect();
    let collinear_idx = (spec.n_independent..spec.dim()).collect();
    let mut ds = Dataset::from_columns(columns, y, independent_idx, collinear_idx)?;
    ds.spec = Some(spec.clone());
    Ok(ds)
}

/// Sample Pearson correlation coefficient.
pub fn pearson_corr<F: Scalar>(x: &[F], y: &[F]) -> Result<F, DataError> {
    if x.len() != y.len() {
        return Err(DataError::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(DataError::Invalid("correlation needs at least two points".into()));
    }
    let n = F::from_usize_lossy(x.len());
    let mx = x.iter().copied().sum::<F>() / n;
    let my = y.iter().copied().sum::<F>() / n;
    let (mut sxy, mut sxx, mut syy) = (F::zero(), F::zero(), F::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if !(sxx > F::zero()) || !(syy > F::zero()) {
        return Err(DataError::ZeroVariance);
    }
    Ok(clamp_unit(sxy / (sxx.sqrt() * syy.sqrt())))
}

/// Statistics the learner sees for a suggested covariate.
///
/// `φ1 = |corr(action, Y)|`; `φ2` is the largest `|corr(action, j)|` over
/// included covariates `j ≠ action`, and 0 when there are none.
pub fn feature_map<F: Scalar>(action: usize, model: &Model, ds: &Dataset<F>) -> (F, F) {
    let phi1 = ds.corr_to_output(action).abs();
    let phi2 = model
        .included()
        .filter(|&j| j != action)
        .map(|j| ds.corr(action, j).abs())
        .fold(F::zero(), F::max);
    (phi1, phi2)
}

fn compute_optimal<F: Scalar>(ds: &Dataset<F>) -> Model {
    let d = ds.dim();
    if ds.collinear_idx.is_empty() {
        return Model::full(d);
    }
    let mut m = Model::empty(d);
    for &i in &ds.independent_idx {
        m.set(i, true);
    }
    let mut best = ds.collinear_idx[0];
    for &i in &ds.collinear_idx {
        let (ci, cb) = (ds.corr_to_output(i).abs(), ds.corr_to_output(best).abs());
        if ci > cb || (ci == cb && i < best) {
            best = i;
        }
    }
    m.set(best, true);
    m
}

/// All independent covariates plus the single collinear covariate with the
/// largest `|corr to Y|` (lowest index on ties).
pub fn optimal_model<F: Scalar>(ds: &Dataset<F>) -> Model {
    ds.optimal.clone()
}

/// Number of missed independent covariates plus the number of collinear
/// covariates selected beyond the first.
pub fn selection_errors<F: Scalar>(model: &Model, ds: &Dataset<F>) -> usize {
    let missed = ds.independent_idx.iter().filter(|&&i| !model.includes(i)).count();
    let collinear = ds.collinear_idx.iter().filter(|&&i| model.includes(i)).count();
    missed + collinear.saturating_sub(1)
}

pub fn selection_cost<F: Scalar>(model: &Model, ds: &Dataset<F>) -> F {
    F::from_usize_lossy(selection_errors(model, ds))
}

pub fn hamming(a: &Model, b: &Model) -> Result<usize, DataError> {
    if a.len() != b.len() {
        return Err(DataError::LengthMismatch { left: a.len(), right: b.len() });
    }
    Ok(a.0.iter().zip(&b.0).filter(|(x, y)| x != y).count())
}

/// Sidecar metadata stored next to an exported dataset CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct DatasetMeta<F> {
    pub format_version: u32,
    pub n_samples: usize,
    pub dimension: usize,
    /// 1-based column numbers.
    pub independent: Vec<usize>,
    /// 1-based column numbers.
    pub collinear: Vec<usize>,
    pub seed: Option<u64>,
    pub spec: Option<DatasetSpec<F>>,
}

pub const DATASET_FORMAT_VERSION: u32 = 1;

/// Writes `<stem>.csv` (header `x1..xd,y`) and `<stem>.meta.toml` into `dir`.
pub fn write_dataset<F: Scalar + Serialize>(
    ds: &Dataset<F>,
    dir: &Path,
    stem: &str,
) -> Result<(PathBuf, PathBuf), DataError> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let meta_path = dir.join(format!("{stem}.meta.toml"));

    let mut w = csv::Writer::from_path(&csv_path)?;
    let mut header: Vec<String> = (1..=ds.dim()).map(|i| format!("x{i}")).collect();
    header.push("y".into());
    w.write_record(&header)?;
    for r in 0..ds.n_samples() {
        let mut row: Vec<String> = ds.columns.iter().map(|c| c[r].to_string()).collect();
        row.push(ds.y[r].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;

    let meta = DatasetMeta {
        format_version: DATASET_FORMAT_VERSION,
        n_samples: ds.n_samples(),
        dimension: ds.dim(),
        independent: ds.independent_idx.iter().map(|i| i + 1).collect(),
        collinear: ds.collinear_idx.iter().map(|i| i + 1).collect(),
        seed: ds.spec.as_ref().map(|s| s.seed),
        spec: ds.spec.clone(),
    };
    let text = toml::to_string(&meta).map_err(|e| DataError::Format(e.to_string()))?;
    fs::write(&meta_path, text)?;
    Ok((csv_path, meta_path))
}

/// Reads a dataset written by [`write_dataset`].
pub fn read_dataset<F: Scalar + for<'de> Deserialize<'de>>(
    dir: &Path,
    stem: &str,
) -> Result<Dataset<F>, DataError> {
    let meta_text = fs::read_to_string(dir.join(format!("{stem}.meta.toml")))?;
    let meta: DatasetMeta<F> =
        toml::from_str(&meta_text).map_err(|e| DataError::Format(e.to_string()))?;
    if meta.format_version != DATASET_FORMAT_VERSION {
        return Err(DataError::Format(format!(
            "unsupported format_version {}",
            meta.format_version
        )));
    }
    let d = meta.dimension;
    let mut rdr = csv::Reader::from_path(dir.join(format!("{stem}.csv")))?;
    let headers = rdr.headers()?.clone();
    if headers.len() != d + 1
        || headers.get(d) != Some("y")
        || (0..d).any(|i| headers.get(i) != Some(format!("x{}", i + 1).as_str()))
    {
        return Err(DataError::Format("header must be x1..xd,y".into()));
    }
    let mut columns = vec![Vec::with_capacity(meta.n_samples); d];
    let mut y = Vec::with_capacity(meta.n_samples);
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |k: usize| -> Result<F, DataError> {
            rec.get(k)
                .and_then(|s| s.parse::<f64>().ok())
                .map(F::lit)
                .ok_or_else(|| DataError::Format(format!("bad number in column {}", k + 1)))
        };
        for (k, col) in columns.iter_mut().enumerate() {
            col.push(parse(k)?);
        }
        y.push(parse(d)?);
    }
    if y.len() != meta.n_samples {
        return Err(DataError::Format(format!(
            "expected {} rows, found {}",
            meta.n_samples,
            y.len()
        )));
    }
    let to_zero_based = |v: &[usize]| -> Result<Vec<usize>, DataError> {
        v.iter()
            .map(|&i| {
                i.checked_sub(1)
                    .ok_or_else(|| DataError::Format("column numbers are 1-based".into()))
            })
            .collect()
    };
    let mut ds = Dataset::from_columns(
        columns,
        y,
        to_zero_based(&meta.independent)?,
        to_zero_based(&meta.collinear)?,
    )?;
    ds.spec = meta.spec;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(seed: u64) -> DatasetSpec<f64> {
        DatasetSpec::default().with_seed(seed)
    }

    /// Three columns: x1 independent, x2 and x3 collinear copies of a latent.
    pub(crate) fn small() -> Dataset<f64> {
        let x1 = vec![1.0, -1.0, 0.5, -0.5, 2.0, -2.0];
        let u = [0.3, 1.2, -0.7, 2.1, -1.4, 0.2];
        let x2: Vec<f64> = u.iter().enumerate().map(|(k, v)| v + 0.05 * (k as f64 - 2.5)).collect();
        let x3: Vec<f64> = u.iter().enumerate().map(|(k, v)| v - 0.04 * ((k % 3) as f64)).collect();
        let y: Vec<f64> = (0..6).map(|k| x1[k] + 2.0 * u[k]).collect();
        Dataset::from_columns(vec![x1, x2, x3], y, vec![0], vec![1, 2]).unwrap()
    }

    #[test]
    fn default_dimensions() {
        let ds = generate_dataset(&spec(1)).unwrap();
        assert_eq!(ds.dim(), 25);
        assert_eq!(ds.independent_idx().len(), 10);
        assert_eq!(ds.collinear_idx().len(), 15);
    }

    #[test]
    fn no_collinear_block() {
        let s = DatasetSpec { n_collinear: 0, ..spec(2) };
        let ds = generate_dataset(&s).unwrap();
        assert!(ds.collinear_idx().is_empty());
        assert_eq!(ds.independent_idx(), (0..10).collect::<Vec<_>>().as_slice());
        assert_eq!(optimal_model(&ds), Model::full(10));
    }

    #[test]
    fn collinear_block_is_strongly_correlated() {
        let ds = generate_dataset(&spec(7)).unwrap();
        let c = ds.collinear_idx().to_vec();
        let mut acc = 0.0;
        let mut k = 0;
        for (a, &i) in c.iter().enumerate() {
            for &j in &c[a + 1..] {
                acc += pearson_corr(ds.column(i), ds.column(j)).unwrap().abs();
                k += 1;
            }
        }
        assert!(acc / k as f64 > 0.9);
        // independent block is near-uncorrelated
        let ind = ds.independent_idx();
        for &i in ind {
            for &j in ind {
                if i < j {
                    assert!(ds.corr(i, j).abs() < 0.3);
                }
            }
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(generate_dataset(&DatasetSpec { n_samples: 2, ..spec(0) }).is_err());
        assert!(generate_dataset(&DatasetSpec { collinear_noise: 0.0, ..spec(0) }).is_err());
        assert!(generate_dataset(&DatasetSpec { n_independent: 0, n_collinear: 0, ..spec(0) }).is_err());
        assert!(generate_dataset(&DatasetSpec { coef_independent: vec![1.0; 3], ..spec(0) }).is_err());
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0_f64, 2.0, 3.0, 4.0];
        assert!((pearson_corr(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson_corr(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        // Hand evaluation: means 2.5 and 5; Sxy = 11.0, Sxx = 5, Syy = 26.
        let expected = 11.0 / (5.0_f64 * 26.0).sqrt();
        let got = pearson_corr(&x, &[2.0, 4.0, 5.0, 9.0]).unwrap();
        assert!((got - expected).abs() < 1e-14);
        assert!(matches!(pearson_corr(&x, &[1.0; 4]), Err(DataError::ZeroVariance)));
        assert!(pearson_corr(&x, &[1.0; 3]).is_err());
    }

    #[test]
    fn feature_map_examples() {
        let ds = small();
        let (p1, p2) = feature_map(0, &Model::empty(3), &ds);
        assert_eq!(p2, 0.0);
        assert_eq!(p1, ds.corr_to_output(0).abs());
        let m = Model::from_bools(vec![false, true, false]);
        let (a1, a2) = feature_map(2, &m, &ds);
        let direct_y = pearson_corr(ds.column(2), ds.y()).unwrap().abs();
        let direct_2 = pearson_corr(ds.column(2), ds.column(1)).unwrap().abs();
        assert!((a1 - direct_y).abs() < 1e-12);
        assert!((a2 - direct_2).abs() < 1e-12);
    }

    #[test]
    fn perfectly_collinear_feature_is_one() {
        let x1 = vec![1.0, 2.0, 3.0, 5.0];
        let x2: Vec<f64> = x1.iter().map(|v| 3.0 * v - 1.0).collect();
        let y = vec![0.5, 0.1, 2.0, 1.0];
        let ds = Dataset::from_columns(vec![x1, x2], y, vec![], vec![0, 1]).unwrap();
        let m = Model::from_bools(vec![true, false]);
        assert!((feature_map(1, &m, &ds).1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_model_counts_and_ties() {
        let ds = generate_dataset(&spec(1)).unwrap();
        let opt = optimal_model(&ds);
        assert_eq!(opt.count(), 11);
        assert_eq!(selection_cost(&opt, &ds), 0.0);
        assert_eq!(selection_cost(&Model::full(25), &ds), 14.0);
        assert_eq!(selection_cost(&Model::empty(25), &ds), 10.0);
        assert_eq!(hamming(&Model::full(25), &opt).unwrap(), 14);

        // two identical collinear columns tie on |corr to Y|
        let x = vec![1.0, 2.0, 0.0, 4.0];
        let y = vec![1.0, 3.0, 1.0, 2.0];
        let z = vec![0.3, -1.0, 2.0, 0.1];
        let ds = Dataset::from_columns(vec![z, x.clone(), x], y, vec![0], vec![1, 2]).unwrap();
        assert_eq!(optimal_model(&ds), Model::parse_bits("110").unwrap());
    }

    #[test]
    fn hamming_examples() {
        let a = Model::parse_bits("101").unwrap();
        assert_eq!(hamming(&a, &a).unwrap(), 0);
        assert_eq!(hamming(&a, &Model::parse_bits("001").unwrap()).unwrap(), 1);
        assert!(hamming(&a, &Model::empty(2)).is_err());
    }

    #[test]
    fn correlation_matrix_properties() {
        let ds = generate_dataset(&spec(3)).unwrap();
        for i in 0..ds.dim() {
            assert!((ds.corr(i, i) - 1.0).abs() < 1e-12);
            for j in 0..ds.dim() {
                assert_eq!(ds.corr(i, j), ds.corr(j, i));
                assert!(ds.corr(i, j).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn single_precision_generation() {
        let ds = generate_dataset(&DatasetSpec::<f32>::default().with_seed(1)).unwrap();
        assert_eq!(optimal_model(&ds).count(), 11);
    }

    #[test]
    fn reproducible_and_round_trips_through_files() {
        let a = generate_dataset(&spec(11)).unwrap();
        let b = generate_dataset(&spec(11)).unwrap();
        assert_eq!(a.y(), b.y());
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&a, dir.path(), "teach").unwrap();
        let back: Dataset<f64> = read_dataset(dir.path(), "teach").unwrap();
        assert_eq!(back.y(), a.y());
        assert_eq!(back.column(24), a.column(24));
        assert_eq!(back.collinear_idx(), a.collinear_idx());
        assert_eq!(back.spec(), a.spec());
        let header = std::fs::read_to_string(dir.path().join("teach.csv")).unwrap();
        assert!(header.starts_with("x1,x2,"));
        assert!(header.lines().next().unwrap().ends_with("x25,y"));
    }

    #[test]
    fn bad_partition_rejected() {
        let c = vec![vec![1.0, 2.0, 3.0], vec![3.0, 1.0, 2.0]];
        let y = vec![1.0, 0.0, 2.0];
        assert!(Dataset::from_columns(c.clone(), y.clone(), vec![0], vec![0]).is_err());
        assert!(Dataset::from_columns(c.clone(), y.clone(), vec![0], vec![]).is_err());
        let flat = vec![vec![1.0, 1.0, 1.0], vec![3.0, 1.0, 2.0]];
        assert!(matches!(
            Dataset::from_columns(flat, y, vec![0, 1], vec![]),
            Err(DataError::ZeroVarianceColumn { column: 0 })
        ));
    }
}
