//! Dataset sources: the synthetic signal-plus-noise generators, LIBSVM
//! ingestion and the benchmark preprocessing steps.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{NgcaError, Result};
use crate::numerics::{sample_covariance, symmetric_eig_topm, DataMatrix};
use crate::rng::{self, stream};

pub const SIGNAL_DIM: usize = 2;
pub const NOISE_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    /// Independent coordinates, each an equal mixture of N(-3, 1) and N(3, 1).
    GaussMixture,
    /// Density proportional to `exp(-‖s‖)`.
    DepSuper,
    /// Uniform on the unit disk.
    DepSub,
    /// Laplace `s1`; `s2` uniform on `[c, c+1]` with `c = 0` if
    /// `|s1| ≤ ln 2`, else `c = -1`.
    DepSuperSub,
}

impl Distribution {
    pub const ALL: [Distribution; 4] = [
        Distribution::GaussMixture,
        Distribution::DepSuper,
        Distribution::DepSub,
        Distribution::DepSuperSub,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Distribution::GaussMixture => "gauss_mixture",
            Distribution::DepSuper => "dep_super",
            Distribution::DepSub => "dep_sub",
            Distribution::DepSuperSub => "dep_super_sub",
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Distribution {
    type Err = NgcaError;

    fn from_str(s: &str) -> Result<Self> {
        Distribution::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| NgcaError::InvalidParameter(format!("unknown distribution '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArtificialSpec {
    pub dist: Distribution,
    pub r: f64,
    pub n: usize,
    pub seed: u64,
}

/// `n × 2` draws of the non-Gaussian signal.
pub fn sample_signal(dist: Distribution, n: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng::seeded(seed, stream::SIGNAL);
    let mut out = DMatrix::zeros(n, SIGNAL_DIM);
    let radial = Gamma::new(2.0, 1.0).expect("valid gamma parameters");
    for i in 0..n {
        let (a, b) = match dist {
            Distribution::GaussMixture => {
                let mut coord = || {
                    let shift = if r.random::<bool>() { 3.0 } else { -3.0 };
                    shift + r.sample::<f64, _>(StandardNormal)
                };
                (coord(), coord())
            }
            Distribution::DepSuper => {
                let theta = r.random_range(0.0..2.0 * PI);
                let rad: f64 = r.sample(radial);
                (rad * theta.cos(), rad * theta.sin())
            }
            Distribution::DepSub => {
                let theta = r.random_range(0.0..2.0 * PI);
                let rad = r.random::<f64>().sqrt();
                (rad * theta.cos(), rad * theta.sin())
            }
            Distribution::DepSuperSub => {
                let s1 = laplace_inverse_cdf(r.random::<f64>());
                let c = if s1.abs() <= 2f64.ln() { 0.0 } else { -1.0 };
                (s1, c + r.random::<f64>())
            }
        };
        out[(i, 0)] = a;
        out[(i, 1)] = b;
    }
    out
}

/// Standard Laplace quantile for `u ∈ [0, 1)`.
fn laplace_inverse_cdf(u: f64) -> f64 {
    let centered = u - 0.5;
    -centered.signum() * (1.0 - 2.0 * centered.abs()).ln()
}

/// Noise variances `10^{-2r + 4rk/7}` for `k = 0..8`.
pub fn noise_variances(r: f64) -> [f64; NOISE_DIM] {
    std::array::from_fn(|k| 10f64.powf(-2.0 * r + 4.0 * r * k as f64 / 7.0))
}

/// The composite of the π/4 plane rotations over every coordinate pair
/// `i < j`, applied in lexicographic order (first pair applied first).
pub fn noise_rotation() -> DMatrix<f64> {
    let (s, c) = FRAC_PI_4.sin_cos();
    let mut composite = DMatrix::identity(NOISE_DIM, NOISE_DIM);
    for i in 0..NOISE_DIM {
        for j in (i + 1)..NOISE_DIM {
            let mut g = DMatrix::identity(NOISE_DIM, NOISE_DIM);
            g[(i, i)] = c;
            g[(i, j)] = -s;
            g[(j, i)] = s;
            g[(j, j)] = c;
            composite = g * composite;
        }
    }
    composite
}

/// `n × 8` Gaussian noise with condition-number controller `r`: scaled
/// independent draws, rotated, then standardized per column.
pub fn sample_noise(r: f64, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(NgcaError::InvalidParameter(format!(
            "r must be a nonnegative number, got {r}"
        )));
    }
    if n < 2 {
        return Err(NgcaError::InvalidParameter("need at least 2 noise samples".into()));
    }
    let mut rng = rng::seeded(seed, stream::NOISE);
    let sd = noise_variances(r).map(f64::sqrt);
    let raw = DMatrix::from_fn(n, NOISE_DIM, |_, k| sd[k] * rng.sample::<f64, _>(StandardNormal));
    // rows transform as n''ᵀ = nᵀ Rᵀ
    let mut rotated = raw * noise_rotation().transpose();
    let len = n as f64;
    for mut col in rotated.column_iter_mut() {
        let mean = col.sum() / len;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / len;
        let scale = var.sqrt();
        col.apply(|v| *v = (*v - mean) / scale);
    }
    Ok(rotated)
}

/// Signal columns followed by noise columns, and the true index space
/// `span{e1, e2}` as a `10 × 2` orthonormal matrix.
pub fn make_artificial(spec: &ArtificialSpec) -> Result<(DataMatrix, DMatrix<f64>)> {
    let signal = sample_signal(spec.dist, spec.n, spec.seed);
    let noise = sample_noise(spec.r, spec.n, spec.seed)?;
    let d = SIGNAL_DIM + NOISE_DIM;
    let x = DMatrix::from_fn(spec.n, d, |i, j| {
        if j < SIGNAL_DIM {
            signal[(i, j)]
        } else {
            noise[(i, j - SIGNAL_DIM)]
        }
    });
    let truth = DMatrix::from_fn(d, SIGNAL_DIM, |i, j| if i == j { 1.0 } else { 0.0 });
    Ok((DataMatrix::new(x)?, truth))
}

/// Column names for exported synthetic data: `s1,s2,n3..n10`.
pub fn artificial_header() -> Vec<String> {
    (1..=SIGNAL_DIM)
        .map(|i| format!("s{i}"))
        .chain((SIGNAL_DIM + 1..=SIGNAL_DIM + NOISE_DIM).map(|i| format!("n{i}")))
        .collect()
}

/// Ratio of the largest to the smallest covariance eigenvalue; infinite if
/// the covariance is numerically singular.
pub fn condition_number(x: &DataMatrix) -> Result<f64> {
    let cov = sample_covariance(x);
    let (values, _) = symmetric_eig_topm(&cov, x.d())?;
    let (largest, smallest) = (values[0], values[x.d() - 1]);
    Ok(if smallest > 0.0 {
        largest / smallest
    } else {
        f64::INFINITY
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub x: DataMatrix,
    pub labels: Vec<i8>,
}

impl LabeledDataset {
    pub fn new(x: DataMatrix, labels: Vec<i8>) -> Result<Self> {
        if labels.len() != x.n() {
            return Err(NgcaError::DimensionMismatch {
                expected: x.n(),
                got: labels.len(),
            });
        }
        if labels.iter().any(|&l| l != 1 && l != -1) {
            return Err(NgcaError::InvalidData("labels must be +1 or -1".into()));
        }
        Ok(LabeledDataset { x, labels })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }
}

/// Dataset-specific label conventions for the binary benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relabel {
    /// Labels must already be `+1` / `-1`.
    #[default]
    None,
    /// Classes 1, 2 are positive; 3, 4 negative.
    Vehicle,
    /// Keep only classes 1 (positive) and 4 (negative).
    Shuttle,
    /// 1 is positive, 0 negative.
    Susy,
}

impl Relabel {
    fn map(self, raw: f64) -> Option<Option<i8>> {
        let is = |v: f64| raw == v;
        match self {
            Relabel::None if is(1.0) => Some(Some(1)),
            Relabel::None if is(-1.0) => Some(Some(-1)),
            Relabel::Vehicle if is(1.0) || is(2.0) => Some(Some(1)),
            Relabel::Vehicle if is(3.0) || is(4.0) => Some(Some(-1)),
            Relabel::Shuttle if is(1.0) => Some(Some(1)),
            Relabel::Shuttle if is(4.0) => Some(Some(-1)),
            Relabel::Shuttle => Some(None),
            Relabel::Susy if is(1.0) => Some(Some(1)),
            Relabel::Susy if is(0.0) => Some(Some(-1)),
            _ => None,
        }
    }
}

impl FromStr for Relabel {
    type Err = NgcaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Relabel::None),
            "vehicle" => Ok(Relabel::Vehicle),
            "shuttle" => Ok(Relabel::Shuttle),
            "susy" => Ok(Relabel::Susy),
            other => Err(NgcaError::InvalidParameter(format!("unknown relabel rule '{other}'"))),
        }
    }
}

struct ParsedLine {
    line: usize,
    label: f64,
    features: Vec<(usize, f64)>,
}

fn parse_libsvm_text(text: &str, path: &Path) -> Result<Vec<ParsedLine>> {
    let err = |line: usize, message: String| NgcaError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| err(line_no, format!("invalid label '{label_tok}'")))?;
        let mut features = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| err(line_no, format!("expected index:value, got '{tok}'")))?;
            let index: usize = i.parse().map_err(|_| err(line_no, format!("invalid index '{i}'")))?;
            let value: f64 = v.parse().map_err(|_| err(line_no, format!("invalid value '{v}'")))?;
            if index == 0 {
                return Err(err(line_no, "indices are 1-based".into()));
            }
            if index <= last {
                return Err(err(line_no, format!("index {index} is not ascending")));
            }
            if !value.is_finite() {
                return Err(err(line_no, format!("non-finite value at index {index}")));
            }
            last = index;
            features.push((index, value));
        }
        out.push(ParsedLine {
            line: line_no,
            label,
            features,
        });
    }
    Ok(out)
}

/// Reads one or more LIBSVM files into a dense labeled dataset. Several
/// paths are concatenated (e.g. merging a train and a test split). `dim`
/// fixes the feature count; by default it is the largest index seen.
pub fn load_libsvm(paths: &[&Path], dim: Option<usize>, relabel: Relabel) -> Result<LabeledDataset> {
    let mut lines = Vec::new();
    for &path in paths {
        let text = fs::read_to_string(path).map_err(|e| NgcaError::io(path, e))?;
        let parsed = parse_libsvm_text(&text, path)?;
        lines.extend(parsed.into_iter().map(|l| (path, l)));
    }
    let max_index = lines
        .iter()
        .filter_map(|(_, l)| l.features.last().map(|f| f.0))
        .max()
        .unwrap_or(0);
    let d = dim.unwrap_or(max_index);
    if max_index > d {
        return Err(NgcaError::InvalidData(format!(
            "feature index {max_index} exceeds dimension {d}"
        )));
    }
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (path, line) in lines {
        let label = relabel.map(line.label).ok_or_else(|| NgcaError::Parse {
            path: path.to_path_buf(),
            line: line.line,
            message: format!("label {} not valid under {relabel:?} labelling", line.label),
        })?;
        let Some(label) = label else { continue };
        let mut row = vec![0.0; d];
        for (index, value) in line.features {
            row[index - 1] = value;
        }
        rows.push(row);
        labels.push(label);
    }
    LabeledDataset::new(DataMatrix::from_rows(&rows)?, labels)
}

/// Appends i.i.d. standard normal columns up to `d_target` features.
pub fn augment_noise_dims(x: &DataMatrix, d_target: usize, seed: u64) -> Result<DataMatrix> {
    let d = x.d();
    if d_target < d {
        return Err(NgcaError::InvalidParameter(format!(
            "target dimension {d_target} is below the current dimension {d}"
        )));
    }
    let mut r = rng::seeded(seed, stream::AUGMENT);
    let extra = DMatrix::from_fn(x.n(), d_target - d, |_, _| r.sample::<f64, _>(StandardNormal));
    let out = DMatrix::from_fn(x.n(), d_target, |i, j| {
        if j < d {
            x.as_matrix()[(i, j)]
        } else {
            extra[(i, j - d)]
        }
    });
    DataMatrix::new(out)
}

/// Disjoint train and test sets with `n/2` samples of each class.
pub fn balanced_subsample(ds: &LabeledDataset, n: usize, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(NgcaError::InvalidParameter(format!(
            "subsample size must be even and at least 4, got {n}"
        )));
    }
    let half = n / 2;
    let mut r = rng::seeded(seed, stream::SUBSAMPLE);
    let mut train = Vec::with_capacity(n);
    let mut test = Vec::with_capacity(n);
    for label in [1i8, -1] {
        let mut idx: Vec<usize> = (0..ds.n()).filter(|&i| ds.labels[i] == label).collect();
        if idx.len() < n {
            return Err(NgcaError::InsufficientClass {
                label,
                needed: n,
                available: idx.len(),
            });
        }
        idx.shuffle(&mut r);
        train.extend_from_slice(&idx[..half]);
        test.extend_from_slice(&idx[half..n]);
    }
    let pick = |rows: &[usize]| -> Result<LabeledDataset> {
        LabeledDataset::new(ds.x.select_rows(rows)?, rows.iter().map(|&i| ds.labels[i]).collect())
    };
    Ok((pick(&train)?, pick(&test)?))
}
