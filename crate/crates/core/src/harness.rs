//! Experiment orchestration: the PCA baseline, a uniform entry point for all
//! estimators, synthetic sweeps with CSV output, and benchmark projection.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cv::CvGrid;
use crate::data::{self, ArtificialSpec, Distribution, LabeledDataset};
use crate::error::{NgcaError, Result};
use crate::io::{self, format_f64};
use crate::lsngca::{check_m, lsngca_fit_with_floor};
use crate::mipp::{mipp_fit_detailed, MippConfig};
use crate::numerics::{sample_covariance, standardize, DataMatrix, DEFAULT_MIN_EIGENVALUE};
use crate::rng::mix;
use crate::subspace::{subspace_error, Method, SubspaceEstimate};
use crate::wf::wf_fit_subspace;

pub const RESULTS_HEADER: &str = "method,distribution,r,seed,subspace_error,status,wall_time_seconds";
pub const SUMMARY_HEADER: &str = "method,distribution,r,runs,ok_runs,median_error,q25_error,q75_error";
pub const CONDITIONS_HEADER: &str = "distribution,r,seed,condition_number";

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONDITIONS_FILE: &str = "conditions.csv";

/// Leading `m` eigenvectors of the sample covariance of `x`. Callers pass
/// standardized data; the covariance is taken as given so that differing
/// feature variances still rank the directions.
pub fn pca_baseline(x: &DataMatrix, m: usize) -> Result<SubspaceEstimate> {
    check_m(m, x.d())?;
    let cov = sample_covariance(x);
    let (_, vectors) = crate::numerics::symmetric_eig_topm(&cov, m)?;
    SubspaceEstimate::new(vectors, Method::Pca)
}

/// Hyperparameters shared by every estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodSettings {
    pub cv: CvGrid,
    pub mipp: MippConfig,
    /// Number of Gaussian-derivative basis functions (`b = t`).
    pub basis_count: usize,
    /// Smallest covariance eigenvalue accepted when whitening.
    pub min_eigenvalue: f64,
}

impl Default for MethodSettings {
    fn default() -> Self {
        MethodSettings {
            cv: CvGrid::default(),
            mipp: MippConfig::default(),
            basis_count: 100,
            min_eigenvalue: DEFAULT_MIN_EIGENVALUE,
        }
    }
}

/// Runs one estimator. `seed` replaces the seeds inside `settings`.
pub fn fit_method(
    method: Method,
    x: &DataMatrix,
    m: usize,
    settings: &MethodSettings,
    seed: u64,
) -> Result<SubspaceEstimate> {
    let grid = settings.cv.clone().with_seed(seed);
    match method {
        Method::Pca => pca_baseline(x, m),
        Method::WfLsngca => {
            let (z, _, _) = standardize(x)?;
            wf_fit_subspace(&z, m, &grid, settings.basis_count)
        }
        Method::Lsngca => lsngca_fit_with_floor(x, m, &grid, settings.basis_count, settings.min_eigenvalue),
        Method::Mipp => {
            let config = MippConfig {
                seed,
                ..settings.mipp.clone()
            };
            mipp_fit_detailed(x, m, &config, settings.min_eigenvalue).map(|(est, _)| est)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    WhiteningFailed,
    NoSurvivors,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::WhiteningFailed => "whitening_failed",
            RunStatus::NoSurvivors => "no_survivors",
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RunStatus {
    type Err = NgcaError;

    fn from_str(s: &str) -> Result<Self> {
        [RunStatus::Ok, RunStatus::WhiteningFailed, RunStatus::NoSurvivors]
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| NgcaError::Schema(format!("unknown status '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub method: Method,
    pub distribution: Distribution,
    pub r: f64,
    pub seed: u64,
    /// Present iff `status` is `Ok`.
    pub subspace_error: Option<f64>,
    pub status: RunStatus,
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub distributions: Vec<Distribution>,
    pub r_values: Vec<f64>,
    pub n: usize,
    pub methods: Vec<Method>,
    /// Replicate seeds; each one generates its own dataset.
    pub seeds: Vec<u64>,
    pub m: usize,
    /// Master seed for the estimators' internal randomness.
    pub seed: u64,
    pub basis_count: usize,
    pub min_eigenvalue: f64,
    pub cv: CvGrid,
    pub mipp: MippConfig,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            distributions: Distribution::ALL.to_vec(),
            r_values: vec![0.0, 1.0, 2.0, 3.0, 4.0],
            n: 2000,
            methods: vec![Method::Mipp, Method::Lsngca, Method::WfLsngca],
            seeds: (0..10).collect(),
            m: 2,
            seed: 0,
            basis_count: 100,
            min_eigenvalue: DEFAULT_MIN_EIGENVALUE,
            cv: CvGrid::default(),
            mipp: MippConfig::default(),
            output_dir: PathBuf::from("results"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(NgcaError::InvalidParameter(msg.into()));
        if self.distributions.is_empty() || self.r_values.is_empty() || self.methods.is_empty() || self.seeds.is_empty()
        {
            return bad("distributions, r_values, methods and seeds must be non-empty");
        }
        if self.r_values.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return bad("r values must be finite and nonnegative");
        }
        if self.n < 2 {
            return bad("n must be at least 2");
        }
        check_m(self.m, data::SIGNAL_DIM + data::NOISE_DIM)?;
        if self.basis_count == 0 || self.basis_count > self.n {
            return bad("basis_count must be in 1..=n");
        }
        self.cv.normalized()?;
        Ok(())
    }

    pub fn method_settings(&self) -> MethodSettings {
        MethodSettings {
            cv: self.cv.clone(),
            mipp: self.mipp.clone(),
            basis_count: self.basis_count,
            min_eigenvalue: self.min_eigenvalue,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub distribution: Distribution,
    pub r: f64,
    pub runs: usize,
    pub ok_runs: usize,
    /// Median and quartiles over the successful runs.
    pub median: Option<f64>,
    pub q25: Option<f64>,
    pub q75: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionRow {
    pub distribution: Distribution,
    pub r: f64,
    pub seed: u64,
    pub condition_number: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticOutcome {
    pub results: Vec<RunResult>,
    pub summary: Vec<SummaryRow>,
    pub conditions: Vec<ConditionRow>,
}

/// Linear-interpolation quantile of sorted data. Infinite entries are
/// allowed; two equal neighbours return that value.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if sorted[lo] == sorted[hi] {
        return sorted[lo];
    }
    if sorted[hi].is_infinite() {
        return sorted[hi];
    }
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile(&sorted, 0.5)
}

/// One row per (method, distribution, r) cell, in first-seen order.
pub fn summarize(results: &[RunResult]) -> Vec<SummaryRow> {
    let mut cells: Vec<(Method, Distribution, f64, Vec<&RunResult>)> = Vec::new();
    for res in results {
        match cells
            .iter_mut()
            .find(|c| c.0 == res.method && c.1 == res.distribution && c.2 == res.r)
        {
            Some(cell) => cell.3.push(res),
            None => cells.push((res.method, res.distribution, res.r, vec![res])),
        }
    }
    cells
        .into_iter()
        .map(|(method, distribution, r, runs)| {
            let mut errors: Vec<f64> = runs.iter().filter_map(|x| x.subspace_error).collect();
            errors.sort_by(f64::total_cmp);
            let q = |p| (!errors.is_empty()).then(|| quantile(&errors, p));
            SummaryRow {
                method,
                distribution,
                r,
                runs: runs.len(),
                ok_runs: errors.len(),
                median: q(0.5),
                q25: q(0.25),
                q75: q(0.75),
            }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

pub fn results_to_csv(results: &[RunResult]) -> String {
    let mut out = format!("{RESULTS_HEADER}\n");
    for r in results {
        writeln!(
            out,
            "{},{},{},{},{},{},{:.6}",
            r.method,
            r.distribution,
            r.r,
            r.seed,
            opt(r.subspace_error),
            r.status,
            r.wall_time_seconds
        )
        .expect("writing to a String");
    }
    out
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for s in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.method,
            s.distribution,
            s.r,
            s.runs,
            s.ok_runs,
            opt(s.median),
            opt(s.q25),
            opt(s.q75)
        )
        .expect("writing to a String");
    }
    out
}

pub fn conditions_to_csv(rows: &[ConditionRow]) -> String {
    let mut out = format!("{CONDITIONS_HEADER}\n");
    for c in rows {
        writeln!(
            out,
            "{},{},{},{}",
            c.distribution,
            c.r,
            c.seed,
            format_f64(c.condition_number)
        )
        .expect("writing to a String");
    }
    out
}

fn schema<T: FromStr>(field: &str, line: usize) -> Result<T> {
    field
        .parse()
        .map_err(|_| NgcaError::Schema(format!("line {line}: cannot parse field '{field}'")))
}

fn split_checked<'a>(text: &'a str, header: &str) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == header => {}
        Some(h) => {
            return Err(NgcaError::Schema(format!(
                "unexpected header '{h}', expected '{header}'"
            )))
        }
        None => return Err(NgcaError::Schema("empty file".into())),
    }
    let width = header.split(',').count();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(NgcaError::Schema(format!(
                "line {}: expected {width} fields, got {}",
                i + 2,
                fields.len()
            )));
        }
        rows.push((i + 2, fields));
    }
    Ok(rows)
}

pub fn parse_results_csv(text: &str) -> Result<Vec<RunResult>> {
    split_checked(text, RESULTS_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            let status: RunStatus = schema(f[5], line)?;
            let subspace_error = if f[4].is_empty() {
                None
            } else {
                Some(schema(f[4], line)?)
            };
            if subspace_error.is_some() != (status == RunStatus::Ok) {
                return Err(NgcaError::Schema(format!(
                    "line {line}: error present iff status is ok"
                )));
            }
            Ok(RunResult {
                method: schema(f[0], line)?,
                distribution: schema(f[1], line)?,
                r: schema(f[2], line)?,
                seed: schema(f[3], line)?,
                subspace_error,
                status,
                wall_time_seconds: schema(f[6], line)?,
            })
        })
        .collect()
}

pub fn parse_conditions_csv(text: &str) -> Result<Vec<ConditionRow>> {
    split_checked(text, CONDITIONS_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            Ok(ConditionRow {
                distribution: schema(f[0], line)?,
                r: schema(f[1], line)?,
                seed: schema(f[2], line)?,
                condition_number: schema(f[3], line)?,
            })
        })
        .collect()
}

/// The standardized artificial dataset for one replicate, its true index
/// space and its condition number.
pub fn synthetic_instance(dist: Distribution, r: f64, n: usize, seed: u64) -> Result<(DataMatrix, DMatrix<f64>, f64)> {
    let (x, truth) = data::make_artificial(&ArtificialSpec { dist, r, n, seed })?;
    let (z, _, _) = standardize(&x)?;
    let kappa = data::condition_number(&z)?;
    Ok((z, truth, kappa))
}

/// Seed handed to an estimator for one replicate.
pub fn method_seed(master: u64, replicate: u64, method: Method) -> u64 {
    mix(mix(master, replicate), method as u64)
}

fn run_one(
    method: Method,
    z: &DataMatrix,
    truth: &DMatrix<f64>,
    config: &ExperimentConfig,
    replicate: u64,
) -> Result<(Option<f64>, RunStatus, f64)> {
    let settings = config.method_settings();
    let start = Instant::now();
    let fitted = fit_method(
        method,
        z,
        config.m,
        &settings,
        method_seed(config.seed, replicate, method),
    );
    let elapsed = start.elapsed().as_secs_f64();
    match fitted {
        Ok(est) => {
            if est.m() != config.m || est.d() != truth.nrows() {
                return Err(NgcaError::DimensionMismatch {
                    expected: config.m,
                    got: est.m(),
                });
            }
            let err = subspace_error(truth, est.basis())?;
            Ok((Some(err), RunStatus::Ok, elapsed))
        }
        Err(NgcaError::IllConditionedCovariance { .. }) => Ok((None, RunStatus::WhiteningFailed, elapsed)),
        Err(NgcaError::NoSurvivors { .. }) => Ok((None, RunStatus::NoSurvivors, elapsed)),
        Err(e) => Err(e),
    }
}

/// Runs the full (distribution × r × seed × method) cross-product and writes
/// `results.csv`, `summary.csv` and `conditions.csv` to the output directory.
pub fn run_synthetic(config: &ExperimentConfig) -> Result<SyntheticOutcome> {
    config.validate()?;
    fs::create_dir_all(&config.output_dir).map_err(|e| NgcaError::io(&config.output_dir, e))?;
    let mut jobs = Vec::new();
    for &dist in &config.distributions {
        for &r in &config.r_values {
            for &seed in &config.seeds {
                jobs.push((dist, r, seed));
            }
        }
    }
    let per_dataset: Vec<(ConditionRow, Vec<RunResult>)> = jobs
        .par_iter()
        .map(|&(dist, r, seed)| {
            let (z, truth, kappa) = synthetic_instance(dist, r, config.n, seed)?;
            let mut rows = Vec::with_capacity(config.methods.len());
            for &method in &config.methods {
                let (subspace_error, status, wall_time_seconds) = run_one(method, &z, &truth, config, seed)?;
                log::info!("{method} {dist} r={r} seed={seed}: {status} {subspace_error:?}");
                rows.push(RunResult {
                    method,
                    distribution: dist,
                    r,
                    seed,
                    subspace_error,
                    status,
                    wall_time_seconds,
                });
            }
            let cond = ConditionRow {
                distribution: dist,
                r,
                seed,
                condition_number: kappa,
            };
            Ok((cond, rows))
        })
        .collect::<Result<_>>()?;
    let mut conditions = Vec::with_capacity(per_dataset.len());
    let mut flat = Vec::new();
    for (cond, rows) in per_dataset {
        conditions.push(cond);
        flat.extend(rows);
    }
    // method-major order within each (distribution, r) block
    let mut results = Vec::with_capacity(flat.len());
    for &dist in &config.distributions {
        for &r in &config.r_values {
            for &method in &config.methods {
                results.extend(
                    flat.iter()
                        .filter(|x| x.distribution == dist && x.r == r && x.method == method)
                        .cloned(),
                );
            }
        }
    }
    let summary = summarize(&results);
    let write = |name: &str, text: String| -> Result<()> {
        let path = config.output_dir.join(name);
        fs::write(&path, text).map_err(|e| NgcaError::io(&path, e))
    };
    write(RESULTS_FILE, results_to_csv(&results))?;
    write(SUMMARY_FILE, summary_to_csv(&summary))?;
    write(CONDITIONS_FILE, conditions_to_csv(&conditions))?;
    Ok(SyntheticOutcome {
        results,
        summary,
        conditions,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub d_target: usize,
    pub m: usize,
    /// Samples per split (half of each class).
    pub n: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub settings: MethodSettings,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOutput {
    pub method: Method,
    pub status: RunStatus,
    pub basis: Option<SubspaceEstimate>,
    pub train_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
}

fn output_path(dir: &Path, method: Method, suffix: &str) -> PathBuf {
    dir.join(format!("{method}.{suffix}"))
}

/// Standardize, pad with Gaussian noise dimensions up to `d_target`, draw
/// balanced train/test splits, fit every method on the training split and
/// write both splits projected onto each estimate as LIBSVM files.
pub fn run_benchmark_projection(dataset: &LabeledDataset, config: &BenchmarkConfig) -> Result<Vec<BenchmarkOutput>> {
    check_m(config.m, config.d_target)?;
    if config.methods.is_empty() {
        return Err(NgcaError::InvalidParameter("no methods given".into()));
    }
    fs::create_dir_all(&config.output_dir).map_err(|e| NgcaError::io(&config.output_dir, e))?;
    let (z, _, _) = standardize(&dataset.x)?;
    let augmented = data::augment_noise_dims(&z, config.d_target, config.seed)?;
    let full = LabeledDataset::new(augmented, dataset.labels.clone())?;
    let (train, test) = data::balanced_subsample(&full, config.n, config.seed)?;
    let mut outputs = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let seed = mix(config.seed, method as u64);
        match fit_method(method, &train.x, config.m, &config.settings, seed) {
            Ok(est) => {
                let train_path = output_path(&config.output_dir, method, "train.libsvm");
                let test_path = output_path(&config.output_dir, method, "test.libsvm");
                io::write_libsvm(&train_path, &est.project(train.x.as_matrix())?, &train)?;
                io::write_libsvm(&test_path, &est.project(test.x.as_matrix())?, &test)?;
                io::write_basis(&output_path(&config.output_dir, method, "basis.txt"), est.basis())?;
                outputs.push(BenchmarkOutput {
                    method,
                    status: RunStatus::Ok,
                    basis: Some(est),
                    train_path: Some(train_path),
                    test_path: Some(test_path),
                });
            }
            Err(e @ (NgcaError::IllConditionedCovariance { .. } | NgcaError::NoSurvivors { .. })) => {
                log::warn!("{method}: {e}");
                let status = if matches!(e, NgcaError::NoSurvivors { .. }) {
                    RunStatus::NoSurvivors
                } else {
                    RunStatus::WhiteningFailed
                };
                outputs.push(BenchmarkOutput {
                    method,
                    status,
                    basis: None,
                    train_path: None,
                    test_path: None,
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(outputs)
}
