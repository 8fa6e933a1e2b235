//! Multi-index projection pursuit.
//!
//! For whitened `y` and an index function `h(y) = s(wᵀy)`, Stein's identity
//! makes `β = E[y h(y) - ∇h(y)]` vanish on Gaussian directions, so `β` lies
//! in the non-Gaussian index space. A large family of index functions is
//! refined by FastICA iterations, each resulting `β̂` is normalized by its
//! estimated standard error, weak ones are discarded against a threshold and
//! PCA of the survivors gives the subspace.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NgcaError, Result};
use crate::lsngca::{check_m, principal_directions};
use crate::numerics::{build_whitener, orthonormalize, standardize, whiten, DataMatrix, DEFAULT_MIN_EIGENVALUE};
use crate::rng::{self, stream};
use crate::subspace::{Method, SubspaceEstimate};

const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NgifFamily {
    /// `z³ exp(-z²/(2σ²))`
    GaussPow3,
    /// `tanh(a z)`
    Tanh,
    /// `sin(b z)`
    Sin,
    /// `cos(b z)`
    Cos,
}

impl NgifFamily {
    pub const ALL: [NgifFamily; 4] = [
        NgifFamily::GaussPow3,
        NgifFamily::Tanh,
        NgifFamily::Sin,
        NgifFamily::Cos,
    ];

    /// Closed parameter range searched for this family.
    pub fn range(self) -> (f64, f64) {
        match self {
            NgifFamily::GaussPow3 => (0.5, 5.0),
            NgifFamily::Tanh => (0.05, 5.0),
            NgifFamily::Sin | NgifFamily::Cos => (0.05, 4.0),
        }
    }
}

/// `(s(z), s'(z))` for the given family and parameter.
pub fn ngif_eval(family: NgifFamily, param: f64, z: f64) -> (f64, f64) {
    match family {
        NgifFamily::GaussPow3 => {
            let s2 = param * param;
            let e = (-z * z / (2.0 * s2)).exp();
            let z2 = z * z;
            (z2 * z * e, (3.0 * z2 - z2 * z2 / s2) * e)
        }
        NgifFamily::Tanh => {
            let t = (param * z).tanh();
            (t, param * (1.0 - t * t))
        }
        NgifFamily::Sin => {
            let (s, c) = (param * z).sin_cos();
            (s, param * c)
        }
        NgifFamily::Cos => {
            let (s, c) = (param * z).sin_cos();
            (c, -param * s)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgifSpec {
    pub family: NgifFamily,
    pub param: f64,
    pub w: DVector<f64>,
}

impl NgifSpec {
    pub fn new(family: NgifFamily, param: f64, w: DVector<f64>) -> Result<Self> {
        let (lo, hi) = family.range();
        if !(param >= lo && param <= hi) {
            return Err(NgcaError::InvalidParameter(format!(
                "parameter {param} outside [{lo}, {hi}] for {family:?}"
            )));
        }
        if !((w.norm() - 1.0).abs() <= 1e-12) {
            return Err(NgcaError::InvalidParameter("direction must have unit norm".into()));
        }
        Ok(NgifSpec { family, param, w })
    }

    fn eval(&self, z: f64) -> (f64, f64) {
        ngif_eval(self.family, self.param, z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MippConfig {
    pub per_family_count: usize,
    pub fastica_iters: usize,
    pub tau: f64,
    pub seed: u64,
}

impl Default for MippConfig {
    fn default() -> Self {
        MippConfig {
            per_family_count: 1000,
            fastica_iters: 10,
            tau: 1.6,
            seed: 0,
        }
    }
}

/// `per_family_count` evenly spaced parameters per family (endpoints
/// included), each with its own seeded uniform random unit direction.
pub fn ngif_grid(config: &MippConfig, d: usize) -> Vec<NgifSpec> {
    let count = config.per_family_count;
    let mut specs = Vec::with_capacity(4 * count);
    for family in NgifFamily::ALL {
        let (lo, hi) = family.range();
        for i in 0..count {
            let param = if count == 1 {
                lo
            } else if i == count - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (count - 1) as f64
            };
            let index = specs.len() as u64;
            let w = random_unit(d, rng::mix(config.seed, index));
            specs.push(NgifSpec { family, param, w });
        }
    }
    specs
}

fn random_unit(d: usize, seed: u64) -> DVector<f64> {
    let mut r = rng::seeded(seed, stream::NGIF_INIT);
    loop {
        let v = DVector::from_fn(d, |_, _| r.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

/// `Σ_i [y_i s(wᵀy_i) - s'(wᵀy_i) w]`.
fn pursuit_sum(y: &DMatrix<f64>, w: &DVector<f64>, f: impl Fn(f64) -> (f64, f64)) -> DVector<f64> {
    let z = y * w;
    let mut s = DVector::zeros(z.len());
    let mut ds_total = 0.0;
    for (i, &zi) in z.iter().enumerate() {
        let (si, dsi) = f(zi);
        s[i] = si;
        ds_total += dsi;
    }
    y.tr_mul(&s) - w * ds_total
}

/// One FastICA step: `w ← normalize(Σ_i [y_i s(wᵀy_i) - s'(wᵀy_i) w])`.
pub fn fastica_update(y: &DataMatrix, spec: &NgifSpec) -> Result<NgifSpec> {
    check_dim(y, spec)?;
    let next = pursuit_sum(y.as_matrix(), &spec.w, |z| spec.eval(z));
    let norm = next.norm();
    if !(norm >= DEGENERATE_NORM) {
        return Err(NgcaError::DegenerateDirection);
    }
    Ok(NgifSpec {
        family: spec.family,
        param: spec.param,
        w: next / norm,
    })
}

/// `β̂ = (1/n) Σ_i [y_i h(y_i) - ∇h(y_i)]` with `h(y) = s(wᵀy)`.
pub fn compute_beta(y: &DataMatrix, spec: &NgifSpec) -> Result<DVector<f64>> {
    check_dim(y, spec)?;
    Ok(beta_with(y.as_matrix(), &spec.w, |z| spec.eval(z)))
}

pub(crate) fn beta_with(y: &DMatrix<f64>, w: &DVector<f64>, f: impl Fn(f64) -> (f64, f64)) -> DVector<f64> {
    pursuit_sum(y, w, f) / y.nrows() as f64
}

/// Divides `β̂` by its estimated standard error
/// `sqrt(((1/n) Σ ‖y_i h - ∇h‖² - ‖β̂‖²) / n)`, so that its norm measures a
/// signal-to-noise ratio (close to 1 on Gaussian directions).
pub fn normalize_beta(y: &DataMatrix, spec: &NgifSpec, beta: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim(y, spec)?;
    normalize_with(y.as_matrix(), &spec.w, beta, |z| spec.eval(z))
}

fn normalize_with(
    y: &DMatrix<f64>,
    w: &DVector<f64>,
    beta: &DVector<f64>,
    f: impl Fn(f64) -> (f64, f64),
) -> Result<DVector<f64>> {
    let n = y.nrows() as f64;
    let z = y * w;
    let ww = w.norm_squared();
    let mut second = 0.0;
    for (i, &zi) in z.iter().enumerate() {
        let (s, ds) = f(zi);
        let yy = y.row(i).norm_squared();
        // ‖y s - s' w‖² expanded
        second += s * s * yy - 2.0 * s * ds * zi + ds * ds * ww;
    }
    let radicand = (second / n - beta.norm_squared()) / n;
    if !(radicand > DEGENERATE_NORM) {
        return Err(NgcaError::DegenerateNormalization(radicand));
    }
    Ok(beta / radicand.sqrt())
}

fn check_dim(y: &DataMatrix, spec: &NgifSpec) -> Result<()> {
    if y.d() != spec.w.len() {
        return Err(NgcaError::DimensionMismatch {
            expected: spec.w.len(),
            got: y.d(),
        });
    }
    Ok(())
}

/// Counts from one projection-pursuit run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MippDiagnostics {
    pub specs: usize,
    pub degenerate_directions: usize,
    pub degenerate_normalizations: usize,
    pub survivors: usize,
}

/// Runs every index function on whitened data and returns the normalized
/// `β̂` vectors that pass the threshold.
pub fn pursue(y: &DataMatrix, config: &MippConfig) -> (Vec<DVector<f64>>, MippDiagnostics) {
    let specs = ngif_grid(config, y.d());
    let outcomes: Vec<Result<DVector<f64>>> = specs
        .par_iter()
        .map(|spec| {
            let mut spec = spec.clone();
            for _ in 0..config.fastica_iters {
                spec = fastica_update(y, &spec)?;
            }
            let beta = compute_beta(y, &spec)?;
            normalize_beta(y, &spec, &beta)
        })
        .collect();
    let mut diag = MippDiagnostics {
        specs: specs.len(),
        ..Default::default()
    };
    let mut kept = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(beta) if beta.norm() >= config.tau => kept.push(beta),
            Ok(_) => {}
            Err(NgcaError::DegenerateDirection) => diag.degenerate_directions += 1,
            Err(NgcaError::DegenerateNormalization(_)) => diag.degenerate_normalizations += 1,
            Err(e) => unreachable!("unexpected pursuit error: {e}"),
        }
    }
    diag.survivors = kept.len();
    (kept, diag)
}

pub fn mipp_fit(x: &DataMatrix, m: usize, config: &MippConfig) -> Result<SubspaceEstimate> {
    mipp_fit_detailed(x, m, config, DEFAULT_MIN_EIGENVALUE).map(|(est, _)| est)
}

/// Standardize, whiten, pursue, threshold, PCA of the surviving `β̂`, then
/// map back through `Σ^{-1/2}` and re-orthonormalize.
pub fn mipp_fit_detailed(
    x: &DataMatrix,
    m: usize,
    config: &MippConfig,
    min_eigenvalue: f64,
) -> Result<(SubspaceEstimate, MippDiagnostics)> {
    check_m(m, x.d())?;
    if !(config.tau > 0.0) {
        return Err(NgcaError::InvalidParameter(format!(
            "tau must be positive, got {}",
            config.tau
        )));
    }
    let (z, _, _) = standardize(x)?;
    let whitener = build_whitener(&z, min_eigenvalue)?;
    let y = whiten(&whitener, &z)?;
    let (kept, diag) = pursue(&y, config);
    log::debug!("mipp: {diag:?}");
    if kept.is_empty() {
        return Err(NgcaError::NoSurvivors { tau: config.tau });
    }
    let stacked = DMatrix::from_columns(&kept).transpose();
    let directions = principal_directions(&stacked, m)?;
    let mapped = &whitener.inv_sqrt_cov * directions;
    Ok((SubspaceEstimate::new(orthonormalize(&mapped)?, Method::Mipp)?, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample_y(n: usize, d: usize, seed: u64) -> DataMatrix {
        let mut r = rng::seeded(seed, 77);
        DataMatrix::new(DMatrix::from_fn(n, d, |_, _| r.sample::<f64, _>(StandardNormal))).unwrap()
    }

    #[test]
    fn ngif_values_at_zero() {
        assert_eq!(ngif_eval(NgifFamily::Sin, 1.0, 0.0), (0.0, 1.0));
        assert_eq!(ngif_eval(NgifFamily::Cos, 2.0, 0.0), (1.0, -0.0));
        let (s, ds) = ngif_eval(NgifFamily::GaussPow3, 1.0, 1.0);
        assert_relative_eq!(s, (-0.5f64).exp(), max_relative = 1e-15);
        let h = 1e-6;
        let fd = (ngif_eval(NgifFamily::GaussPow3, 1.0, 1.0 + h).0 - ngif_eval(NgifFamily::GaussPow3, 1.0, 1.0 - h).0)
            / (2.0 * h);
        assert_relative_eq!(ds, fd, max_relative = 1e-8);
        assert_relative_eq!(ds, 2.0 * (-0.5f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn grid_endpoints_and_counts() {
        let config = MippConfig {
            per_family_count: 2,
            ..Default::default()
        };
        let specs = ngif_grid(&config, 3);
        assert_eq!(specs.len(), 8);
        let tanh: Vec<f64> = specs
            .iter()
            .filter(|s| s.family == NgifFamily::Tanh)
            .map(|s| s.param)
            .collect();
        assert_eq!(tanh, vec![0.05, 5.0]);
        for s in &specs {
            assert!((s.w.norm() - 1.0).abs() < 1e-12);
        }
        assert_eq!(specs, ngif_grid(&config, 3));
        let other = ngif_grid(
            &MippConfig {
                seed: 1,
                ..config.clone()
            },
            3,
        );
        assert_ne!(specs[0].w, other[0].w);

        let full = ngif_grid(&MippConfig::default(), 2);
        assert_eq!(full.len(), 4000);
        for family in NgifFamily::ALL {
            let params: Vec<f64> = full.iter().filter(|s| s.family == family).map(|s| s.param).collect();
            let (lo, hi) = family.range();
            assert_eq!(params[0], lo);
            assert_eq!(params[999], hi);
            let step = (hi - lo) / 999.0;
            for win in params.windows(2) {
                assert_relative_eq!(win[1] - win[0], step, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn spec_validation() {
        assert!(NgifSpec::new(NgifFamily::Tanh, 6.0, DVector::from_vec(vec![1.0, 0.0])).is_err());
        assert!(NgifSpec::new(NgifFamily::Tanh, 1.0, DVector::from_vec(vec![1.0, 1.0])).is_err());
        assert!(NgifSpec::new(NgifFamily::Sin, 4.0, DVector::from_vec(vec![0.0, 1.0])).is_ok());
    }

    #[test]
    fn fastica_update_unit_norm_and_deterministic() {
        let y = sample_y(200, 3, 1);
        let spec = ngif_grid(
            &MippConfig {
                per_family_count: 3,
                ..Default::default()
            },
            3,
        )
        .remove(4);
        let a = fastica_update(&y, &spec).unwrap();
        let b = fastica_update(&y, &spec).unwrap();
        assert_eq!(a, b);
        assert!((a.w.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fastica_degenerate_direction() {
        // cos family with every projection at zero: s = 1, s' = 0 and the
        // samples cancel.
        let y = DataMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, -1.0]]).unwrap();
        let spec = NgifSpec::new(NgifFamily::Cos, 1.0, DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert!(matches!(fastica_update(&y, &spec), Err(NgcaError::DegenerateDirection)));
    }

    #[test]
    fn beta_and_normalization_brute_force() {
        let y = sample_y(5, 3, 4);
        let w = DVector::from_vec(vec![0.6, 0.0, 0.8]);
        let spec = NgifSpec::new(NgifFamily::Tanh, 1.3, w.clone()).unwrap();
        let beta = compute_beta(&y, &spec).unwrap();
        let mut vs = Vec::new();
        for i in 0..5 {
            let yi = y.row(i);
            let (s, ds) = ngif_eval(NgifFamily::Tanh, 1.3, w.dot(&yi));
            vs.push(&yi * s - &w * ds);
        }
        let mean = vs.iter().fold(DVector::zeros(3), |acc, v| acc + v) / 5.0;
        assert_relative_eq!(beta, mean, max_relative = 1e-13);

        let second: f64 = vs.iter().map(|v| v.norm_squared()).sum::<f64>() / 5.0;
        let expected = &mean / ((second - mean.norm_squared()) / 5.0).sqrt();
        let normalized = normalize_beta(&y, &spec, &beta).unwrap();
        assert_relative_eq!(normalized, expected, max_relative = 1e-12);

        // recomputing from the same data gives the same normalized norm
        let again = normalize_beta(&y, &spec, &compute_beta(&y, &spec).unwrap()).unwrap();
        assert_relative_eq!(again.norm(), normalized.norm(), max_relative = 1e-14);
    }

    #[test]
    fn zero_variance_normalization_drops() {
        // every per-sample vector identical: y_i = 0 gives y s - s' w = -s'(0) w
        let y = DataMatrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let spec = NgifSpec::new(NgifFamily::Tanh, 1.0, DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let beta = compute_beta(&y, &spec).unwrap();
        assert!(matches!(
            normalize_beta(&y, &spec, &beta),
            Err(NgcaError::DegenerateNormalization(_))
        ));
    }

    #[test]
    fn linear_index_function_has_zero_beta_on_whitened_data() {
        let x = sample_y(500, 3, 9);
        let (z, _, _) = standardize(&x).unwrap();
        let y = whiten(&build_whitener(&z, DEFAULT_MIN_EIGENVALUE).unwrap(), &z).unwrap();
        let w = DVector::from_vec(vec![0.48, 0.6, 0.64]);
        let beta = beta_with(y.as_matrix(), &w, |z| (z, 1.0));
        assert!(beta.amax() < 1e-12, "{beta}");
    }
}
