//! K-fold model selection for the linear-in-parameter gradient-field models.
//!
//! Both the log-density-gradient fit and the whitening-free vector-field fit
//! minimize `αᵀ S α + 2 αᵀ t + λ‖α‖²`, where `S` is the mean outer product of
//! basis values and `t` the mean of a per-sample linear term. Their hold-out
//! losses are the same quadratic form evaluated with validation-set averages,
//! so the fold machinery is shared.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{NgcaError, Result};
use crate::numerics::design_from_sqdist;
use crate::rng;

/// Candidate bandwidths and regularizers searched jointly per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvGrid {
    pub sigma_candidates: Vec<f64>,
    pub lambda_candidates: Vec<f64>,
    pub fold_count: usize,
    pub seed: u64,
}

impl Default for CvGrid {
    fn default() -> Self {
        CvGrid {
            sigma_candidates: log_space(-1.0, 1.0, 10),
            lambda_candidates: log_space(-5.0, 1.0, 10),
            fold_count: 5,
            seed: 0,
        }
    }
}

impl CvGrid {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Sorted, deduplicated candidates after validation.
    pub(crate) fn normalized(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.fold_count < 2 {
            return Err(NgcaError::InvalidParameter(format!(
                "fold_count must be at least 2, got {}",
                self.fold_count
            )));
        }
        if self.sigma_candidates.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(NgcaError::InvalidParameter(
                "bandwidth candidates must be positive".into(),
            ));
        }
        if self.lambda_candidates.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(NgcaError::InvalidParameter(
                "regularization candidates must be nonnegative".into(),
            ));
        }
        let clean = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let (sigmas, lambdas) = (clean(&self.sigma_candidates), clean(&self.lambda_candidates));
        if sigmas.is_empty() || lambdas.is_empty() {
            return Err(NgcaError::InvalidParameter("empty candidate grid".into()));
        }
        Ok((sigmas, lambdas))
    }
}

/// `count` points evenly spaced in log10 between `10^lo` and `10^hi`.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![10f64.powf(lo)],
        _ => (0..count)
            .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (count - 1) as f64))
            .collect(),
    }
}

/// Selection outcome for one output dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub sigma: f64,
    pub lambda: f64,
    pub sigma_candidates: Vec<f64>,
    pub lambda_candidates: Vec<f64>,
    /// Mean hold-out loss, indexed `[sigma][lambda]`.
    pub losses: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub dimensions: Vec<DimensionReport>,
}

/// Seeded shuffle followed by contiguous fold blocks.
pub(crate) struct FoldPlan {
    pub order: Vec<usize>,
    pub bounds: Vec<(usize, usize)>,
}

impl FoldPlan {
    pub fn new(n: usize, folds: usize, seed: u64, stream: u64) -> Result<Self> {
        if folds > n {
            return Err(NgcaError::InvalidParameter(format!(
                "fold_count {folds} exceeds sample count {n}"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng::seeded(seed, stream));
        let base = n / folds;
        let extra = n % folds;
        let mut bounds = Vec::with_capacity(folds);
        let mut start = 0;
        for f in 0..folds {
            let len = base + usize::from(f < extra);
            bounds.push((start, len));
            start += len;
        }
        Ok(FoldPlan { order, bounds })
    }
}

/// Per-fold sums of `φφᵀ` and of the linear term.
struct FoldStats {
    grams: Vec<DMatrix<f64>>,
    lins: Vec<DVector<f64>>,
    counts: Vec<usize>,
}

impl FoldStats {
    fn new(values: &DMatrix<f64>, lin: &DMatrix<f64>, plan: &FoldPlan) -> Self {
        let mut grams = Vec::with_capacity(plan.bounds.len());
        let mut lins = Vec::with_capacity(plan.bounds.len());
        let mut counts = Vec::with_capacity(plan.bounds.len());
        for &(start, len) in &plan.bounds {
            let block = values.rows(start, len);
            let bt = block.transpose();
            grams.push(&bt * block);
            lins.push(lin.rows(start, len).row_sum().transpose());
            counts.push(len);
        }
        FoldStats { grams, lins, counts }
    }

    /// Mean hold-out loss over folds, one per regularizer.
    fn losses(&self, lambdas: &[f64]) -> Vec<f64> {
        let folds = self.counts.len();
        let b = self.grams[0].nrows();
        let mut totals = vec![0.0; lambdas.len()];
        for f in 0..folds {
            let mut g_tr = DMatrix::zeros(b, b);
            let mut h_tr = DVector::zeros(b);
            let mut n_tr = 0;
            for other in (0..folds).filter(|&o| o != f) {
                g_tr += &self.grams[other];
                h_tr += &self.lins[other];
                n_tr += self.counts[other];
            }
            g_tr /= n_tr as f64;
            h_tr /= n_tr as f64;
            let g_val = &self.grams[f] / self.counts[f] as f64;
            let h_val = &self.lins[f] / self.counts[f] as f64;
            for (slot, &lambda) in totals.iter_mut().zip(lambdas) {
                let loss = match cholesky_solve(&g_tr, &h_tr, lambda) {
                    Some(theta) => theta.dot(&(&g_val * &theta)) + 2.0 * theta.dot(&h_val),
                    None => f64::INFINITY,
                };
                *slot += if loss.is_finite() { loss } else { f64::INFINITY };
            }
        }
        totals.into_iter().map(|t| t / folds as f64).collect()
    }
}

/// `-(G + λI)^{-1} h` via Cholesky, `None` if not positive definite.
pub(crate) fn cholesky_solve(g: &DMatrix<f64>, h: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let mut a = g.clone();
    for i in 0..a.nrows() {
        a[(i, i)] += lambda;
    }
    let chol = a.cholesky()?;
    let theta = -chol.solve(h);
    theta.iter().all(|v| v.is_finite()).then_some(theta)
}

/// Minimizer of `θᵀGθ + 2θᵀh + λ‖θ‖²`, with one step of iterative
/// refinement and a residual check `‖(G+λI)θ + h‖ ≤ 1e-8 (1 + ‖h‖)`.
pub(crate) fn solve_ridge(g: &DMatrix<f64>, h: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    let b = g.nrows();
    if g.ncols() != b || h.len() != b {
        return Err(NgcaError::DimensionMismatch {
            expected: b,
            got: h.len(),
        });
    }
    if !(lambda >= 0.0) {
        return Err(NgcaError::InvalidParameter(format!("negative regularizer {lambda}")));
    }
    let mut a = g.clone();
    for i in 0..b {
        a[(i, i)] += lambda;
    }
    let chol = a.clone().cholesky().ok_or(NgcaError::SingularSystem)?;
    let mut theta = -chol.solve(h);
    let residual = |t: &DVector<f64>| &a * t + h;
    let r = residual(&theta);
    theta -= chol.solve(&r);
    let r = residual(&theta);
    if !theta.iter().all(|v| v.is_finite()) || r.norm() > 1e-8 * (1.0 + h.norm()) {
        return Err(NgcaError::SingularSystem);
    }
    Ok(theta)
}

/// Grid search for one dimension `j`.
///
/// `x` and `sqdist` must already be in fold order (`plan.order`).
/// `plug_in`, when present, holds the per-sample scalar that multiplies the
/// basis values in the linear term (same fold order).
#[allow(clippy::too_many_arguments)]
pub(crate) fn search_dimension(
    x: &DMatrix<f64>,
    centers: &DMatrix<f64>,
    sqdist: &DMatrix<f64>,
    sigmas: &[f64],
    lambdas: &[f64],
    plan: &FoldPlan,
    j: usize,
    plug_in: Option<&DVector<f64>>,
) -> DimensionReport {
    let mut losses = Vec::with_capacity(sigmas.len());
    let mut best = (f64::INFINITY, sigmas[0], lambdas[0]);
    for &sigma in sigmas {
        let (values, partials) = design_from_sqdist(x, centers, sqdist, sigma, j);
        let lin = match plug_in {
            None => partials,
            Some(a) => {
                let mut lin = partials;
                for (k, mut col) in lin.column_iter_mut().enumerate() {
                    for i in 0..col.len() {
                        col[i] += values[(i, k)] * a[i];
                    }
                }
                lin
            }
        };
        let stats = FoldStats::new(&values, &lin, plan);
        let row = stats.losses(lambdas);
        for (&loss, &lambda) in row.iter().zip(lambdas) {
            if loss < best.0 {
                best = (loss, sigma, lambda);
            }
        }
        losses.push(row);
    }
    DimensionReport {
        sigma: best.1,
        lambda: best.2,
        sigma_candidates: sigmas.to_vec(),
        lambda_candidates: lambdas.to_vec(),
        losses,
    }
}
