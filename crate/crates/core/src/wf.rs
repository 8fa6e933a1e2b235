//! Whitening-free least-squares NGCA.
//!
//! For `p(x) = f(Bᵀx) φ_Q(x)` the field `v(x) = ∇ ln p(x) - ∇² ln p(x) x`
//! lies in `Range(B)` whatever the noise covariance `Q`, so no whitening is
//! needed. Each component `v_j` is fitted by least squares with model
//! `w_j(x) = α_jᵀ φ_j(x)`; integration by parts removes `∂_j ln p`, and the
//! Hessian row `∇ ∂_j ln p` is replaced by the Jacobian of a plug-in LSLDG
//! fit. The estimate of the index space is the leading eigenvectors of
//! `Σ v̂ v̂ᵀ`, directly in input coordinates.
//!
//! Nothing in this module builds a [`crate::numerics::Whitener`].

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::cv::{search_dimension, solve_ridge, CvGrid, CvReport, FoldPlan};
use crate::error::{NgcaError, Result};
use crate::lsldg::{fit_lsldg, sample_centers, GradientModel};
use crate::lsngca::{check_m, principal_directions};
use crate::numerics::{squared_distances, DataMatrix, GaussianDerivBasis};
use crate::rng::stream;
use crate::subspace::{Method, SubspaceEstimate};

const STANDARDIZED_TOL: f64 = 1e-8;

/// Fitted estimate of `v(x)`.
#[derive(Debug, Clone)]
pub struct VectorFieldModel {
    bases: Vec<GaussianDerivBasis>,
    alphas: Vec<DVector<f64>>,
    gammas: Vec<f64>,
    plug_in: GradientModel,
    report: Option<CvReport>,
}

fn check_model_dim(x: &DMatrix<f64>, basis: &GaussianDerivBasis, g: &GradientModel) -> Result<()> {
    if x.ncols() != basis.dim() || g.d() != basis.dim() {
        return Err(NgcaError::DimensionMismatch {
            expected: basis.dim(),
            got: x.ncols(),
        });
    }
    Ok(())
}

/// `S = (1/n) Σ φ φᵀ` and `t = (1/n) Σ [∂_j φ + φ (∇ĝ_j)ᵀ x]`.
pub fn assemble_s_t(
    x: &DMatrix<f64>,
    basis: &GaussianDerivBasis,
    g: &GradientModel,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    check_model_dim(x, basis, g)?;
    if x.nrows() == 0 {
        return Err(NgcaError::InvalidData("no samples".into()));
    }
    let j = basis.deriv_index();
    let plug = g.jacobian_dot_x(x)?.column(j).into_owned();
    Ok(assemble_with_plug(x, basis, &plug))
}

fn assemble_with_plug(
    x: &DMatrix<f64>,
    basis: &GaussianDerivBasis,
    plug: &DVector<f64>,
) -> (DMatrix<f64>, DVector<f64>) {
    let n = x.nrows() as f64;
    let (values, partials) = basis.design(x);
    let s = values.transpose() * &values / n;
    let t = (partials.row_sum() + plug.transpose() * &values).transpose() / n;
    (s, t)
}

/// `α = -(S + γI)^{-1} t`.
pub fn solve_alpha(s: &DMatrix<f64>, t: &DVector<f64>, gamma: f64) -> Result<DVector<f64>> {
    solve_ridge(s, t, gamma)
}

/// `(1/n) Σ [w_j² + 2 ∂_j w_j + 2 w_j (∇ĝ_j)ᵀ x]` on held-out samples.
pub fn wf_holdout_loss(
    basis: &GaussianDerivBasis,
    alpha: &DVector<f64>,
    g: &GradientModel,
    x_val: &DMatrix<f64>,
) -> Result<f64> {
    if x_val.nrows() == 0 {
        return Err(NgcaError::EmptyValidationSet);
    }
    check_model_dim(x_val, basis, g)?;
    let j = basis.deriv_index();
    let plug = g.jacobian_dot_x(x_val)?.column(j).into_owned();
    let (values, partials) = basis.design(x_val);
    let w = values * alpha;
    let dw = partials * alpha;
    let total: f64 = (0..x_val.nrows())
        .map(|i| w[i] * w[i] + 2.0 * dw[i] + 2.0 * w[i] * plug[i])
        .sum();
    Ok(total / x_val.nrows() as f64)
}

/// Cross-validates `(σ, γ)` per dimension with the plug-in model held fixed.
pub fn wf_cv(x: &DataMatrix, centers: &DMatrix<f64>, g: &GradientModel, grid: &CvGrid) -> Result<CvReport> {
    if centers.ncols() != x.d() || g.d() != x.d() {
        return Err(NgcaError::DimensionMismatch {
            expected: x.d(),
            got: centers.ncols(),
        });
    }
    let (sigmas, gammas) = grid.normalized()?;
    let plan = FoldPlan::new(x.n(), grid.fold_count, grid.seed, stream::WF_FOLDS)?;
    let xs = x.as_matrix().select_rows(&plan.order);
    let sq = squared_distances(&xs, centers);
    let plug = g.jacobian_dot_x(&xs)?;
    let dimensions = (0..x.d())
        .into_par_iter()
        .map(|j| {
            let a = plug.column(j).into_owned();
            search_dimension(&xs, centers, &sq, &sigmas, &gammas, &plan, j, Some(&a))
        })
        .collect();
    Ok(CvReport { dimensions })
}

/// Fits the plug-in LSLDG model, samples `t` centers, cross-validates and
/// solves each component on all samples.
pub fn fit_wf(x: &DataMatrix, grid: &CvGrid, t: usize) -> Result<VectorFieldModel> {
    check_standardized(x)?;
    if t == 0 || t > x.n() {
        return Err(NgcaError::InvalidParameter(format!(
            "number of basis functions {t} must be in 1..={}",
            x.n()
        )));
    }
    let plug_in = fit_lsldg(x, grid, t)?;
    let centers = sample_centers(x, t, grid.seed, stream::WF_CENTERS)?;
    let report = wf_cv(x, &centers, &plug_in, grid)?;
    let plug = plug_in.jacobian_dot_x(x.as_matrix())?;
    let fitted: Vec<(GaussianDerivBasis, DVector<f64>)> = report
        .dimensions
        .par_iter()
        .enumerate()
        .map(|(j, dim)| {
            let basis = GaussianDerivBasis::new(centers.clone(), dim.sigma, j)?;
            let (s, tv) = assemble_with_plug(x.as_matrix(), &basis, &plug.column(j).into_owned());
            let alpha = solve_alpha(&s, &tv, dim.lambda)?;
            Ok((basis, alpha))
        })
        .collect::<Result<_>>()?;
    let gammas = report.dimensions.iter().map(|d| d.lambda).collect();
    let (bases, alphas) = fitted.into_iter().unzip();
    Ok(VectorFieldModel {
        bases,
        alphas,
        gammas,
        plug_in,
        report: Some(report),
    })
}

fn check_standardized(x: &DataMatrix) -> Result<()> {
    let n = x.n() as f64;
    for (j, col) in x.as_matrix().column_iter().enumerate() {
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        if mean.abs() > STANDARDIZED_TOL || (var - 1.0).abs() > STANDARDIZED_TOL {
            return Err(NgcaError::InvalidData(format!(
                "column {j} is not standardized (mean {mean:e}, variance {var})"
            )));
        }
    }
    Ok(())
}

impl VectorFieldModel {
    pub fn from_parts(
        bases: Vec<GaussianDerivBasis>,
        alphas: Vec<DVector<f64>>,
        gammas: Vec<f64>,
        plug_in: GradientModel,
    ) -> Result<Self> {
        let d = bases.len();
        if d == 0 || alphas.len() != d || gammas.len() != d || plug_in.d() != d {
            return Err(NgcaError::InvalidParameter(
                "one basis, coefficient vector and regularizer per dimension".into(),
            ));
        }
        for (j, (basis, alpha)) in bases.iter().zip(&alphas).enumerate() {
            if basis.dim() != d || basis.deriv_index() != j || alpha.len() != basis.len() {
                return Err(NgcaError::InvalidParameter(format!(
                    "inconsistent basis for dimension {j}"
                )));
            }
        }
        Ok(VectorFieldModel {
            bases,
            alphas,
            gammas,
            plug_in,
            report: None,
        })
    }

    pub fn d(&self) -> usize {
        self.bases.len()
    }

    pub fn bases(&self) -> &[GaussianDerivBasis] {
        &self.bases
    }

    pub fn alphas(&self) -> &[DVector<f64>] {
        &self.alphas
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn plug_in(&self) -> &GradientModel {
        &self.plug_in
    }

    pub fn report(&self) -> Option<&CvReport> {
        self.report.as_ref()
    }

    /// `v̂(x)`; component `j` is `α_jᵀ φ_j(x)`.
    pub fn predict_v(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.d(), |j, _| self.alphas[j].dot(&self.bases[j].eval(x)))
    }

    /// `v̂` at every row of `x`, as an `n × d` matrix.
    pub fn predict_batch(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.d() {
            return Err(NgcaError::DimensionMismatch {
                expected: self.d(),
                got: x.ncols(),
            });
        }
        let mut out = DMatrix::zeros(x.nrows(), self.d());
        for j in 0..self.d() {
            let (values, _) = self.bases[j].design(x);
            out.set_column(j, &(values * &self.alphas[j]));
        }
        Ok(out)
    }
}

/// Estimates the index space from the fitted field: leading eigenvectors of
/// `Σ v̂(x_i) v̂(x_i)ᵀ`.
pub fn wf_fit_subspace(x: &DataMatrix, m: usize, grid: &CvGrid, t: usize) -> Result<SubspaceEstimate> {
    check_m(m, x.d())?;
    let model = fit_wf(x, grid, t)?;
    subspace_from_model(&model, x, m)
}

pub fn subspace_from_model(model: &VectorFieldModel, x: &DataMatrix, m: usize) -> Result<SubspaceEstimate> {
    check_m(m, x.d())?;
    let v = model.predict_batch(x.as_matrix())?;
    SubspaceEstimate::new(principal_directions(&v, m)?, Method::WfLsngca)
}
