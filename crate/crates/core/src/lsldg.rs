//! Least-squares log-density-gradient estimation.
//!
//! Each partial `∂_j ln p` is modelled as `g_j(x) = θ_jᵀ ψ_j(x)` over a
//! Gaussian-derivative basis. Integration by parts turns the squared error
//! into `E[g_j² + 2 ∂_j g_j]`, whose regularized empirical version has the
//! closed-form minimizer `θ_j = -(G_j + λ_j I)^{-1} h_j`. Bandwidth and
//! regularizer are chosen per dimension by k-fold cross-validation.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::cv::{search_dimension, solve_ridge, CvGrid, CvReport, FoldPlan};
use crate::error::{NgcaError, Result};
use crate::numerics::{squared_distances, DataMatrix, GaussianDerivBasis};
use crate::rng::{self, stream};

/// Fitted estimate of `∇ ln p`.
#[derive(Debug, Clone)]
pub struct GradientModel {
    bases: Vec<GaussianDerivBasis>,
    thetas: Vec<DVector<f64>>,
    lambdas: Vec<f64>,
    report: Option<CvReport>,
}

/// Empirical `G = (1/n) Σ ψ(x_i)ψ(x_i)ᵀ` and `h = (1/n) Σ ∂_j ψ(x_i)`.
pub fn assemble_g_h(x: &DMatrix<f64>, basis: &GaussianDerivBasis) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if x.ncols() != basis.dim() {
        return Err(NgcaError::DimensionMismatch {
            expected: basis.dim(),
            got: x.ncols(),
        });
    }
    if x.nrows() == 0 {
        return Err(NgcaError::InvalidData("no samples".into()));
    }
    let n = x.nrows() as f64;
    let (values, partials) = basis.design(x);
    let g = values.transpose() * &values / n;
    let h = partials.row_sum().transpose() / n;
    Ok((g, h))
}

/// `θ = -(G + λI)^{-1} h`.
pub fn solve_theta(g: &DMatrix<f64>, h: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    solve_ridge(g, h, lambda)
}

/// `(1/n) Σ [g_j(x_i)² + 2 ∂_j g_j(x_i)]` on held-out samples.
pub fn lsldg_holdout_loss(basis: &GaussianDerivBasis, theta: &DVector<f64>, x_val: &DMatrix<f64>) -> Result<f64> {
    if x_val.nrows() == 0 {
        return Err(NgcaError::EmptyValidationSet);
    }
    if x_val.ncols() != basis.dim() || theta.len() != basis.len() {
        return Err(NgcaError::DimensionMismatch {
            expected: basis.dim(),
            got: x_val.ncols(),
        });
    }
    let (values, partials) = basis.design(x_val);
    let g = values * theta;
    let dg = partials * theta;
    let total: f64 = g.iter().zip(dg.iter()).map(|(g, dg)| g * g + 2.0 * dg).sum();
    Ok(total / x_val.nrows() as f64)
}

/// Cross-validates `(σ, λ)` for every dimension over shared `centers`.
pub fn lsldg_cv(x: &DataMatrix, centers: &DMatrix<f64>, grid: &CvGrid) -> Result<CvReport> {
    cv_with_stream(x, centers, grid, stream::FOLDS)
}

fn cv_with_stream(x: &DataMatrix, centers: &DMatrix<f64>, grid: &CvGrid, fold_stream: u64) -> Result<CvReport> {
    if centers.ncols() != x.d() {
        return Err(NgcaError::DimensionMismatch {
            expected: x.d(),
            got: centers.ncols(),
        });
    }
    let (sigmas, lambdas) = grid.normalized()?;
    let plan = FoldPlan::new(x.n(), grid.fold_count, grid.seed, fold_stream)?;
    let xs = x.as_matrix().select_rows(&plan.order);
    let sq = squared_distances(&xs, centers);
    let dimensions = (0..x.d())
        .into_par_iter()
        .map(|j| search_dimension(&xs, centers, &sq, &sigmas, &lambdas, &plan, j, None))
        .collect();
    Ok(CvReport { dimensions })
}

/// Picks `b` distinct sample rows as basis centers.
pub(crate) fn sample_centers(x: &DataMatrix, b: usize, seed: u64, stream: u64) -> Result<DMatrix<f64>> {
    if b == 0 || b > x.n() {
        return Err(NgcaError::InvalidParameter(format!(
            "number of basis functions {b} must be in 1..={}",
            x.n()
        )));
    }
    let mut rng = rng::seeded(seed, stream);
    let idx = rand::seq::index::sample(&mut rng, x.n(), b).into_vec();
    Ok(x.as_matrix().select_rows(&idx))
}

/// Full LSLDG fit: sample `b` centers, cross-validate per dimension, then
/// solve on all samples with the selected hyperparameters.
pub fn fit_lsldg(x: &DataMatrix, grid: &CvGrid, b: usize) -> Result<GradientModel> {
    let centers = sample_centers(x, b, grid.seed, stream::CENTERS)?;
    let report = lsldg_cv(x, &centers, grid)?;
    let fitted: Vec<(GaussianDerivBasis, DVector<f64>)> = report
        .dimensions
        .par_iter()
        .enumerate()
        .map(|(j, dim)| {
            let basis = GaussianDerivBasis::new(centers.clone(), dim.sigma, j)?;
            let (g, h) = assemble_g_h(x.as_matrix(), &basis)?;
            let theta = solve_theta(&g, &h, dim.lambda)?;
            Ok((basis, theta))
        })
        .collect::<Result<_>>()?;
    let lambdas = report.dimensions.iter().map(|d| d.lambda).collect();
    let (bases, thetas) = fitted.into_iter().unzip();
    Ok(GradientModel {
        bases,
        thetas,
        lambdas,
        report: Some(report),
    })
}

impl GradientModel {
    /// Assembles a model from explicit per-dimension bases and coefficients.
    pub fn from_parts(bases: Vec<GaussianDerivBasis>, thetas: Vec<DVector<f64>>, lambdas: Vec<f64>) -> Result<Self> {
        let d = bases.len();
        if d == 0 || thetas.len() != d || lambdas.len() != d {
            return Err(NgcaError::InvalidParameter(
                "one basis, coefficient vector and regularizer per dimension".into(),
            ));
        }
        for (j, (basis, theta)) in bases.iter().zip(&thetas).enumerate() {
            if basis.dim() != d || basis.deriv_index() != j || theta.len() != basis.len() {
                return Err(NgcaError::InvalidParameter(format!(
                    "inconsistent basis for dimension {j}"
                )));
            }
            if theta.iter().any(|v| !v.is_finite()) {
                return Err(NgcaError::InvalidParameter("non-finite coefficient".into()));
            }
        }
        Ok(GradientModel {
            bases,
            thetas,
            lambdas,
            report: None,
        })
    }

    pub fn d(&self) -> usize {
        self.bases.len()
    }

    pub fn bases(&self) -> &[GaussianDerivBasis] {
        &self.bases
    }

    pub fn thetas(&self) -> &[DVector<f64>] {
        &self.thetas
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn report(&self) -> Option<&CvReport> {
        self.report.as_ref()
    }

    /// `ĝ(x)`; component `j` is `θ_jᵀ ψ_j(x)`.
    pub fn predict_gradient(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.d(), |j, _| self.thetas[j].dot(&self.bases[j].eval(x)))
    }

    /// Jacobian of `ĝ` at `x`; row `j` is `∇_x ĝ_j(x)`.
    pub fn predict_gradient_jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.d();
        let mut jac = DMatrix::zeros(d, d);
        for j in 0..d {
            let row = self.bases[j].gradient(x).transpose() * &self.thetas[j];
            jac.set_row(j, &row.transpose());
        }
        jac
    }

    /// `ĝ` at every row of `x`, as an `n × d` matrix.
    pub fn predict_batch(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        let mut out = DMatrix::zeros(x.nrows(), self.d());
        for j in 0..self.d() {
            let (values, _) = self.bases[j].design(x);
            out.set_column(j, &(values * &self.thetas[j]));
        }
        Ok(out)
    }

    /// Entry `(i, j)` is `(∇_x ĝ_j(x_i))ᵀ x_i`, the plug-in term of the
    /// whitening-free objective.
    ///
    /// Uses `Σ_l ∂_l ψ_kj(x) x_l = K_k(x) [u_j s_k / σ⁴ - x_j / σ²]` with
    /// `u = x - c_k` and `s_k = uᵀx`.
    pub fn jacobian_dot_x(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        let (n, d) = x.shape();
        let mut out = DMatrix::zeros(n, d);
        for j in 0..d {
            let basis = &self.bases[j];
            let centers = basis.centers();
            let s2 = basis.bandwidth() * basis.bandwidth();
            let theta = &self.thetas[j];
            for i in 0..n {
                let mut acc = 0.0;
                for k in 0..basis.len() {
                    let mut sq = 0.0;
                    let mut s = 0.0;
                    for l in 0..d {
                        let u = x[(i, l)] - centers[(k, l)];
                        sq += u * u;
                        s += u * x[(i, l)];
                    }
                    let kern = (-sq / (2.0 * s2)).exp();
                    let uj = x[(i, j)] - centers[(k, j)];
                    acc += theta[k] * kern * (uj * s / (s2 * s2) - x[(i, j)] / s2);
                }
                out[(i, j)] = acc;
            }
        }
        Ok(out)
    }

    fn check_dim(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.ncols() != self.d() {
            return Err(NgcaError::DimensionMismatch {
                expected: self.d(),
                got: x.ncols(),
            });
        }
        Ok(())
    }
}
