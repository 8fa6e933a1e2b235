//! Least-squares NGCA on whitened data.
//!
//! For whitened `y`, `u(y) = ∇ ln p(y) + y` lies in the whitened index space.
//! The leading eigenvectors of `Σ u uᵀ` span it, and `Σ^{-1/2}` maps that
//! span back to the (standardized) input coordinates.

use nalgebra::DMatrix;

use crate::cv::CvGrid;
use crate::error::{NgcaError, Result};
use crate::lsldg::{fit_lsldg, GradientModel};
use crate::numerics::{
    build_whitener, orthonormalize, standardize, symmetric_eig_topm, symmetrize, whiten, DataMatrix,
    DEFAULT_MIN_EIGENVALUE,
};
use crate::subspace::{Method, SubspaceEstimate};

/// Row `i` is `ĝ(y_i) + y_i`.
pub fn compute_u(y: &DataMatrix, g: &GradientModel) -> Result<DMatrix<f64>> {
    if y.d() != g.d() {
        return Err(NgcaError::DimensionMismatch {
            expected: g.d(),
            got: y.d(),
        });
    }
    Ok(g.predict_batch(y.as_matrix())? + y.as_matrix())
}

/// Leading `m` eigenvectors of `Σ_i r_i r_iᵀ` for the rows `r_i` of `rows`.
pub(crate) fn principal_directions(rows: &DMatrix<f64>, m: usize) -> Result<DMatrix<f64>> {
    let mut scatter = rows.transpose() * rows;
    symmetrize(&mut scatter);
    let (_, vectors) = symmetric_eig_topm(&scatter, m)?;
    Ok(vectors)
}

/// Standardize, whiten, fit LSLDG on the whitened samples, eigendecompose
/// `Σ u uᵀ`, then map the leading eigenvectors through `Σ^{-1/2}` and
/// re-orthonormalize.
pub fn lsngca_fit(x: &DataMatrix, m: usize, grid: &CvGrid, b: usize) -> Result<SubspaceEstimate> {
    lsngca_fit_with_floor(x, m, grid, b, DEFAULT_MIN_EIGENVALUE)
}

pub fn lsngca_fit_with_floor(
    x: &DataMatrix,
    m: usize,
    grid: &CvGrid,
    b: usize,
    min_eigenvalue: f64,
) -> Result<SubspaceEstimate> {
    check_m(m, x.d())?;
    let (z, _, _) = standardize(x)?;
    let whitener = build_whitener(&z, min_eigenvalue)?;
    let y = whiten(&whitener, &z)?;
    let model = fit_lsldg(&y, grid, b)?;
    let u = compute_u(&y, &model)?;
    let directions = principal_directions(&u, m)?;
    let mapped = &whitener.inv_sqrt_cov * directions;
    SubspaceEstimate::new(orthonormalize(&mapped)?, Method::Lsngca)
}

pub(crate) fn check_m(m: usize, d: usize) -> Result<()> {
    if m == 0 || m > d {
        return Err(NgcaError::InvalidParameter(format!(
            "subspace dimension must be in 1..={d}, got {m}"
        )));
    }
    Ok(())
}
