use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{NgcaError, Result};
use crate::numerics::orthonormality_defect;

const ORTHONORMAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mipp,
    Lsngca,
    WfLsngca,
    Pca,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Mipp, Method::Lsngca, Method::WfLsngca, Method::Pca];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mipp => "mipp",
            Method::Lsngca => "lsngca",
            Method::WfLsngca => "wf_lsngca",
            Method::Pca => "pca",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = NgcaError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| NgcaError::InvalidParameter(format!("unknown method '{s}'")))
    }
}

/// Orthonormal `d × m` basis of an estimated non-Gaussian index space.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceEstimate {
    basis: DMatrix<f64>,
    method: Method,
}

impl SubspaceEstimate {
    pub fn new(basis: DMatrix<f64>, method: Method) -> Result<Self> {
        let defect = orthonormality_defect(&basis);
        if !(defect <= 1e-10) {
            return Err(NgcaError::NotOrthonormal(defect));
        }
        Ok(SubspaceEstimate { basis, method })
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn d(&self) -> usize {
        self.basis.nrows()
    }

    pub fn m(&self) -> usize {
        self.basis.ncols()
    }

    /// Projects every row of `x` onto the basis: `x · basis`.
    pub fn project(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.d() {
            return Err(NgcaError::DimensionMismatch {
                expected: self.d(),
                got: x.ncols(),
            });
        }
        Ok(x * &self.basis)
    }
}

/// Mean squared residual of the estimated basis vectors after orthogonal
/// projection onto the true span: `(1/m) Σ ‖ê_i - Π ê_i‖²`, in `[0, 1]`.
pub fn subspace_error(truth: &DMatrix<f64>, estimate: &DMatrix<f64>) -> Result<f64> {
    if truth.nrows() != estimate.nrows() {
        return Err(NgcaError::DimensionMismatch {
            expected: truth.nrows(),
            got: estimate.nrows(),
        });
    }
    for b in [truth, estimate] {
        if b.ncols() == 0 {
            return Err(NgcaError::InvalidParameter("empty basis".into()));
        }
        let defect = orthonormality_defect(b);
        if !(defect <= ORTHONORMAL_TOL) {
            return Err(NgcaError::NotOrthonormal(defect));
        }
    }
    let coords = truth.transpose() * estimate;
    let projected = truth * coords;
    let residual = estimate - projected;
    let total: f64 = residual.column_iter().map(|c| c.norm_squared()).sum();
    Ok((total / estimate.ncols() as f64).clamp(0.0, 1.0))
}
