//! Non-Gaussian component analysis.
//!
//! Estimators for the linear subspace that carries the non-Gaussian part of a
//! distribution otherwise made of Gaussian noise:
//!
//! * [`wf`]: whitening-free least-squares NGCA, which works on
//!   element-wise standardized data and never inverts the covariance;
//! * [`lsngca`]: least-squares NGCA on whitened data;
//! * [`mipp`]: multi-index projection pursuit with FastICA-refined index
//!   functions;
//! * [`harness::pca_baseline`] for reference.
//!
//! [`lsldg`] provides the log-density-gradient estimator shared by the two
//! least-squares methods, [`data`] the synthetic and LIBSVM data sources, and
//! [`harness`] the experiment sweeps and file outputs.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cv;
pub mod data;
pub mod error;
pub mod harness;
pub mod io;
pub mod lsldg;
pub mod lsngca;
pub mod mipp;
pub mod numerics;
pub mod plot;
pub mod rng;
pub mod subspace;
pub mod wf;

pub use cv::{CvGrid, CvReport, DimensionReport};
pub use error::{NgcaError, Result};
pub use lsldg::GradientModel;
pub use numerics::{DataMatrix, GaussianDerivBasis, Whitener};
pub use subspace::{subspace_error, Method, SubspaceEstimate};
