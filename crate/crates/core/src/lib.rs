//! S-estimates of linear regression whose starting candidates come from
//! nonsingular subsampling: an incremental (Gaxpy-ordered) LU factorization
//! that drops collinear observations one at a time instead of discarding the
//! whole subsample.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: dense matrices, PLU with partial pivoting, equilibration.
//! - [`rho`]: the Tukey bisquare ρ/ψ/weight family.
//! - [`scale`]: M-estimate of scale.
//! - [`irls`]: simultaneous M-estimation of regression and scale by reweighting.
//! - [`subsample`]: nonsingular, rejection and exhaustive subsample generation.
//! - [`sfit`]: the S-estimator driver.
//! - [`model`]: CSV data frames, formulas, treatment-contrast design matrices
//!   and synthetic data.

pub mod error;
pub mod irls;
pub mod linalg;
pub mod model;
pub mod rho;
pub mod scale;
pub mod sfit;
pub mod subsample;

pub use error::{Error, Result};
pub use irls::{refine, Candidate, IrlsConfig};
pub use linalg::{equilibrate, plu_decompose, solve_plu, Equilibration, Matrix, PluFactors};
pub use rho::Bisquare;
pub use scale::{mscale, ScaleProblem};
pub use sfit::{fit, fit_exhaustive, FitConfig, Method, SFit};
pub use subsample::{
    enumerate_subsamples, nonsingular_subsample, rejection_subsample, required_subsamples,
    RngStream, SubsampleResult, SubsampleStatus,
};
