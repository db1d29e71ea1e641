//! Integrable boundary conditions for constant-mean-curvature surfaces:
//! Laurent-matrix algebra, K-matrices, K-symmetric potentials, spectral curves
//! and a loop-group frame pipeline.

pub mod circle;
pub mod error;
pub mod exact;
pub mod frame;
pub mod kmatrix;
pub mod laurent;
pub mod potentials;
pub mod spectral;

pub use error::{Error, Result};
