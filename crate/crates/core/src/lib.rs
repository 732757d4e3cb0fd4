//! Dynamical (twisted) R-matrices for the linear quantum groups `GL_q(N)`,
//! `SL_q(N)` and supergroups `GL_q(K|N−K)`, with brute-force numerical
//! checks of the identities they satisfy.

pub mod coefficients;
pub mod config;
pub mod error;
pub mod momentum;
pub mod report;
pub mod rmatrix;
pub mod suite;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
