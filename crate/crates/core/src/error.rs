use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("arity overflow: {left} + {right} exceeds the supported maximum of 3")]
    ArityOverflow { left: usize, right: usize },

    #[error("index {index} out of range for {len} components")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("degenerate deformation: |q - 1/q| = {0:e} is below 1e-14")]
    DegenerateDeformation(f64),

    #[error("coincident beta parameters at positions {0} and {1}")]
    CoincidentBeta(usize, usize),

    #[error("resonance at pair ({i}, {j}): {reason}")]
    Resonance { i: usize, j: usize, reason: String },

    #[error("base operator fails the Hecke relation (relative residual {0:e})")]
    NotHecke(f64),

    #[error("momentum sampling failed after {0} attempts")]
    SamplingFailed(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
