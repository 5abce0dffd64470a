use thiserror::Error;

use crate::scenario::Diagnostic;

#[derive(Debug, Error)]
pub enum Error {
    #[error("algebra mismatch: {0}")]
    AlgebraMismatch(String),

    #[error("cut-locus: log is undefined at an element antipodal to the identity")]
    CutLocus,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("pairing {pairing} is not defined on {left} x {right}")]
    PairingMismatch {
        pairing: &'static str,
        left: String,
        right: String,
    },

    #[error("wrong form type: {0}")]
    FormType(String),

    #[error("holonomy not in a common maximal torus")]
    NonToral,

    #[error("holonomy elements do not commute (residual {0:.3e})")]
    NonCommuting(f64),

    #[error("twisting mismatch: boundary residual {residual:.3e} exceeds {tolerance:.1e}")]
    Twisting { residual: f64, tolerance: f64 },

    #[error("pick another regular value: {0}")]
    NotRegular(String),

    /// Carries the final iterate as raw optimizer coefficients.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        iterate: Vec<f64>,
    },

    #[error("unknown identity {0:?}")]
    UnknownIdentity(String),

    #[error("{0}")]
    Parse(Diagnostic),

    #[error("scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
