use thiserror::Error;

pub type Result<T> = std::result::Result<T, AmpError>;

#[derive(Debug, Error)]
pub enum AmpError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("term set is not permutation symmetric: {0}")]
    NotSymmetric(String),

    #[error("eigensolver did not converge at s = {s}: {detail}")]
    EigenNotConverged { s: f64, detail: String },

    #[error("no crossing of the well energies in kappa bracket [{lo}, {hi}] (false-well minus true-well: {diff_lo:.6e} .. {diff_hi:.6e})")]
    NoCrossing {
        lo: f64,
        hi: f64,
        diff_lo: f64,
        diff_hi: f64,
    },

    #[error("degenerate energy denominator U_{n}")]
    DegenerateDenominator { n: usize },

    #[error("norm drift {drift:.3e} exceeds tolerance {tol:.1e} after {steps} steps")]
    NormDrift { drift: f64, tol: f64, steps: usize },

    #[error("draw {draw} (seed {seed:#018x}): {source}")]
    Draw {
        draw: usize,
        seed: u64,
        #[source]
        source: Box<AmpError>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> AmpError {
    AmpError::InvalidInput(msg.into())
}
