use thiserror::Error;

/// Errors raised by the simulation core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("bands are not cleanly separated: {0}")]
    BandSeparation(String),

    #[error("degenerate Wannier centers in band {band}: {detail}")]
    DegenerateCenters { band: usize, detail: String },

    #[error("Fock space dimension {dimension} exceeds the cap {cap}")]
    DimensionCap { dimension: u128, cap: usize },

    #[error("degenerate ground state: E0 = {e0}, E1 = {e1}")]
    DegenerateGroundState { e0: f64, e1: f64 },

    #[error("eigensolver did not converge: {0}")]
    EigenSolver(String),

    #[error("Krylov propagation failed to converge after {halvings} step halvings (error {error:e})")]
    KrylovConvergence { halvings: usize, error: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("time step check failed: {0}; try dt = {1}")]
    StepSize(String, f64),

    #[error("relaxation did not converge within {steps} steps (last energy change {delta:e})")]
    Relaxation { steps: usize, delta: f64 },

    #[error("series too short: {len} samples, at least {min} required")]
    SeriesTooShort { len: usize, min: usize },

    #[error("vanishing density in window [{0}, {1}]")]
    EmptyWindow(f64, f64),

    #[error("no spectral peak: {0}")]
    NoPeak(String),

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
