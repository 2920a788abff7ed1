use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("direction {dir:?} is not commensurate with the lattice {lattice:?}")]
    NotInLattice { dir: Vec<f64>, lattice: Vec<f64> },

    #[error("incompatible stack components: {0}")]
    IncompatibleStack(String),

    #[error("solution left the admissible band at t = {t} (value {value})")]
    Divergence { t: f64, value: f64 },

    #[error("boundary contamination at t = {t}: deviation {deviation:e} on the {side} boundary")]
    BoundaryContamination { t: f64, side: &'static str, deviation: f64 },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("snapshot cadence error: {0}")]
    Cadence(String),

    #[error("decay fit window rejected: {0}")]
    DecayWindow(String),

    #[error("power iteration did not converge after {0} iterations")]
    EigenNotConverged(usize),

    #[error("eigenvector lost positivity (min component {0:e})")]
    EigenvectorSign(f64),

    #[error("design failed: {0}")]
    Design(String),

    #[error("undefined direction: no sample has positive projection on {0:?}")]
    UndefinedDirection(Vec<f64>),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 configuration, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) | Error::NotInLattice { .. } => 2,
            Error::IncompatibleStack(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }

    /// Short machine-readable tag used in error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NotInLattice { .. } => "not_in_lattice",
            Error::IncompatibleStack(_) => "incompatible_stack",
            Error::Divergence { .. } => "divergence",
            Error::BoundaryContamination { .. } => "boundary_contamination",
            Error::InsufficientSamples(_) => "insufficient_samples",
            Error::Cadence(_) => "cadence",
            Error::DecayWindow(_) => "decay_window",
            Error::EigenNotConverged(_) => "eigen_not_converged",
            Error::EigenvectorSign(_) => "eigenvector_sign",
            Error::Design(_) => "design",
            Error::UndefinedDirection(_) => "undefined_direction",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}
