use thiserror::Error;

/// Failures reported by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("newton iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("branch ambiguity while extracting roots at step {step}")]
    BranchAmbiguity { step: usize },

    #[error("no sign change of the critical-orbit polynomial in the bracket (n = {n})")]
    NoBracket { n: usize },

    #[error("orbit escaped before reaching the linearization disk")]
    OrbitEscaped,

    #[error("least-squares fit is ill-conditioned: {0}")]
    IllConditioned(String),

    #[error("cusp encountered (petal coefficient {0:e})")]
    Cusp(f64),

    #[error("iteration depth exceeded: {0}")]
    DepthExceeded(String),

    #[error("numeric overflow: {0}")]
    Overflow(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
