use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible topology: {0}")]
    InfeasibleTopology(String),

    #[error("weight synthesis failed: {0}")]
    SynthesisFailure(String),

    #[error("observations inconsistent with fault set {fault_set:?}: relative residual {residual:e} exceeds {tolerance:e}")]
    DecodeInconsistency {
        fault_set: Vec<usize>,
        residual: f64,
        tolerance: f64,
    },

    #[error("decode failed: {0}")]
    DecodeFailure(String),

    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors that stem from bad input files or arguments rather than from
    /// the run itself.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Parse(_) | Error::Io(_) | Error::InvalidArgument(_)
        )
    }
}
