use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("analysis window too small: {0}")]
    WindowTooSmall(String),

    #[error("expected {expected} coefficient arrays, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("fiber {node} is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NonHermitianFiber { node: usize, asymmetry: f64 },

    #[error("Gramian rank is not constant over the frequency grid (ranks {min}..={max})")]
    ConditionIIIFails { min: usize, max: usize },

    #[error("dual tail mass {tail:.3e} exceeds cap {cap:.3e}")]
    TailMassExceeded { tail: f64, cap: f64 },

    #[error("translate sum of the generator does not vanish (max {max_abs:.3e})")]
    PreconditionSumNonzero { max_abs: f64 },

    #[error("unknown corpus entry `{0}`")]
    UnknownCorpusEntry(String),

    #[error("bad parameters: {0}")]
    BadParams(String),

    #[error("bad oracle scenario: {0}")]
    BadScenario(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Tags an error with the pipeline stage that produced it.
    pub fn at(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Strips stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
