use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point is outside the kernel's index domain: {0}")]
    DomainError(String),
    #[error("unsupported kernel composition: {0}")]
    UnsupportedComposition(String),
    #[error("desmoothing (difference) kernel matrix cannot be row-normalized")]
    DesmoothingInput,
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("empty neighborhood: all kernel weights vanish at query {index}")]
    EmptyNeighborhood { index: usize },
    #[error("linear system is singular")]
    SingularSystem,
    #[error("inference denominator is zero")]
    ZeroDenominator,
    #[error("rank deficient: need {needed} independent weighted points, found {found}")]
    RankDeficient { needed: usize, found: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("kernel cannot be sampled from: {0}")]
    UnsampleableKernel(String),
    #[error("invalid diffusion schedule: {0}")]
    InvalidSchedule(String),
    #[error("eigen decomposition failed")]
    EigenFailure,
    #[error("NMF requires a non-negative matrix")]
    NegativeInputForNmf,
    #[error("corpus contains no co-occurrences")]
    EmptyCorpus,
    #[error("loss became non-finite at step {step}")]
    NonFiniteLoss { step: usize, trace: Vec<f64> },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }
}
