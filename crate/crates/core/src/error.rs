use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("dimension {0} is not a power of 3")]
    NotPowerOfThree(usize),

    #[error("expected {expected} entries, got {got}")]
    EntryCount { expected: usize, got: usize },

    #[error("matrix is zero")]
    ZeroMatrix,

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("Kraus set is not trace preserving (deviation {0:.3e})")]
    NotTracePreserving(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("probability of outcome {index} is negative ({value:.3e})")]
    NegativeProbability { index: usize, value: f64 },

    #[error("shot count must be at least 1")]
    NoShots,

    #[error("group closure produced {got} elements, expected {expected}")]
    GroupOrder { expected: usize, got: usize },

    #[error("matrix is not an element of the group")]
    NotInGroup,

    #[error("matrix does not map the Pauli operator {0} onto a Pauli operator")]
    NotClifford(String),

    #[error("conjugation phase {0} is not a power of omega")]
    NonOmegaPhase(String),

    #[error("Pauli {0} is not diagonal in the requested measurement basis")]
    NotDiagonal(String),

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("invalid channel parameter: {0}")]
    ChannelParameter(String),

    #[error("malformed circuit: {0}")]
    Circuit(String),

    #[error("invalid experiment plan: {0}")]
    Plan(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("degenerate decay data: {0}")]
    DegenerateData(String),

    #[error("missing Pauli channels: {0:?}")]
    MissingChannels(Vec<String>),

    #[error("table file: {0}")]
    TableFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
