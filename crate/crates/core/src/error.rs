use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix dimension {dim} exceeds the supported maximum of {max}")]
    DimensionOverflow { dim: usize, max: usize },

    #[error("hermitian part has near-zero trace ({trace:e}); cannot normalize")]
    DegenerateTrace { trace: f64 },

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitIndexOutOfRange { index: usize, n_qubits: usize },

    #[error("invalid qubit pair ({0}, {1})")]
    InvalidPair(usize, usize),

    #[error("unsupported qubit count {0}")]
    UnsupportedQubitCount(usize),

    #[error("malformed pairing scheme: {0}")]
    InvalidScheme(String),

    #[error("invalid control parameters: {0}")]
    InvalidParameters(String),

    #[error("singular normal matrix in Levenberg-Marquardt step")]
    SingularNormalMatrix,

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
