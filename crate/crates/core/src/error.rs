use thiserror::Error;

/// Errors raised by the simulator and protocol layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("width mismatch: expected {expected} qubits, got {actual}")]
    WidthMismatch { expected: usize, actual: usize },

    #[error("{what} of {requested} exceeds the cap of {cap}")]
    CapExceeded {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("zero-probability branch cannot be renormalized")]
    ZeroProbability,

    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("eigenvalue {0} of an acceptance operator lies outside [0,1]")]
    SpectrumOutOfRange(f64),

    #[error("invalid thresholds: {0}")]
    Thresholds(String),

    #[error("exact value overflow: {bits} bits exceeds the cap of {cap}")]
    ExactOverflow { bits: u64, cap: u64 },

    #[error("invalid instance: {0}")]
    Instance(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing strategy entry for coin string {0}")]
    MissingCoin(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
