use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },

    #[error("mode count mismatch: operator has {operator} modes, encoding expects {encoding}")]
    ModeMismatch { operator: usize, encoding: usize },

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("mode index {index} out of range for {n_modes} modes")]
    ModeOutOfRange { index: usize, n_modes: usize },

    #[error("{what} on {n_qubits} qubits exceeds the limit of {limit}")]
    SizeLimit {
        what: &'static str,
        n_qubits: usize,
        limit: usize,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("integral symmetry violated: {0}")]
    Symmetry(String),

    #[error("invalid active space: {0}")]
    ActiveSpace(String),

    #[error("invalid encoding request: {0}")]
    Encoding(String),

    #[error("invalid ansatz request: {0}")]
    Ansatz(String),

    #[error("parameter vector has length {got}, expected {expected}")]
    ParameterLength { expected: usize, got: usize },

    #[error("invalid noise channel: {0}")]
    Noise(String),

    #[error("observable is not Hermitian (max imaginary coefficient {0:e})")]
    NonHermitian(f64),

    #[error("non-finite energy at evaluation {0}")]
    NonFinite(usize),

    #[error("particle-number sector with {0} electrons is empty")]
    EmptySector(usize),

    #[error("{0}")]
    InvalidRequest(String),

    #[error("config: {0}")]
    Config(String),

    #[error("point {label}: {source}")]
    Point {
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 for configuration and input
    /// problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::Symmetry(_)
            | Error::ActiveSpace(_)
            | Error::Encoding(_)
            | Error::Ansatz(_)
            | Error::ParameterLength { .. }
            | Error::Noise(_)
            | Error::InvalidRequest(_)
            | Error::Config(_)
            | Error::Io { .. }
            | Error::Csv(_)
            | Error::ModeMismatch { .. }
            | Error::ModeOutOfRange { .. }
            | Error::QubitMismatch { .. }
            | Error::QubitOutOfRange { .. } => 2,
            Error::SizeLimit { .. }
            | Error::NonHermitian(_)
            | Error::NonFinite(_)
            | Error::EmptySector(_) => 3,
            Error::Point { source, .. } => source.exit_code(),
        }
    }
}
