use thiserror::Error;

/// Errors raised by matrix, state, witness and protocol operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not unitary (max |U^dagger U - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("trace pairing has imaginary part {imag:e}")]
    ComplexTrace { imag: f64 },

    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("witness constant must be nonnegative, got {0}")]
    NegativeConstant(f64),

    #[error("witness needs at least one factor")]
    NoFactors,

    #[error("factor {index} is not Hermitian (max asymmetry {asymmetry:e})")]
    FactorNotHermitian { index: usize, asymmetry: f64 },

    #[error("factor {index} is not positive (smallest eigenvalue {min_eigenvalue:e})")]
    FactorNotPositive { index: usize, min_eigenvalue: f64 },

    #[error("factor {index} has dimension {actual}, expected {expected}")]
    FactorDimension {
        index: usize,
        expected: usize,
        actual: usize,
    },

    #[error("trace pairing with factor {index} is negative ({value:e})")]
    NegativePairing { index: usize, value: f64 },

    #[error("dimension {0} is not a power of two")]
    NotQubits(usize),

    #[error("qubit index {qubit} out of range for {n_qubits} qubits")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("cannot parse {what}: {detail}")]
    Parse { what: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
