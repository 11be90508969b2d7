use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit {qubit} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("control qubit {0} is also the target")]
    ControlIsTarget(usize),

    #[error("parameter vector has {params} entries but the circuit has {gates} gates")]
    LengthMismatch { params: usize, gates: usize },

    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("duplicate basis label {0}")]
    DuplicateBasisLabel(usize),

    #[error("basis label {label} does not fit in {n_qubits} qubits")]
    LabelOutOfRange { label: usize, n_qubits: usize },

    #[error("unknown gate library `{0}`")]
    UnknownLibrary(String),

    #[error("cannot draw from an empty move set")]
    EmptyMoveSet,

    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("regularised linear solve failed")]
    LinearSolve,

    #[error("global phase undefined: Tr(C^dagger U) vanishes")]
    UndefinedPhase,

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
