use thiserror::Error;

/// Errors shared across the oracle, graph, engine and scenario layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("state is not normalizable (norm {norm})")]
    NonNormalizable { norm: f64 },
    #[error("qubit count {0} out of supported range 1..=12")]
    QubitCountOutOfRange(usize),
    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitIndexOutOfRange { index: usize, num_qubits: usize },
    #[error("matrix is not unitary (max deviation {deviation})")]
    NonUnitary { deviation: f64 },
    #[error("matrix is not hermitian (max deviation {deviation})")]
    NonHermitian { deviation: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },
    #[error("trace deviates from one by {deviation}")]
    TraceNotOne { deviation: f64 },
    #[error("basis is not orthonormal (max deviation {deviation})")]
    NonOrthonormalBasis { deviation: f64 },
    #[error("observables do not commute: {0} and {1}")]
    NonCommutingObservables(String, String),
    #[error("context product is {got}*I, declared parity {declared}")]
    ContextParityMismatch { got: String, declared: i8 },
    #[error("empty subsystem selection")]
    EmptySubsystem,
    #[error("cycle detected in causal graph involving node {0}")]
    CycleDetected(String),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("unknown edge {0}")]
    UnknownEdge(String),
    #[error("graph validation failed: {0}")]
    InvalidGraph(String),
    #[error("unknown scenario {0}")]
    UnknownScenario(String),
    #[error("unknown model {0}")]
    UnknownModel(String),
    #[error("invalid scenario parameters: {0}")]
    InvalidParams(String),
    #[error("carrier {0} has no total fluid to sample from")]
    DegenerateCarrier(String),
    #[error("carriers {0} and {1} share no records and are not declared independent")]
    UnresolvedCorrelation(String, String),
    #[error("graph has no initial node; inflation models require one")]
    MissingInitialNode,
    #[error("model {model} cannot run on scenario {scenario}: {reason}")]
    UnsupportedScenario {
        model: String,
        scenario: String,
        reason: String,
    },
    #[error("channel map is missing source label {0}")]
    IncompleteChannelMap(String),
    #[error("serialization failed: {0}")]
    Serialization(#[from] serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
