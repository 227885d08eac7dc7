use thiserror::Error;

/// Errors raised by the verification pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("malformed linear program: {0}")]
    MalformedProblem(String),
    /// The simplex could not settle on a consistent basis. Callers may retry
    /// with perturbed constraints.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("combinatorial blowup: {count} undetermined neurons exceed the cap of {cap}")]
    CombinatorialBlowup { count: usize, cap: usize },
    #[error("polyhedron is empty")]
    InfeasiblePolyhedron,
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { name: String, position: usize },
    #[error("variable x{index} is out of range for dimension {dim}")]
    VariableOutOfRange { index: usize, dim: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no sign change of the certificate found after {attempts} attempts")]
    SearchExhausted { attempts: usize },
    #[error("brute-force oracle needs 2^{neurons} indicators, cap is 2^{cap}")]
    OracleTooLarge { neurons: usize, cap: usize },
    #[error("no valid linear regions to check")]
    NoRegions,
    #[error("no member of the {set} set found in {samples} samples")]
    SamplerExhausted { set: String, samples: usize },
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
}

pub type Result<T> = std::result::Result<T, Error>;
