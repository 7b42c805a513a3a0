use thiserror::Error;

/// Errors raised by the traffic models and their drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrafficError {
    /// An argument lies outside the domain of a closure or operation.
    #[error("domain error: {what} = {value} is outside the admissible range")]
    Domain { what: &'static str, value: f64 },

    /// A scenario or parameter set is malformed or inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("CFL condition violated: ratio {ratio} > 1")]
    Cfl { ratio: f64 },

    /// The requested initial placement cannot be realised.
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("vehicle ordering violated at step {step}, vehicle {index}: gap {gap}")]
    OrderingViolation { step: usize, index: usize, gap: f64 },

    #[error("invariant violated at step {step}, particle {index}: {what}")]
    InvariantViolation {
        step: usize,
        index: usize,
        what: String,
    },

    #[error("solver failure in cell {cell}: {what} = {value}")]
    SolverFailure {
        cell: usize,
        what: &'static str,
        value: f64,
    },

    /// A chaos expansion reconstructed an inadmissible value at a quadrature node.
    #[error("{what} at quadrature node {node}, index {index}: {value}")]
    NodeFailure {
        index: usize,
        node: usize,
        what: &'static str,
        value: f64,
    },

    #[error("density {rho} in cell {cell} too small to recover the headway")]
    DivisionGuard { cell: usize, rho: f64 },

    /// A single Monte Carlo sample run failed; `y` is the sampled accident half-width.
    #[error("sample {sample} (y = {y}) failed: {source}")]
    Sample {
        sample: usize,
        y: f64,
        #[source]
        source: Box<TrafficError>,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl TrafficError {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        match self {
            TrafficError::OrderingViolation { .. }
            | TrafficError::InvariantViolation { .. }
            | TrafficError::SolverFailure { .. }
            | TrafficError::DivisionGuard { .. }
            | TrafficError::NodeFailure { .. } => true,
            TrafficError::Sample { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

impl From<std::io::Error> for TrafficError {
    fn from(e: std::io::Error) -> Self {
        TrafficError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, TrafficError>;
