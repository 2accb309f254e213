use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument {value} is outside the domain of {function}")]
    Domain { function: &'static str, value: f64 },

    #[error("{function} overflows for argument {argument}")]
    Overflow {
        function: &'static str,
        argument: u64,
    },

    #[error("binomial coefficient C({n}, {k}) is outside the exact window 0 <= k <= n <= 62")]
    BinomialRange { n: u32, k: u32 },

    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("invalid link budget: {0}")]
    Budget(String),

    #[error("link budget has {budget_hops} hops but topology needs {topology_hops}")]
    DimensionMismatch {
        topology_hops: usize,
        budget_hops: usize,
    },

    #[error("unknown modulation '{0}'")]
    UnknownModulation(String),

    #[error("invalid order for {name}: {reason}")]
    InvalidOrder { name: String, reason: String },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("total relay count {total} exceeds the expanded-sum window of {limit}")]
    CancellationWindow { total: u32, limit: u32 },

    #[error("density evaluated to {value:e} at x = {x}, below the cancellation floor")]
    NegativeDensity { x: f64, value: f64 },

    #[error("moment order z = {z} outside 1..={max}")]
    MomentOrder { z: u32, max: u32 },

    #[error("quadrature did not converge after {subdivisions} subdivisions (estimate {estimate:e}, error {error:e})")]
    NonConvergence {
        subdivisions: usize,
        estimate: f64,
        error: f64,
    },

    #[error("invalid simulation config: {0}")]
    SimulationConfig(String),

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { key: String, line: usize },

    #[error("duplicate key '{key}' on lines {first} and {second}")]
    DuplicateKey {
        key: String,
        first: usize,
        second: usize,
    },

    #[error("{key}: {message}")]
    Semantic { key: String, message: String },

    #[error("unknown figure '{0}' (expected ergodic, outage, ser or snr_gain)")]
    UnknownFigure(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
