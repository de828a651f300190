use crate::spin::Spin;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("6j symbol {{{} {} {}; {} {} {}}} exceeds the factorial table (2j_max = {max_twice_j})",
        .spins[0], .spins[1], .spins[2], .spins[3], .spins[4], .spins[5])]
    Capacity { spins: [Spin; 6], max_twice_j: u32 },

    #[error("invalid spin network: {0}")]
    InvalidNetwork(String),

    #[error("node subset is not connected; components: {components:?}")]
    DisconnectedSubset { components: Vec<Vec<usize>> },

    #[error("cannot pair dangling ends: {0}")]
    AmbiguousPairing(String),

    #[error("random labeling failed after {attempts} attempts: {reason}")]
    RetryBudgetExhausted { attempts: usize, reason: String },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("boundary faces without spins: {0:?}")]
    UncoveredFaces(Vec<usize>),

    #[error("invalid foam: {0}")]
    InvalidFoam(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate steady state: {0}")]
    DegenerateSteadyState(String),

    #[error("transition matrix column for in-state {in_state} is identically zero")]
    ZeroColumn { in_state: usize },

    #[error("amplitude for (n = {n}, m = {m}) failed: {source}")]
    Provider {
        n: usize,
        m: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("state invariant violated: {0}")]
    Invariant(String),

    #[error("no steady state found (smallest singular value {0:.3e})")]
    NoSteadyState(f64),

    #[error("map is not completely positive (Choi eigenvalue {0:.3e})")]
    NotCompletelyPositive(f64),

    #[error("channel is not trace preserving (deviation {0:.3e})")]
    NotTracePreserving(f64),

    #[error("subspace is not invariant under the channel (leakage {0:.3e})")]
    NotInvariant(f64),

    #[error("undefined spectral temperature: {0}")]
    UndefinedTemperature(String),

    #[error("invalid Dicke state: {0}")]
    OutsideLadder(String),

    #[error("curve has zero integral")]
    ZeroIntegral,

    #[error("zero-norm amplitude vector")]
    ZeroNorm,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
