//! Open-system engine: density matrices, Lindblad generators, channels and
//! their Kraus forms, adiabatic elimination, and kicked or effective
//! evolution.

mod channels;
mod dynamics;
mod kicked;
mod state;

pub use channels::{
    adiabatic_eliminate, effective_generator, first_order_generator, kraus_from_map, subspace_relaxer, KrausSet,
};
pub use dynamics::{
    dissipator, evolve_continuous, generator, limit_channel, steady_states, SteadyStates, Superoperator,
    SuperoperatorKind,
};
pub(crate) use kicked::csv_error;
pub use kicked::{evolve_effective, evolve_kicked, Coherent, EvolutionConfig, KickOrder, Trajectory};
pub use state::{DensityMatrix, StateCheck};

/// Hermiticity tolerance of a valid state.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Trace tolerance of a freshly constructed state.
pub const TRACE_TOL: f64 = 1e-12;
/// Trace tolerance after evolution.
pub const EVOLVED_TRACE_TOL: f64 = 1e-10;
/// Eigenvalues above `-POSITIVITY_TOL` count as non-negative.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Completeness tolerance of a Kraus set.
pub const KRAUS_TOL: f64 = 1e-10;
