//! Transition amplitudes and the damping rates built from them.

mod assemble;
mod asymptotic;
mod boundary;
mod foam;
mod matrices;
mod ponzano_regge;

pub use assemble::{
    transition_matrix, write_kappa_csv, write_transition_csv, AmplitudeProvider, FactorizedProvider, PrProvider,
};
pub use asymptotic::{asymptotic_vertex, two_level_kappa, two_level_rho11, AsymptoticParams};
pub use boundary::{BoundaryState, LinkWeight, GAUSSIAN_CUTOFF};
pub use foam::{Foam2Complex, Gluing};
pub use matrices::{kappa_from_w, KappaMatrix, Normalization, ReducedLabel, TransitionMatrix};
pub use ponzano_regge::{face_weight, pr_transition, pr_vertex};
