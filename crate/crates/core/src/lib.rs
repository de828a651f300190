#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amplitudes;
pub mod bathfit;
pub mod error;
pub mod linalg;
pub mod lindblad;
pub mod observables;
pub mod qed_reference;
pub mod recoupling;
pub mod scenario;
pub mod spin;
pub mod spin_network;

pub use error::{Error, Result};
pub use spin::Spin;
