//! The book chapters under `book/src`, compiled as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/spins.md")]
pub mod spins {}
#[doc = include_str!("../../../book/src/spin-networks.md")]
pub mod spin_networks {}
#[doc = include_str!("../../../book/src/amplitudes.md")]
pub mod amplitudes {}
#[doc = include_str!("../../../book/src/dynamics.md")]
pub mod dynamics {}
#[doc = include_str!("../../../book/src/observables.md")]
pub mod observables {}
#[doc = include_str!("../../../book/src/dicke.md")]
pub mod dicke {}
#[doc = include_str!("../../../book/src/bath-fitting.md")]
pub mod bath_fitting {}
#[doc = include_str!("../../../book/src/scenarios.md")]
pub mod scenarios {}
