//! Biexciton–exciton cascade of a quantum dot in a two-mode cavity.
//!
//! The crate builds the dot⊗cavity state space, integrates the Lindblad
//! master equation under Gaussian pulses, evaluates two-time photon
//! correlations with the quantum regression theorem, and reports the
//! concurrence of the emitted photon pair. A derivative-free search tunes
//! the second pulse of the two-color swing-up scheme.

pub mod correlations;
pub mod dynamics;
pub mod entanglement;
pub mod experiments;
pub mod error;
pub mod hilbert;
pub mod model;
pub mod ode;
pub mod optimizer;

pub use error::{CascadeError, Result};
