//! Koopman/GNS simulation of hybrid quantum-classical systems.
//!
//! The classical factor lives on a uniform phase-space grid
//! ([`phase_space`]) and is represented by Koopman wavefunctions
//! ([`classical_koopman`]); the quantum factor is a finite-dimensional
//! Hilbert space ([`quantum`]). [`hybrid_algebra`] builds the tensor algebra,
//! states and entropies on the product space and [`dynamics`] evolves them.

pub mod classical_koopman;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod hybrid_algebra;
pub mod linalg;
pub mod phase_space;
pub mod quantum;
pub mod sampling;

pub use error::{Error, Result};
