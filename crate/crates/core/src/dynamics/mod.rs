//! Admissible hybrid Hamiltonians, their unitary flow, the algebra
//! preservation check and predicates for general linear generators.

mod back_reaction;
mod hamiltonian;
mod preservation;
mod propagate;
mod stationarity;
mod trajectory;
mod validator;

pub use back_reaction::{
    back_reaction_probe, back_reaction_probe_with, compare_back_reaction, BackReactionReport, NoBackReaction,
};
pub use hamiltonian::{build_hybrid_hamiltonian, momentum_coupling, HybridHamiltonian, HybridHamiltonianBuilder};
pub use preservation::{
    check_algebra_preservation, refinement_study, AlgebraPreservationReport, RefinementStudy, PROBE_MODES,
};
pub use propagate::{evolve_low_rank, evolve_observable, evolve_state, evolve_state_rk4, HybridPropagator};
pub use stationarity::{canonical_state, canonical_stationarity, canonical_stationarity_with, StationarityReport};
pub use trajectory::{EvolutionMethod, Snapshot, Trajectory};
pub use validator::{
    validate_linear_generator, LinearGenerator, ProbeSet, ValidatorOptions, ValidatorReport, ValidatorThresholds,
    Verdicts, DEFAULT_PROBE_SEED, LINEARITY_TOL,
};
