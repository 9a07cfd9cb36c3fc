//! Hybrid operators `Σ γ a ⊗ A`, parametrized hybrid states `ρ(ξ)`, their
//! two lifts to density matrices on the product space, marginals and
//! entropies.
//!
//! Discrete conventions: the product index is `ξ·d + m`, and the continuum
//! `δ(ξ - ξ')` becomes a Kronecker delta divided by the cell weight `ΔΩ`.

mod entropy;
mod lift;
mod maxent;
mod operator;
mod state;

pub use entropy::{
    differential_entropy, entropy_equivalence_report, hybrid_entropy, von_neumann_entropy_dm, EntropyEquivalence,
    ENTROPY_OFFSET_TOL,
};
pub use lift::{
    classical_marginal_dm, coherent_factors, lift, lift_block_diagonal, lift_coherent, partial_trace_power,
    partial_trace_power_report, quantum_marginal, HybridDensityMatrix, LiftKind, LowRankDensity, PowerIdentity,
    PsdReport, MAX_DENSE_DIM, POWER_IDENTITY_TOL,
};
pub(crate) use lift::check_dense;
pub use maxent::{local_energy, maxent_canonical_state, Coupling};
pub use operator::{hybrid_involution, hybrid_product, BlockDiagonal, ComplexFunction, HybridOperator, HybridTerm};
pub use state::{classical_marginal, hybrid_expectation, marginal_power_rhs, quantum_marginal_of_state, HybridState};
