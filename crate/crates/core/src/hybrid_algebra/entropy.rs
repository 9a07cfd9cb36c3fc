use crate::error::{Error, Result};
use crate::linalg;
use crate::phase_space::{ClassicalDensity, PhaseSpaceGrid};
use crate::quantum::{entropy_of_spectrum, Entropy};

use super::lift::{lift_block_diagonal, lift_coherent, HybridDensityMatrix};
use super::state::HybridState;

/// Tolerance of `S_vN(block lift) = S_H - log ΔΩ`.
pub const ENTROPY_OFFSET_TOL: f64 = 1e-8;

/// `S_H = -ΔΩ·Σ_ξ Tr ρ(ξ) log ρ(ξ)`.
pub fn hybrid_entropy(state: &HybridState) -> Result<f64> {
    let mut s = 0.0;
    for b in state.blocks() {
        s += entropy_of_spectrum(&linalg::hermitian_eigenvalues(b.as_ref())?).value;
    }
    Ok(s * state.grid().cell_volume())
}

/// Differential entropy `-ΔΩ·Σ F log F` of a classical density.
pub fn differential_entropy(f: &ClassicalDensity, grid: &PhaseSpaceGrid) -> f64 {
    -grid.cell_volume() * f.values().iter().filter(|v| **v > 0.0).map(|v| v * v.ln()).sum::<f64>()
}

/// Von Neumann entropy of a lifted density matrix from its full spectrum.
pub fn von_neumann_entropy_dm(rho: &HybridDensityMatrix) -> Result<Entropy> {
    Ok(entropy_of_spectrum(&rho.eigenvalues()?))
}

/// The hybrid entropy next to the von Neumann entropies of both lifts.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyEquivalence {
    pub s_h: f64,
    pub s_vn_block: f64,
    /// `None` when the coherent lift is not positive semidefinite.
    pub s_vn_coherent: Option<f64>,
    pub coherent_min_eigenvalue: f64,
    /// `S_vN_block - (S_H - log ΔΩ)`.
    pub offset_residual: f64,
}

pub fn entropy_equivalence_report(state: &HybridState) -> Result<EntropyEquivalence> {
    let s_h = hybrid_entropy(state)?;
    let s_vn_block = von_neumann_entropy_dm(&lift_block_diagonal(state)?)?.value;
    let coherent = lift_coherent(state)?;
    let spectrum = coherent.eigenvalues()?;
    let coherent_min_eigenvalue = spectrum.iter().cloned().fold(f64::INFINITY, f64::min);
    let s_vn_coherent = (coherent_min_eigenvalue >= -crate::quantum::STATE_TOL).then(|| entropy_of_spectrum(&spectrum).value);
    let offset_residual = s_vn_block - (s_h - state.grid().cell_volume().ln());
    if offset_residual.abs() > ENTROPY_OFFSET_TOL {
        return Err(Error::IdentityViolation { what: "entropy offset", residual: offset_residual });
    }
    Ok(EntropyEquivalence { s_h, s_vn_block, s_vn_coherent, coherent_min_eigenvalue, offset_residual })
}
