use crate::error::{check_len, Error, Result};
use crate::linalg::{c64, CMat, HermitianEigen};
use crate::phase_space::{ClassicalFunction, PhaseSpaceGrid};
use crate::quantum::{QuantumOperator, HERMITIAN_TOL};

use super::state::HybridState;

/// Multiplicative coupling `c · diag(h_C) ⊗ h_Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coupling {
    pub classical: ClassicalFunction,
    pub quantum: QuantumOperator,
    pub strength: f64,
}

impl Coupling {
    pub fn new(classical: ClassicalFunction, quantum: QuantumOperator, strength: f64) -> Result<Self> {
        let dev = quantum.hermiticity_defect();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian { max_deviation: dev });
        }
        if let Some(v) = classical.values().iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite classical coupling factor {v}")));
        }
        Ok(Self { classical, quantum, strength })
    }
}

/// `Ĥ(ξ) = H_C(ξ) I + Ĥ_Q + Σ_j c_j h_C^j(ξ) h_Q^j`.
pub fn local_energy(h_c: &ClassicalFunction, h_q: &QuantumOperator, coupling: &[Coupling], xi: usize) -> CMat {
    let d = h_q.dim();
    let q = h_q.matrix();
    let mut m = CMat::from_fn(d, d, |i, j| q[(i, j)] + if i == j { c64::new(h_c.values()[xi], 0.0) } else { c64::new(0.0, 0.0) });
    for c in coupling {
        let w = c.strength * c.classical.values()[xi];
        let a = c.quantum.matrix();
        for j in 0..d {
            for i in 0..d {
                m[(i, j)] += a[(i, j)] * w;
            }
        }
    }
    m
}

/// Per-cell Gibbs state `ρ(ξ) = e^{-βĤ(ξ)}/Z` with `Z = ΔΩ·Σ_ξ Tr e^{-βĤ(ξ)}`.
/// A single spectral shift (the global minimum energy) guards the exponentials.
pub fn maxent_canonical_state(
    grid: &PhaseSpaceGrid,
    h_c: &ClassicalFunction,
    h_q: &QuantumOperator,
    coupling: &[Coupling],
    beta: f64,
) -> Result<HybridState> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidArgument(format!("inverse temperature must be finite and nonnegative, got {beta}")));
    }
    h_c.check_grid(grid)?;
    let dev = h_q.hermiticity_defect();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian { max_deviation: dev });
    }
    for c in coupling {
        c.classical.check_grid(grid)?;
        check_len(h_q.dim(), c.quantum.dim())?;
    }
    let eigs = (0..grid.n_points())
        .map(|xi| HermitianEigen::new(local_energy(h_c, h_q, coupling, xi).as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let e_min = eigs.iter().flat_map(|e| e.values.iter().cloned()).fold(f64::INFINITY, f64::min);
    let blocks = eigs.iter().map(|e| e.map(|l| c64::new((-beta * (l - e_min)).exp(), 0.0))).collect();
    HybridState::from_unnormalized(grid, blocks)
}
