use crate::error::{check_len, Error, Result};
use crate::linalg::{self, c64, CMat, ZERO};
use crate::phase_space::{ClassicalDensity, PhaseSpaceGrid};
use crate::quantum::{trace_product, QuantumOperator, QuantumState, STATE_TOL};

use super::operator::HybridOperator;

/// Parametrized hybrid state: one positive `d×d` block `ρ(ξ)` per grid point
/// with `ΔΩ·Σ_ξ Tr ρ(ξ) = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridState {
    grid: PhaseSpaceGrid,
    d: usize,
    blocks: Vec<CMat>,
}

impl HybridState {
    pub fn new(grid: &PhaseSpaceGrid, blocks: Vec<CMat>) -> Result<Self> {
        check_len(grid.n_points(), blocks.len())?;
        let d = blocks.first().map_or(0, |b| b.nrows());
        if d == 0 {
            return Err(Error::InvalidArgument("quantum dimension must be at least 1".into()));
        }
        let mut mass = 0.0;
        for (point, b) in blocks.iter().enumerate() {
            if b.nrows() != d || b.ncols() != d {
                return Err(Error::InvalidHybridState { point, violation: format!("block is {}x{}, expected {d}x{d}", b.nrows(), b.ncols()) });
            }
            let dev = linalg::hermiticity_defect(b.as_ref());
            if !dev.is_finite() || dev > STATE_TOL {
                return Err(Error::InvalidHybridState { point, violation: format!("not Hermitian (max deviation {dev:e})") });
            }
            let min = linalg::hermitian_eigenvalues(b.as_ref())?.into_iter().fold(f64::INFINITY, f64::min);
            if min < -STATE_TOL {
                return Err(Error::InvalidHybridState { point, violation: format!("not positive (min eigenvalue {min:e})") });
            }
            mass += linalg::trace(b.as_ref()).re;
        }
        let mass = mass * grid.cell_volume();
        if (mass - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidDensity(format!("hybrid state has total mass {mass} != 1")));
        }
        let blocks = blocks.iter().map(|b| linalg::hermitian_part(b.as_ref())).collect();
        Ok(Self { grid: *grid, d, blocks })
    }

    /// Rescales positive blocks to unit total mass before validating.
    pub fn from_unnormalized(grid: &PhaseSpaceGrid, blocks: Vec<CMat>) -> Result<Self> {
        let mass: f64 = blocks.iter().map(|b| linalg::trace(b.as_ref()).re).sum::<f64>() * grid.cell_volume();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidDensity(format!("total mass {mass}")));
        }
        let s = c64::new(1.0 / mass, 0.0);
        Self::new(grid, blocks.into_iter().map(|b| CMat::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)] * s)).collect())
    }

    /// `ρ(ξ) = F(ξ) ρ_Q`.
    pub fn product(grid: &PhaseSpaceGrid, f: &ClassicalDensity, rho_q: &QuantumState) -> Result<Self> {
        check_len(grid.n_points(), f.values().len())?;
        let q = rho_q.matrix();
        let blocks = f
            .values()
            .iter()
            .map(|&w| CMat::from_fn(q.nrows(), q.ncols(), |i, j| q[(i, j)] * w))
            .collect();
        Self::new(grid, blocks)
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn quantum_dim(&self) -> usize {
        self.d
    }

    /// Dimension of the product space.
    pub fn dim(&self) -> usize {
        self.grid.n_points() * self.d
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn block(&self, xi: usize) -> &CMat {
        &self.blocks[xi]
    }

    /// `⟨f⟩ = ΔΩ·Σ_ξ Σ_k γ_k a_k(ξ) Tr(ρ(ξ) A_k)`.
    pub fn expectation(&self, f: &HybridOperator) -> Result<c64> {
        hybrid_expectation(self, f)
    }
}

pub fn hybrid_expectation(state: &HybridState, f: &HybridOperator) -> Result<c64> {
    check_len(state.d, f.quantum_dim())?;
    check_len(state.grid.n_points(), f.grid().n_points())?;
    let mut total = ZERO;
    for t in f.terms() {
        let mut s = ZERO;
        for (xi, b) in state.blocks.iter().enumerate() {
            let a = t.classical.values()[xi];
            if a != ZERO {
                s += a * trace_product(b.as_ref(), t.quantum.matrix());
            }
        }
        total += t.gamma * s;
    }
    Ok(total * state.grid.cell_volume())
}

/// `F(ξ) = Tr ρ(ξ)`.
pub fn classical_marginal(state: &HybridState) -> Result<ClassicalDensity> {
    let v = state.blocks.iter().map(|b| linalg::trace(b.as_ref()).re.max(0.0)).collect();
    ClassicalDensity::from_unnormalized(v, &state.grid)
}

/// `ΔΩ·Σ_ξ ρ(ξ)`.
pub fn quantum_marginal_of_state(state: &HybridState) -> Result<QuantumState> {
    let mut acc = CMat::zeros(state.d, state.d);
    for b in &state.blocks {
        acc += b;
    }
    let w = c64::new(state.grid.cell_volume(), 0.0);
    QuantumState::new(CMat::from_fn(state.d, state.d, |i, j| acc[(i, j)] * w))
}

/// The `d×d` quantum operator `ΔΩ·Σ_ξ ρ(ξ)^k`.
pub fn marginal_power_rhs(state: &HybridState, k: u32) -> Result<QuantumOperator> {
    if k < 1 {
        return Err(Error::InvalidArgument("power must be at least 1".into()));
    }
    let d = state.d;
    let mut acc = CMat::zeros(d, d);
    for b in &state.blocks {
        let mut p = b.clone();
        for _ in 1..k {
            p = &p * b;
        }
        acc += &p;
    }
    let w = c64::new(state.grid.cell_volume(), 0.0);
    QuantumOperator::new(CMat::from_fn(d, d, |i, j| acc[(i, j)] * w))
}
