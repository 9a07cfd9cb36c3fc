use crate::error::{Error, Result};
use crate::hybrid_algebra::{maxent_canonical_state, HybridState, LiftKind};
use crate::linalg::frobenius;

use super::hamiltonian::HybridHamiltonian;
use super::trajectory::{EvolutionMethod, Trajectory};

/// Drift of the canonical state over a horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct StationarityReport {
    pub beta: f64,
    pub times: Vec<f64>,
    /// `‖ρ_H(t) − ρ_H(0)‖_F` of the lifted density.
    pub drift: Vec<f64>,
    /// `max_ξ ‖ρ_t(ξ) − ρ_0(ξ)‖_F` of the hybrid blocks.
    pub block_drift: Vec<f64>,
    pub max_drift: f64,
    pub max_block_drift: f64,
}

/// Canonical state of `h` at inverse temperature `beta`.
pub fn canonical_state(h: &HybridHamiltonian, beta: f64) -> Result<HybridState> {
    maxent_canonical_state(h.grid(), h.classical_energy(), h.quantum(), h.coupling(), beta)
}

/// Evolves the canonical state of `h` and records its drift at `samples`
/// evenly spaced times up to `horizon`, which defaults to the preset period.
pub fn canonical_stationarity(
    beta: f64,
    h: &HybridHamiltonian,
    lift: LiftKind,
    horizon: Option<f64>,
    samples: usize,
) -> Result<StationarityReport> {
    canonical_stationarity_with(beta, h, lift, horizon, samples, EvolutionMethod::Auto)
}

pub fn canonical_stationarity_with(
    beta: f64,
    h: &HybridHamiltonian,
    lift: LiftKind,
    horizon: Option<f64>,
    samples: usize,
    method: EvolutionMethod,
) -> Result<StationarityReport> {
    let horizon = horizon
        .or_else(|| h.preset().and_then(|p| p.period()))
        .ok_or_else(|| Error::InvalidArgument("no horizon given and the classical flow has no period".into()))?;
    if !(horizon.is_finite() && horizon > 0.0) || samples == 0 {
        return Err(Error::InvalidArgument(format!("need a positive horizon and samples, got {horizon} and {samples}")));
    }
    let state = canonical_state(h, beta)?;
    let traj = Trajectory::new(&state, h.operator(), lift, method)?;
    let init = traj.initial();
    let w = h.grid().cell_volume();
    let n = h.grid().n_points();
    let times: Vec<f64> = (1..=samples).map(|k| horizon * k as f64 / samples as f64).collect();
    let mut drift = Vec::with_capacity(samples);
    let mut block_drift = Vec::with_capacity(samples);
    for &t in &times {
        let s = traj.at(t)?;
        drift.push(s.distance(init)?);
        let worst = (0..n)
            .map(|xi| frobenius((s.block(xi) - init.block(xi)).as_ref()) / w)
            .fold(0.0, f64::max);
        block_drift.push(worst);
    }
    let max_drift = drift.iter().cloned().fold(0.0, f64::max);
    let max_block_drift = block_drift.iter().cloned().fold(0.0, f64::max);
    Ok(StationarityReport { beta, times, drift, block_drift, max_drift, max_block_drift })
}
