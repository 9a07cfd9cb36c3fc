use crate::error::{Error, Result};
use crate::hybrid_algebra::{classical_marginal, HybridState, LiftKind};
use crate::phase_space::{liouville_oracle, max_deviation};
use crate::quantum::matrix_purity;

use super::hamiltonian::HybridHamiltonian;
use super::trajectory::{EvolutionMethod, Trajectory};

/// Classical and quantum marginals of a lifted hybrid state along the flow.
#[derive(Clone, Debug, PartialEq)]
pub struct BackReactionReport {
    pub times: Vec<f64>,
    /// Classical marginal density on the grid at each time.
    pub marginals: Vec<Vec<f64>>,
    /// `max_ξ |F(t) − F_0∘Φ_{−t}|` against the exact classical flow.
    pub oracle_deviation: Vec<f64>,
    /// `Tr ρ_Q(t)²` of the quantum marginal.
    pub quantum_purity: Vec<f64>,
    pub trace: Vec<f64>,
}

impl BackReactionReport {
    pub fn max_oracle_deviation(&self) -> f64 {
        self.oracle_deviation.iter().cloned().fold(0.0, f64::max)
    }
}

/// Evolves `state0` under `h` and compares the classical marginal with the
/// exact Liouville flow of the classical preset.
pub fn back_reaction_probe(
    state0: &HybridState,
    h: &HybridHamiltonian,
    times: &[f64],
    lift: LiftKind,
) -> Result<BackReactionReport> {
    back_reaction_probe_with(state0, h, times, lift, EvolutionMethod::Auto)
}

pub fn back_reaction_probe_with(
    state0: &HybridState,
    h: &HybridHamiltonian,
    times: &[f64],
    lift: LiftKind,
    method: EvolutionMethod,
) -> Result<BackReactionReport> {
    let preset = h
        .preset()
        .ok_or_else(|| Error::OracleUnavailable("classical energy is not a preset with a closed-form flow".into()))?;
    if state0.grid() != h.grid() || state0.quantum_dim() != h.quantum_dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: state0.dim() });
    }
    let grid = *h.grid();
    let f0 = classical_marginal(state0)?;
    let traj = Trajectory::new(state0, h.operator(), lift, method)?;
    let mut report = BackReactionReport {
        times: times.to_vec(),
        marginals: Vec::with_capacity(times.len()),
        oracle_deviation: Vec::with_capacity(times.len()),
        quantum_purity: Vec::with_capacity(times.len()),
        trace: Vec::with_capacity(times.len()),
    };
    for &t in times {
        let s = traj.at(t)?;
        let marginal = s.classical_marginal_values();
        let oracle = liouville_oracle(&f0, &grid, preset, t)?;
        report.oracle_deviation.push(max_deviation(&marginal, oracle.values()));
        report.marginals.push(marginal);
        report.quantum_purity.push(matrix_purity(s.quantum_marginal().as_ref()));
        report.trace.push(s.trace().re);
    }
    Ok(report)
}

/// Coupled versus decoupled evolution of the same initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct NoBackReaction {
    pub coupled: BackReactionReport,
    pub decoupled: BackReactionReport,
    /// `max_ξ |F_λ(t) − F_0(t)|` at each time.
    pub per_time: Vec<f64>,
    pub max_deviation: f64,
}

/// Runs [`back_reaction_probe`] with `h` and with its couplings removed and
/// measures how far the classical marginals drift apart.
pub fn compare_back_reaction(
    state0: &HybridState,
    h: &HybridHamiltonian,
    times: &[f64],
    lift: LiftKind,
    method: EvolutionMethod,
) -> Result<NoBackReaction> {
    let coupled = back_reaction_probe_with(state0, h, times, lift, method)?;
    let decoupled = back_reaction_probe_with(state0, &h.decoupled()?, times, lift, method)?;
    let per_time: Vec<f64> =
        coupled.marginals.iter().zip(&decoupled.marginals).map(|(a, b)| max_deviation(a, b)).collect();
    let max_deviation = per_time.iter().cloned().fold(0.0, f64::max);
    Ok(NoBackReaction { coupled, decoupled, per_time, max_deviation })
}
