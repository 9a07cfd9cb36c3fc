use std::fmt;
use std::sync::Arc;

use faer::linalg::solvers::Llt;
use faer::Side;

use crate::classical_koopman::windowed_probes;
use crate::error::{check_len, Error, Result};
use crate::hybrid_algebra::{lift, HybridOperator, HybridState, LiftKind};
use crate::linalg::{c64, frobenius, hermitian_eigenvalues, trace, CMat, LinearOperator, SparseOperator, ZERO};
use crate::phase_space::{ClassicalDensity, PhaseSpaceGrid};
use crate::quantum::entropy_of_spectrum;
use crate::sampling::{self, localized_hybrid_operator, random_product_state, smooth_correlated_state};

use super::hamiltonian::HybridHamiltonian;
use super::preservation::{block_weak_residual, PROBE_MODES};
use super::propagate::HybridPropagator;

/// Seed used when the caller does not choose one.
pub const DEFAULT_PROBE_SEED: u64 = 0x5eed_4b00;

/// Tolerance of the linearity check on random pairs.
pub const LINEARITY_TOL: f64 = 1e-10;

/// Width of the probe states, as a fraction of the shorter box side.
const STATE_WIDTH: f64 = 0.15;
/// Width of the observable envelopes relative to the probe states.
const OBSERVABLE_WIDTH: f64 = 0.6;
/// Width of the window on the weak-test probes, as a fraction of the shorter box side.
const WINDOW_WIDTH: f64 = 0.12;

fn box_side(grid: &PhaseSpaceGrid) -> f64 {
    (grid.q_range().1 - grid.q_range().0).min(grid.p_range().1 - grid.p_range().0)
}

type SuperOp = Arc<dyn Fn(&CMat) -> CMat + Send + Sync>;

/// A linear superoperator `𝓛` on product-space operators. States follow
/// `dρ/dt = 𝓛†ρ`; observables follow the dual `df/dt = 𝓛 f`.
#[derive(Clone)]
pub enum LinearGenerator {
    Zero { dim: usize },
    /// Adjoint action of a Hermitian `Ĥ`: `ρ ↦ -i[Ĥ, ρ]`.
    Hamiltonian(SparseOperator),
    /// `ρ ↦ -i[Ĥ, ρ] - γ{N, ρ}`; changes the trace at rate `-2γ Tr(Nρ)`.
    Damped { h: SparseOperator, n: SparseOperator, gamma: f64 },
    /// Dense matrix acting on column-major `vec(ρ)`.
    Superoperator(CMat),
    /// Arbitrary maps on states and on observables, checked for linearity.
    Custom { dim: usize, states: SuperOp, observables: SuperOp },
}

impl fmt::Debug for LinearGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero { dim } => write!(f, "Zero({dim})"),
            Self::Hamiltonian(h) => write!(f, "Hamiltonian(dim {})", h.dim()),
            Self::Damped { h, gamma, .. } => write!(f, "Damped(dim {}, gamma {gamma})", h.dim()),
            Self::Superoperator(s) => write!(f, "Superoperator({}x{})", s.nrows(), s.ncols()),
            Self::Custom { dim, .. } => write!(f, "Custom({dim})"),
        }
    }
}

fn commutator_action(h: &SparseOperator, x: &CMat, sign: f64) -> CMat {
    // sign·i[H, x]
    let hx = h.mul_dense(x.as_ref());
    let xh = h.dense_mul(x.as_ref());
    CMat::from_fn(x.nrows(), x.ncols(), |i, j| {
        let c = hx[(i, j)] - xh[(i, j)];
        c64::new(-c.im, c.re) * sign
    })
}

/// `-iĤU`.
fn commutator_free(h: &SparseOperator, u: &CMat) -> CMat {
    let hu = h.mul_dense(u.as_ref());
    CMat::from_fn(u.nrows(), u.ncols(), |i, j| c64::new(hu[(i, j)].im, -hu[(i, j)].re))
}

fn anticommutator(n: &SparseOperator, x: &CMat) -> CMat {
    let a = n.mul_dense(x.as_ref());
    let b = n.dense_mul(x.as_ref());
    &a + &b
}

/// `x + s·y`.
fn axpy(x: &CMat, y: &CMat, s: f64) -> CMat {
    CMat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] + y[(i, j)] * s)
}

fn apply_vec(s: &CMat, x: &CMat, dual: bool) -> CMat {
    let n = x.nrows();
    let v = CMat::from_fn(n * n, 1, |k, _| x[(k % n, k / n)]);
    let y = if dual { s.adjoint() * &v } else { s * &v };
    CMat::from_fn(n, n, |i, j| y[(i + j * n, 0)])
}

impl LinearGenerator {
    pub fn from_hamiltonian(h: &HybridHamiltonian) -> Self {
        Self::Hamiltonian(h.operator().clone())
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Zero { dim } | Self::Custom { dim, .. } => *dim,
            Self::Hamiltonian(h) | Self::Damped { h, .. } => h.dim(),
            Self::Superoperator(s) => (s.nrows() as f64).sqrt().round() as usize,
        }
    }

    /// `𝓛†ρ`, the state-side action.
    pub fn apply_state(&self, rho: &CMat) -> CMat {
        match self {
            Self::Zero { dim } => CMat::zeros(*dim, *dim),
            Self::Hamiltonian(h) => commutator_action(h, rho, -1.0),
            Self::Damped { h, n, gamma } => axpy(&commutator_action(h, rho, -1.0), &anticommutator(n, rho), -gamma),
            Self::Superoperator(s) => apply_vec(s, rho, false),
            Self::Custom { states, .. } => states(rho),
        }
    }

    /// `𝓛f`, the observable-side action.
    pub fn apply_observable(&self, f: &CMat) -> CMat {
        match self {
            Self::Zero { dim } => CMat::zeros(*dim, *dim),
            Self::Hamiltonian(h) => commutator_action(h, f, 1.0),
            Self::Damped { h, n, gamma } => axpy(&commutator_action(h, f, 1.0), &anticommutator(n, f), -gamma),
            Self::Superoperator(s) => apply_vec(s, f, true),
            Self::Custom { observables, .. } => observables(f),
        }
    }

    fn check_shape(&self) -> Result<()> {
        match self {
            Self::Superoperator(s) => {
                let n = self.dim();
                if s.nrows() != s.ncols() || n * n != s.nrows() {
                    return Err(Error::InvalidArgument(format!(
                        "superoperator must be n²×n², got {}x{}",
                        s.nrows(),
                        s.ncols()
                    )));
                }
                Ok(())
            }
            Self::Damped { h, n, gamma } => {
                check_len(h.dim(), n.dim())?;
                if !gamma.is_finite() {
                    return Err(Error::InvalidArgument(format!("damping rate must be finite, got {gamma}")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Largest relative defect of `G(aA + bB) = aG(A) + bG(B)` over a few
    /// random pairs, for both actions.
    pub fn linearity_residual(&self, seed: u64) -> f64 {
        let n = self.dim();
        let mut rng = sampling::rng(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..3 {
            let (a, b) = (sampling::ginibre(n, n, &mut rng), sampling::ginibre(n, n, &mut rng));
            let (x, y) = (sampling::complex_normal(&mut rng), sampling::complex_normal(&mut rng));
            let mix = CMat::from_fn(n, n, |i, j| a[(i, j)] * x + b[(i, j)] * y);
            for dual in [false, true] {
                let g = |m: &CMat| if dual { self.apply_observable(m) } else { self.apply_state(m) };
                let (ga, gb, gm) = (g(&a), g(&b), g(&mix));
                let lhs = CMat::from_fn(n, n, |i, j| gm[(i, j)] - ga[(i, j)] * x - gb[(i, j)] * y);
                let scale = frobenius(ga.as_ref()) * x.norm() + frobenius(gb.as_ref()) * y.norm();
                let r = frobenius(lhs.as_ref());
                worst = worst.max(if scale > 0.0 { r / scale } else { r });
            }
        }
        worst
    }
}

/// Verdict thresholds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidatorThresholds {
    /// Bound on `|Tr 𝓛†ρ|`.
    pub trace: f64,
    /// Lower bound on the smallest eigenvalue along the flow.
    pub positivity: f64,
    /// Bound on the weak multiplicative residual of evolved observables,
    /// relative to the largest entry of the observable.
    pub automorphism: f64,
    /// Largest tolerated entropy decrease.
    pub entropy: f64,
}

impl Default for ValidatorThresholds {
    fn default() -> Self {
        Self { trace: 1e-10, positivity: -1e-9, automorphism: 1e-1, entropy: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidatorOptions {
    pub horizon: f64,
    /// RK4 step for generators without a spectral propagator.
    pub dt: f64,
    /// Number of evenly spaced times, after `t = 0`, at which predicates are evaluated.
    pub checkpoints: usize,
    pub lift: LiftKind,
    pub thresholds: ValidatorThresholds,
}

impl Default for ValidatorOptions {
    fn default() -> Self {
        Self { horizon: 0.5, dt: 1e-2, checkpoints: 4, lift: LiftKind::BlockDiagonal, thresholds: Default::default() }
    }
}

/// Seeded probe states and observables.
#[derive(Clone, Debug)]
pub struct ProbeSet {
    pub seed: u64,
    pub states: Vec<HybridState>,
    pub operators: Vec<HybridOperator>,
}

impl ProbeSet {
    /// 20 smooth localized observables with 1 to 3 terms; 5 product and 5
    /// correlated states, all concentrated away from the box edges.
    pub fn generate(grid: &PhaseSpaceGrid, d: usize, seed: u64) -> Result<Self> {
        Self::generate_sized(grid, d, seed, 20, 10)
    }

    pub fn generate_sized(grid: &PhaseSpaceGrid, d: usize, seed: u64, operators: usize, states: usize) -> Result<Self> {
        let mut rng = sampling::rng(seed);
        let (qc, pc) = (0.5 * (grid.q_range().0 + grid.q_range().1), 0.5 * (grid.p_range().0 + grid.p_range().1));
        let width = STATE_WIDTH * box_side(grid);
        let ops = (0..operators)
            .map(|k| localized_hybrid_operator(grid, d, 1 + k % 3, OBSERVABLE_WIDTH * width, &mut rng))
            .collect();
        let mut sts = Vec::with_capacity(states);
        for k in 0..states {
            let shift = (k as f64 - states as f64 / 2.0) * 0.1 * width;
            if k < states / 2 {
                let f = ClassicalDensity::gaussian(grid, (qc + shift, pc - shift), width)?;
                let rho = sampling::random_density(d, &mut rng);
                sts.push(HybridState::product(grid, &f, &rho)?);
            } else {
                sts.push(smooth_correlated_state(grid, d, (qc + shift, pc + shift), width, &mut rng)?);
            }
        }
        Ok(Self { seed, states: sts, operators: ops })
    }

    /// Unstructured probes: random positive blocks and rough observables.
    pub fn generate_rough(grid: &PhaseSpaceGrid, d: usize, seed: u64) -> Self {
        let mut rng = sampling::rng(seed);
        let operators = (0..20).map(|k| sampling::random_hybrid_operator(grid, d, 1 + k % 3, &mut rng)).collect();
        let states = (0..10)
            .map(|k| {
                if k < 5 {
                    random_product_state(grid, d, &mut rng)
                } else {
                    sampling::random_hybrid_state(grid, d, &mut rng)
                }
            })
            .collect();
        Self { seed, states, operators }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Verdicts {
    pub trace: bool,
    pub positivity: bool,
    pub automorphism: bool,
    pub entropy: bool,
}

impl Verdicts {
    pub fn all(&self) -> bool {
        self.trace && self.positivity && self.automorphism && self.entropy
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidatorReport {
    pub seed: u64,
    /// `max |Tr 𝓛†ρ(t)|` over probe states and checkpoints.
    pub trace_derivative_residual: f64,
    /// `|Tr 𝓛†ρ|` for each probe state at `t = 0`.
    pub initial_trace_residuals: Vec<f64>,
    pub positivity_min_eig_along_flow: f64,
    /// Checkpoints at which `ρ(t) - positivity·I` admitted no Cholesky factor.
    pub cholesky_failures: usize,
    /// Weak multiplicative residual of the evolved observables (relative).
    pub automorphism_residual: f64,
    /// The same residual at `t = 0`, i.e. the discretization floor.
    pub automorphism_baseline: f64,
    /// Largest Frobenius fraction of an evolved observable outside the
    /// `ξ`-diagonal blocks; zero only if the discrete algebra is preserved exactly.
    pub off_diagonal_mass: f64,
    /// `max |S(t) - S(0)|`.
    pub entropy_drift: f64,
    /// `min (S(t) - S(0))`; negative when entropy decreases.
    pub entropy_min_change: f64,
    pub thresholds: ValidatorThresholds,
    pub verdicts: Verdicts,
}

enum Flow<'a> {
    Spectral(HybridPropagator),
    /// `ρ ↦ UρU^†` with `U = e^{-iKt}` and `K = Ĥ - iγN`, integrated once.
    Factorized { step: CMat, full: CMat },
    Rk4(&'a LinearGenerator, f64),
}

fn rk4(x: &CMat, rhs: impl Fn(&CMat) -> CMat, t: f64, dt: f64) -> CMat {
    let steps = (t.abs() / dt).ceil() as usize;
    let mut x = x.clone();
    if steps == 0 {
        return x;
    }
    let h = t / steps as f64;
    for _ in 0..steps {
        let k1 = rhs(&x);
        let k2 = rhs(&axpy(&x, &k1, 0.5 * h));
        let k3 = rhs(&axpy(&x, &k2, 0.5 * h));
        let k4 = rhs(&axpy(&x, &k3, h));
        x = CMat::from_fn(x.nrows(), x.ncols(), |i, j| {
            x[(i, j)] + (k1[(i, j)] + k2[(i, j)] * 2.0 + k3[(i, j)] * 2.0 + k4[(i, j)]) * (h / 6.0)
        });
    }
    x
}

impl Flow<'_> {
    fn states(&self, rho: &CMat, dt_check: f64, count: usize) -> Vec<CMat> {
        let mut out = Vec::with_capacity(count);
        let mut cur = rho.clone();
        for k in 1..=count {
            cur = match self {
                Flow::Spectral(p) => p.evolve_matrix(rho, dt_check * k as f64),
                Flow::Factorized { step, .. } => step * &cur * step.adjoint(),
                Flow::Rk4(g, dt) => rk4(&cur, |m| g.apply_state(m), dt_check, *dt),
            };
            out.push(cur.clone());
        }
        out
    }

    /// `e^{𝓛t} f`; the factorized flow only knows the horizon.
    fn observable(&self, f: &CMat, t: f64) -> CMat {
        match self {
            Flow::Spectral(p) => p.heisenberg(f, t),
            Flow::Factorized { full, .. } => full.adjoint() * f * full,
            Flow::Rk4(g, dt) => rk4(f, |m| g.apply_observable(m), t, *dt),
        }
    }
}

fn mat_vec(m: &CMat, x: &[c64]) -> Vec<c64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).fold(ZERO, |acc, j| acc + m[(i, j)] * x[j])).collect()
}

fn min_eig_and_cholesky(rho: &CMat, shift: f64) -> Result<(Vec<f64>, bool)> {
    let n = rho.nrows();
    let herm = CMat::from_fn(n, n, |i, j| (rho[(i, j)] + rho[(j, i)].conj()) * 0.5);
    let eig = hermitian_eigenvalues(herm.as_ref())?;
    let shifted = CMat::from_fn(n, n, |i, j| if i == j { herm[(i, j)] - c64::new(shift, 0.0) } else { herm[(i, j)] });
    let ok = Llt::new(shifted.as_ref(), Side::Lower).is_ok();
    Ok((eig, ok))
}

fn off_diagonal_fraction(m: &CMat, d: usize) -> f64 {
    let (mut off, mut total) = (0.0, 0.0);
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let w = m[(r, c)].norm_sqr();
            total += w;
            if r / d != c / d {
                off += w;
            }
        }
    }
    if total > 0.0 {
        (off / total).sqrt()
    } else {
        0.0
    }
}

fn max_entry(f: &HybridOperator) -> f64 {
    (0..f.grid().n_points()).map(|xi| {
        let b = f.block(xi);
        (0..b.nrows()).flat_map(|i| (0..b.ncols()).map(move |j| (i, j))).map(|(i, j)| b[(i, j)].norm()).fold(0.0, f64::max)
    }).fold(0.0, f64::max)
}

/// Runs the trace, positivity, automorphism and entropy predicates of a
/// linear generator on the given probes.
pub fn validate_linear_generator(
    g: &LinearGenerator,
    probes: &ProbeSet,
    opts: &ValidatorOptions,
) -> Result<ValidatorReport> {
    g.check_shape()?;
    let lin = g.linearity_residual(probes.seed ^ 0x11);
    if !(lin <= LINEARITY_TOL) {
        return Err(Error::Nonlinear { residual: lin });
    }
    if !(opts.horizon.is_finite() && opts.horizon >= 0.0 && opts.dt > 0.0 && opts.checkpoints > 0) {
        return Err(Error::InvalidArgument("horizon, step and checkpoint count must be positive".into()));
    }
    let dim = g.dim();
    let th = opts.thresholds;
    let dt_check = opts.horizon / opts.checkpoints as f64;
    let flow = match g {
        LinearGenerator::Hamiltonian(h) => Flow::Spectral(HybridPropagator::from_operator(h)?),
        LinearGenerator::Damped { h, n, gamma } => {
            let rhs = |u: &CMat| axpy(&commutator_free(h, u), &n.mul_dense(u.as_ref()), -gamma);
            let step = rk4(&CMat::identity(dim, dim), rhs, dt_check, opts.dt);
            let mut full = CMat::identity(dim, dim);
            for _ in 0..opts.checkpoints {
                full = &step * &full;
            }
            Flow::Factorized { step, full }
        }
        _ => Flow::Rk4(g, opts.dt),
    };

    let mut trace_res: f64 = 0.0;
    let mut initial = Vec::with_capacity(probes.states.len());
    let mut min_eig = f64::INFINITY;
    let mut chol_fail = 0;
    let mut s_drift: f64 = 0.0;
    let mut s_min = f64::INFINITY;
    for state in &probes.states {
        check_len(dim, state.dim())?;
        let rho0 = lift(state, opts.lift)?.matrix().clone();
        let r0 = trace(g.apply_state(&rho0).as_ref()).norm();
        initial.push(r0);
        trace_res = trace_res.max(r0);
        let (e0, ok0) = min_eig_and_cholesky(&rho0, th.positivity)?;
        let s0 = entropy_of_spectrum(&e0).value;
        min_eig = min_eig.min(e0.iter().cloned().fold(f64::INFINITY, f64::min));
        chol_fail += usize::from(!ok0);
        for rho in flow.states(&rho0, dt_check, opts.checkpoints) {
            trace_res = trace_res.max(trace(g.apply_state(&rho).as_ref()).norm());
            let (e, ok) = min_eig_and_cholesky(&rho, th.positivity)?;
            min_eig = min_eig.min(e.iter().cloned().fold(f64::INFINITY, f64::min));
            chol_fail += usize::from(!ok);
            let ds = entropy_of_spectrum(&e).value - s0;
            s_drift = s_drift.max(ds.abs());
            s_min = s_min.min(ds);
        }
    }
    if probes.states.is_empty() {
        min_eig = 0.0;
        s_min = 0.0;
    }

    let mut auto: f64 = 0.0;
    let mut baseline: f64 = 0.0;
    let mut off: f64 = 0.0;
    for f in &probes.operators {
        check_len(dim, f.dim())?;
        let grid = *f.grid();
        let d = f.quantum_dim();
        let scale = max_entry(f).max(f64::MIN_POSITIVE);
        let probe_vecs = windowed_probes(&grid, PROBE_MODES, WINDOW_WIDTH * box_side(&grid));
        let dense = f.realize().to_dense();
        baseline = baseline.max(block_weak_residual(&|x| mat_vec(&dense, x), &grid, d, &probe_vecs) / scale);
        let ft = flow.observable(&dense, opts.horizon);
        auto = auto.max(block_weak_residual(&|x| mat_vec(&ft, x), &grid, d, &probe_vecs) / scale);
        off = off.max(off_diagonal_fraction(&ft, d));
    }

    let verdicts = Verdicts {
        trace: trace_res <= th.trace,
        positivity: min_eig >= th.positivity && chol_fail == 0,
        automorphism: auto <= th.automorphism,
        entropy: s_min >= -th.entropy,
    };
    Ok(ValidatorReport {
        seed: probes.seed,
        trace_derivative_residual: trace_res,
        initial_trace_residuals: initial,
        positivity_min_eig_along_flow: min_eig,
        cholesky_failures: chol_fail,
        automorphism_residual: auto,
        automorphism_baseline: baseline,
        off_diagonal_mass: off,
        entropy_drift: s_drift,
        entropy_min_change: if s_min.is_finite() { s_min } else { 0.0 },
        thresholds: th,
        verdicts,
    })
}
