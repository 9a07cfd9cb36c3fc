//! Seeded random states and operators for probes and tests.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::hybrid_algebra::{HybridOperator, HybridState};
use crate::linalg::{c64, CMat, HermitianEigen};
use crate::phase_space::{Axis, ClassicalDensity, GridFunction, PhaseSpaceGrid};
use crate::quantum::{QuantumOperator, QuantumState};

pub type ProbeRng = ChaCha8Rng;

pub fn rng(seed: u64) -> ProbeRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn complex_normal(rng: &mut impl Rng) -> c64 {
    c64::new(normal(rng), normal(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. standard complex normal entries.
pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_normal(rng))
}

pub fn random_hermitian(d: usize, rng: &mut impl Rng) -> QuantumOperator {
    let g = ginibre(d, d, rng);
    QuantumOperator::new(CMat::from_fn(d, d, |i, j| (g[(i, j)] + g[(j, i)].conj()) * 0.5)).expect("finite square matrix")
}

/// `e^{-iH}` for a random Hermitian `H`.
pub fn random_unitary(d: usize, rng: &mut impl Rng) -> CMat {
    let h = random_hermitian(d, rng).into_matrix();
    HermitianEigen::new(h.as_ref()).expect("finite Hermitian matrix").map(|l| c64::cis(-2.0 * l))
}

/// Full-rank mixed state `GG^†/Tr(GG^†)`.
pub fn random_density(d: usize, rng: &mut impl Rng) -> QuantumState {
    let g = ginibre(d, d, rng);
    let w = &g * g.adjoint();
    let tr: f64 = (0..d).map(|i| w[(i, i)].re).sum();
    QuantumState::new(CMat::from_fn(d, d, |i, j| w[(i, j)] / tr)).expect("Wishart matrices are states")
}

/// Independent random positive blocks at every grid point.
pub fn random_hybrid_state(grid: &PhaseSpaceGrid, d: usize, rng: &mut impl Rng) -> HybridState {
    let blocks = (0..grid.n_points())
        .map(|_| {
            let g = ginibre(d, d, rng);
            let w: f64 = rng.random_range(0.05..1.0);
            let m = &g * g.adjoint();
            CMat::from_fn(d, d, |i, j| m[(i, j)] * w)
        })
        .collect();
    HybridState::from_unnormalized(grid, blocks).expect("positive blocks")
}

/// `F(ξ)·ρ_Q` with `F` positive random and `ρ_Q` a random mixed state.
pub fn random_product_state(grid: &PhaseSpaceGrid, d: usize, rng: &mut impl Rng) -> HybridState {
    let f: Vec<f64> = (0..grid.n_points()).map(|_| rng.random_range(0.05..1.0)).collect();
    let f = ClassicalDensity::from_unnormalized(f, grid).expect("positive values");
    HybridState::product(grid, &f, &random_density(d, rng)).expect("valid factors")
}

/// Smooth correlated state `F(ξ)·U(ξ) ρ_Q U(ξ)^†` with a Gaussian `F` and
/// `U(ξ) = e^{-i(q̃ A + p̃ B)}` for random Hermitian `A`, `B`.
pub fn smooth_correlated_state(
    grid: &PhaseSpaceGrid,
    d: usize,
    center: (f64, f64),
    sigma: f64,
    rng: &mut impl Rng,
) -> Result<HybridState> {
    let f = ClassicalDensity::gaussian(grid, center, sigma)?;
    let rho_q = random_density(d, rng);
    let (a, b) = (random_hermitian(d, rng), random_hermitian(d, rng));
    let blocks = grid
        .points()
        .zip(f.values())
        .map(|((q, p), &w)| {
            let (qs, ps) = ((q - center.0) / sigma, (p - center.1) / sigma);
            let gen = CMat::from_fn(d, d, |i, j| a.matrix()[(i, j)] * qs + b.matrix()[(i, j)] * ps);
            let u = HermitianEigen::new(gen.as_ref()).expect("finite").map(|l| c64::cis(-l));
            let m = &u * rho_q.matrix() * u.adjoint();
            CMat::from_fn(d, d, |i, j| m[(i, j)] * w)
        })
        .collect();
    HybridState::from_unnormalized(grid, blocks)
}

/// Complex classical factor with i.i.d. entries.
pub fn rough_function(grid: &PhaseSpaceGrid, rng: &mut impl Rng) -> GridFunction<c64> {
    GridFunction::new((0..grid.n_points()).map(|_| complex_normal(rng)).collect(), grid).expect("sized to grid")
}

/// Real combination of the lowest periodic modes `cos, sin(2π(k q̃ + l p̃))`
/// with `|k|, |l| ≤ 1`, where `q̃`, `p̃` are box-relative coordinates.
pub fn smooth_function(grid: &PhaseSpaceGrid, rng: &mut impl Rng) -> GridFunction<f64> {
    let (q0, p0) = (grid.q_range().0, grid.p_range().0);
    let (lq, lp) = (grid.axis_period(Axis::Q), grid.axis_period(Axis::P));
    let mut modes = Vec::new();
    for k in -1i32..=1 {
        for l in 0i32..=1 {
            if l == 0 && k < 0 {
                continue;
            }
            modes.push((k as f64, l as f64, normal(rng), normal(rng)));
        }
    }
    grid.sample(|q, p| {
        let (x, y) = ((q - q0) / lq, (p - p0) / lp);
        modes.iter().map(|(k, l, a, b)| {
            let ph = 2.0 * PI * (k * x + l * y);
            a * ph.cos() + b * ph.sin()
        }).sum::<f64>() / 3.0
    })
}

/// Random `Σ γ a ⊗ A` with `terms` summands and rough classical factors.
pub fn random_hybrid_operator(grid: &PhaseSpaceGrid, d: usize, terms: usize, rng: &mut impl Rng) -> HybridOperator {
    let mut f = HybridOperator::zero(grid, d);
    for _ in 0..terms {
        let a = rough_function(grid, rng);
        let op = QuantumOperator::new(ginibre(d, d, rng)).expect("finite square matrix");
        f = f.with_term(complex_normal(rng), a, op).expect("shapes agree");
    }
    f
}

/// Random operator whose classical factors are smooth and periodic, so that
/// stencil commutators with it are resolved.
pub fn smooth_hybrid_operator(grid: &PhaseSpaceGrid, d: usize, terms: usize, rng: &mut impl Rng) -> HybridOperator {
    let mut f = HybridOperator::zero(grid, d);
    for _ in 0..terms {
        let a = smooth_function(grid, rng).to_complex();
        let op = QuantumOperator::new(ginibre(d, d, rng)).expect("finite square matrix");
        f = f.with_term(complex_normal(rng), a, op).expect("shapes agree");
    }
    f
}

/// Smooth operator whose classical factors are damped by a Gaussian of width
/// `width` about the box center, so they stay clear of the boundary under a
/// confining flow.
pub fn localized_hybrid_operator(
    grid: &PhaseSpaceGrid,
    d: usize,
    terms: usize,
    width: f64,
    rng: &mut impl Rng,
) -> HybridOperator {
    let (qc, pc) = (0.5 * (grid.q_range().0 + grid.q_range().1), 0.5 * (grid.p_range().0 + grid.p_range().1));
    let bump = grid.sample(|q, p| (-((q - qc).powi(2) + (p - pc).powi(2)) / (2.0 * width * width)).exp());
    let mut f = HybridOperator::zero(grid, d);
    for _ in 0..terms {
        let a = smooth_function(grid, rng).zip_with(&bump, |x, b| c64::new(x * b, 0.0)).expect("same grid");
        let op = QuantumOperator::new(ginibre(d, d, rng)).expect("finite square matrix");
        f = f.with_term(complex_normal(rng), a, op).expect("shapes agree");
    }
    f
}
