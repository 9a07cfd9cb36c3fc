use std::f64::consts::PI;

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, c64, CMat, ZERO};
use crate::phase_space::{ClassicalDensity, PhaseSpaceGrid};
use crate::quantum::{trace_product, QuantumOperator, QuantumState, STATE_TOL};

use super::operator::HybridOperator;
use super::state::{marginal_power_rhs, HybridState};

/// Largest product-space dimension materialized as a dense matrix.
pub const MAX_DENSE_DIM: usize = 2048;
/// Tolerance of the marginal-power identity.
pub const POWER_IDENTITY_TOL: f64 = 1e-10;

/// How a parametrized state is lifted to a density matrix on the product space.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum LiftKind {
    /// ξ-diagonal: block `ΔΩ·ρ(ξ)` at every grid point.
    #[default]
    BlockDiagonal,
    /// Square-root cross terms between grid points.
    Coherent,
}

impl LiftKind {
    pub fn name(self) -> &'static str {
        match self {
            LiftKind::BlockDiagonal => "block_diagonal",
            LiftKind::Coherent => "coherent",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "block_diagonal" => Ok(LiftKind::BlockDiagonal),
            "coherent" => Ok(LiftKind::Coherent),
            other => Err(Error::Config(format!("unknown lift {other:?} (expected block_diagonal|coherent)"))),
        }
    }
}

pub(crate) fn check_dense(dim: usize) -> Result<()> {
    if dim > MAX_DENSE_DIM {
        return Err(Error::TooLarge { dim, limit: MAX_DENSE_DIM });
    }
    Ok(())
}

/// Density matrix on the `(N·d)`-dimensional product space, index `ξ·d + m`.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridDensityMatrix {
    grid: PhaseSpaceGrid,
    d: usize,
    lift: LiftKind,
    m: CMat,
}

/// Positivity of a lifted density matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsdReport {
    pub min_eigenvalue: f64,
    pub is_psd: bool,
}

impl HybridDensityMatrix {
    /// Checks Hermiticity and unit trace; positivity is left to [`Self::psd_report`].
    pub fn from_matrix(grid: &PhaseSpaceGrid, d: usize, m: CMat, lift: LiftKind) -> Result<Self> {
        let n = grid.n_points() * d;
        check_len(n, m.nrows())?;
        check_len(n, m.ncols())?;
        let dev = linalg::hermiticity_defect(m.as_ref());
        if dev > STATE_TOL {
            return Err(Error::NotHermitian { max_deviation: dev });
        }
        let tr = linalg::trace(m.as_ref());
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr} != 1")));
        }
        Ok(Self { grid: *grid, d, lift, m })
    }

    pub(crate) fn from_parts_unchecked(grid: &PhaseSpaceGrid, d: usize, lift: LiftKind, m: CMat) -> Self {
        Self { grid: *grid, d, lift, m }
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn quantum_dim(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn lift(&self) -> LiftKind {
        self.lift
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn trace(&self) -> c64 {
        linalg::trace(self.m.as_ref())
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::hermitian_eigenvalues(self.m.as_ref())
    }

    pub fn psd_report(&self) -> Result<PsdReport> {
        let min_eigenvalue = self.eigenvalues()?.into_iter().fold(f64::INFINITY, f64::min);
        Ok(PsdReport { min_eigenvalue, is_psd: min_eigenvalue >= -STATE_TOL })
    }

    /// The `d×d` diagonal block at grid point `xi`.
    pub fn block(&self, xi: usize) -> CMat {
        let o = xi * self.d;
        CMat::from_fn(self.d, self.d, |i, j| self.m[(o + i, o + j)])
    }

    /// `Tr(ρ_H π_H(f))`.
    pub fn expectation(&self, f: &HybridOperator) -> Result<c64> {
        check_len(self.d, f.quantum_dim())?;
        check_len(self.grid.n_points(), f.grid().n_points())?;
        let mut s = ZERO;
        for xi in 0..self.grid.n_points() {
            s += trace_product(self.block(xi).as_ref(), f.block(xi).as_ref());
        }
        Ok(s)
    }

    /// Per-cell `Tr_Q` of the diagonal blocks divided by `ΔΩ`, unnormalized.
    pub fn classical_marginal_values(&self) -> Vec<f64> {
        let w = self.grid.cell_volume();
        (0..self.grid.n_points())
            .map(|xi| (0..self.d).map(|m| self.m[(xi * self.d + m, xi * self.d + m)].re).sum::<f64>() / w)
            .collect()
    }

    /// `Tr_C ρ_H` without validation.
    pub fn partial_trace_classical(&self) -> CMat {
        let mut acc = CMat::zeros(self.d, self.d);
        for xi in 0..self.grid.n_points() {
            acc += self.block(xi);
        }
        acc
    }
}

/// Block-diagonal lift with ξ-block `ΔΩ·ρ(ξ)`.
pub fn lift_block_diagonal(state: &HybridState) -> Result<HybridDensityMatrix> {
    let (d, n) = (state.quantum_dim(), state.dim());
    check_dense(n)?;
    let w = state.grid().cell_volume();
    let mut m = CMat::zeros(n, n);
    for (xi, b) in state.blocks().iter().enumerate() {
        for j in 0..d {
            for i in 0..d {
                m[(xi * d + i, xi * d + j)] = b[(i, j)] * w;
            }
        }
    }
    Ok(HybridDensityMatrix { grid: *state.grid(), d, lift: LiftKind::BlockDiagonal, m })
}

/// Phase of `c` unwrapped along the grid ordering, `0` where `c = 0`.
fn unwrapped_phase(c: &[c64]) -> Vec<f64> {
    let mut prev: Option<f64> = None;
    c.iter()
        .map(|z| {
            if *z == ZERO {
                return 0.0;
            }
            let a = z.arg();
            let th = match prev {
                None => a,
                Some(p) => a + 2.0 * PI * ((p - a) / (2.0 * PI)).round(),
            };
            prev = Some(th);
            th
        })
        .collect()
}

/// Factors `g_{mm'}` of the coherent lift, indexed `m·d + m'`:
/// `ρ_H = Σ_{mm'} (g_{mm'} g_{mm'}ᵀ) ⊗ |m⟩⟨m'|` with
/// `g_{mm'}(ξ) = √(ΔΩ·r(ξ)) e^{iθ(ξ)/2}` for `⟨m|ρ(ξ)|m'⟩ = r e^{iθ}`.
pub fn coherent_factors(state: &HybridState) -> Vec<Vec<c64>> {
    let d = state.quantum_dim();
    let w = state.grid().cell_volume();
    let mut out = vec![Vec::new(); d * d];
    for m in 0..d {
        for mp in m..d {
            let c: Vec<c64> = state.blocks().iter().map(|b| b[(m, mp)]).collect();
            let theta = if m == mp { vec![0.0; c.len()] } else { unwrapped_phase(&c) };
            let g: Vec<c64> = c
                .iter()
                .zip(&theta)
                .map(|(z, th)| {
                    let r = if m == mp { z.re.max(0.0) } else { z.norm() };
                    c64::from_polar((w * r).sqrt(), 0.5 * th)
                })
                .collect();
            out[mp * d + m] = g.iter().map(|z| z.conj()).collect();
            out[m * d + mp] = g;
        }
    }
    out
}

/// Coherent lift with entries `ΔΩ·√(r(ξ)r(ξ'))·e^{i(θ(ξ)+θ(ξ'))/2}`.
pub fn lift_coherent(state: &HybridState) -> Result<HybridDensityMatrix> {
    let (d, n) = (state.quantum_dim(), state.dim());
    check_dense(n)?;
    let g = coherent_factors(state);
    let m = CMat::from_fn(n, n, |i, j| {
        let (xi, a) = (i / d, i % d);
        let (xj, b) = (j / d, j % d);
        let f = &g[a * d + b];
        f[xi] * f[xj]
    });
    Ok(HybridDensityMatrix { grid: *state.grid(), d, lift: LiftKind::Coherent, m })
}

pub fn lift(state: &HybridState, kind: LiftKind) -> Result<HybridDensityMatrix> {
    match kind {
        LiftKind::BlockDiagonal => lift_block_diagonal(state),
        LiftKind::Coherent => lift_coherent(state),
    }
}

/// `Tr_C ρ_H` as a validated state.
pub fn quantum_marginal(rho: &HybridDensityMatrix) -> Result<QuantumState> {
    QuantumState::new(rho.partial_trace_classical())
}

/// Per-cell quantum trace of the diagonal blocks over `ΔΩ`.
pub fn classical_marginal_dm(rho: &HybridDensityMatrix) -> Result<ClassicalDensity> {
    let v = rho.classical_marginal_values().into_iter().map(|x| x.max(0.0)).collect();
    ClassicalDensity::from_unnormalized(v, rho.grid())
}

/// Both sides of `Tr_C(ρ_H^k) = ∫dΩ ρ(ξ)^k` under the block-diagonal lift.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerIdentity {
    /// `Tr_C(ρ_H^k) / ΔΩ^{k-1}` from dense powers of the lift.
    pub lhs: QuantumOperator,
    /// `ΔΩ·Σ_ξ ρ(ξ)^k`.
    pub rhs: QuantumOperator,
    pub residual: f64,
}

pub fn partial_trace_power_report(state: &HybridState, k: u32) -> Result<PowerIdentity> {
    let rhs = marginal_power_rhs(state, k)?;
    let lifted = lift_block_diagonal(state)?;
    let mut p = lifted.matrix().clone();
    for _ in 1..k {
        p = &p * lifted.matrix();
    }
    let scale = state.grid().cell_volume().powi(k as i32 - 1);
    let traced = HybridDensityMatrix::from_parts_unchecked(state.grid(), state.quantum_dim(), LiftKind::BlockDiagonal, p)
        .partial_trace_classical();
    let lhs = QuantumOperator::new(CMat::from_fn(traced.nrows(), traced.ncols(), |i, j| traced[(i, j)] / scale))?;
    let residual = linalg::max_abs_diff(lhs.matrix(), rhs.matrix());
    Ok(PowerIdentity { lhs, rhs, residual })
}

/// `∫dΩ ρ(ξ)^k`, after checking it against the partial trace of the lifted power.
pub fn partial_trace_power(state: &HybridState, k: u32) -> Result<QuantumOperator> {
    let r = partial_trace_power_report(state, k)?;
    if r.residual > POWER_IDENTITY_TOL {
        return Err(Error::IdentityViolation { what: "marginal power", residual: r.residual });
    }
    Ok(r.rhs)
}

/// Density operator kept as `Σ_k |a_k⟩⟨b_k|` so it can be propagated one
/// vector at a time on product spaces too large for dense matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct LowRankDensity {
    grid: PhaseSpaceGrid,
    d: usize,
    left: Vec<Vec<c64>>,
    right: Vec<Vec<c64>>,
}

impl LowRankDensity {
    pub fn new(grid: &PhaseSpaceGrid, d: usize, left: Vec<Vec<c64>>, right: Vec<Vec<c64>>) -> Result<Self> {
        check_len(left.len(), right.len())?;
        let n = grid.n_points() * d;
        for v in left.iter().chain(&right) {
            check_len(n, v.len())?;
        }
        Ok(Self { grid: *grid, d, left, right })
    }

    /// `d²` outer products reproducing the coherent lift.
    pub fn coherent(state: &HybridState) -> Self {
        let d = state.quantum_dim();
        let n = state.dim();
        let g = coherent_factors(state);
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for m in 0..d {
            for mp in 0..d {
                let f = &g[m * d + mp];
                let mut a = vec![ZERO; n];
                let mut b = vec![ZERO; n];
                for (xi, z) in f.iter().enumerate() {
                    a[xi * d + m] = *z;
                    b[xi * d + mp] = z.conj();
                }
                left.push(a);
                right.push(b);
            }
        }
        Self { grid: *state.grid(), d, left, right }
    }

    /// `Σ_ξ Σ_λ |w⟩⟨w|` with `w = √(ΔΩλ) |ξ⟩⊗v` from each block's eigenpairs.
    pub fn block_diagonal(state: &HybridState) -> Result<Self> {
        let d = state.quantum_dim();
        let n = state.dim();
        let w = state.grid().cell_volume();
        let mut vecs = Vec::new();
        for (xi, b) in state.blocks().iter().enumerate() {
            let e = linalg::HermitianEigen::new(b.as_ref())?;
            for (k, &l) in e.values.iter().enumerate() {
                if l <= 0.0 {
                    continue;
                }
                let s = (w * l).sqrt();
                let mut v = vec![ZERO; n];
                for m in 0..d {
                    v[xi * d + m] = e.vectors[(m, k)] * s;
                }
                vecs.push(v);
            }
        }
        Ok(Self { grid: *state.grid(), d, right: vecs.clone(), left: vecs })
    }

    pub fn from_lift(state: &HybridState, kind: LiftKind) -> Result<Self> {
        match kind {
            LiftKind::BlockDiagonal => Self::block_diagonal(state),
            LiftKind::Coherent => Ok(Self::coherent(state)),
        }
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn quantum_dim(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.grid.n_points() * self.d
    }

    pub fn rank(&self) -> usize {
        self.left.len()
    }

    /// `Σ |U a_k⟩⟨U b_k|` for a map `U` applied vector by vector.
    pub fn map(&self, mut u: impl FnMut(&[c64]) -> Result<Vec<c64>>) -> Result<Self> {
        let left = self.left.iter().map(|v| u(v)).collect::<Result<Vec<_>>>()?;
        let right = self.right.iter().map(|v| u(v)).collect::<Result<Vec<_>>>()?;
        Ok(Self { grid: self.grid, d: self.d, left, right })
    }

    pub fn trace(&self) -> c64 {
        self.left.iter().zip(&self.right).map(|(a, b)| linalg::dot(b, a)).sum()
    }

    /// Diagonal `d×d` block at grid point `xi`.
    pub fn block(&self, xi: usize) -> CMat {
        let d = self.d;
        let mut out = CMat::zeros(d, d);
        for (a, b) in self.left.iter().zip(&self.right) {
            for j in 0..d {
                let bj = b[xi * d + j].conj();
                if bj == ZERO {
                    continue;
                }
                for i in 0..d {
                    out[(i, j)] += a[xi * d + i] * bj;
                }
            }
        }
        out
    }

    pub fn classical_marginal_values(&self) -> Vec<f64> {
        let w = self.grid.cell_volume();
        let d = self.d;
        let mut out = vec![0.0; self.grid.n_points()];
        for (a, b) in self.left.iter().zip(&self.right) {
            for (xi, o) in out.iter_mut().enumerate() {
                for m in 0..d {
                    *o += (a[xi * d + m] * b[xi * d + m].conj()).re;
                }
            }
        }
        out.iter_mut().for_each(|v| *v /= w);
        out
    }

    pub fn partial_trace_classical(&self) -> CMat {
        let mut acc = CMat::zeros(self.d, self.d);
        for xi in 0..self.grid.n_points() {
            acc += self.block(xi);
        }
        acc
    }

    pub fn to_dense(&self) -> Result<CMat> {
        let n = self.dim();
        check_dense(n)?;
        let mut m = CMat::zeros(n, n);
        for (a, b) in self.left.iter().zip(&self.right) {
            for j in 0..n {
                let bj = b[j].conj();
                if bj == ZERO {
                    continue;
                }
                for i in 0..n {
                    m[(i, j)] += a[i] * bj;
                }
            }
        }
        Ok(m)
    }

    /// Eigenvalues of `B†A`, which are the nonzero eigenvalues of `AB†`;
    /// the remaining `dim - rank` are zero.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        let r = self.rank();
        let m = CMat::from_fn(r, r, |i, j| linalg::dot(&self.right[i], &self.left[j]));
        let ev = m.eigenvalues().map_err(|e| Error::Eigendecomposition(format!("{e:?}")))?;
        Ok(ev.into_iter().map(|z| z.re).collect())
    }

    /// `‖self - other‖_F` through Gram matrices, never forming either operator.
    pub fn frobenius_distance(&self, other: &Self) -> Result<f64> {
        check_len(self.dim(), other.dim())?;
        let a: Vec<&Vec<c64>> = self.left.iter().chain(&other.left).collect();
        let b: Vec<&Vec<c64>> = self.right.iter().chain(&other.right).collect();
        let k = a.len();
        let sign = |i: usize| if i < self.rank() { 1.0 } else { -1.0 };
        let ga = CMat::from_fn(k, k, |i, j| linalg::dot(a[i], a[j]) * (sign(i) * sign(j)));
        let gb = CMat::from_fn(k, k, |i, j| linalg::dot(b[i], b[j]));
        Ok(trace_product(ga.as_ref(), gb.as_ref()).re.max(0.0).sqrt())
    }
}
