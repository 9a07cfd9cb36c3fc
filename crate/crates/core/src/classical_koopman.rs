//! Koopman representation of classical mechanics on the grid: multiplication
//! operators, conjugate momenta, the Liouvillian and its unitary group.

use std::f64::consts::PI;

use crate::error::{check_len, Error, Result};
use crate::linalg::{
    self, c64, fourier_derivative_matrix, krylov_propagate, CMat, HermitianEigen, KrylovOptions, LinearOperator,
    SparseOperator, ZERO,
};
use crate::phase_space::{Axis, Boundary, ClassicalDensity, ClassicalFunction, HamiltonianField, PhaseSpaceGrid, Wavefunction};

/// Operators of at most this dimension are diagonalized densely; larger ones
/// are propagated by Lanczos.
pub const DENSE_LIMIT: usize = 1024;
/// Hermiticity tolerance for an assembled Liouvillian.
pub const LIOUVILLIAN_HERMITIAN_TOL: f64 = 1e-12;

/// Finite-difference or spectral first derivative.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum DerivativeScheme {
    #[default]
    Central2,
    Central4,
    /// Trigonometric interpolation; periodic grids only.
    Fourier,
}

impl DerivativeScheme {
    pub fn name(self) -> &'static str {
        match self {
            DerivativeScheme::Central2 => "central2",
            DerivativeScheme::Central4 => "central4",
            DerivativeScheme::Fourier => "fourier",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "central2" => Ok(DerivativeScheme::Central2),
            "central4" => Ok(DerivativeScheme::Central4),
            "fourier" => Ok(DerivativeScheme::Fourier),
            other => Err(Error::Config(format!("unknown derivative scheme {other:?} (expected central2|central4|fourier)"))),
        }
    }

    /// Scheme for a stencil order (2 or 4).
    pub fn from_order(order: usize) -> Result<Self> {
        match order {
            2 => Ok(DerivativeScheme::Central2),
            4 => Ok(DerivativeScheme::Central4),
            other => Err(Error::InvalidArgument(format!("stencil order must be 2 or 4, got {other}"))),
        }
    }

    fn check(self, grid: &PhaseSpaceGrid) -> Result<()> {
        if self != DerivativeScheme::Central2 && grid.boundary() != Boundary::Periodic {
            return Err(Error::IncompatibleBoundary { scheme: self.name() });
        }
        Ok(())
    }
}

/// `π_C(a)`: pointwise multiplication by a grid function.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplicativeOperator {
    diag: Vec<c64>,
}

pub fn represent_multiplicative(a: &ClassicalFunction, grid: &PhaseSpaceGrid) -> Result<MultiplicativeOperator> {
    a.check_grid(grid)?;
    Ok(MultiplicativeOperator { diag: a.values().iter().map(|v| c64::new(*v, 0.0)).collect() })
}

impl MultiplicativeOperator {
    pub fn from_complex(a: &Wavefunction, grid: &PhaseSpaceGrid) -> Result<Self> {
        a.check_grid(grid)?;
        Ok(Self { diag: a.values().to_vec() })
    }

    pub fn diag(&self) -> &[c64] {
        &self.diag
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        check_len(self.diag.len(), other.diag.len())?;
        Ok(Self { diag: self.diag.iter().zip(&other.diag).map(|(a, b)| a * b).collect() })
    }

    pub fn to_sparse(&self) -> SparseOperator {
        SparseOperator::diagonal(&self.diag)
    }

    pub fn to_dense(&self) -> CMat {
        let n = self.diag.len();
        CMat::from_fn(n, n, |i, j| if i == j { self.diag[i] } else { ZERO })
    }
}

impl LinearOperator for MultiplicativeOperator {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply_into(&self, x: &[c64], y: &mut [c64]) {
        for ((yi, a), xi) in y.iter_mut().zip(&self.diag).zip(x) {
            *yi = a * xi;
        }
    }
}

/// Real antisymmetric first-derivative matrix along one axis.
pub fn derivative_matrix(grid: &PhaseSpaceGrid, axis: Axis, scheme: DerivativeScheme) -> Result<SparseOperator> {
    scheme.check(grid)?;
    let h = grid.axis_spacing(axis);
    let n = grid.n_points();
    let mut t = Vec::new();
    let mut push = |k: usize, offset: isize, w: f64| {
        if let Some(j) = grid.neighbor(k, axis, offset) {
            t.push((k, j, c64::new(w, 0.0)));
        }
    };
    match scheme {
        DerivativeScheme::Central2 => {
            for k in 0..n {
                push(k, 1, 0.5 / h);
                push(k, -1, -0.5 / h);
            }
        }
        DerivativeScheme::Central4 => {
            for k in 0..n {
                push(k, 1, 8.0 / (12.0 * h));
                push(k, -1, -8.0 / (12.0 * h));
                push(k, 2, -1.0 / (12.0 * h));
                push(k, -2, 1.0 / (12.0 * h));
            }
        }
        DerivativeScheme::Fourier => {
            let m = grid.axis_len(axis);
            let dm = fourier_derivative_matrix(m, grid.axis_period(axis));
            for k in 0..n {
                let (iq, ip) = grid.coords(k);
                let c = if axis == Axis::Q { iq } else { ip };
                for j in 0..m {
                    let w = dm[c * m + j];
                    if w != 0.0 {
                        push(k, j as isize - c as isize, w);
                    }
                }
            }
        }
    }
    Ok(SparseOperator::from_triplets(n, t))
}

/// Conjugate momentum `Π = -i ∂` along one axis.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumOperator {
    axis: Axis,
    scheme: DerivativeScheme,
    derivative: SparseOperator,
}

pub fn momentum_operator(grid: &PhaseSpaceGrid, axis: Axis, order: usize) -> Result<MomentumOperator> {
    MomentumOperator::new(grid, axis, DerivativeScheme::from_order(order)?)
}

impl MomentumOperator {
    pub fn new(grid: &PhaseSpaceGrid, axis: Axis, scheme: DerivativeScheme) -> Result<Self> {
        Ok(Self { axis, scheme, derivative: derivative_matrix(grid, axis, scheme)? })
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn scheme(&self) -> DerivativeScheme {
        self.scheme
    }

    /// The real derivative `D` with `Π = -iD`.
    pub fn derivative(&self) -> &SparseOperator {
        &self.derivative
    }

    pub fn to_sparse(&self) -> SparseOperator {
        self.derivative.scale(c64::new(0.0, -1.0))
    }
}

impl LinearOperator for MomentumOperator {
    fn dim(&self) -> usize {
        self.derivative.dim()
    }

    fn apply_into(&self, x: &[c64], y: &mut [c64]) {
        self.derivative.apply_into(x, y);
        y.iter_mut().for_each(|v| *v = c64::new(v.im, -v.re));
    }
}

/// How `α Π_q + β Π_p` is turned into a matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Assembly {
    /// `½(αΠ + Πα)`: Hermitian for any field.
    #[default]
    Symmetrized,
    /// `αΠ`: Hermitian only when the coefficients are constant along their axis.
    Naive,
}

/// Koopman generator `L = α Π_q + β Π_p (+ H̃)` acting on classical wavefunctions.
#[derive(Clone, Debug)]
pub struct KoopmanLiouvillian {
    op: SparseOperator,
    scheme: DerivativeScheme,
    grid: PhaseSpaceGrid,
}

pub fn build_liouvillian(field: &HamiltonianField, grid: &PhaseSpaceGrid) -> Result<KoopmanLiouvillian> {
    KoopmanLiouvillian::assemble(field, grid, DerivativeScheme::Central2, Assembly::Symmetrized)
}

impl KoopmanLiouvillian {
    pub fn assemble(
        field: &HamiltonianField,
        grid: &PhaseSpaceGrid,
        scheme: DerivativeScheme,
        assembly: Assembly,
    ) -> Result<Self> {
        field.alpha.check_grid(grid)?;
        field.beta.check_grid(grid)?;
        let mut total = SparseOperator::zeros(grid.n_points());
        for (axis, coef) in [(Axis::Q, &field.alpha), (Axis::P, &field.beta)] {
            if coef.values().iter().all(|v| *v == 0.0) {
                continue;
            }
            let d = derivative_matrix(grid, axis, scheme)?;
            let c = SparseOperator::diagonal(&coef.to_complex().into_values());
            let term = match assembly {
                Assembly::Symmetrized => c.compose(&d)?.add(&d.compose(&c)?)?.scale(c64::new(0.0, -0.5)),
                Assembly::Naive => c.compose(&d)?.scale(c64::new(0.0, -1.0)),
            };
            total = total.add(&term)?;
        }
        Ok(Self { op: total, scheme, grid: *grid })
    }

    /// Adds a multiplicative classical term `diag(h̃)`.
    pub fn with_multiplicative(mut self, h_tilde: &ClassicalFunction) -> Result<Self> {
        h_tilde.check_grid(&self.grid)?;
        self.op = self.op.add(&SparseOperator::diagonal(&h_tilde.to_complex().into_values()))?;
        Ok(self)
    }

    pub fn operator(&self) -> &SparseOperator {
        &self.op
    }

    pub fn scheme(&self) -> DerivativeScheme {
        self.scheme
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.op.hermiticity_defect()
    }
}

impl LinearOperator for KoopmanLiouvillian {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply_into(&self, x: &[c64], y: &mut [c64]) {
        self.op.apply_into(x, y)
    }
}

/// Propagation method for `e^{-iLt}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    /// Dense below [`DENSE_LIMIT`], Lanczos above.
    Auto,
    Dense,
    Krylov(KrylovOptions),
}

/// `e^{-iLt}` with the eigendecomposition, if any, computed once.
#[derive(Clone, Debug)]
pub struct KoopmanPropagator {
    inner: Inner,
}

#[derive(Clone, Debug)]
enum Inner {
    Dense(HermitianEigen),
    Krylov(SparseOperator, KrylovOptions),
}

impl KoopmanPropagator {
    pub fn new(l: &KoopmanLiouvillian) -> Result<Self> {
        Self::with_method(l.operator(), Method::Auto)
    }

    pub fn with_method(op: &SparseOperator, method: Method) -> Result<Self> {
        let dev = op.hermiticity_defect();
        if dev > LIOUVILLIAN_HERMITIAN_TOL {
            return Err(Error::NotHermitian { max_deviation: dev });
        }
        let method = match method {
            Method::Auto if op.dim() <= DENSE_LIMIT => Method::Dense,
            Method::Auto => Method::Krylov(KrylovOptions::default()),
            m => m,
        };
        let inner = match method {
            Method::Dense => Inner::Dense(HermitianEigen::new(op.to_dense().as_ref())?),
            Method::Krylov(opts) => Inner::Krylov(op.clone(), opts),
            Method::Auto => unreachable!(),
        };
        Ok(Self { inner })
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.inner, Inner::Dense(_))
    }

    pub fn dim(&self) -> usize {
        match &self.inner {
            Inner::Dense(e) => e.dim(),
            Inner::Krylov(op, _) => op.dim(),
        }
    }

    pub fn propagate(&self, psi: &[c64], t: f64) -> Result<Vec<c64>> {
        check_len(self.dim(), psi.len())?;
        match &self.inner {
            Inner::Dense(e) => Ok(e.propagate(psi, t)),
            Inner::Krylov(op, opts) => krylov_propagate(op, psi, t, *opts),
        }
    }
}

/// `ψ(t) = e^{-iLt} ψ`.
pub fn koopman_propagate(psi: &Wavefunction, l: &KoopmanLiouvillian, t: f64) -> Result<Wavefunction> {
    psi.check_grid(l.grid())?;
    let out = KoopmanPropagator::new(l)?.propagate(psi.values(), t)?;
    Wavefunction::new(out, l.grid())
}

/// Rank-one classical GNS density matrix `|v⟩⟨v|` with `v = √(ΔΩ·F)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalGnsDensity {
    v: Vec<c64>,
}

pub fn classical_gns_dm(f: &ClassicalDensity, grid: &PhaseSpaceGrid) -> Result<ClassicalGnsDensity> {
    check_len(grid.n_points(), f.values().len())?;
    let w = grid.cell_volume();
    Ok(ClassicalGnsDensity { v: f.values().iter().map(|x| c64::new((w * x).sqrt(), 0.0)).collect() })
}

impl ClassicalGnsDensity {
    /// The unit vector the projector is built on.
    pub fn vector(&self) -> &[c64] {
        &self.v
    }

    /// Entry `ΔΩ·√(F_i F_j)`.
    pub fn entry(&self, i: usize, j: usize) -> c64 {
        self.v[i] * self.v[j].conj()
    }

    pub fn trace(&self) -> f64 {
        linalg::norm(&self.v).powi(2)
    }

    pub fn to_dense(&self) -> CMat {
        let n = self.v.len();
        CMat::from_fn(n, n, |i, j| self.entry(i, j))
    }

    /// `Tr(ρ_C A)`.
    pub fn expectation(&self, a: &impl LinearOperator) -> c64 {
        linalg::dot(&self.v, &a.apply(&self.v))
    }
}

/// Outcome of a literal diagonality test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiplicativeReport {
    pub is_multiplicative: bool,
    /// Off-diagonal Frobenius norm over total Frobenius norm.
    pub off_diagonal_mass: f64,
}

fn multiplicative_report(entries: impl Iterator<Item = (usize, usize, c64)>, tol: f64) -> MultiplicativeReport {
    let (mut off, mut total) = (0.0, 0.0);
    for (i, j, v) in entries {
        let m = v.norm_sqr();
        total += m;
        if i != j {
            off += m;
        }
    }
    let off_diagonal_mass = if total > 0.0 { (off / total).sqrt() } else { 0.0 };
    MultiplicativeReport { is_multiplicative: off_diagonal_mass <= tol, off_diagonal_mass }
}

pub fn check_multiplicative(op: &SparseOperator, tol: f64) -> MultiplicativeReport {
    multiplicative_report(op.triplets(), tol)
}

pub fn check_multiplicative_dense(m: faer::MatRef<'_, c64>, tol: f64) -> MultiplicativeReport {
    let entries = (0..m.ncols()).flat_map(move |j| (0..m.nrows()).map(move |i| (i, j, m[(i, j)])));
    multiplicative_report(entries, tol)
}

/// Smooth test functions resolved by every supported scheme: plane waves
/// `e^{2πi(k q̃ + l p̃)}` with `|k|, |l| ≤ max_mode` on periodic grids and
/// products of box sine modes on zero-boundary grids (`q̃`, `p̃` are the
/// coordinates rescaled to the unit box).
pub fn band_limited_probes(grid: &PhaseSpaceGrid, max_mode: usize) -> Vec<Vec<c64>> {
    let (q0, _) = grid.q_range();
    let (p0, _) = grid.p_range();
    let (lq, lp) = (grid.axis_period(Axis::Q), grid.axis_period(Axis::P));
    let m = max_mode as i64;
    let mut probes = Vec::new();
    match grid.boundary() {
        Boundary::Periodic => {
            for k in -m..=m {
                for l in -m..=m {
                    probes.push(
                        grid.points()
                            .map(|(q, p)| {
                                c64::cis(2.0 * PI * (k as f64 * (q - q0) / lq + l as f64 * (p - p0) / lp))
                            })
                            .collect(),
                    );
                }
            }
        }
        Boundary::Zero => {
            for k in 1..=m + 1 {
                for l in 1..=m + 1 {
                    probes.push(
                        grid.points()
                            .map(|(q, p)| {
                                let s = (PI * k as f64 * (q - q0) / lq).sin() * (PI * l as f64 * (p - p0) / lp).sin();
                                c64::new(s, 0.0)
                            })
                            .collect(),
                    );
                }
            }
        }
    }
    probes
}

/// [`band_limited_probes`] damped by a Gaussian window of width `width`
/// about the box center. Under flows that do not respect the box
/// periodicity these probes stay inside the region where the discrete
/// evolution is meaningful.
pub fn windowed_probes(grid: &PhaseSpaceGrid, max_mode: usize, width: f64) -> Vec<Vec<c64>> {
    let (qc, pc) = (0.5 * (grid.q_range().0 + grid.q_range().1), 0.5 * (grid.p_range().0 + grid.p_range().1));
    let window: Vec<f64> = grid
        .points()
        .map(|(q, p)| (-((q - qc).powi(2) + (p - pc).powi(2)) / (2.0 * width * width)).exp())
        .collect();
    band_limited_probes(grid, max_mode)
        .into_iter()
        .map(|v| v.iter().zip(&window).map(|(x, w)| x * w).collect())
        .collect()
}

/// Result of the weak multiplicative test.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakMultiplicativeReport {
    /// `max_k max_ξ |(Bψ_k)(ξ) - m(ξ)ψ_k(ξ)|` for the best-fit multiplier `m`.
    pub residual: f64,
    pub multiplier: Vec<c64>,
}

/// Fits the pointwise multiplier that best explains `B` on the probe set
/// and measures what is left over.
pub fn weak_multiplicative_residual(apply: impl Fn(&[c64]) -> Vec<c64>, probes: &[Vec<c64>]) -> WeakMultiplicativeReport {
    let images: Vec<Vec<c64>> = probes.iter().map(|p| apply(p)).collect();
    weak_multiplicative_fit(probes, &images)
}

/// Same as [`weak_multiplicative_residual`] with the images `Bψ_k` given.
pub fn weak_multiplicative_fit(probes: &[Vec<c64>], images: &[Vec<c64>]) -> WeakMultiplicativeReport {
    let n = probes.first().map_or(0, Vec::len);
    let mut num = vec![ZERO; n];
    let mut den = vec![0.0; n];
    for (p, b) in probes.iter().zip(images) {
        for i in 0..n {
            num[i] += p[i].conj() * b[i];
            den[i] += p[i].norm_sqr();
        }
    }
    let multiplier: Vec<c64> = num.iter().zip(&den).map(|(a, d)| if *d > 0.0 { a / d } else { ZERO }).collect();
    let mut residual: f64 = 0.0;
    for (p, b) in probes.iter().zip(images) {
        for i in 0..n {
            residual = residual.max((b[i] - multiplier[i] * p[i]).norm());
        }
    }
    WeakMultiplicativeReport { residual, multiplier }
}

/// `[π_C(a), op]` as a sparse matrix.
pub fn commutator_with_multiplicative(a: &MultiplicativeOperator, op: &SparseOperator) -> Result<SparseOperator> {
    check_len(op.dim(), a.dim())?;
    let d = a.diag();
    Ok(SparseOperator::from_triplets(op.dim(), op.triplets().map(|(i, j, v)| (i, j, (d[i] - d[j]) * v))))
}
