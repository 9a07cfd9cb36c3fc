//! Discretized classical phase space for one degree of freedom.
//!
//! Points are enumerated row-major with `q` as the slow index:
//! `index = i_q * n_p + i_p`. Periodic grids place `n` points on
//! `[min, max)`; zero-boundary grids place `n` interior points on
//! `(min, max)` with implicit zero ghost values at both ends.

use std::f64::consts::PI;
use std::ops::{Add, Mul};

use crate::error::{check_len, Error, Result};
use crate::linalg::{c64, ZERO};

pub const MIN_POINTS_PER_AXIS: usize = 4;
/// Tolerance on `ΔΩ·Σρ = 1` for a valid density.
pub const DENSITY_MASS_TOL: f64 = 1e-10;
/// Tolerance on `ΔΩ·Σ|ψ|² = 1` for a valid classical wavefunction.
pub const WAVEFUNCTION_NORM_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundary {
    Periodic,
    Zero,
}

impl Boundary {
    pub fn name(self) -> &'static str {
        match self {
            Boundary::Periodic => "periodic",
            Boundary::Zero => "zero",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "periodic" => Ok(Boundary::Periodic),
            "zero" => Ok(Boundary::Zero),
            other => Err(Error::Config(format!("unknown boundary {other:?} (expected periodic|zero)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    Q,
    P,
}

/// Uniform rectangular grid on a box in Darboux coordinates `(q, p)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseSpaceGrid {
    q_min: f64,
    q_max: f64,
    p_min: f64,
    p_max: f64,
    n_q: usize,
    n_p: usize,
    boundary: Boundary,
    dq: f64,
    dp: f64,
}

impl PhaseSpaceGrid {
    pub fn new(
        q_range: (f64, f64),
        p_range: (f64, f64),
        n_q: usize,
        n_p: usize,
        boundary: Boundary,
    ) -> Result<Self> {
        let (q_min, q_max) = q_range;
        let (p_min, p_max) = p_range;
        if ![q_min, q_max, p_min, p_max].iter().all(|x| x.is_finite()) {
            return Err(Error::Config("grid bounds must be finite".into()));
        }
        if q_max <= q_min || p_max <= p_min {
            return Err(Error::Config("grid bounds must satisfy min < max".into()));
        }
        if n_q < MIN_POINTS_PER_AXIS || n_p < MIN_POINTS_PER_AXIS {
            return Err(Error::Config(format!(
                "grid needs at least {MIN_POINTS_PER_AXIS} points per axis, got {n_q}x{n_p}"
            )));
        }
        let cells = |n: usize| match boundary {
            Boundary::Periodic => n as f64,
            Boundary::Zero => (n + 1) as f64,
        };
        let dq = (q_max - q_min) / cells(n_q);
        let dp = (p_max - p_min) / cells(n_p);
        Ok(Self { q_min, q_max, p_min, p_max, n_q, n_p, boundary, dq, dp })
    }

    /// Square periodic grid `[-half_width, half_width)²` with `n` points per axis.
    pub fn periodic_square(half_width: f64, n: usize) -> Result<Self> {
        Self::new((-half_width, half_width), (-half_width, half_width), n, n, Boundary::Periodic)
    }

    pub fn n_q(&self) -> usize {
        self.n_q
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn n_points(&self) -> usize {
        self.n_q * self.n_p
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn q_range(&self) -> (f64, f64) {
        (self.q_min, self.q_max)
    }

    pub fn p_range(&self) -> (f64, f64) {
        (self.p_min, self.p_max)
    }

    pub fn dq(&self) -> f64 {
        self.dq
    }

    pub fn dp(&self) -> f64 {
        self.dp
    }

    /// Cell weight `ΔΩ = Δq·Δp`.
    pub fn cell_volume(&self) -> f64 {
        self.dq * self.dp
    }

    /// Total phase-space volume covered by the grid cells.
    pub fn volume(&self) -> f64 {
        self.cell_volume() * self.n_points() as f64
    }

    pub fn index(&self, i_q: usize, i_p: usize) -> usize {
        debug_assert!(i_q < self.n_q && i_p < self.n_p);
        i_q * self.n_p + i_p
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index / self.n_p, index % self.n_p)
    }

    pub fn q(&self, i_q: usize) -> f64 {
        match self.boundary {
            Boundary::Periodic => self.q_min + i_q as f64 * self.dq,
            Boundary::Zero => self.q_min + (i_q + 1) as f64 * self.dq,
        }
    }

    pub fn p(&self, i_p: usize) -> f64 {
        match self.boundary {
            Boundary::Periodic => self.p_min + i_p as f64 * self.dp,
            Boundary::Zero => self.p_min + (i_p + 1) as f64 * self.dp,
        }
    }

    pub fn point(&self, index: usize) -> (f64, f64) {
        let (i, j) = self.coords(index);
        (self.q(i), self.p(j))
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.n_points()).map(|k| self.point(k))
    }

    pub fn axis_len(&self, axis: Axis) -> usize {
        match axis {
            Axis::Q => self.n_q,
            Axis::P => self.n_p,
        }
    }

    pub fn axis_spacing(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Q => self.dq,
            Axis::P => self.dp,
        }
    }

    /// Distance between consecutive indices of points along `axis`.
    pub fn axis_stride(&self, axis: Axis) -> usize {
        match axis {
            Axis::Q => self.n_p,
            Axis::P => 1,
        }
    }

    /// Period length along `axis` (box side length).
    pub fn axis_period(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Q => self.q_max - self.q_min,
            Axis::P => self.p_max - self.p_min,
        }
    }

    /// Neighbor of `index` shifted by `offset` along `axis`, or `None` when it
    /// falls on a zero ghost point.
    pub fn neighbor(&self, index: usize, axis: Axis, offset: isize) -> Option<usize> {
        let (i, j) = self.coords(index);
        let n = self.axis_len(axis) as isize;
        let pos = match axis {
            Axis::Q => i as isize,
            Axis::P => j as isize,
        } + offset;
        let pos = match self.boundary {
            Boundary::Periodic => pos.rem_euclid(n),
            Boundary::Zero if (0..n).contains(&pos) => pos,
            Boundary::Zero => return None,
        } as usize;
        Some(match axis {
            Axis::Q => self.index(pos, j),
            Axis::P => self.index(i, pos),
        })
    }

    pub fn sample<T>(&self, f: impl Fn(f64, f64) -> T) -> GridFunction<T> {
        GridFunction { values: self.points().map(|(q, p)| f(q, p)).collect() }
    }
}

/// Build a grid from `[q_min, q_max, p_min, p_max]`.
pub fn build_grid(bounds: [f64; 4], n_q: usize, n_p: usize, boundary: Boundary) -> Result<PhaseSpaceGrid> {
    PhaseSpaceGrid::new((bounds[0], bounds[1]), (bounds[2], bounds[3]), n_q, n_p, boundary)
}

/// One value per grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T> {
    values: Vec<T>,
}

/// Real phase-space function (classical observable, Hamiltonian).
pub type ClassicalFunction = GridFunction<f64>;
/// Complex phase-space function (classical Koopman wavefunction).
pub type Wavefunction = GridFunction<c64>;

impl<T> GridFunction<T> {
    pub fn new(values: Vec<T>, grid: &PhaseSpaceGrid) -> Result<Self> {
        check_len(grid.n_points(), values.len())?;
        Ok(Self { values })
    }

    pub(crate) fn from_vec_unchecked(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> GridFunction<U> {
        GridFunction { values: self.values.iter().map(f).collect() }
    }

    pub fn check_grid(&self, grid: &PhaseSpaceGrid) -> Result<()> {
        check_len(grid.n_points(), self.values.len())
    }
}

impl<T: Copy> GridFunction<T> {
    pub fn constant(value: T, grid: &PhaseSpaceGrid) -> Self {
        Self { values: vec![value; grid.n_points()] }
    }

    pub fn zip_with<U: Copy, V>(&self, other: &GridFunction<U>, f: impl Fn(T, U) -> V) -> Result<GridFunction<V>> {
        check_len(self.len(), other.len())?;
        Ok(GridFunction { values: self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect() })
    }
}

impl ClassicalFunction {
    pub fn to_complex(&self) -> Wavefunction {
        self.map(|v| c64::new(*v, 0.0))
    }
}

/// Nonnegative phase-space density with `ΔΩ·Σρ = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalDensity {
    values: Vec<f64>,
}

impl ClassicalDensity {
    pub fn new(values: Vec<f64>, grid: &PhaseSpaceGrid) -> Result<Self> {
        check_len(grid.n_points(), values.len())?;
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidDensity(format!("value {v} at grid point {i}")));
        }
        let mass = grid.cell_volume() * values.iter().sum::<f64>();
        if (mass - 1.0).abs() > DENSITY_MASS_TOL {
            return Err(Error::InvalidDensity(format!("total mass {mass} != 1")));
        }
        Ok(Self { values })
    }

    /// Normalizes a nonnegative function to unit mass.
    pub fn from_unnormalized(values: Vec<f64>, grid: &PhaseSpaceGrid) -> Result<Self> {
        check_len(grid.n_points(), values.len())?;
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidDensity(format!("value {v} at grid point {i}")));
        }
        let mass = grid.cell_volume() * values.iter().sum::<f64>();
        if mass <= 0.0 {
            return Err(Error::InvalidDensity("zero total mass".into()));
        }
        Ok(Self { values: values.into_iter().map(|v| v / mass).collect() })
    }

    pub fn uniform(grid: &PhaseSpaceGrid) -> Self {
        Self { values: vec![1.0 / grid.volume(); grid.n_points()] }
    }

    /// Normalized Gaussian `exp(-((q-q0)² + (p-p0)²) / (2σ²))` sampled on the grid.
    pub fn gaussian(grid: &PhaseSpaceGrid, center: (f64, f64), sigma: f64) -> Result<Self> {
        let v = grid.sample(|q, p| (-((q - center.0).powi(2) + (p - center.1).powi(2)) / (2.0 * sigma * sigma)).exp());
        Self::from_unnormalized(v.into_values(), grid)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn as_function(&self) -> ClassicalFunction {
        GridFunction { values: self.values.clone() }
    }
}

/// `ΔΩ·Σ f`.
pub fn riemann_integral<T>(f: &GridFunction<T>, grid: &PhaseSpaceGrid) -> Result<T>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T> + Default,
{
    f.check_grid(grid)?;
    let sum = f.values.iter().fold(T::default(), |acc, v| acc + *v);
    Ok(sum * grid.cell_volume())
}

/// Second-order central difference along `axis` honoring the grid boundary.
pub fn central_difference(values: &[f64], grid: &PhaseSpaceGrid, axis: Axis) -> Vec<f64> {
    let h = grid.axis_spacing(axis);
    (0..grid.n_points())
        .map(|k| {
            let fwd = grid.neighbor(k, axis, 1).map_or(0.0, |j| values[j]);
            let bwd = grid.neighbor(k, axis, -1).map_or(0.0, |j| values[j]);
            (fwd - bwd) / (2.0 * h)
        })
        .collect()
}

/// Classical Hamiltonian with its vector-field coefficients
/// `alpha = ∂H/∂p` and `beta = -∂H/∂q`.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianField {
    pub h: ClassicalFunction,
    pub alpha: ClassicalFunction,
    pub beta: ClassicalFunction,
}

impl HamiltonianField {
    /// Discrete `∂_q alpha + ∂_p beta`.
    pub fn divergence(&self, grid: &PhaseSpaceGrid) -> Vec<f64> {
        let a = central_difference(self.alpha.values(), grid, Axis::Q);
        let b = central_difference(self.beta.values(), grid, Axis::P);
        a.iter().zip(&b).map(|(x, y)| x + y).collect()
    }
}

pub fn hamiltonian_field(h: &ClassicalFunction, grid: &PhaseSpaceGrid) -> Result<HamiltonianField> {
    h.check_grid(grid)?;
    let alpha = central_difference(h.values(), grid, Axis::P);
    let beta = central_difference(h.values(), grid, Axis::Q).into_iter().map(|v| -v).collect();
    Ok(HamiltonianField {
        h: h.clone(),
        alpha: GridFunction { values: alpha },
        beta: GridFunction { values: beta },
    })
}

/// Classical Hamiltonians whose flow is known in closed form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HamiltonianPreset {
    /// `H = p²/2`
    FreeParticle,
    /// `H = (q² + p²)/2`
    Harmonic,
    /// `H = p²/2 - force·q`
    LinearField { force: f64 },
}

impl HamiltonianPreset {
    pub const NAMES: [&'static str; 3] = ["free_particle", "harmonic", "linear_field"];

    pub fn name(&self) -> &'static str {
        match self {
            HamiltonianPreset::FreeParticle => "free_particle",
            HamiltonianPreset::Harmonic => "harmonic",
            HamiltonianPreset::LinearField { .. } => "linear_field",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "free_particle" => Ok(HamiltonianPreset::FreeParticle),
            "harmonic" => Ok(HamiltonianPreset::Harmonic),
            "linear_field" => Ok(HamiltonianPreset::LinearField { force: 1.0 }),
            other => Err(Error::OracleUnavailable(other.to_string())),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            HamiltonianPreset::FreeParticle => "p^2/2".into(),
            HamiltonianPreset::Harmonic => "(q^2 + p^2)/2".into(),
            HamiltonianPreset::LinearField { force } => format!("p^2/2 - {force:?}*q"),
        }
    }

    pub fn energy(&self, q: f64, p: f64) -> f64 {
        match *self {
            HamiltonianPreset::FreeParticle => 0.5 * p * p,
            HamiltonianPreset::Harmonic => 0.5 * (q * q + p * p),
            HamiltonianPreset::LinearField { force } => 0.5 * p * p - force * q,
        }
    }

    /// Exact flow `F_t(q, p)`.
    pub fn flow(&self, q: f64, p: f64, t: f64) -> (f64, f64) {
        match *self {
            HamiltonianPreset::FreeParticle => (q + p * t, p),
            HamiltonianPreset::Harmonic => {
                let (s, c) = t.sin_cos();
                (q * c + p * s, -q * s + p * c)
            }
            HamiltonianPreset::LinearField { force } => (q + p * t + 0.5 * force * t * t, p + force * t),
        }
    }

    /// Period of the flow, when it is periodic.
    pub fn period(&self) -> Option<f64> {
        match self {
            HamiltonianPreset::Harmonic => Some(2.0 * PI),
            _ => None,
        }
    }

    pub fn tabulate(&self, grid: &PhaseSpaceGrid) -> ClassicalFunction {
        grid.sample(|q, p| self.energy(q, p))
    }
}

/// Bilinear interpolation of grid data at an arbitrary point. Points outside
/// the box read zero; on periodic grids the last cell interpolates between
/// the final and the first point.
pub fn interpolate(values: &[f64], grid: &PhaseSpaceGrid, q: f64, p: f64) -> f64 {
    let axis_pos = |x: f64, min: f64, h: f64, n: usize| -> [(Option<usize>, f64); 2] {
        let u = match grid.boundary {
            Boundary::Periodic => (x - min) / h,
            Boundary::Zero => (x - min) / h - 1.0,
        };
        let i0 = u.floor();
        let frac = u - i0;
        if grid.boundary == Boundary::Periodic && !(0.0..n as f64).contains(&u) {
            return [(None, 0.0), (None, 0.0)];
        }
        let i0 = i0 as i64;
        let wrap = |i: i64| -> Option<usize> {
            match grid.boundary {
                Boundary::Periodic => Some(i.rem_euclid(n as i64) as usize),
                Boundary::Zero if (0..n as i64).contains(&i) => Some(i as usize),
                Boundary::Zero => None,
            }
        };
        [(wrap(i0), 1.0 - frac), (wrap(i0 + 1), frac)]
    };
    let qs = axis_pos(q, grid.q_min, grid.dq, grid.n_q);
    let ps = axis_pos(p, grid.p_min, grid.dp, grid.n_p);
    let mut acc = 0.0;
    for (iq, wq) in qs {
        for (ip, wp) in ps {
            if let (Some(iq), Some(ip)) = (iq, ip) {
                acc += wq * wp * values[grid.index(iq, ip)];
            }
        }
    }
    acc
}

/// Transport of a density along the exact flow, before renormalization.
#[derive(Clone, Debug)]
pub struct Transported {
    pub density: ClassicalDensity,
    /// `ΔΩ·Σ ρ0∘F_{-t}` prior to renormalization.
    pub raw_mass: f64,
}

/// Exact-characteristics solution of the Liouville equation,
/// `ρ(t) = ρ0 ∘ F_{-t}`, renormalized to unit mass.
pub fn liouville_oracle(
    rho0: &ClassicalDensity,
    grid: &PhaseSpaceGrid,
    preset: HamiltonianPreset,
    t: f64,
) -> Result<ClassicalDensity> {
    Ok(liouville_transport(rho0, grid, preset, t)?.density)
}

pub fn liouville_transport(
    rho0: &ClassicalDensity,
    grid: &PhaseSpaceGrid,
    preset: HamiltonianPreset,
    t: f64,
) -> Result<Transported> {
    check_len(grid.n_points(), rho0.values.len())?;
    if t == 0.0 {
        return Ok(Transported { density: rho0.clone(), raw_mass: 1.0 });
    }
    let raw: Vec<f64> = grid
        .points()
        .map(|(q, p)| {
            let (q0, p0) = preset.flow(q, p, -t);
            interpolate(&rho0.values, grid, q0, p0).max(0.0)
        })
        .collect();
    let raw_mass = grid.cell_volume() * raw.iter().sum::<f64>();
    let density = ClassicalDensity::from_unnormalized(raw, grid)?;
    Ok(Transported { density, raw_mass })
}

/// Classical Koopman wavefunction `ψ = √ρ` (nonnegative real branch).
pub fn density_to_wavefunction(rho: &ClassicalDensity) -> Wavefunction {
    GridFunction { values: rho.values.iter().map(|v| c64::new(v.sqrt(), 0.0)).collect() }
}

/// `ρ = |ψ|²`, renormalized.
pub fn wavefunction_to_density(psi: &Wavefunction, grid: &PhaseSpaceGrid) -> Result<ClassicalDensity> {
    psi.check_grid(grid)?;
    let dens: Vec<f64> = psi.values.iter().map(|z| z.norm_sqr()).collect();
    let mass = grid.cell_volume() * dens.iter().sum::<f64>();
    if mass == 0.0 || !mass.is_finite() {
        return Err(Error::ZeroNorm);
    }
    if (mass - 1.0).abs() > WAVEFUNCTION_NORM_TOL {
        return Err(Error::InvalidDensity(format!("wavefunction norm² {mass} != 1")));
    }
    Ok(ClassicalDensity { values: dens.into_iter().map(|v| v / mass).collect() })
}

/// `ΔΩ·Σ|ψ|²`.
pub fn wavefunction_norm_sqr(psi: &[c64], grid: &PhaseSpaceGrid) -> f64 {
    grid.cell_volume() * psi.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// Grid `L∞` distance between two densities.
pub fn max_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

impl Default for GridFunction<c64> {
    fn default() -> Self {
        Self { values: vec![ZERO; 0] }
    }
}
