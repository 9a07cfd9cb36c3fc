use crate::classical_koopman::{band_limited_probes, weak_multiplicative_fit};
use crate::error::{check_len, Error, Result};
use crate::hybrid_algebra::{BlockDiagonal, HybridOperator};
use crate::linalg::{c64, LinearOperator, ZERO};
use crate::phase_space::{Axis, PhaseSpaceGrid};

/// Highest probe mode used by the weak multiplicative test.
pub const PROBE_MODES: usize = 2;

/// Outcome of the algebra-preservation check for one Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraPreservationReport {
    /// Largest weak residual over samples and quantum blocks.
    pub residual: f64,
    pub per_sample: Vec<f64>,
    pub tolerance: f64,
    pub passed: bool,
    /// Largest grid spacing; the residual of an admissible Hamiltonian is `O(spacing²)`.
    pub spacing: f64,
}

/// Weak residual of every `(m, m')` classical block of an operator given by
/// its action on product-space vectors.
pub(crate) fn block_weak_residual(
    apply: &dyn Fn(&[c64]) -> Vec<c64>,
    grid: &PhaseSpaceGrid,
    d: usize,
    probes: &[Vec<c64>],
) -> f64 {
    let n = grid.n_points();
    // images[m][m'][k]
    let mut images = vec![vec![Vec::with_capacity(probes.len()); d]; d];
    for mp in 0..d {
        for psi in probes {
            let mut x = vec![ZERO; n * d];
            for (xi, v) in psi.iter().enumerate() {
                x[xi * d + mp] = *v;
            }
            let y = apply(&x);
            for (m, row) in images.iter_mut().enumerate() {
                row[mp].push((0..n).map(|xi| y[xi * d + m]).collect::<Vec<_>>());
            }
        }
    }
    let mut worst: f64 = 0.0;
    for row in &images {
        for imgs in row {
            worst = worst.max(weak_multiplicative_fit(probes, imgs).residual);
        }
    }
    worst
}

/// Tests `[π_H(f), Ĥ] ∈ π_H(A_H)` for each sample `f` in the weak sense:
/// every classical block of the commutator must act on band-limited probes
/// as a pointwise multiplier, up to the stencil error.
pub fn check_algebra_preservation(
    h: &impl LinearOperator,
    samples: &[HybridOperator],
    tol: f64,
) -> Result<AlgebraPreservationReport> {
    let first = samples.first().ok_or_else(|| Error::InvalidArgument("no sample operators".into()))?;
    let grid = *first.grid();
    let d = first.quantum_dim();
    check_len(first.dim(), h.dim())?;
    let probes = band_limited_probes(&grid, PROBE_MODES);
    let mut per_sample = Vec::with_capacity(samples.len());
    for f in samples {
        check_len(first.dim(), f.dim())?;
        let pf: BlockDiagonal = f.realize();
        let apply = |x: &[c64]| -> Vec<c64> {
            let a = pf.apply(&h.apply(x));
            let b = h.apply(&pf.apply(x));
            a.iter().zip(&b).map(|(u, v)| u - v).collect()
        };
        per_sample.push(block_weak_residual(&apply, &grid, d, &probes));
    }
    let residual = per_sample.iter().cloned().fold(0.0, f64::max);
    Ok(AlgebraPreservationReport {
        residual,
        per_sample,
        tolerance: tol,
        passed: residual <= tol,
        spacing: grid.axis_spacing(Axis::Q).max(grid.axis_spacing(Axis::P)),
    })
}

/// Residuals of one check repeated on successively refined grids.
#[derive(Clone, Debug, PartialEq)]
pub struct RefinementStudy {
    pub spacings: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `log(r_k / r_{k+1}) / log(h_k / h_{k+1})` for consecutive levels.
    pub orders: Vec<f64>,
}

impl RefinementStudy {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Largest `r_k / r_{k+1}`; close to 1 when the residual does not depend on the spacing.
    pub fn max_ratio(&self) -> f64 {
        self.residuals.windows(2).map(|w| w[0] / w[1]).fold(0.0, f64::max)
    }

    /// Smallest `r_k / r_{k+1}`.
    pub fn min_ratio(&self) -> f64 {
        self.residuals.windows(2).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min)
    }
}

/// Runs `case` on each grid and measures the convergence order of the
/// algebra-preservation residual.
pub fn refinement_study<H: LinearOperator>(
    grids: &[PhaseSpaceGrid],
    case: impl Fn(&PhaseSpaceGrid) -> Result<(H, Vec<HybridOperator>)>,
) -> Result<RefinementStudy> {
    let mut spacings = Vec::new();
    let mut residuals = Vec::new();
    for g in grids {
        let (h, samples) = case(g)?;
        let r = check_algebra_preservation(&h, &samples, f64::INFINITY)?;
        spacings.push(r.spacing);
        residuals.push(r.residual);
    }
    let orders = (1..residuals.len())
        .map(|k| (residuals[k - 1] / residuals[k]).ln() / (spacings[k - 1] / spacings[k]).ln())
        .collect();
    Ok(RefinementStudy { spacings, residuals, orders })
}
