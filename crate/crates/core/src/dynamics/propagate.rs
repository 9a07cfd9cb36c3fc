use crate::error::{check_len, Error, Result};
use crate::hybrid_algebra::{check_dense, HybridDensityMatrix, LowRankDensity};
use crate::linalg::{c64, krylov_propagate, CMat, HermitianEigen, KrylovOptions, LinearOperator, SparseOperator};
use crate::quantum::HERMITIAN_TOL;

use super::hamiltonian::HybridHamiltonian;

/// Dense spectral propagator `U(t) = e^{-itĤ}` on the product space.
#[derive(Clone, Debug)]
pub struct HybridPropagator {
    eig: HermitianEigen,
}

impl HybridPropagator {
    pub fn new(h: &HybridHamiltonian) -> Result<Self> {
        Self::from_operator(h.operator())
    }

    pub fn from_operator(op: &SparseOperator) -> Result<Self> {
        check_dense(op.dim())?;
        let dev = op.hermiticity_defect();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian { max_deviation: dev });
        }
        Ok(Self { eig: HermitianEigen::new(op.to_dense().as_ref())? })
    }

    pub fn dim(&self) -> usize {
        self.eig.dim()
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.eig.values
    }

    pub fn unitary(&self, t: f64) -> CMat {
        if t == 0.0 {
            return CMat::identity(self.dim(), self.dim());
        }
        self.eig.unitary(t)
    }

    pub fn propagate_vector(&self, v: &[c64], t: f64) -> Vec<c64> {
        self.eig.propagate(v, t)
    }

    /// `U ρ U^†`.
    pub fn evolve_matrix(&self, rho: &CMat, t: f64) -> CMat {
        if t == 0.0 {
            return rho.clone();
        }
        let u = self.unitary(t);
        &u * rho * u.adjoint()
    }

    pub fn evolve(&self, rho: &HybridDensityMatrix, t: f64) -> Result<HybridDensityMatrix> {
        check_len(self.dim(), rho.dim())?;
        HybridDensityMatrix::from_matrix(rho.grid(), rho.quantum_dim(), self.evolve_matrix(rho.matrix(), t), rho.lift())
    }

    /// Heisenberg picture `U^† f U`.
    pub fn heisenberg(&self, f: &CMat, t: f64) -> CMat {
        if t == 0.0 {
            return f.clone();
        }
        let u = self.unitary(t);
        u.adjoint() * f * &u
    }
}

/// `ρ_H(t) = e^{-itĤ} ρ_H e^{itĤ}` by eigendecomposition of `Ĥ`.
pub fn evolve_state(rho: &HybridDensityMatrix, h: &HybridHamiltonian, t: f64) -> Result<HybridDensityMatrix> {
    HybridPropagator::new(h)?.evolve(rho, t)
}

/// `f(t) = e^{itĤ} f e^{-itĤ}`.
pub fn evolve_observable(f: &CMat, h: &HybridHamiltonian, t: f64) -> Result<CMat> {
    check_len(h.dim(), f.nrows())?;
    Ok(HybridPropagator::new(h)?.heisenberg(f, t))
}

/// `-i[H, ρ]`.
fn von_neumann_rhs(h: &SparseOperator, rho: &CMat) -> CMat {
    let hr = h.mul_dense(rho.as_ref());
    let rh = h.dense_mul(rho.as_ref());
    CMat::from_fn(rho.nrows(), rho.ncols(), |i, j| {
        let c = hr[(i, j)] - rh[(i, j)];
        c64::new(c.im, -c.re)
    })
}

/// Classical RK4 on `dρ/dt = -i[Ĥ, ρ]`; the step is shortened to land on `t`.
/// Kept as an independent check on the spectral path.
pub fn evolve_state_rk4(rho: &CMat, h: &SparseOperator, t: f64, dt: f64) -> Result<CMat> {
    check_len(h.dim(), rho.nrows())?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let steps = (t.abs() / dt).ceil().max(if t == 0.0 { 0.0 } else { 1.0 }) as usize;
    let mut x = rho.clone();
    if steps == 0 {
        return Ok(x);
    }
    let h_step = t / steps as f64;
    let axpy = |x: &CMat, k: &CMat, s: f64| CMat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] + k[(i, j)] * s);
    for _ in 0..steps {
        let k1 = von_neumann_rhs(h, &x);
        let k2 = von_neumann_rhs(h, &axpy(&x, &k1, 0.5 * h_step));
        let k3 = von_neumann_rhs(h, &axpy(&x, &k2, 0.5 * h_step));
        let k4 = von_neumann_rhs(h, &axpy(&x, &k3, h_step));
        x = CMat::from_fn(x.nrows(), x.ncols(), |i, j| {
            x[(i, j)] + (k1[(i, j)] + k2[(i, j)] * 2.0 + k3[(i, j)] * 2.0 + k4[(i, j)]) * (h_step / 6.0)
        });
    }
    Ok(x)
}

/// Propagates each factor of a low-rank density by Lanczos.
pub fn evolve_low_rank(rho: &LowRankDensity, h: &SparseOperator, t: f64, opts: KrylovOptions) -> Result<LowRankDensity> {
    check_len(h.dim(), rho.dim())?;
    let dev = h.hermiticity_defect();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian { max_deviation: dev });
    }
    rho.map(|v| krylov_propagate(h, v, t, opts))
}
