//! Finite-dimensional quantum operators and density matrices.

use faer::MatRef;
use thiserror::Error;

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, c64, CMat, ONE, ZERO};

/// Tolerance used when a caller claims an operator is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on the density-matrix invariants.
pub const STATE_TOL: f64 = 1e-10;
/// Eigenvalues below this are treated as zero inside `λ log λ`.
pub const ENTROPY_CLIP: f64 = 1e-14;

/// Which density-matrix invariant failed, and by how much.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum StateViolation {
    #[error("matrix is {rows}x{cols}, not square")]
    NotSquare { rows: usize, cols: usize },
    #[error("empty matrix")]
    Empty,
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("not Hermitian: max |M - M^dagger| = {max_deviation:e}")]
    NotHermitian { max_deviation: f64 },
    #[error("not positive semidefinite: min eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },
    #[error("trace {trace} != 1")]
    TraceNotOne { trace: f64 },
}

fn check_shape(m: MatRef<'_, c64>) -> std::result::Result<(), StateViolation> {
    if m.nrows() != m.ncols() {
        return Err(StateViolation::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    if m.nrows() == 0 {
        return Err(StateViolation::Empty);
    }
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(StateViolation::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// A `d×d` complex matrix acting on the quantum factor.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumOperator {
    m: CMat,
}

impl QuantumOperator {
    pub fn new(m: CMat) -> Result<Self> {
        check_shape(m.as_ref())?;
        Ok(Self { m })
    }

    /// Like [`QuantumOperator::new`] but also rejects non-Hermitian input.
    pub fn hermitian(m: CMat) -> Result<Self> {
        let op = Self::new(m)?;
        let dev = op.hermiticity_defect();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian { max_deviation: dev });
        }
        Ok(op)
    }

    /// Row-major entries.
    pub fn from_rows(rows: &[Vec<c64>]) -> Result<Self> {
        let d = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(StateViolation::NotSquare { rows: d, cols: r.len() }.into());
        }
        Self::new(CMat::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn identity(d: usize) -> Self {
        Self { m: CMat::identity(d, d) }
    }

    pub fn zeros(d: usize) -> Self {
        Self { m: CMat::zeros(d, d) }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self { m: CMat::from_fn(d.len(), d.len(), |i, j| if i == j { c64::new(d[i], 0.0) } else { ZERO }) }
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: &[c64], v: &[c64]) -> Self {
        Self { m: CMat::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj()) }
    }

    pub fn pauli_x() -> Self {
        Self { m: CMat::from_fn(2, 2, |i, j| if i != j { ONE } else { ZERO }) }
    }

    pub fn pauli_y() -> Self {
        let mut m = CMat::zeros(2, 2);
        m[(0, 1)] = c64::new(0.0, -1.0);
        m[(1, 0)] = c64::new(0.0, 1.0);
        Self { m }
    }

    pub fn pauli_z() -> Self {
        Self::diagonal(&[1.0, -1.0])
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.m.as_ref()
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(self.m.as_ref())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint().to_owned() }
    }

    pub fn trace(&self) -> c64 {
        linalg::trace(self.m.as_ref())
    }

    pub fn scale(&self, s: c64) -> Self {
        Self { m: CMat::from_fn(self.dim(), self.dim(), |i, j| self.m[(i, j)] * s) }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_len(self.dim(), other.dim())?;
        Ok(Self { m: &self.m + &other.m })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        check_len(self.dim(), other.dim())?;
        Ok(Self { m: &self.m * &other.m })
    }
}

/// `AB - BA`.
pub fn commutator(a: &QuantumOperator, b: &QuantumOperator) -> Result<QuantumOperator> {
    check_len(a.dim(), b.dim())?;
    Ok(QuantumOperator { m: linalg::commutator(a.matrix(), b.matrix()) })
}

/// A validated density matrix: Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    m: CMat,
}

/// Checks the density-matrix invariants at [`STATE_TOL`].
pub fn validate_density_matrix(m: MatRef<'_, c64>) -> std::result::Result<QuantumState, StateViolation> {
    check_shape(m)?;
    let max_deviation = linalg::hermiticity_defect(m);
    if max_deviation > STATE_TOL {
        return Err(StateViolation::NotHermitian { max_deviation });
    }
    let trace = linalg::trace(m).re;
    if (trace - 1.0).abs() > STATE_TOL {
        return Err(StateViolation::TraceNotOne { trace });
    }
    let min_eigenvalue = linalg::hermitian_eigenvalues(m)
        .map_err(|_| StateViolation::NonFinite { row: 0, col: 0 })?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if min_eigenvalue < -STATE_TOL {
        return Err(StateViolation::NotPositive { min_eigenvalue });
    }
    Ok(QuantumState { m: linalg::hermitian_part(m) })
}

impl QuantumState {
    pub fn new(m: CMat) -> Result<Self> {
        Ok(validate_density_matrix(m.as_ref())?)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { m: CMat::from_fn(d, d, |i, j| if i == j { c64::new(1.0 / d as f64, 0.0) } else { ZERO }) }
    }

    /// `|ψ⟩⟨ψ|` with `ψ` normalized first.
    pub fn pure(psi: &[c64]) -> Result<Self> {
        let n = linalg::norm(psi);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let u: Vec<c64> = psi.iter().map(|z| z / n).collect();
        Ok(Self { m: QuantumOperator::outer(&u, &u).m })
    }

    /// Diagonal state from probabilities (normalized to sum 1).
    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(StateViolation::NotPositive { min_eigenvalue: probs.iter().cloned().fold(f64::INFINITY, f64::min) }.into());
        }
        let s: f64 = probs.iter().sum();
        if s <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        let p: Vec<f64> = probs.iter().map(|x| x / s).collect();
        Ok(Self { m: QuantumOperator::diagonal(&p).m })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.m.as_ref()
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(self.m.as_ref()).expect("finite Hermitian matrix")
    }

    /// `Tr(ρA)`.
    pub fn expectation(&self, a: &QuantumOperator) -> Result<c64> {
        check_len(self.dim(), a.dim())?;
        Ok(trace_product(self.m.as_ref(), a.matrix()))
    }
}

/// `Tr(AB)` without forming the product.
pub fn trace_product(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> c64 {
    let mut s = ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

/// Entropy together with how much spectral weight was clipped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entropy {
    pub value: f64,
    /// Largest `|λ|` among eigenvalues treated as zero.
    pub clipped: f64,
}

/// `-Σ λ log λ` with eigenvalues below [`ENTROPY_CLIP`] dropped.
pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> Entropy {
    let mut value = 0.0;
    let mut clipped: f64 = 0.0;
    for &l in eigenvalues {
        if l < ENTROPY_CLIP {
            clipped = clipped.max(l.abs());
        } else {
            value -= l * l.ln();
        }
    }
    Entropy { value, clipped }
}

pub fn von_neumann_entropy(rho: &QuantumState) -> f64 {
    entropy_of_spectrum(&rho.eigenvalues()).value
}

/// `Tr ρ²`.
pub fn purity(rho: &QuantumState) -> f64 {
    matrix_purity(rho.matrix())
}

/// `Tr M²` for Hermitian `M`, i.e. its squared Frobenius norm.
pub fn matrix_purity(m: MatRef<'_, c64>) -> f64 {
    linalg::frobenius(m).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn op(rows: &[[(f64, f64); 2]; 2]) -> CMat {
        CMat::from_fn(2, 2, |i, j| c64::new(rows[i][j].0, rows[i][j].1))
    }

    #[test]
    fn maximally_mixed_is_valid() {
        for d in 1..5 {
            let s = QuantumState::maximally_mixed(d);
            assert!(validate_density_matrix(s.matrix()).is_ok());
            assert_abs_diff_eq!(purity(&s), 1.0 / d as f64, epsilon = 1e-15);
            assert_abs_diff_eq!(von_neumann_entropy(&s), (d as f64).ln(), epsilon = 1e-13);
        }
    }

    #[test]
    fn violations_are_structured() {
        let neg = op(&[[(1.2, 0.0), (0.0, 0.0)], [(0.0, 0.0), (-0.2, 0.0)]]);
        match validate_density_matrix(neg.as_ref()) {
            Err(StateViolation::NotPositive { min_eigenvalue }) => assert_abs_diff_eq!(min_eigenvalue, -0.2, epsilon = 1e-14),
            other => panic!("{other:?}"),
        }
        let off = op(&[[(0.0, 0.0), (1.0, 0.0)], [(0.0, 0.0), (0.0, 0.0)]]);
        assert!(matches!(validate_density_matrix(off.as_ref()), Err(StateViolation::NotHermitian { .. })));
        let big = op(&[[(1.0, 0.0), (0.0, 0.0)], [(0.0, 0.0), (1.0, 0.0)]]);
        assert!(matches!(validate_density_matrix(big.as_ref()), Err(StateViolation::TraceNotOne { .. })));
        let rect = CMat::zeros(2, 3);
        assert!(matches!(validate_density_matrix(rect.as_ref()), Err(StateViolation::NotSquare { .. })));
    }

    #[test]
    fn entropy_values() {
        let pure = QuantumState::pure(&[c64::new(1.0, 0.0), c64::new(0.0, 1.0)]).unwrap();
        assert_abs_diff_eq!(von_neumann_entropy(&pure), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(purity(&pure), 1.0, epsilon = 1e-14);
        let s = QuantumState::diagonal(&[0.9, 0.1]).unwrap();
        let want = -0.9 * 0.9f64.ln() - 0.1 * 0.1f64.ln();
        assert_abs_diff_eq!(von_neumann_entropy(&s), want, epsilon = 1e-14);
        assert_abs_diff_eq!(want, 0.325083, epsilon = 1e-6);
    }

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (QuantumOperator::pauli_x(), QuantumOperator::pauli_y(), QuantumOperator::pauli_z());
        let c = commutator(&x, &y).unwrap();
        let want = z.scale(c64::new(0.0, 2.0));
        assert!(linalg::max_abs_diff(c.matrix(), want.matrix()) < 1e-15);
        assert!(linalg::frobenius(commutator(&x, &x).unwrap().matrix()) == 0.0);
        assert!(x.is_hermitian(0.0) && y.is_hermitian(0.0) && z.is_hermitian(0.0));
    }

    #[test]
    fn hermitian_constructor_rejects() {
        let m = op(&[[(0.0, 0.0), (1.0, 0.0)], [(0.0, 0.0), (0.0, 0.0)]]);
        assert!(matches!(QuantumOperator::hermitian(m), Err(Error::NotHermitian { .. })));
    }
}
