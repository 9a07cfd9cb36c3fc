//! Dense and sparse complex linear algebra used across the crate.
//!
//! Dense work goes through `faer`; the stencil operators are stored in a small
//! CSR type because they have a handful of nonzeros per row and are applied
//! matrix-free inside the Krylov propagator.

use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

pub use faer::c64;

/// Dense complex matrix.
pub type CMat = Mat<c64>;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const I: c64 = c64 { re: 0.0, im: 1.0 };

/// Anything that can act on a complex vector.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[c64], y: &mut [c64]);

    fn apply(&self, x: &[c64]) -> Vec<c64> {
        let mut y = vec![ZERO; self.dim()];
        self.apply_into(x, &mut y);
        y
    }
}

impl LinearOperator for CMat {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply_into(&self, x: &[c64], y: &mut [c64]) {
        y.fill(ZERO);
        for j in 0..self.ncols() {
            let xj = x[j];
            if xj == ZERO {
                continue;
            }
            for (yi, a) in y.iter_mut().zip(self.col_as_slice(j)) {
                *yi += *a * xj;
            }
        }
    }
}

/// Square sparse matrix in compressed-row form.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<c64>,
}

impl SparseOperator {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, c64)>) -> Self {
        let mut t: Vec<(usize, usize, c64)> = triplets.into_iter().collect();
        t.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, c64)> = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            assert!(r < n && c < n, "triplet ({r}, {c}) outside {n}x{n}");
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|x| x.2 != ZERO);
        let mut row_ptr = vec![0usize; n + 1];
        for (r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let cols = merged.iter().map(|x| x.1).collect();
        let vals = merged.iter().map(|x| x.2).collect();
        Self { n, row_ptr, cols, vals }
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, row_ptr: vec![0; n + 1], cols: Vec::new(), vals: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![ONE; n])
    }

    pub fn diagonal(d: &[c64]) -> Self {
        Self::from_triplets(d.len(), d.iter().enumerate().map(|(i, v)| (i, i, *v)))
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, c64)> + '_ {
        (0..self.n).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> c64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn scale(&self, s: c64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        crate::error::check_len(self.n, other.n)?;
        Ok(Self::from_triplets(self.n, self.triplets().chain(other.triplets())))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.n, self.triplets().map(|(r, c, v)| (c, r, v.conj())))
    }

    /// Product of two sparse operators.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        crate::error::check_len(self.n, other.n)?;
        let mut t = Vec::new();
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let (m, a) = (self.cols[k], self.vals[k]);
                for l in other.row_ptr[m]..other.row_ptr[m + 1] {
                    t.push((r, other.cols[l], a * other.vals[l]));
                }
            }
        }
        Ok(Self::from_triplets(self.n, t))
    }

    /// `self ⊗ I_d` with the second factor's index running fastest.
    pub fn kron_identity(&self, d: usize) -> Self {
        Self::from_triplets(
            self.n * d,
            self.triplets().flat_map(|(r, c, v)| (0..d).map(move |m| (r * d + m, c * d + m, v))),
        )
    }

    /// `diag(a) ⊗ B` for a dense `d×d` block `B`.
    pub fn diag_kron(a: &[c64], b: MatRef<'_, c64>) -> Self {
        let d = b.nrows();
        let mut t = Vec::with_capacity(a.len() * d * d);
        for (x, ax) in a.iter().enumerate() {
            if *ax == ZERO {
                continue;
            }
            for m in 0..d {
                for k in 0..d {
                    t.push((x * d + m, x * d + k, *ax * b[(m, k)]));
                }
            }
        }
        Self::from_triplets(a.len() * d, t)
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.n, self.n);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    /// `max |A_ij - conj(A_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.triplets()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// `self · M` for a dense matrix.
    pub fn mul_dense(&self, m: MatRef<'_, c64>) -> CMat {
        let mut out = CMat::zeros(self.n, m.ncols());
        let mut x = vec![ZERO; m.nrows()];
        for j in 0..m.ncols() {
            x.iter_mut().enumerate().for_each(|(i, v)| *v = m[(i, j)]);
            let o = out.col_as_slice_mut(j);
            self.apply_into(&x, o);
        }
        out
    }

    /// `M · self` for a dense matrix.
    pub fn dense_mul(&self, m: MatRef<'_, c64>) -> CMat {
        let mut out = CMat::zeros(m.nrows(), self.n);
        let cols: Vec<Vec<c64>> = (0..m.ncols()).map(|r| (0..m.nrows()).map(|i| m[(i, r)]).collect()).collect();
        for r in 0..self.n {
            let src = &cols[r];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let (c, v) = (self.cols[k], self.vals[k]);
                for (o, x) in out.col_as_slice_mut(c).iter_mut().zip(src) {
                    *o += x * v;
                }
            }
        }
        out
    }
}

impl LinearOperator for SparseOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, x: &[c64], y: &mut [c64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yr = acc;
        }
    }
}

pub fn dot(a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[c64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frobenius(m: MatRef<'_, c64>) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

/// `max |A - A^dagger|`.
pub fn hermiticity_defect(a: MatRef<'_, c64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    m
}

pub fn trace(a: MatRef<'_, c64>) -> c64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

pub fn commutator(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    a * b - b * a
}

/// `(A + A^dagger) / 2`; removes roundoff asymmetry before an eigensolve.
pub fn hermitian_part(a: MatRef<'_, c64>) -> CMat {
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

pub fn kron(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    let (bm, bn) = (b.nrows(), b.ncols());
    CMat::from_fn(a.nrows() * bm, a.ncols() * bn, |i, j| a[(i / bm, j / bn)] * b[(i % bm, j % bn)])
}

/// Eigendecomposition of a Hermitian matrix; eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn new(a: MatRef<'_, c64>) -> Result<Self> {
        let h = hermitian_part(a);
        let evd = h
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Eigendecomposition(format!("{e:?}")))?;
        let s = evd.S();
        let values = (0..h.nrows()).map(|i| s[i].re).collect();
        Ok(Self { values, vectors: evd.U().to_owned() })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V f(Λ) V^dagger`.
    pub fn map(&self, f: impl Fn(f64) -> c64) -> CMat {
        let v = &self.vectors;
        let fl: Vec<c64> = self.values.iter().map(|&l| f(l)).collect();
        let scaled = CMat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * fl[j]);
        &scaled * v.adjoint()
    }

    /// `e^{-i t A}`.
    pub fn unitary(&self, t: f64) -> CMat {
        self.map(|l| c64::cis(-l * t))
    }

    /// `e^{-i t A} x` without forming the unitary.
    pub fn propagate(&self, x: &[c64], t: f64) -> Vec<c64> {
        if t == 0.0 {
            return x.to_vec();
        }
        let v = &self.vectors;
        let n = self.dim();
        let mut coef = vec![ZERO; n];
        for (j, c) in coef.iter_mut().enumerate() {
            *c = dot(v.col_as_slice(j), x) * c64::cis(-self.values[j] * t);
        }
        let mut out = vec![ZERO; n];
        for (j, c) in coef.iter().enumerate() {
            for (o, vij) in out.iter_mut().zip(v.col_as_slice(j)) {
                *o += *vij * c;
            }
        }
        out
    }
}

pub fn hermitian_eigenvalues(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    let h = hermitian_part(a);
    let vals = h
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigendecomposition(format!("{e:?}")))?;
    Ok(vals)
}

fn real_symmetric_eigen(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Mat<f64>)> {
    let m = diag.len();
    let t = Mat::<f64>::from_fn(m, m, |i, j| {
        if i == j {
            diag[i]
        } else if i == j + 1 {
            off[j]
        } else if j == i + 1 {
            off[i]
        } else {
            0.0
        }
    });
    let evd = t
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigendecomposition(format!("{e:?}")))?;
    let s = evd.S();
    Ok(((0..m).map(|i| s[i]).collect(), evd.U().to_owned()))
}

/// Settings for [`krylov_propagate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovOptions {
    /// Target error of the propagated vector relative to its norm.
    pub tol: f64,
    pub max_dim: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_dim: 40 }
    }
}

/// `e^{-i t H} v` for Hermitian `H` by restarted Lanczos with adaptive
/// sub-stepping. The Krylov basis of one cycle is reused across step-size
/// rejections because it does not depend on the step.
pub fn krylov_propagate(
    h: &impl LinearOperator,
    v: &[c64],
    t: f64,
    opts: KrylovOptions,
) -> Result<Vec<c64>> {
    let n = h.dim();
    crate::error::check_len(n, v.len())?;
    let v_norm = norm(v);
    if v_norm == 0.0 || t == 0.0 {
        return Ok(v.to_vec());
    }
    let mut w = v.to_vec();
    let (sign, total) = (t.signum(), t.abs());
    let mut done = 0.0;
    let mut tau = total;
    let mut scratch = vec![ZERO; n];
    while done < total {
        let beta0 = norm(&w);
        let mut basis: Vec<Vec<c64>> = vec![w.iter().map(|x| x / beta0).collect()];
        let mut alphas = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut breakdown = false;
        for j in 0..opts.max_dim {
            h.apply_into(&basis[j], &mut scratch);
            let a = dot(&basis[j], &scratch).re;
            alphas.push(a);
            // full reorthogonalization, twice
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &scratch);
                    for (s, bi) in scratch.iter_mut().zip(b) {
                        *s -= c * bi;
                    }
                }
            }
            let bnext = norm(&scratch);
            betas.push(bnext);
            if bnext <= 1e-13 * (a.abs() + betas.get(j.wrapping_sub(1)).copied().unwrap_or(0.0) + 1.0) {
                breakdown = true;
                break;
            }
            if j + 1 < opts.max_dim {
                basis.push(scratch.iter().map(|x| x / bnext).collect());
            }
        }
        let m = alphas.len();
        let (evals, evecs) = real_symmetric_eigen(&alphas, &betas[..m - 1])?;
        let remaining = total - done;
        tau = tau.min(remaining);
        let local_tol = opts.tol * beta0.max(1e-300);
        loop {
            // y = exp(-i sign tau T) e1
            let y: Vec<c64> = (0..m)
                .map(|i| {
                    (0..m)
                        .map(|k| c64::cis(-sign * evals[k] * tau) * (evecs[(i, k)] * evecs[(0, k)]))
                        .sum::<c64>()
                })
                .collect();
            let err = if breakdown { 0.0 } else { beta0 * betas[m - 1] * y[m - 1].norm() };
            if err <= local_tol * tau / total || tau <= total * 1e-12 {
                w.fill(ZERO);
                for (b, yi) in basis.iter().zip(&y) {
                    let c = yi * beta0;
                    for (wi, bi) in w.iter_mut().zip(b) {
                        *wi += c * bi;
                    }
                }
                done += tau;
                if breakdown {
                    tau = total - done;
                } else if err < 0.1 * local_tol * tau / total {
                    tau *= 2.0;
                }
                break;
            }
            tau *= 0.5;
        }
    }
    Ok(w)
}

/// Fourier spectral differentiation matrix for `n` equispaced points on a
/// period of length `period`. Real and antisymmetric.
pub fn fourier_derivative_matrix(n: usize, period: f64) -> Vec<f64> {
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let scale = 2.0 * std::f64::consts::PI / period;
    let mut d = vec![0.0; n * n];
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let diff = j as i64 - k as i64;
            let sign = if diff.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let x = diff as f64 * h / 2.0;
            let v = if n % 2 == 0 { 0.5 * sign / x.tan() } else { 0.5 * sign / x.sin() };
            d[j * n + k] = scale * v;
        }
    }
    d
}
