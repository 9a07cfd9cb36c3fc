use crate::error::{check_len, Error, Result};
use crate::linalg::{c64, CMat, LinearOperator, SparseOperator, ZERO};
use crate::phase_space::{ClassicalFunction, GridFunction, PhaseSpaceGrid};
use crate::quantum::QuantumOperator;

/// Complex classical factor of a hybrid term.
pub type ComplexFunction = GridFunction<c64>;

/// One summand `γ · a ⊗ A`.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridTerm {
    pub gamma: c64,
    pub classical: ComplexFunction,
    pub quantum: QuantumOperator,
}

/// `f = Σ γ_k a_k ⊗ A_k` on a fixed grid and quantum dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridOperator {
    grid: PhaseSpaceGrid,
    d: usize,
    terms: Vec<HybridTerm>,
}

impl HybridOperator {
    /// The zero operator.
    pub fn zero(grid: &PhaseSpaceGrid, d: usize) -> Self {
        Self { grid: *grid, d, terms: Vec::new() }
    }

    /// `1 ⊗ I`.
    pub fn unit(grid: &PhaseSpaceGrid, d: usize) -> Self {
        Self::zero(grid, d).with_term(c64::new(1.0, 0.0), GridFunction::constant(c64::new(1.0, 0.0), grid), QuantumOperator::identity(d)).expect("shapes agree")
    }

    /// `a ⊗ A` for a real classical factor.
    pub fn simple(grid: &PhaseSpaceGrid, a: &ClassicalFunction, op: QuantumOperator) -> Result<Self> {
        let d = op.dim();
        Self::zero(grid, d).with_term(c64::new(1.0, 0.0), a.to_complex(), op)
    }

    pub fn with_term(mut self, gamma: c64, classical: ComplexFunction, quantum: QuantumOperator) -> Result<Self> {
        classical.check_grid(&self.grid)?;
        check_len(self.d, quantum.dim())?;
        self.terms.push(HybridTerm { gamma, classical, quantum });
        Ok(self)
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

    pub fn terms(&self) -> &[HybridTerm] {
        &self.terms
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        check_len(self.d, other.d)?;
        check_len(self.grid.n_points(), other.grid.n_points())?;
        if self.grid != other.grid {
            return Err(Error::InvalidArgument("hybrid operators live on different grids".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        Ok(out)
    }

    pub fn scale(&self, s: c64) -> Self {
        let mut out = self.clone();
        out.terms.iter_mut().for_each(|t| t.gamma *= s);
        out
    }

    /// The `d×d` block `Σ γ_k a_k(ξ) A_k` at grid point `xi`.
    pub fn block(&self, xi: usize) -> CMat {
        let mut b = CMat::zeros(self.d, self.d);
        for t in &self.terms {
            let w = t.gamma * t.classical.values()[xi];
            if w == ZERO {
                continue;
            }
            let a = t.quantum.matrix();
            for j in 0..self.d {
                for i in 0..self.d {
                    b[(i, j)] += w * a[(i, j)];
                }
            }
        }
        b
    }

    /// `π_H(f) = Σ γ_k diag(a_k) ⊗ A_k`, which is block diagonal in `ξ`.
    pub fn realize(&self) -> BlockDiagonal {
        BlockDiagonal { d: self.d, blocks: (0..self.grid.n_points()).map(|xi| self.block(xi)).collect() }
    }
}

/// `(a⊗A)·(b⊗B) = (ab)⊗(AB)`, extended bilinearly.
pub fn hybrid_product(f: &HybridOperator, g: &HybridOperator) -> Result<HybridOperator> {
    f.check_compatible(g)?;
    let mut terms = Vec::with_capacity(f.terms.len() * g.terms.len());
    for s in &f.terms {
        for t in &g.terms {
            terms.push(HybridTerm {
                gamma: s.gamma * t.gamma,
                classical: s.classical.zip_with(&t.classical, |x, y| x * y)?,
                quantum: s.quantum.mul(&t.quantum)?,
            });
        }
    }
    Ok(HybridOperator { grid: f.grid, d: f.d, terms })
}

/// `f* = Σ conj(γ_k) conj(a_k) ⊗ A_k^†`.
pub fn hybrid_involution(f: &HybridOperator) -> HybridOperator {
    let terms = f
        .terms
        .iter()
        .map(|t| HybridTerm { gamma: t.gamma.conj(), classical: t.classical.map(|z| z.conj()), quantum: t.quantum.adjoint() })
        .collect();
    HybridOperator { grid: f.grid, d: f.d, terms }
}

/// Operator that is block diagonal in the classical index, stored as one
/// `d×d` block per grid point (product index `ξ·d + m`).
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDiagonal {
    d: usize,
    blocks: Vec<CMat>,
}

impl BlockDiagonal {
    pub fn new(d: usize, blocks: Vec<CMat>) -> Result<Self> {
        for b in &blocks {
            check_len(d, b.nrows())?;
            check_len(d, b.ncols())?;
        }
        Ok(Self { d, blocks })
    }

    pub fn quantum_dim(&self) -> usize {
        self.d
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn to_dense(&self) -> CMat {
        let n = self.blocks.len() * self.d;
        let mut m = CMat::zeros(n, n);
        for (xi, b) in self.blocks.iter().enumerate() {
            for j in 0..self.d {
                for i in 0..self.d {
                    m[(xi * self.d + i, xi * self.d + j)] = b[(i, j)];
                }
            }
        }
        m
    }

    pub fn to_sparse(&self) -> SparseOperator {
        let d = self.d;
        SparseOperator::from_triplets(
            self.blocks.len() * d,
            self.blocks.iter().enumerate().flat_map(|(xi, b)| {
                (0..d).flat_map(move |i| (0..d).map(move |j| (xi * d + i, xi * d + j, b[(i, j)])))
            }),
        )
    }
}

impl LinearOperator for BlockDiagonal {
    fn dim(&self) -> usize {
        self.blocks.len() * self.d
    }

    fn apply_into(&self, x: &[c64], y: &mut [c64]) {
        let d = self.d;
        for (xi, b) in self.blocks.iter().enumerate() {
            for i in 0..d {
                let mut acc = ZERO;
                for j in 0..d {
                    acc += b[(i, j)] * x[xi * d + j];
                }
                y[xi * d + i] = acc;
            }
        }
    }
}
