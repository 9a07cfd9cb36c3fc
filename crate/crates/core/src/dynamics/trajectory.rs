use crate::error::{Error, Result};
use crate::hybrid_algebra::{lift, HybridDensityMatrix, HybridState, LiftKind, LowRankDensity, MAX_DENSE_DIM};
use crate::linalg::{self, c64, CMat, KrylovOptions, SparseOperator};

use super::propagate::{evolve_low_rank, HybridPropagator};

/// How a lifted state is carried along the flow.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum EvolutionMethod {
    /// Dense for block-diagonal lifts that fit [`MAX_DENSE_DIM`], low-rank
    /// Lanczos otherwise.
    #[default]
    Auto,
    Dense,
    LowRank(KrylovOptions),
}

/// A lifted state at one time, in whichever representation was evolved.
#[derive(Clone, Debug)]
pub enum Snapshot {
    Dense(HybridDensityMatrix),
    LowRank(LowRankDensity),
}

impl Snapshot {
    pub fn classical_marginal_values(&self) -> Vec<f64> {
        match self {
            Snapshot::Dense(m) => m.classical_marginal_values(),
            Snapshot::LowRank(r) => r.classical_marginal_values(),
        }
    }

    pub fn quantum_marginal(&self) -> CMat {
        match self {
            Snapshot::Dense(m) => m.partial_trace_classical(),
            Snapshot::LowRank(r) => r.partial_trace_classical(),
        }
    }

    pub fn trace(&self) -> c64 {
        match self {
            Snapshot::Dense(m) => m.trace(),
            Snapshot::LowRank(r) => r.trace(),
        }
    }

    pub fn block(&self, xi: usize) -> CMat {
        match self {
            Snapshot::Dense(m) => m.block(xi),
            Snapshot::LowRank(r) => r.block(xi),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Snapshot::Dense(m) => m.dim(),
            Snapshot::LowRank(r) => r.dim(),
        }
    }

    /// Spectrum of the lifted density; for low-rank snapshots only the
    /// `rank` possibly nonzero eigenvalues, the rest being zero.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        match self {
            Snapshot::Dense(m) => m.eigenvalues(),
            Snapshot::LowRank(r) => r.spectrum(),
        }
    }

    /// Smallest eigenvalue, counting the implicit zeros of a low-rank snapshot.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let s = self.spectrum()?;
        let floor = if s.len() < self.dim() { 0.0 } else { f64::INFINITY };
        Ok(s.into_iter().fold(floor, f64::min))
    }

    /// Frobenius distance between two snapshots of the same kind.
    pub fn distance(&self, other: &Snapshot) -> Result<f64> {
        match (self, other) {
            (Snapshot::Dense(a), Snapshot::Dense(b)) => {
                let d = a.matrix() - b.matrix();
                Ok(linalg::frobenius(d.as_ref()))
            }
            (Snapshot::LowRank(a), Snapshot::LowRank(b)) => a.frobenius_distance(b),
            _ => Err(Error::InvalidArgument("snapshots use different representations".into())),
        }
    }
}

enum Engine {
    Dense(HybridPropagator),
    Krylov(SparseOperator, KrylovOptions),
}

/// Initial lifted state plus a propagator, evaluated at arbitrary times.
pub struct Trajectory {
    init: Snapshot,
    engine: Engine,
}

impl Trajectory {
    pub fn new(state: &HybridState, h: &SparseOperator, kind: LiftKind, method: EvolutionMethod) -> Result<Self> {
        let method = match method {
            EvolutionMethod::Auto if kind == LiftKind::BlockDiagonal && state.dim() <= MAX_DENSE_DIM => {
                EvolutionMethod::Dense
            }
            EvolutionMethod::Auto => EvolutionMethod::LowRank(KrylovOptions::default()),
            m => m,
        };
        Ok(match method {
            EvolutionMethod::Dense => Self {
                init: Snapshot::Dense(lift(state, kind)?),
                engine: Engine::Dense(HybridPropagator::from_operator(h)?),
            },
            EvolutionMethod::LowRank(opts) => Self {
                init: Snapshot::LowRank(LowRankDensity::from_lift(state, kind)?),
                engine: Engine::Krylov(h.clone(), opts),
            },
            EvolutionMethod::Auto => unreachable!(),
        })
    }

    pub fn initial(&self) -> &Snapshot {
        &self.init
    }

    pub fn at(&self, t: f64) -> Result<Snapshot> {
        match (&self.engine, &self.init) {
            (Engine::Dense(p), Snapshot::Dense(m)) => Ok(Snapshot::Dense(p.evolve(m, t)?)),
            (Engine::Krylov(h, opts), Snapshot::LowRank(r)) => Ok(Snapshot::LowRank(evolve_low_rank(r, h, t, *opts)?)),
            _ => unreachable!("engine and representation are chosen together"),
        }
    }
}
