use crate::classical_koopman::{Assembly, DerivativeScheme, KoopmanLiouvillian, MomentumOperator};
use crate::error::{check_len, Error, Result};
use crate::hybrid_algebra::Coupling;
use crate::linalg::{c64, LinearOperator, SparseOperator, ONE};
use crate::phase_space::{hamiltonian_field, Axis, ClassicalFunction, HamiltonianPreset, PhaseSpaceGrid};
use crate::quantum::{QuantumOperator, HERMITIAN_TOL};

/// Admissible hybrid Hamiltonian
/// `Ĥ = L_C ⊗ I + I ⊗ Ĥ_Q + Σ_j c_j diag(h_C^j) ⊗ h_Q^j (+ diag(H̃_C) ⊗ I)`.
#[derive(Clone, Debug)]
pub struct HybridHamiltonian {
    grid: PhaseSpaceGrid,
    classical_energy: ClassicalFunction,
    preset: Option<HamiltonianPreset>,
    quantum: QuantumOperator,
    coupling: Vec<Coupling>,
    multiplicative: Option<ClassicalFunction>,
    scheme: DerivativeScheme,
    liouvillian: KoopmanLiouvillian,
    op: SparseOperator,
}

/// Collects the pieces of a [`HybridHamiltonian`].
#[derive(Clone, Debug)]
pub struct HybridHamiltonianBuilder {
    grid: PhaseSpaceGrid,
    classical_energy: Option<ClassicalFunction>,
    preset: Option<HamiltonianPreset>,
    quantum: Option<QuantumOperator>,
    d: usize,
    coupling: Vec<Coupling>,
    multiplicative: Option<ClassicalFunction>,
    scheme: DerivativeScheme,
}

impl HybridHamiltonianBuilder {
    /// Classical energy given on the grid.
    pub fn classical(mut self, h: ClassicalFunction) -> Self {
        self.classical_energy = Some(h);
        self.preset = None;
        self
    }

    /// Classical energy from a preset; keeps its exact flow available as an oracle.
    pub fn preset(mut self, preset: HamiltonianPreset) -> Self {
        self.classical_energy = Some(preset.tabulate(&self.grid));
        self.preset = Some(preset);
        self
    }

    pub fn quantum(mut self, h: QuantumOperator) -> Self {
        self.d = h.dim();
        self.quantum = Some(h);
        self
    }

    pub fn coupling(mut self, c: Coupling) -> Self {
        self.coupling.push(c);
        self
    }

    pub fn couplings(mut self, cs: impl IntoIterator<Item = Coupling>) -> Self {
        self.coupling.extend(cs);
        self
    }

    /// Optional multiplicative classical term `H̃_C`.
    pub fn multiplicative(mut self, h: ClassicalFunction) -> Self {
        self.multiplicative = Some(h);
        self
    }

    pub fn scheme(mut self, scheme: DerivativeScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn build(self) -> Result<HybridHamiltonian> {
        let grid = self.grid;
        let classical_energy = self.classical_energy.unwrap_or_else(|| ClassicalFunction::constant(0.0, &grid));
        let quantum = self.quantum.unwrap_or_else(|| QuantumOperator::zeros(self.d));
        let mut h = build_hybrid_hamiltonian(&grid, &classical_energy, &quantum, self.coupling, self.multiplicative, self.scheme)?;
        h.preset = self.preset;
        Ok(h)
    }
}

fn check_real(f: &ClassicalFunction) -> Result<()> {
    match f.values().iter().find(|v| !v.is_finite()) {
        Some(v) => Err(Error::InvalidArgument(format!("classical factor has non-finite value {v}"))),
        None => Ok(()),
    }
}

fn check_hermitian(op: &QuantumOperator) -> Result<()> {
    let dev = op.hermiticity_defect();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian { max_deviation: dev });
    }
    Ok(())
}

/// Assembles `Ĥ_C ⊗ I + I ⊗ Ĥ_Q + Σ a_k ⊗ A_k`; every quantum factor must be
/// Hermitian and every classical factor real.
pub fn build_hybrid_hamiltonian(
    grid: &PhaseSpaceGrid,
    h_c: &ClassicalFunction,
    h_q: &QuantumOperator,
    coupling: Vec<Coupling>,
    multiplicative: Option<ClassicalFunction>,
    scheme: DerivativeScheme,
) -> Result<HybridHamiltonian> {
    let d = h_q.dim();
    h_c.check_grid(grid)?;
    check_real(h_c)?;
    check_hermitian(h_q)?;
    for c in &coupling {
        c.classical.check_grid(grid)?;
        check_real(&c.classical)?;
        check_len(d, c.quantum.dim())?;
        check_hermitian(&c.quantum)?;
    }
    let n = grid.n_points();
    let field = hamiltonian_field(h_c, grid)?;
    let mut liouvillian = KoopmanLiouvillian::assemble(&field, grid, scheme, Assembly::Symmetrized)?;
    if let Some(m) = &multiplicative {
        m.check_grid(grid)?;
        check_real(m)?;
        liouvillian = liouvillian.with_multiplicative(m)?;
    }
    let mut op = liouvillian.operator().kron_identity(d);
    op = op.add(&SparseOperator::diag_kron(&vec![ONE; n], h_q.matrix()))?;
    for c in &coupling {
        let a: Vec<c64> = c.classical.values().iter().map(|v| c64::new(v * c.strength, 0.0)).collect();
        op = op.add(&SparseOperator::diag_kron(&a, c.quantum.matrix()))?;
    }
    Ok(HybridHamiltonian {
        grid: *grid,
        classical_energy: h_c.clone(),
        preset: None,
        quantum: h_q.clone(),
        coupling,
        multiplicative,
        scheme,
        liouvillian,
        op,
    })
}

impl HybridHamiltonian {
    pub fn builder(grid: &PhaseSpaceGrid, d: usize) -> HybridHamiltonianBuilder {
        HybridHamiltonianBuilder {
            grid: *grid,
            classical_energy: None,
            preset: None,
            quantum: None,
            d,
            coupling: Vec::new(),
            multiplicative: None,
            scheme: DerivativeScheme::Central2,
        }
    }

    /// Harmonic oscillator coupled to a qubit:
    /// `H_C = (q²+p²)/2`, `Ĥ_Q = (ω/2)σ_z`, coupling `λ q ⊗ σ_x`.
    pub fn qubit_oscillator(grid: &PhaseSpaceGrid, omega: f64, lambda: f64, scheme: DerivativeScheme) -> Result<Self> {
        let mut b = Self::builder(grid, 2)
            .preset(HamiltonianPreset::Harmonic)
            .quantum(QuantumOperator::pauli_z().scale(c64::new(0.5 * omega, 0.0)))
            .scheme(scheme);
        if lambda != 0.0 {
            b = b.coupling(Coupling::new(grid.sample(|q, _| q), QuantumOperator::pauli_x(), lambda)?);
        }
        b.build()
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn quantum_dim(&self) -> usize {
        self.quantum.dim()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn classical_energy(&self) -> &ClassicalFunction {
        &self.classical_energy
    }

    pub fn preset(&self) -> Option<HamiltonianPreset> {
        self.preset
    }

    pub fn quantum(&self) -> &QuantumOperator {
        &self.quantum
    }

    pub fn coupling(&self) -> &[Coupling] {
        &self.coupling
    }

    pub fn multiplicative(&self) -> Option<&ClassicalFunction> {
        self.multiplicative.as_ref()
    }

    pub fn scheme(&self) -> DerivativeScheme {
        self.scheme
    }

    pub fn liouvillian(&self) -> &KoopmanLiouvillian {
        &self.liouvillian
    }

    /// Realized operator on the product space.
    pub fn operator(&self) -> &SparseOperator {
        &self.op
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.op.hermiticity_defect()
    }

    /// The same Hamiltonian with every coupling term removed.
    pub fn decoupled(&self) -> Result<Self> {
        let mut h = build_hybrid_hamiltonian(
            &self.grid,
            &self.classical_energy,
            &self.quantum,
            Vec::new(),
            self.multiplicative.clone(),
            self.scheme,
        )?;
        h.preset = self.preset;
        Ok(h)
    }

    /// The same Hamiltonian with every coupling strength multiplied by `s`.
    pub fn with_coupling_scale(&self, s: f64) -> Result<Self> {
        let coupling = self.coupling.iter().map(|c| Coupling { strength: c.strength * s, ..c.clone() }).collect();
        let mut h = build_hybrid_hamiltonian(
            &self.grid,
            &self.classical_energy,
            &self.quantum,
            coupling,
            self.multiplicative.clone(),
            self.scheme,
        )?;
        h.preset = self.preset;
        Ok(h)
    }
}

/// `strength · Π ⊗ A` along `axis`: a non-multiplicative coupling that breaks the classical algebra, used to
/// exercise the algebra-preservation check.
pub fn momentum_coupling(
    grid: &PhaseSpaceGrid,
    axis: Axis,
    quantum: &QuantumOperator,
    strength: f64,
    scheme: DerivativeScheme,
) -> Result<SparseOperator> {
    let pi = MomentumOperator::new(grid, axis, scheme)?.to_sparse().scale(c64::new(strength, 0.0));
    let d = quantum.dim();
    let q = quantum.matrix();
    Ok(SparseOperator::from_triplets(
        grid.n_points() * d,
        pi.triplets().flat_map(|(r, c, v)| {
            (0..d).flat_map(move |m| (0..d).map(move |k| (r * d + m, c * d + k, v * q[(m, k)])))
        }),
    ))
}
