//! Python bindings. Matrices cross the boundary as nested lists of complex
//! numbers, grid functions as flat lists in `i_q * n_p + i_p` order.

use faer::Mat;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hybrid_koopman::classical_koopman::DerivativeScheme;
use hybrid_koopman::dynamics::{
    compare_back_reaction, validate_linear_generator, EvolutionMethod, HybridHamiltonian as CoreHamiltonian,
    LinearGenerator, ProbeSet, Snapshot as CoreSnapshot, Trajectory as CoreTrajectory, ValidatorOptions,
};
use hybrid_koopman::expr::{self, Expr as CoreExpr};
use hybrid_koopman::hybrid_algebra::{
    classical_marginal, hybrid_entropy, quantum_marginal_of_state, Coupling, HybridState as CoreState, LiftKind,
};
use hybrid_koopman::linalg::{c64, CMat};
use hybrid_koopman::phase_space::{Boundary, ClassicalDensity, ClassicalFunction, HamiltonianPreset, PhaseSpaceGrid};
use hybrid_koopman::quantum::{QuantumOperator, QuantumState};
use hybrid_koopman::Error;
use hybrid_koopman_cli::{run_scenario as cli_run, CliError, Scenario, ScenarioConfig};

type PyMatrix = Vec<Vec<c64>>;

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_mat(rows: &PyMatrix) -> PyResult<CMat> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square and non-empty"));
    }
    Ok(Mat::from_fn(n, n, |i, j| rows[i][j]))
}

fn from_mat(m: faer::MatRef<'_, c64>) -> PyMatrix {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn lift_kind(name: &str) -> PyResult<LiftKind> {
    LiftKind::from_name(name).map_err(err)
}

fn scheme(name: &str) -> PyResult<DerivativeScheme> {
    DerivativeScheme::from_name(name).map_err(err)
}

fn classical(src: &str, grid: &PhaseSpaceGrid) -> PyResult<ClassicalFunction> {
    expr::evaluate_source(src, grid).map_err(|e| err(e.into()))
}

#[pyclass(frozen, module = "hybrid_koopman_py")]
struct Grid(PhaseSpaceGrid);

#[pymethods]
impl Grid {
    #[new]
    #[pyo3(signature = (q_range, p_range, n_q, n_p, boundary = "periodic"))]
    fn new(q_range: (f64, f64), p_range: (f64, f64), n_q: usize, n_p: usize, boundary: &str) -> PyResult<Self> {
        let b = Boundary::from_name(boundary).map_err(err)?;
        PhaseSpaceGrid::new(q_range, p_range, n_q, n_p, b).map(Grid).map_err(err)
    }

    #[staticmethod]
    fn periodic_square(half_width: f64, n: usize) -> PyResult<Self> {
        PhaseSpaceGrid::periodic_square(half_width, n).map(Grid).map_err(err)
    }

    #[getter]
    fn n_q(&self) -> usize {
        self.0.n_q()
    }

    #[getter]
    fn n_p(&self) -> usize {
        self.0.n_p()
    }

    #[getter]
    fn cell_volume(&self) -> f64 {
        self.0.cell_volume()
    }

    fn points(&self) -> Vec<(f64, f64)> {
        self.0.points().collect()
    }

    fn __len__(&self) -> usize {
        self.0.n_points()
    }

    fn __repr__(&self) -> String {
        let (q, p) = (self.0.q_range(), self.0.p_range());
        format!("Grid(({}, {}), ({}, {}), {}, {}, {:?})", q.0, q.1, p.0, p.1, self.0.n_q(), self.0.n_p(), self.0.boundary().name())
    }
}

/// Parsed phase-space expression.
#[pyclass(frozen, module = "hybrid_koopman_py")]
struct Expr(CoreExpr);

#[pymethods]
impl Expr {
    #[new]
    fn new(src: &str) -> PyResult<Self> {
        expr::parse(src).map(Expr).map_err(|e| err(e.into()))
    }

    fn __call__(&self, q: f64, p: f64) -> PyResult<f64> {
        self.0.eval(q, p).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn on_grid(&self, grid: &Grid) -> PyResult<Vec<f64>> {
        expr::evaluate_on_grid(&self.0, &grid.0).map(|f| f.into_values()).map_err(|e| err(e.into()))
    }

    #[getter]
    fn depth(&self) -> usize {
        self.0.depth()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

#[pyclass(frozen, module = "hybrid_koopman_py")]
struct Hamiltonian(CoreHamiltonian);

#[pymethods]
impl Hamiltonian {
    /// `classical` is a preset name or an expression; each coupling is
    /// `(expression, hermitian_matrix, strength)`.
    #[new]
    #[pyo3(signature = (grid, classical, quantum, couplings = Vec::new(), scheme = "central2"))]
    fn new(
        grid: &Grid,
        classical: &str,
        quantum: PyMatrix,
        couplings: Vec<(String, PyMatrix, f64)>,
        scheme: &str,
    ) -> PyResult<Self> {
        let g = &grid.0;
        let h_q = QuantumOperator::hermitian(to_mat(&quantum)?).map_err(err)?;
        let mut b = CoreHamiltonian::builder(g, h_q.dim()).quantum(h_q).scheme(self::scheme(scheme)?);
        b = match HamiltonianPreset::from_name(classical) {
            Ok(p) => b.preset(p),
            Err(_) => b.classical(self::classical(classical, g)?),
        };
        for (src, m, strength) in couplings {
            let op = QuantumOperator::hermitian(to_mat(&m)?).map_err(err)?;
            b = b.coupling(Coupling::new(self::classical(&src, g)?, op, strength).map_err(err)?);
        }
        b.build().map(Hamiltonian).map_err(err)
    }

    /// Harmonic oscillator with `(ω/2)σ_z` and coupling `λ q ⊗ σ_x`.
    #[staticmethod]
    #[pyo3(signature = (grid, omega, coupling, scheme = "central2"))]
    fn qubit_oscillator(grid: &Grid, omega: f64, coupling: f64, scheme: &str) -> PyResult<Self> {
        CoreHamiltonian::qubit_oscillator(&grid.0, omega, coupling, self::scheme(scheme)?).map(Hamiltonian).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn quantum_dim(&self) -> usize {
        self.0.quantum_dim()
    }

    fn hermiticity_defect(&self) -> f64 {
        self.0.hermiticity_defect()
    }

    fn decoupled(&self) -> PyResult<Self> {
        self.0.decoupled().map(Hamiltonian).map_err(err)
    }
}

/// Normalized hybrid state: one `d x d` block per grid point.
#[pyclass(frozen, module = "hybrid_koopman_py")]
struct State(CoreState);

#[pymethods]
impl State {
    /// Unnormalized blocks, normalized on construction.
    #[new]
    fn new(grid: &Grid, blocks: Vec<PyMatrix>) -> PyResult<Self> {
        let blocks = blocks.iter().map(to_mat).collect::<PyResult<Vec<_>>>()?;
        CoreState::from_unnormalized(&grid.0, blocks).map(State).map_err(err)
    }

    /// Product of a classical density (expression) and a density matrix.
    #[staticmethod]
    fn product(grid: &Grid, classical: &str, rho: PyMatrix) -> PyResult<Self> {
        let f = self::classical(classical, &grid.0)?;
        let f = ClassicalDensity::from_unnormalized(f.into_values(), &grid.0).map_err(err)?;
        let rho = QuantumState::new(to_mat(&rho)?).map_err(err)?;
        CoreState::product(&grid.0, &f, &rho).map(State).map_err(err)
    }

    #[getter]
    fn quantum_dim(&self) -> usize {
        self.0.quantum_dim()
    }

    fn block(&self, xi: usize) -> PyResult<PyMatrix> {
        if xi >= self.0.blocks().len() {
            return Err(PyValueError::new_err("grid index out of range"));
        }
        Ok(from_mat(self.0.block(xi).as_ref()))
    }

    fn classical_marginal(&self) -> PyResult<Vec<f64>> {
        classical_marginal(&self.0).map(|f| f.values().to_vec()).map_err(err)
    }

    fn quantum_marginal(&self) -> PyResult<PyMatrix> {
        quantum_marginal_of_state(&self.0).map(|r| from_mat(r.matrix())).map_err(err)
    }

    /// Hybrid entropy: classical differential part plus conditional von Neumann part.
    fn entropy(&self) -> PyResult<f64> {
        hybrid_entropy(&self.0).map_err(err)
    }
}

#[pyclass(frozen, module = "hybrid_koopman_py")]
struct Snapshot(CoreSnapshot);

#[pymethods]
impl Snapshot {
    fn trace(&self) -> c64 {
        self.0.trace()
    }

    fn classical_marginal(&self) -> Vec<f64> {
        self.0.classical_marginal_values()
    }

    fn quantum_marginal(&self) -> PyMatrix {
        from_mat(self.0.quantum_marginal().as_ref())
    }

    fn spectrum(&self) -> PyResult<Vec<f64>> {
        self.0.spectrum().map_err(err)
    }

    fn min_eigenvalue(&self) -> PyResult<f64> {
        self.0.min_eigenvalue().map_err(err)
    }
}

/// Lifted state evolved under `ρ ↦ e^{-iĤt} ρ e^{iĤt}`.
#[pyclass(frozen, module = "hybrid_koopman_py")]
struct Trajectory(CoreTrajectory);

#[pymethods]
impl Trajectory {
    #[new]
    #[pyo3(signature = (state, hamiltonian, lift = "block_diagonal"))]
    fn new(py: Python<'_>, state: &State, hamiltonian: &Hamiltonian, lift: &str) -> PyResult<Self> {
        let kind = lift_kind(lift)?;
        py.detach(|| CoreTrajectory::new(&state.0, hamiltonian.0.operator(), kind, EvolutionMethod::Auto))
            .map(Trajectory)
            .map_err(err)
    }

    fn at(&self, py: Python<'_>, t: f64) -> PyResult<Snapshot> {
        py.detach(|| self.0.at(t)).map(Snapshot).map_err(err)
    }
}

/// Largest deviation between the classical marginals with and without coupling.
#[pyfunction]
#[pyo3(signature = (state, hamiltonian, times, lift = "coherent"))]
fn back_reaction(py: Python<'_>, state: &State, hamiltonian: &Hamiltonian, times: Vec<f64>, lift: &str) -> PyResult<f64> {
    let kind = lift_kind(lift)?;
    py.detach(|| compare_back_reaction(&state.0, &hamiltonian.0, &times, kind, EvolutionMethod::Auto))
        .map(|r| r.max_deviation)
        .map_err(err)
}

/// Trace, positivity, automorphism and entropy verdicts for the adjoint action of `hamiltonian`.
#[pyfunction]
#[pyo3(signature = (hamiltonian, seed = 0, horizon = 0.5))]
fn validate<'py>(py: Python<'py>, hamiltonian: &Hamiltonian, seed: u64, horizon: f64) -> PyResult<Bound<'py, PyDict>> {
    let h = &hamiltonian.0;
    let report = py
        .detach(|| {
            let probes = ProbeSet::generate(h.grid(), h.quantum_dim(), seed)?;
            let opts = ValidatorOptions { horizon, ..Default::default() };
            validate_linear_generator(&LinearGenerator::from_hamiltonian(h), &probes, &opts)
        })
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("trace", report.verdicts.trace)?;
    d.set_item("positivity", report.verdicts.positivity)?;
    d.set_item("automorphism", report.verdicts.automorphism)?;
    d.set_item("entropy", report.verdicts.entropy)?;
    d.set_item("trace_derivative_residual", report.trace_derivative_residual)?;
    d.set_item("positivity_min_eig_along_flow", report.positivity_min_eig_along_flow)?;
    d.set_item("automorphism_residual", report.automorphism_residual)?;
    d.set_item("entropy_drift", report.entropy_drift)?;
    Ok(d)
}

/// Runs a scenario given as JSON text; returns `(header, rows, checks_json)`.
#[pyfunction]
fn run_scenario(py: Python<'_>, config: &str) -> PyResult<(Vec<String>, Vec<Vec<f64>>, String)> {
    let cfg = ScenarioConfig::from_json(config).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let sc = Scenario::build(&cfg).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let out = py.detach(|| cli_run(&sc, |_, _| {})).map_err(|e| match e {
        CliError::Simulation(e) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    })?;
    let checks = serde_json::to_string(&out.checks).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((out.timeseries.header, out.timeseries.rows, checks))
}

#[pymodule]
fn hybrid_koopman_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Grid>()?;
    m.add_class::<Expr>()?;
    m.add_class::<Hamiltonian>()?;
    m.add_class::<State>()?;
    m.add_class::<Snapshot>()?;
    m.add_class::<Trajectory>()?;
    m.add_function(wrap_pyfunction!(back_reaction, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add("PRESETS", HamiltonianPreset::NAMES.to_vec())?;
    Ok(())
}
