use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use hybrid_koopman::dynamics::{check_algebra_preservation, EvolutionMethod, HybridHamiltonian, Snapshot, Trajectory};
use hybrid_koopman::expr::evaluate_source;
use hybrid_koopman::hybrid_algebra::{Coupling, HybridOperator, HybridState};
use hybrid_koopman::linalg::{self, c64, CMat};
use hybrid_koopman::phase_space::{build_grid, ClassicalDensity, ClassicalFunction, PhaseSpaceGrid};
use hybrid_koopman::quantum::{entropy_of_spectrum, matrix_purity, QuantumOperator, QuantumState};
use hybrid_koopman::sampling;

use crate::config::{ConfigErrors, InitialStateSpec, MatrixSpec, ScenarioConfig, CHECKS};

pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = -1e-9;
pub const ENTROPY_TOL: f64 = 1e-8;
pub const HERMITICITY_TOL: f64 = 1e-12;
pub const BACK_REACTION_TOL: f64 = 1e-8;

/// Number of random smooth observables behind the admissibility diagnostic.
const ADMISSIBILITY_SAMPLES: usize = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n{0}")]
    Config(#[from] ConfigErrors),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("simulation failed: {0}")]
    Simulation(#[from] hybrid_koopman::Error),
}

impl CliError {
    /// Machine-readable code printed alongside the message.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config_invalid",
            CliError::Io { .. } => "io_error",
            CliError::Simulation(_) => "simulation_failed",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 3,
        }
    }
}

/// A configuration turned into numerical objects.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub grid: PhaseSpaceGrid,
    pub hamiltonian: HybridHamiltonian,
    pub state: HybridState,
    pub observables: Vec<(String, HybridOperator)>,
}

fn quantum_operator(m: &MatrixSpec) -> CMat {
    let d = m.len();
    CMat::from_fn(d, d, |i, j| c64::new(m[i][j][0], m[i][j][1]))
}

fn at<T>(path: &str) -> impl Fn(T) -> ConfigErrors + '_
where
    T: std::fmt::Display,
{
    move |e| ConfigErrors::single(path, e.to_string())
}

impl Scenario {
    pub fn build(config: &ScenarioConfig) -> Result<Self, ConfigErrors> {
        let c = config;
        let g = &c.grid;
        let grid = build_grid([g.q_range[0], g.q_range[1], g.p_range[0], g.p_range[1]], g.n_q, g.n_p, c.boundary())
            .map_err(at("grid"))?;
        let d = c.quantum_dim;
        let eval = |src: &str, path: &str| -> Result<ClassicalFunction, ConfigErrors> {
            evaluate_source(&c.expression(src), &grid).map_err(at(path))
        };

        let mut b = HybridHamiltonian::builder(&grid, d).scheme(c.scheme());
        b = match c.preset() {
            Some(p) => b.preset(p),
            None => b.classical(eval(&c.hamiltonian.classical, "hamiltonian.classical")?),
        };
        let hq = QuantumOperator::hermitian(quantum_operator(&c.hamiltonian.quantum)).map_err(at("hamiltonian.quantum"))?;
        b = b.quantum(hq);
        for (i, cs) in c.hamiltonian.coupling.iter().enumerate() {
            let path = format!("hamiltonian.coupling[{i}]");
            let a = eval(&cs.classical, &format!("{path}.classical"))?;
            let op = QuantumOperator::hermitian(quantum_operator(&cs.quantum)).map_err(at(&format!("{path}.quantum")))?;
            b = b.coupling(Coupling::new(a, op, cs.strength).map_err(at(&path))?);
        }
        let hamiltonian = b.build().map_err(at("hamiltonian"))?;

        let state = match &c.initial_state {
            InitialStateSpec::Product { classical, quantum } => {
                let f = eval(classical, "initial_state.classical")?;
                let f = ClassicalDensity::from_unnormalized(f.into_values(), &grid).map_err(at("initial_state.classical"))?;
                let rho_q = QuantumState::new(quantum_operator(quantum)).map_err(at("initial_state.quantum"))?;
                HybridState::product(&grid, &f, &rho_q).map_err(at("initial_state"))?
            }
            InitialStateSpec::Custom { blocks } => {
                let mut entries = Vec::with_capacity(d * d);
                for (i, row) in blocks.iter().enumerate() {
                    for (j, [re, im]) in row.iter().enumerate() {
                        let path = format!("initial_state.blocks[{i}][{j}]");
                        entries.push((eval(re, &path)?, eval(im, &path)?));
                    }
                }
                let per_point = (0..grid.n_points())
                    .map(|x| {
                        CMat::from_fn(d, d, |i, j| {
                            let (re, im) = &entries[i * d + j];
                            c64::new(re.values()[x], im.values()[x])
                        })
                    })
                    .collect();
                HybridState::from_unnormalized(&grid, per_point).map_err(at("initial_state.blocks"))?
            }
        };

        let mut observables = Vec::with_capacity(c.observables.len());
        for (k, o) in c.observables.iter().enumerate() {
            let mut f = HybridOperator::zero(&grid, d);
            for (j, t) in o.terms.iter().enumerate() {
                let path = format!("observables[{k}].terms[{j}]");
                let a = eval(&t.classical, &format!("{path}.classical"))?;
                let op = QuantumOperator::new(quantum_operator(&t.quantum)).map_err(at(&format!("{path}.quantum")))?;
                f = f
                    .with_term(c64::new(t.coefficient[0], t.coefficient[1]), a.to_complex(), op)
                    .map_err(at(&path))?;
            }
            observables.push((o.name.clone(), f));
        }

        Ok(Self { config: config.clone(), grid, hamiltonian, state, observables })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub enabled: bool,
    pub passed: bool,
    /// Worst value over the run, compared against `tolerance`.
    pub value: f64,
    pub tolerance: f64,
    pub criterion: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub dim: usize,
    pub lift: String,
    pub hermiticity_defect: f64,
    /// Weak multiplicative residual of `[Ĥ, f]` on seeded smooth observables.
    pub admissibility_residual: f64,
    pub initial_min_eigenvalue: f64,
    pub initial_entropy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChecksReport {
    pub passed: bool,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// RFC 4180 text with LF line endings.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:e}"))).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("ASCII output")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub timeseries: TimeSeries,
    pub checks: ChecksReport,
}

struct Sample {
    s_vn: f64,
    s_h: f64,
    purity: f64,
    trace_residual: f64,
    min_eigenvalue: f64,
    expectations: Vec<c64>,
}

fn sample(s: &Snapshot, sc: &Scenario) -> hybrid_koopman::Result<Sample> {
    let w = sc.grid.cell_volume();
    let spectrum = s.spectrum()?;
    let floor = if spectrum.len() < s.dim() { 0.0 } else { f64::INFINITY };
    let min_eigenvalue = spectrum.iter().cloned().fold(floor, f64::min);
    let mut s_h = 0.0;
    let mut expectations = vec![c64::new(0.0, 0.0); sc.observables.len()];
    for xi in 0..sc.grid.n_points() {
        let block = s.block(xi);
        let local = CMat::from_fn(block.nrows(), block.ncols(), |i, j| block[(i, j)] / w);
        s_h += entropy_of_spectrum(&linalg::hermitian_eigenvalues(local.as_ref())?).value;
        for (k, (_, f)) in sc.observables.iter().enumerate() {
            let fb = f.block(xi);
            expectations[k] += (0..block.nrows())
                .flat_map(|i| (0..block.ncols()).map(move |j| (i, j)))
                .map(|(i, j)| block[(i, j)] * fb[(j, i)])
                .sum::<c64>();
        }
    }
    Ok(Sample {
        s_vn: entropy_of_spectrum(&spectrum).value,
        s_h: s_h * w,
        purity: matrix_purity(s.quantum_marginal().as_ref()),
        trace_residual: (s.trace() - c64::new(1.0, 0.0)).norm(),
        min_eigenvalue,
        expectations,
    })
}

fn admissibility(sc: &Scenario) -> hybrid_koopman::Result<f64> {
    let mut rng = sampling::rng(sc.config.seed);
    let d = sc.config.quantum_dim;
    let samples: Vec<_> =
        (0..ADMISSIBILITY_SAMPLES).map(|k| sampling::smooth_hybrid_operator(&sc.grid, d, k % 3 + 1, &mut rng)).collect();
    Ok(check_algebra_preservation(sc.hamiltonian.operator(), &samples, f64::INFINITY)?.residual)
}

/// Evolves the scenario and evaluates every diagnostic at each sample time.
pub fn run_scenario(sc: &Scenario, mut progress: impl FnMut(usize, usize)) -> Result<RunOutput, CliError> {
    let cfg = &sc.config;
    let kind = cfg.lift_kind();
    let times = cfg.time.times();
    let traj = Trajectory::new(&sc.state, sc.hamiltonian.operator(), kind, EvolutionMethod::Auto)?;
    let paired = if sc.hamiltonian.coupling().is_empty() {
        None
    } else {
        let h0 = sc.hamiltonian.with_coupling_scale(0.0)?;
        Some(Trajectory::new(&sc.state, h0.operator(), kind, EvolutionMethod::Auto)?)
    };

    let mut header = vec!["time".to_string()];
    for (name, _) in &sc.observables {
        header.push(name.clone());
        header.push(format!("{name}_imag"));
    }
    for h in ["s_vn", "s_h", "purity_q", "trace_residual", "min_eigenvalue", "marginal_deviation"] {
        header.push(h.to_string());
    }

    let mut rows = Vec::with_capacity(times.len());
    let mut s0 = None;
    let (mut worst_trace, mut worst_min, mut worst_entropy, mut worst_marginal) = (0.0f64, f64::INFINITY, 0.0f64, 0.0f64);
    for (k, &t) in times.iter().enumerate() {
        progress(k, times.len());
        let snap = traj.at(t)?;
        let smp = sample(&snap, sc)?;
        let marginal = match &paired {
            Some(p) => {
                let a = snap.classical_marginal_values();
                let b = p.at(t)?.classical_marginal_values();
                a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
            }
            None => 0.0,
        };
        let initial = *s0.get_or_insert((smp.s_vn, smp.min_eigenvalue));
        worst_trace = worst_trace.max(smp.trace_residual);
        worst_min = worst_min.min(smp.min_eigenvalue);
        worst_entropy = worst_entropy.max((smp.s_vn - initial.0).abs());
        worst_marginal = worst_marginal.max(marginal);
        let mut row = vec![t];
        for e in &smp.expectations {
            row.push(e.re);
            row.push(e.im);
        }
        row.extend([smp.s_vn, smp.s_h, smp.purity, smp.trace_residual, smp.min_eigenvalue, marginal]);
        rows.push(row);
    }
    progress(times.len(), times.len());

    let hermiticity = sc.hamiltonian.hermiticity_defect();
    let (initial_entropy, initial_min_eigenvalue) = s0.expect("at least two samples");
    let results = [
        ("trace", worst_trace, TRACE_TOL, worst_trace <= TRACE_TOL, "max |Tr rho_H(t) - 1|"),
        ("positivity", worst_min, POSITIVITY_TOL, worst_min >= POSITIVITY_TOL, "min eigenvalue of rho_H(t), at least"),
        ("entropy", worst_entropy, ENTROPY_TOL, worst_entropy <= ENTROPY_TOL, "max |S_vN(t) - S_vN(0)|"),
        ("hermiticity", hermiticity, HERMITICITY_TOL, hermiticity <= HERMITICITY_TOL, "max |H - H^dagger|"),
        (
            "back_reaction",
            worst_marginal,
            BACK_REACTION_TOL,
            worst_marginal <= BACK_REACTION_TOL,
            "max classical-marginal deviation from the run without coupling",
        ),
    ];
    debug_assert_eq!(results.len(), CHECKS.len());
    let checks: Vec<CheckResult> = results
        .into_iter()
        .map(|(name, value, tolerance, ok, criterion)| CheckResult {
            name: name.to_string(),
            enabled: cfg.enabled(name),
            passed: ok,
            value,
            tolerance,
            criterion: criterion.to_string(),
        })
        .collect();
    let passed = checks.iter().all(|c| c.passed || !c.enabled);
    let diagnostics = Diagnostics {
        dim: sc.hamiltonian.dim(),
        lift: cfg.lift.clone(),
        hermiticity_defect: hermiticity,
        admissibility_residual: admissibility(sc)?,
        initial_min_eigenvalue,
        initial_entropy,
    };
    Ok(RunOutput { timeseries: TimeSeries { header, rows }, checks: ChecksReport { passed, seed: cfg.seed, checks, diagnostics } })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Writes `timeseries.csv`, `checks.json` and `config.resolved.json` into `dir`.
pub fn write_outputs(dir: &Path, config: &ScenarioConfig, out: &RunOutput) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    write(&dir.join("timeseries.csv"), &out.timeseries.to_csv())?;
    write(&dir.join("checks.json"), &pretty(&out.checks))?;
    write(&dir.join("config.resolved.json"), &pretty(config))
}

/// Reads, validates and builds a scenario from a config file.
pub fn load(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    Ok(ScenarioConfig::from_json(&text)?)
}
