//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line each; exits nonzero if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use hybrid_koopman::classical_koopman::{
    koopman_propagate, Assembly, DerivativeScheme, KoopmanLiouvillian,
};
use hybrid_koopman::dynamics::*;
use hybrid_koopman::hybrid_algebra::*;
use hybrid_koopman::linalg::{c64, CMat, SparseOperator};
use hybrid_koopman::phase_space::{
    density_to_wavefunction, hamiltonian_field, liouville_oracle, max_deviation, wavefunction_to_density, Axis, ClassicalDensity, HamiltonianPreset, PhaseSpaceGrid,
};
use hybrid_koopman::quantum::{QuantumOperator, QuantumState};
use hybrid_koopman::sampling;

type Outcome = Result<(bool, String), hybrid_koopman::Error>;

fn eigs(m: &CMat) -> Vec<f64> {
    let mut e = m.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e
}

fn entropy(spectrum: &[f64]) -> f64 {
    -spectrum.iter().filter(|l| **l > 1e-14).map(|l| l * l.ln()).sum::<f64>()
}

fn tr(m: &CMat) -> c64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

fn ket0() -> QuantumState {
    QuantumState::pure(&[c64::new(1.0, 0.0), c64::new(0.0, 0.0)]).unwrap()
}

/// Koopman evolution of `√F` against the characteristics solution.
fn koopman_error(n: usize, times: &[f64]) -> hybrid_koopman::Result<(Vec<f64>, f64)> {
    let g = PhaseSpaceGrid::periodic_square(5.0, n)?;
    let f = ClassicalDensity::gaussian(&g, (1.0, 0.0), 0.65)?;
    let field = hamiltonian_field(&HamiltonianPreset::Harmonic.tabulate(&g), &g)?;
    let l = KoopmanLiouvillian::assemble(&field, &g, DerivativeScheme::Central2, Assembly::Symmetrized)?;
    let psi0 = density_to_wavefunction(&f);
    let mut errors = Vec::new();
    for &t in times {
        let psi = koopman_propagate(&psi0, &l, t)?;
        let dens = wavefunction_to_density(&psi, &g)?;
        let oracle = liouville_oracle(&f, &g, HamiltonianPreset::Harmonic, t)?;
        errors.push(max_deviation(dens.values(), oracle.values()));
    }
    let back = koopman_propagate(&psi0, &l, 2.0 * PI)?;
    let a = psi0.values();
    let b = back.values();
    let overlap: c64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    Ok((errors, overlap.norm_sqr() / (na * nb)))
}

fn c1() -> Outcome {
    let times = [PI / 4.0, PI / 2.0, PI];
    let (e32, _) = koopman_error(32, &times)?;
    let (e64, fidelity) = koopman_error(64, &times)?;
    let (e128, _) = koopman_error(128, &times)?;
    let orders: Vec<f64> = (0..3).flat_map(|k| [order(e32[k], e64[k]), order(e64[k], e128[k])]).collect();
    let min_order = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((
        min_order >= 1.8 && fidelity >= 0.99,
        format!("errors@64 {}, min order {min_order:.3}, revival fidelity {fidelity:.6}", sci(&e64)),
    ))
}

fn c2() -> Outcome {
    let g = PhaseSpaceGrid::periodic_square(5.0, 32)?;
    let h = HybridHamiltonian::qubit_oscillator(&g, 1.0, 0.5, DerivativeScheme::Central2)?;
    let prop = HybridPropagator::new(&h)?;
    let mut rng = sampling::rng(2);
    let psi: Vec<c64> = (0..h.dim()).map(|_| sampling::complex_normal(&mut rng)).collect();
    let norm = |v: &[c64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let state = sampling::smooth_correlated_state(&g, 2, (1.0, 0.0), 1.0, &mut rng)?;
    let rho = lift_block_diagonal(&state)?;
    let e0 = eigs(rho.matrix());
    let mut norm_drift: f64 = 0.0;
    let mut spec_err: f64 = 0.0;
    for t in [PI / 2.0, 2.0 * PI] {
        norm_drift = norm_drift.max((norm(&prop.propagate_vector(&psi, t)) - norm(&psi)).abs() / norm(&psi));
        let e = eigs(&prop.evolve_matrix(rho.matrix(), t));
        spec_err = spec_err.max(e.iter().zip(&e0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    Ok((norm_drift <= 1e-10 && spec_err <= 1e-8, format!("norm drift {norm_drift:.2e}, spectrum error {spec_err:.2e}")))
}

fn c3() -> Outcome {
    let g = PhaseSpaceGrid::periodic_square(4.0, 16)?;
    let mut rng = sampling::rng(3);
    let mut worst = [0.0f64; 2];
    for _ in 0..50 {
        let s = sampling::random_hybrid_state(&g, 2, &mut rng);
        let f = sampling::random_hybrid_operator(&g, 2, 3, &mut rng);
        // ⟨f⟩ = ΔΩ Σ_ξ Tr(ρ(ξ) f(ξ)) straight from the terms
        let mut want = c64::new(0.0, 0.0);
        for (xi, block) in s.blocks().iter().enumerate() {
            for term in f.terms() {
                let a = term.gamma * term.classical.values()[xi];
                want += a * tr(&(block * term.quantum.matrix()));
            }
        }
        want *= g.cell_volume();
        let fm = f.realize().to_dense();
        for (k, kind) in [LiftKind::BlockDiagonal, LiftKind::Coherent].into_iter().enumerate() {
            let rho = lift(&s, kind)?;
            worst[k] = worst[k].max((tr(&(rho.matrix() * &fm)) - want).norm());
        }
    }
    Ok((worst.iter().all(|w| *w <= 1e-10), format!("block {:.2e}, coherent {:.2e}", worst[0], worst[1])))
}

fn c4() -> Outcome {
    let g = PhaseSpaceGrid::periodic_square(4.0, 16)?;
    let w = g.cell_volume();
    let mut rng = sampling::rng(4);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let s = sampling::random_hybrid_state(&g, 2, &mut rng);
        let m = lift_block_diagonal(&s)?.matrix().clone();
        let mut pow = m.clone();
        for k in 1..=4 {
            if k > 1 {
                pow = &pow * &m;
            }
            for i in 0..2 {
                for j in 0..2 {
                    let lhs: c64 = (0..g.n_points()).map(|x| pow[(2 * x + i, 2 * x + j)]).sum::<c64>() / w.powi(k - 1);
                    let rhs: c64 = s
                        .blocks()
                        .iter()
                        .map(|b| {
                            let mut p = b.clone();
                            for _ in 1..k {
                                p = &p * b;
                            }
                            p[(i, j)]
                        })
                        .sum::<c64>()
                        * w;
                    worst = worst.max((lhs - rhs).norm());
                }
            }
        }
        worst = worst.max(partial_trace_power_report(&s, 4)?.residual);
    }
    Ok((worst <= 1e-10, format!("max residual {worst:.2e}")))
}

fn c5() -> Outcome {
    let g = PhaseSpaceGrid::periodic_square(4.0, 8)?;
    let mut rng = sampling::rng(5);
    let mut worst: f64 = 0.0;
    let mut coherent_psd = 0;
    let mut coherent_min: f64 = f64::INFINITY;
    for _ in 0..20 {
        let s = sampling::random_hybrid_state(&g, 2, &mut rng);
        let s_vn = entropy(&eigs(lift_block_diagonal(&s)?.matrix()));
        let s_h = g.cell_volume() * s.blocks().iter().map(|b| entropy(&eigs(b))).sum::<f64>();
        worst = worst.max((s_vn - (s_h - g.cell_volume().ln())).abs());
        let report = entropy_equivalence_report(&s)?;
        coherent_min = coherent_min.min(report.coherent_min_eigenvalue);
        coherent_psd += report.s_vn_coherent.is_some() as usize;
    }
    Ok((
        worst <= 1e-8,
        format!("max offset residual {worst:.2e}; coherent lift PSD in {coherent_psd}/20, min eigenvalue {coherent_min:.2e}"),
    ))
}

fn c6() -> Outcome {
    let grids: Vec<_> = [16, 32, 64].iter().map(|&n| PhaseSpaceGrid::periodic_square(6.0, n)).collect::<Result<_, _>>()?;
    let case = |inject: bool| {
        move |g: &PhaseSpaceGrid| -> hybrid_koopman::Result<(SparseOperator, Vec<HybridOperator>)> {
            let h = HybridHamiltonian::qubit_oscillator(g, 1.0, 0.5, DerivativeScheme::Central2)?;
            let mut op = h.operator().clone();
            if inject {
                op = op.add(&momentum_coupling(g, Axis::Q, &QuantumOperator::pauli_x(), 1.0, DerivativeScheme::Central2)?)?;
            }
            let mut rng = sampling::rng(7);
            Ok((op, (0..3).map(|_| sampling::smooth_hybrid_operator(g, 2, 2, &mut rng)).collect()))
        }
    };
    let good = refinement_study(&grids, case(false))?;
    let bad = refinement_study(&grids, case(true))?;
    Ok((
        good.min_order() >= 1.8 && bad.max_ratio() <= 1.2,
        format!(
            "admissible residuals {} (min order {:.3}); injected residuals {} (max ratio {:.3})",
            sci(&good.residuals),
            good.min_order(),
            sci(&bad.residuals),
            bad.max_ratio()
        ),
    ))
}

fn c7() -> Outcome {
    let g = PhaseSpaceGrid::periodic_square(12.0, 48)?;
    let f = ClassicalDensity::gaussian(&g, (1.0, 0.0), 1.0)?;
    let s = HybridState::product(&g, &f, &ket0())?;
    let h = HybridHamiltonian::qubit_oscillator(&g, 1.0, 0.5, DerivativeScheme::Fourier)?;
    let times: Vec<f64> = (1..=10).map(|k| k as f64 * PI / 5.0).collect();
    let r = compare_back_reaction(&s, &h, &times, LiftKind::Coherent, EvolutionMethod::Auto)?;
    let flat = r.decoupled.quantum_purity.iter().map(|p| (p - 1.0).abs()).fold(0.0, f64::max);
    let dip = r.coupled.quantum_purity.iter().cloned().fold(1.0, f64::min);
    // block lift for reference only: a grid delta in ξ is not resolved by the stencils
    let gb = PhaseSpaceGrid::periodic_square(5.0, 16)?;
    let hb = HybridHamiltonian::qubit_oscillator(&gb, 1.0, 0.5, DerivativeScheme::Fourier)?;
    let sb = HybridState::product(&gb, &ClassicalDensity::gaussian(&gb, (1.0, 0.0), 1.0)?, &ket0())?;
    let rb = compare_back_reaction(&sb, &hb, &times, LiftKind::BlockDiagonal, EvolutionMethod::Dense)?;
    Ok((
        r.max_deviation <= 1e-8 && flat <= 1e-10 && dip < 1.0 - 1e-3,
        format!(
            "coherent lift: marginal deviation {:.2e}, decoupled purity drift {flat:.1e}, coupled min purity {dip:.4}; \
             block lift (16x16, info) deviation {:.2e}",
            r.max_deviation, rb.max_deviation
        ),
    ))
}

fn c8() -> Outcome {
    let g = PhaseSpaceGrid::periodic_square(5.0, 32)?;
    let h = HybridHamiltonian::qubit_oscillator(&g, 1.0, 0.5, DerivativeScheme::Central2)?;
    let prop = HybridPropagator::new(&h)?;
    let mut rng = sampling::rng(8);
    let rho = lift_block_diagonal(&sampling::smooth_correlated_state(&g, 2, (1.0, 0.0), 1.0, &mut rng)?)?;
    let s0 = entropy(&eigs(rho.matrix()));
    let (mut ent, mut trace, mut min_eig) = (0.0f64, 0.0f64, f64::INFINITY);
    for k in 1..=4 {
        let m = prop.evolve_matrix(rho.matrix(), k as f64 * PI / 2.0);
        let e = eigs(&m);
        ent = ent.max((entropy(&e) - s0).abs());
        trace = trace.max((tr(&m) - c64::new(1.0, 0.0)).norm());
        min_eig = min_eig.min(e[0]);
    }
    Ok((
        ent <= 1e-8 && trace <= 1e-10 && min_eig >= -1e-9,
        format!("entropy drift {ent:.2e}, trace drift {trace:.2e}, min eigenvalue {min_eig:.2e}"),
    ))
}

fn c9() -> Outcome {
    let g = PhaseSpaceGrid::periodic_square(9.0, 32)?;
    let h = HybridHamiltonian::builder(&g, 2)
        .preset(HamiltonianPreset::Harmonic)
        .quantum(QuantumOperator::pauli_z().scale(c64::new(0.5, 0.0)))
        .scheme(DerivativeScheme::Fourier)
        .build()?;
    let r = canonical_stationarity(1.0, &h, LiftKind::Coherent, None, 8)?;
    let rb = canonical_stationarity(1.0, &h, LiftKind::BlockDiagonal, None, 2)?;
    Ok((
        r.max_drift <= 1e-6,
        format!("coherent lift drift {:.2e}; block lift (info) drift {:.2e}", r.max_drift, rb.max_drift),
    ))
}

fn c10() -> Outcome {
    let g = PhaseSpaceGrid::periodic_square(6.0, 16)?;
    let h = HybridHamiltonian::qubit_oscillator(&g, 1.0, 0.5, DerivativeScheme::Fourier)?;
    let probes = ProbeSet::generate(&g, 2, DEFAULT_PROBE_SEED)?;
    let unitary = validate_linear_generator(&LinearGenerator::from_hamiltonian(&h), &probes, &ValidatorOptions::default())?;
    let gamma = 0.3;
    let n: Vec<c64> = (0..h.dim()).map(|k| c64::new((k % 2) as f64, 0.0)).collect();
    let damped = LinearGenerator::Damped { h: h.operator().clone(), n: SparseOperator::diagonal(&n), gamma };
    let opts = ValidatorOptions { horizon: 0.1, ..Default::default() };
    let r = validate_linear_generator(&damped, &probes, &opts)?;
    let mut rel: f64 = 0.0;
    for (state, got) in probes.states.iter().zip(&r.initial_trace_residuals) {
        let excited: f64 = state.blocks().iter().map(|b| b[(1, 1)].re).sum::<f64>() * g.cell_volume();
        let want = 2.0 * gamma * excited;
        rel = rel.max((got - want).abs() / want);
    }
    Ok((
        unitary.verdicts.all() && !r.verdicts.trace && rel <= 0.05,
        format!(
            "unitary verdicts {:?} (automorphism {:.3}); damped trace residual {:.3e} flagged={}, closed-form mismatch {rel:.1e}",
            unitary.verdicts, unitary.automorphism_residual, r.trace_derivative_residual, !r.verdicts.trace
        ),
    ))
}

fn c11() -> Outcome {
    let config = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/decoupled_harmonic.json");
    let dir = tempfile::tempdir().map_err(|e| hybrid_koopman::Error::InvalidArgument(e.to_string()))?;
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_hkoop"))
            .args(["run", "--quiet", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .status()
            .map_err(|e| hybrid_koopman::Error::InvalidArgument(e.to_string()))?;
        let files: Vec<Vec<u8>> = ["timeseries.csv", "checks.json", "config.resolved.json"]
            .iter()
            .map(|f| std::fs::read(out.join(f)).unwrap_or_default())
            .collect();
        outputs.push((status.code(), files));
    }
    let identical = outputs[0] == outputs[1];
    let sizes: Vec<usize> = outputs[0].1.iter().map(|f| f.len()).collect();
    Ok((
        identical && outputs[0].0 == Some(0) && sizes.iter().all(|n| *n > 0),
        format!("exit codes {:?}/{:?}, byte-identical {identical}, sizes {sizes:?}", outputs[0].0, outputs[1].0),
    ))
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 11] = [
        ("1 Koopman-Liouville equivalence", 60, c1),
        ("2 unitarity and spectrum", 120, c2),
        ("3 expectation identity", 30, c3),
        ("4 marginal-power identity", 30, c4),
        ("5 entropy offset identity", 30, c5),
        ("6 preservation dichotomy", 120, c6),
        ("7 no back-reaction", 120, c7),
        ("8 entropy, trace, positivity", 120, c8),
        ("9 canonical stationarity", 60, c9),
        ("10 validator discrimination", 60, c10),
        ("11 CLI determinism", 30, c11),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, budget, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.starts_with(&format!("{f} "))) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let (ok, detail) = match outcome {
            Ok((ok, detail)) => (ok && in_time, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += !ok as usize;
        println!(
            "{} criterion {name}: {detail} [{:.1}s / {budget}s]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
