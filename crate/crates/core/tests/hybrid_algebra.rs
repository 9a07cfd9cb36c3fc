use hybrid_koopman::classical_koopman::classical_gns_dm;
use hybrid_koopman::hybrid_algebra::*;
use hybrid_koopman::linalg::{c64, CMat};
use hybrid_koopman::phase_space::{ClassicalDensity, ClassicalFunction, GridFunction, PhaseSpaceGrid};
use hybrid_koopman::quantum::{von_neumann_entropy, QuantumOperator, QuantumState};
use hybrid_koopman::sampling::{self, random_density, random_hybrid_operator, random_hybrid_state};

fn grid(n: usize) -> PhaseSpaceGrid {
    PhaseSpaceGrid::periodic_square(2.0, n).unwrap()
}

fn c(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

/// Σ γ diag(a) ⊗ A built entry by entry.
fn dense_realization(f: &HybridOperator) -> CMat {
    let n = f.grid().n_points();
    let d = f.quantum_dim();
    let mut m = CMat::zeros(n * d, n * d);
    for t in f.terms() {
        for xi in 0..n {
            for i in 0..d {
                for j in 0..d {
                    m[(xi * d + i, xi * d + j)] += t.gamma * t.classical.values()[xi] * t.quantum.matrix()[(i, j)];
                }
            }
        }
    }
    m
}

fn max_diff(a: &CMat, b: &CMat) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

fn eigenvalues(m: &CMat) -> Vec<f64> {
    let mut v = m.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

#[test]
fn unit_is_neutral_for_product() {
    let g = grid(4);
    let mut rng = sampling::rng(1);
    let f = random_hybrid_operator(&g, 2, 3, &mut rng);
    let p = hybrid_product(&HybridOperator::unit(&g, 2), &f).unwrap();
    assert!(max_diff(&p.realize().to_dense(), &dense_realization(&f)) < 1e-14);
}

#[test]
fn pauli_product_of_position_and_momentum() {
    let g = grid(4);
    let q = g.sample(|q, _| q);
    let p = g.sample(|_, p| p);
    let f = HybridOperator::simple(&g, &q, QuantumOperator::pauli_x()).unwrap();
    let h = HybridOperator::simple(&g, &p, QuantumOperator::pauli_y()).unwrap();
    let prod = hybrid_product(&f, &h).unwrap();
    let qp: ClassicalFunction = g.sample(|q, p| q * p);
    let expected = HybridOperator::simple(&g, &qp, QuantumOperator::pauli_z().scale(c(0.0, 1.0))).unwrap();
    assert!(max_diff(&prod.realize().to_dense(), &dense_realization(&expected)) < 1e-14);
}

#[test]
fn product_realizes_as_matrix_product() {
    let g = grid(4);
    let mut rng = sampling::rng(2);
    for _ in 0..5 {
        let f = random_hybrid_operator(&g, 3, 3, &mut rng);
        let h = random_hybrid_operator(&g, 3, 3, &mut rng);
        let lhs = hybrid_product(&f, &h).unwrap().realize().to_dense();
        let rhs = dense_realization(&f) * dense_realization(&h);
        assert!(max_diff(&lhs, &rhs) < 1e-12);
    }
}

#[test]
fn involution_examples() {
    let g = grid(4);
    let q = g.sample(|q, _| q);
    let f = HybridOperator::zero(&g, 2).with_term(c(0.0, 1.0), q.to_complex(), QuantumOperator::pauli_x()).unwrap();
    let star = hybrid_involution(&f);
    assert!(max_diff(&star.realize().to_dense(), &dense_realization(&f.scale(c(-1.0, 0.0)))) < 1e-15);

    let mut rng = sampling::rng(3);
    let f = random_hybrid_operator(&g, 2, 3, &mut rng);
    let h = random_hybrid_operator(&g, 2, 2, &mut rng);
    assert_eq!(hybrid_involution(&hybrid_involution(&f)), f);
    let lhs = hybrid_involution(&hybrid_product(&f, &h).unwrap()).realize().to_dense();
    let rhs = hybrid_product(&hybrid_involution(&h), &hybrid_involution(&f)).unwrap().realize().to_dense();
    assert!(max_diff(&lhs, &rhs) < 1e-12);
    let adj = dense_realization(&f).adjoint().to_owned();
    assert!(max_diff(&hybrid_involution(&f).realize().to_dense(), &adj) < 1e-14);
}

#[test]
fn star_product_is_positive() {
    let g = grid(4);
    let mut rng = sampling::rng(4);
    for _ in 0..5 {
        let f = random_hybrid_operator(&g, 2, 3, &mut rng);
        let ff = hybrid_product(&hybrid_involution(&f), &f).unwrap().realize().to_dense();
        let scale = eigenvalues(&ff).last().cloned().unwrap();
        assert!(eigenvalues(&ff)[0] >= -1e-12 * scale);
    }
}

#[test]
fn expectation_of_unit_and_products() {
    let g = grid(6);
    let mut rng = sampling::rng(5);
    let s = random_hybrid_state(&g, 2, &mut rng);
    assert!((hybrid_expectation(&s, &HybridOperator::unit(&g, 2)).unwrap() - c(1.0, 0.0)).norm() < 1e-12);

    let f = ClassicalDensity::gaussian(&g, (0.2, -0.1), 0.6).unwrap();
    let rho = random_density(2, &mut rng);
    let prod = HybridState::product(&g, &f, &rho).unwrap();
    let a = g.sample(|q, p| (q - p).cos());
    let op = QuantumOperator::pauli_y();
    let f_op = HybridOperator::simple(&g, &a, op.clone()).unwrap();
    let classical: f64 = g.cell_volume() * a.values().iter().zip(f.values()).map(|(x, y)| x * y).sum::<f64>();
    let quantum = rho.expectation(&op).unwrap();
    let lhs = hybrid_expectation(&prod, &f_op).unwrap();
    assert!((lhs - quantum * classical).norm() < 1e-12);
}

#[test]
fn lifts_reproduce_expectations() {
    let g = grid(4);
    let mut rng = sampling::rng(6);
    for _ in 0..5 {
        let s = random_hybrid_state(&g, 2, &mut rng);
        let f = random_hybrid_operator(&g, 2, 3, &mut rng);
        let want = hybrid_expectation(&s, &f).unwrap();
        for kind in [LiftKind::BlockDiagonal, LiftKind::Coherent] {
            let rho = lift(&s, kind).unwrap();
            let m = rho.matrix() * dense_realization(&f);
            let tr: c64 = (0..m.nrows()).map(|i| m[(i, i)]).sum();
            assert!((tr - want).norm() < 1e-10, "{kind:?}");
        }
    }
}

#[test]
fn block_lift_structure() {
    let g = grid(4);
    let mut values = vec![0.0; g.n_points()];
    values[5] = 1.0 / g.cell_volume();
    let f = ClassicalDensity::new(values, &g).unwrap();
    let rho_q = QuantumState::diagonal(&[0.25, 0.75]).unwrap();
    let s = HybridState::product(&g, &f, &rho_q).unwrap();
    let l = lift_block_diagonal(&s).unwrap();
    for i in 0..l.dim() {
        for j in 0..l.dim() {
            let want = if i / 2 == 5 && i == j { [0.25, 0.75][i % 2] } else { 0.0 };
            assert!((l.matrix()[(i, j)] - c(want, 0.0)).norm() < 1e-15);
        }
    }
    assert!((l.trace() - c(1.0, 0.0)).norm() < 1e-14);
}

#[test]
fn coherent_lift_reduces_to_classical_gns() {
    let g = grid(5);
    let f = ClassicalDensity::gaussian(&g, (0.3, 0.0), 0.8).unwrap();
    let s = HybridState::product(&g, &f, &QuantumState::maximally_mixed(1)).unwrap();
    let l = lift_coherent(&s).unwrap();
    let gns = classical_gns_dm(&f, &g).unwrap();
    for i in 0..l.dim() {
        for j in 0..l.dim() {
            assert!((l.matrix()[(i, j)] - gns.entry(i, j)).norm() < 1e-14);
        }
    }
    let eig = eigenvalues(l.matrix());
    assert!((eig[eig.len() - 1] - 1.0).abs() < 1e-12);
    assert!(eig[..eig.len() - 1].iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn coherent_lift_of_separable_diagonal_state() {
    let g = grid(4);
    let f = ClassicalDensity::gaussian(&g, (0.0, 0.3), 0.7).unwrap();
    let probs = [0.3, 0.7];
    let s = HybridState::product(&g, &f, &QuantumState::diagonal(&probs).unwrap()).unwrap();
    let l = lift_coherent(&s).unwrap();
    let w = g.cell_volume();
    let phi: Vec<f64> = f.values().iter().map(|v| (w * v).sqrt()).collect();
    for i in 0..l.dim() {
        for j in 0..l.dim() {
            let (xi, m) = (i / 2, i % 2);
            let (xj, mm) = (j / 2, j % 2);
            let want = if m == mm { probs[m] * phi[xi] * phi[xj] } else { 0.0 };
            assert!((l.matrix()[(i, j)] - c(want, 0.0)).norm() < 1e-14);
        }
    }
}

#[test]
fn coherent_lift_diagonal_blocks_are_exact() {
    let g = grid(4);
    let mut rng = sampling::rng(7);
    let s = random_hybrid_state(&g, 3, &mut rng);
    let l = lift_coherent(&s).unwrap();
    let w = g.cell_volume();
    for xi in 0..g.n_points() {
        for i in 0..3 {
            for j in 0..3 {
                let got = l.matrix()[(xi * 3 + i, xi * 3 + j)];
                assert!((got - s.block(xi)[(i, j)] * w).norm() < 1e-15);
            }
        }
    }
    let report = l.psd_report().unwrap();
    assert!(report.min_eigenvalue.is_finite());
}

#[test]
fn marginals() {
    let g = grid(4);
    let mut rng = sampling::rng(8);
    let f = ClassicalDensity::gaussian(&g, (0.1, 0.2), 0.5).unwrap();
    let rho = random_density(2, &mut rng);
    let s = HybridState::product(&g, &f, &rho).unwrap();
    let qm = quantum_marginal_of_state(&s).unwrap();
    assert!(max_diff(&qm.matrix().to_owned(), &rho.matrix().to_owned()) < 1e-12);
    let cm = classical_marginal(&s).unwrap();
    assert!(cm.values().iter().zip(f.values()).all(|(a, b)| (a - b).abs() < 1e-12));

    let s = random_hybrid_state(&g, 2, &mut rng);
    let a = quantum_marginal(&lift(&s, LiftKind::BlockDiagonal).unwrap()).unwrap();
    let b = quantum_marginal(&lift(&s, LiftKind::Coherent).unwrap()).unwrap();
    assert!(max_diff(&a.matrix().to_owned(), &b.matrix().to_owned()) < 1e-12);
    assert!(a.eigenvalues().iter().all(|v| *v >= -1e-12));
    let cm = classical_marginal_dm(&lift(&s, LiftKind::Coherent).unwrap()).unwrap();
    let direct = classical_marginal(&s).unwrap();
    assert!(cm.values().iter().zip(direct.values()).all(|(a, b)| (a - b).abs() < 1e-12));
    assert!(cm.values().iter().all(|v| *v >= 0.0));
}

#[test]
fn marginal_power_identity() {
    let g = grid(4);
    let mut rng = sampling::rng(9);
    let s = random_hybrid_state(&g, 2, &mut rng);
    let k1 = partial_trace_power_report(&s, 1).unwrap();
    let qm = quantum_marginal_of_state(&s).unwrap();
    assert!(max_diff(&k1.lhs.matrix().to_owned(), &qm.matrix().to_owned()) < 1e-14);

    let f = ClassicalDensity::gaussian(&g, (0.0, 0.0), 0.9).unwrap();
    let rho = random_density(2, &mut rng);
    let prod = HybridState::product(&g, &f, &rho).unwrap();
    let r = partial_trace_power_report(&prod, 2).unwrap();
    let sq = rho.matrix() * rho.matrix();
    let factor = g.cell_volume() * f.values().iter().map(|v| v * v).sum::<f64>();
    let want = CMat::from_fn(2, 2, |i, j| sq[(i, j)] * factor);
    assert!(max_diff(&r.lhs.matrix().to_owned(), &want) < 1e-12);
    assert!(max_diff(&r.rhs.matrix().to_owned(), &want) < 1e-12);

    let out = partial_trace_power(&s, 3).unwrap();
    let mut acc = CMat::zeros(2, 2);
    for b in s.blocks() {
        acc += b * b * b;
    }
    let acc = CMat::from_fn(2, 2, |i, j| acc[(i, j)] * g.cell_volume());
    assert!(max_diff(&out.matrix().to_owned(), &acc) < 1e-10);
    assert!(partial_trace_power(&s, 0).is_err());
}

#[test]
fn hybrid_entropy_examples() {
    let g = grid(4);
    let pure = QuantumState::pure(&[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
    let uniform = HybridState::product(&g, &ClassicalDensity::uniform(&g), &pure).unwrap();
    assert!((hybrid_entropy(&uniform).unwrap() - g.volume().ln()).abs() < 1e-12);

    let mut rng = sampling::rng(10);
    let f = ClassicalDensity::gaussian(&g, (0.2, 0.0), 0.6).unwrap();
    let rho = random_density(3, &mut rng);
    let prod = HybridState::product(&g, &f, &rho).unwrap();
    let want = differential_entropy(&f, &g) + von_neumann_entropy(&rho);
    assert!((hybrid_entropy(&prod).unwrap() - want).abs() < 1e-10);

    let s = random_hybrid_state(&g, 2, &mut rng);
    let mut oracle = 0.0;
    for b in s.blocks() {
        for l in eigenvalues(b) {
            if l > 0.0 {
                oracle -= l * l.ln();
            }
        }
    }
    assert!((hybrid_entropy(&s).unwrap() - oracle * g.cell_volume()).abs() < 1e-10);
}

#[test]
fn entropy_offset_examples() {
    let g = grid(4);
    let n = g.n_points() as f64;
    let s = HybridState::product(&g, &ClassicalDensity::uniform(&g), &QuantumState::maximally_mixed(1)).unwrap();
    let r = entropy_equivalence_report(&s).unwrap();
    assert!((r.s_vn_block - n.ln()).abs() < 1e-12);
    assert!((r.s_vn_block - (g.volume().ln() - g.cell_volume().ln())).abs() < 1e-12);
    // one classical block
    let mut values = vec![0.0; g.n_points()];
    values[3] = 1.0 / g.cell_volume();
    let f = ClassicalDensity::new(values, &g).unwrap();
    let rho = QuantumState::diagonal(&[0.1, 0.9]).unwrap();
    let single = HybridState::product(&g, &f, &rho).unwrap();
    let r = entropy_equivalence_report(&single).unwrap();
    assert!((r.s_vn_block - von_neumann_entropy(&rho)).abs() < 1e-12);
    assert!(r.offset_residual.abs() < 1e-12);

    let mut rng = sampling::rng(11);
    let r = entropy_equivalence_report(&random_hybrid_state(&g, 2, &mut rng)).unwrap();
    assert!(r.offset_residual.abs() < 1e-8);
}

#[test]
fn maxent_limits() {
    let g = PhaseSpaceGrid::periodic_square(3.0, 8).unwrap();
    let h_c = g.sample(|q, p| 0.5 * (q * q + p * p) + 0.1 * q);
    let h_q = QuantumOperator::diagonal(&[0.0, 1.0]);
    let cold = maxent_canonical_state(&g, &h_c, &h_q, &[], 200.0).unwrap();
    let imin = (0..g.n_points())
        .min_by(|&a, &b| h_c.values()[a].partial_cmp(&h_c.values()[b]).unwrap())
        .unwrap();
    let w = g.cell_volume();
    assert!((cold.block(imin)[(0, 0)].re * w - 1.0).abs() < 1e-6);

    let beta = 0.7;
    let s = maxent_canonical_state(&g, &h_c, &h_q, &[], beta).unwrap();
    let zc: f64 = w * h_c.values().iter().map(|e| (-beta * e).exp()).sum::<f64>();
    let zq = 1.0 + (-beta as f64).exp();
    for xi in [0, 17, 40] {
        let fc = (-beta * h_c.values()[xi]).exp() / zc;
        assert!((s.block(xi)[(0, 0)].re - fc / zq).abs() < 1e-12);
        assert!((s.block(xi)[(1, 1)].re - fc * (-beta).exp() / zq).abs() < 1e-12);
        assert!(s.block(xi)[(0, 1)].norm() < 1e-14);
    }
    assert!(maxent_canonical_state(&g, &h_c, &h_q, &[], -1.0).is_err());
}

#[test]
fn invalid_states_are_rejected() {
    let g = grid(4);
    let mut blocks = vec![CMat::identity(2, 2); g.n_points()];
    blocks[0] = CMat::from_fn(2, 2, |i, j| if i == j { c(-1.0, 0.0) } else { c(0.0, 0.0) });
    assert!(HybridState::from_unnormalized(&g, blocks).is_err());
    let blocks = vec![CMat::identity(2, 2); g.n_points()];
    assert!(HybridState::new(&g, blocks).is_err());
    let bad: GridFunction<c64> = GridFunction::constant(c(1.0, 0.0), &grid(5));
    assert!(HybridOperator::zero(&g, 2).with_term(c(1.0, 0.0), bad, QuantumOperator::pauli_x()).is_err());
}
