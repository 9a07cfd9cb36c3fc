use proptest::prelude::*;

use hybrid_koopman::classical_koopman::{
    build_liouvillian, represent_multiplicative, Assembly, DerivativeScheme, KoopmanLiouvillian, KoopmanPropagator,
};
use hybrid_koopman::dynamics::{evolve_observable, evolve_state, HybridHamiltonian};
use hybrid_koopman::expr::{parse, BinOp, EvalErrorKind, Expr, Func};
use hybrid_koopman::hybrid_algebra::*;
use hybrid_koopman::linalg::{c64, CMat};
use hybrid_koopman::phase_space::{
    hamiltonian_field, riemann_integral, GridFunction, HamiltonianPreset, PhaseSpaceGrid,
};
use hybrid_koopman::quantum::{purity, von_neumann_entropy, QuantumState};
use hybrid_koopman::sampling;

fn frob(m: &CMat) -> f64 {
    let mut s = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            s += m[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
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

fn tr(m: &CMat) -> c64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

fn eigs(m: &CMat) -> Vec<f64> {
    m.self_adjoint_eigenvalues(faer::Side::Lower).unwrap()
}

fn grid(n: usize) -> PhaseSpaceGrid {
    PhaseSpaceGrid::periodic_square(3.0, n).unwrap()
}

// ---- expressions ----

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::Q),
        Just(Expr::P),
        (0.0f64..10.0).prop_map(Expr::Num),
        (0u32..5).prop_map(|k| Expr::Num(k as f64)),
    ];
    leaf.prop_recursive(7, 64, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (0usize..5, inner.clone()).prop_map(|(f, a)| Expr::Call(Func::ALL[f], Box::new(a))),
            (0usize..5, inner.clone(), inner).prop_map(|(k, a, b)| {
                let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow][k];
                Expr::bin(op, a, b)
            }),
        ]
    })
}

/// Independent recursive evaluator; `None` for every evaluation error.
fn reference(e: &Expr, q: f64, p: f64) -> Option<f64> {
    let v = match e {
        Expr::Num(v) => *v,
        Expr::Q => q,
        Expr::P => p,
        Expr::Neg(a) => -reference(a, q, p)?,
        Expr::Call(f, a) => {
            let x = reference(a, q, p)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Exp => x.exp(),
                Func::Sqrt if x < 0.0 => return None,
                Func::Sqrt => x.sqrt(),
                Func::Abs => x.abs(),
            }
        }
        Expr::Bin(op, a, b) => {
            let (x, y) = (reference(a, q, p)?, reference(b, q, p)?);
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div if y == 0.0 => return None,
                BinOp::Div => x / y,
                BinOp::Pow if x < 0.0 && y.fract() != 0.0 => return None,
                BinOp::Pow => x.powf(y),
            }
        }
    };
    v.is_finite().then_some(v)
}

fn agree(got: Result<f64, EvalErrorKind>, want: Option<f64>) -> bool {
    match (got, want) {
        (Ok(a), Some(b)) => (a - b).abs() <= 1e-12 * b.abs().max(1.0),
        (Err(_), None) => true,
        // powi and powf may straddle the overflow threshold differently
        (Err(EvalErrorKind::NonFinite), Some(b)) => b.abs() > 1e300,
        (Ok(a), None) => a.abs() > 1e300,
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn evaluators_agree(e in arb_expr(), q in -3.0f64..3.0, p in -3.0f64..3.0) {
        prop_assume!(e.depth() <= 8);
        let want = reference(&e, q, p);
        let tree = e.eval(q, p);
        let compiled = e.compile().eval(q, p);
        prop_assert!(agree(tree, want), "{e}: {tree:?} vs {want:?}");
        prop_assert!(agree(compiled, want), "{e}: {compiled:?} vs {want:?}");
    }

    #[test]
    fn printing_round_trips(e in arb_expr()) {
        let s = e.to_string();
        let parsed = parse(&s).unwrap();
        prop_assert_eq!(&parsed, &e);
        prop_assert_eq!(parse(&parsed.to_string()).unwrap(), parsed);
    }
}

// ---- phase space and Koopman ----

const PRESETS: [HamiltonianPreset; 3] =
    [HamiltonianPreset::Harmonic, HamiltonianPreset::FreeParticle, HamiltonianPreset::LinearField { force: 0.7 }];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn riemann_integral_is_linear_and_monotone(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = grid(6);
        let mut rng = sampling::rng(seed);
        let f = sampling::smooth_function(&g, &mut rng);
        let h = sampling::smooth_function(&g, &mut rng);
        let combo = f.zip_with(&h, |x, y| a * x + b * y).unwrap();
        let lhs = riemann_integral(&combo, &g).unwrap();
        let rhs = a * riemann_integral(&f, &g).unwrap() + b * riemann_integral(&h, &g).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        let nonneg = f.map(|x| x.abs());
        prop_assert!(riemann_integral(&nonneg, &g).unwrap() >= 0.0);
        let bigger = nonneg.map(|x| x + 0.5);
        prop_assert!(riemann_integral(&bigger, &g).unwrap() >= riemann_integral(&nonneg, &g).unwrap());
    }

    #[test]
    fn separable_presets_are_divergence_free(n in 4usize..20, hw in 1.0f64..8.0, k in 0usize..3) {
        let g = PhaseSpaceGrid::periodic_square(hw, n).unwrap();
        let preset = PRESETS[k];
        let field = hamiltonian_field(&preset.tabulate(&g), &g).unwrap();
        prop_assert!(field.divergence(&g).iter().all(|v| v.abs() <= 1e-10));
    }

    #[test]
    fn koopman_propagation_is_unitary(seed in any::<u64>(), t in 0.0f64..(4.0 * std::f64::consts::PI), k in 0usize..3) {
        let g = grid(8);
        let preset = PRESETS[k];
        let l = build_liouvillian(&hamiltonian_field(&preset.tabulate(&g), &g).unwrap(), &g).unwrap();
        let prop = KoopmanPropagator::new(&l).unwrap();
        let mut rng = sampling::rng(seed);
        let psi = sampling::rough_function(&g, &mut rng).into_values();
        let out = prop.propagate(&psi, t).unwrap();
        let n0: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let n1: f64 = out.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((n0.sqrt() - n1.sqrt()).abs() <= 1e-10 * n0.sqrt().max(1.0));
    }

    #[test]
    fn multiplicative_operators_commute(seed in any::<u64>()) {
        let g = grid(5);
        let mut rng = sampling::rng(seed);
        let a = represent_multiplicative(&sampling::smooth_function(&g, &mut rng), &g).unwrap().to_dense();
        let b = represent_multiplicative(&sampling::smooth_function(&g, &mut rng), &g).unwrap().to_dense();
        prop_assert_eq!(max_diff(&(&a * &b), &(&b * &a)), 0.0);
    }

    #[test]
    fn liouvillian_is_hermitian(n in 4usize..12, k in 0usize..3, fourier in any::<bool>()) {
        let g = grid(n);
        let field = hamiltonian_field(&PRESETS[k].tabulate(&g), &g).unwrap();
        let scheme = if fourier { DerivativeScheme::Fourier } else { DerivativeScheme::Central2 };
        let l = KoopmanLiouvillian::assemble(&field, &g, scheme, Assembly::Symmetrized).unwrap();
        prop_assert!(l.hermiticity_defect() <= 1e-12);
    }
}

// ---- quantum ----

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_is_unitarily_invariant(seed in any::<u64>(), d in 1usize..7) {
        let mut rng = sampling::rng(seed);
        let rho = sampling::random_density(d, &mut rng);
        let u = sampling::random_unitary(d, &mut rng);
        let rotated = QuantumState::new(&u * rho.matrix() * u.adjoint()).unwrap();
        prop_assert!((von_neumann_entropy(&rotated) - von_neumann_entropy(&rho)).abs() <= 1e-10);
    }

    #[test]
    fn entropy_and_purity_bounds(seed in any::<u64>(), d in 1usize..7) {
        let mut rng = sampling::rng(seed);
        let rho = sampling::random_density(d, &mut rng);
        let s = von_neumann_entropy(&rho);
        prop_assert!(s >= -1e-12 && s <= (d as f64).ln() + 1e-12);
        let pur = purity(&rho);
        prop_assert!(pur >= 1.0 / d as f64 - 1e-12 && pur <= 1.0 + 1e-12);
    }
}

// ---- hybrid algebra ----

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn involution_is_isometric(seed in any::<u64>(), d in 1usize..4, terms in 1usize..4) {
        let g = grid(4);
        let mut rng = sampling::rng(seed);
        let f = sampling::random_hybrid_operator(&g, d, terms, &mut rng);
        let real = f.realize().to_dense();
        let star = hybrid_involution(&f).realize().to_dense();
        prop_assert!((frob(&real) - frob(&star)).abs() <= 1e-12 * frob(&real).max(1.0));
        prop_assert!(max_diff(&star, &real.adjoint().to_owned()) <= 1e-12);
    }

    #[test]
    fn expectation_functional_is_positive(seed in any::<u64>(), d in 1usize..4, terms in 1usize..4) {
        let g = grid(4);
        let mut rng = sampling::rng(seed);
        let s = sampling::random_hybrid_state(&g, d, &mut rng);
        let f = sampling::random_hybrid_operator(&g, d, terms, &mut rng);
        let ff = hybrid_product(&hybrid_involution(&f), &f).unwrap();
        let v = hybrid_expectation(&s, &ff).unwrap();
        prop_assert!(v.re >= -1e-10);
        prop_assert!(v.im.abs() <= 1e-10 * v.re.abs().max(1.0));
    }

    #[test]
    fn both_lifts_reproduce_expectations(seed in any::<u64>(), d in 1usize..4) {
        let g = grid(4);
        let mut rng = sampling::rng(seed);
        let s = sampling::random_hybrid_state(&g, d, &mut rng);
        let f = sampling::random_hybrid_operator(&g, d, 3, &mut rng);
        let want = hybrid_expectation(&s, &f).unwrap();
        let fm = f.realize().to_dense();
        for kind in [LiftKind::BlockDiagonal, LiftKind::Coherent] {
            let rho = lift(&s, kind).unwrap();
            let got = tr(&(rho.matrix() * &fm));
            prop_assert!((got - want).norm() <= 1e-10 * want.norm().max(1.0));
            prop_assert!((rho.trace() - c64::new(1.0, 0.0)).norm() <= 1e-10);
        }
    }

    #[test]
    fn block_lift_power_identity(seed in any::<u64>(), d in 1usize..4, k in 1u32..5) {
        let g = grid(4);
        let w = g.cell_volume();
        let mut rng = sampling::rng(seed);
        let s = sampling::random_hybrid_state(&g, d, &mut rng);
        let m = lift_block_diagonal(&s).unwrap().matrix().clone();
        let mut pow = m.clone();
        for _ in 1..k {
            pow = &pow * &m;
        }
        let n = g.n_points();
        let lhs = CMat::from_fn(d, d, |i, j| {
            (0..n).map(|x| pow[(x * d + i, x * d + j)]).sum::<c64>() / w.powi(k as i32 - 1)
        });
        let rhs = CMat::from_fn(d, d, |i, j| {
            s.blocks()
                .iter()
                .map(|b| {
                    let mut p = b.clone();
                    for _ in 1..k {
                        p = &p * b;
                    }
                    p[(i, j)]
                })
                .sum::<c64>()
                * w
        });
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-10);
    }

    #[test]
    fn block_lift_entropy_offset(seed in any::<u64>(), d in 1usize..4) {
        let g = grid(4);
        let mut rng = sampling::rng(seed);
        let s = sampling::random_hybrid_state(&g, d, &mut rng);
        let spectrum = eigs(lift_block_diagonal(&s).unwrap().matrix());
        let s_vn: f64 = -spectrum.iter().filter(|l| **l > 1e-14).map(|l| l * l.ln()).sum::<f64>();
        let s_h: f64 = -g.cell_volume()
            * s.blocks().iter().flat_map(eigs).filter(|l| *l > 1e-14).map(|l| l * l.ln()).sum::<f64>();
        prop_assert!((s_vn - (s_h - g.cell_volume().ln())).abs() <= 1e-8);
        prop_assert!((hybrid_entropy(&s).unwrap() - s_h).abs() <= 1e-10);
    }
}

// ---- dynamics ----

fn small_hamiltonian(lambda: f64) -> HybridHamiltonian {
    HybridHamiltonian::qubit_oscillator(&grid(4), 1.0, lambda, DerivativeScheme::Central2).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unitary_flow_preserves_trace_spectrum_and_entropy(
        seed in any::<u64>(),
        t in 0.0f64..10.0,
        lambda in 0.0f64..1.0,
        coherent in any::<bool>(),
    ) {
        let h = small_hamiltonian(lambda);
        let mut rng = sampling::rng(seed);
        let s = sampling::random_hybrid_state(h.grid(), 2, &mut rng);
        let kind = if coherent { LiftKind::Coherent } else { LiftKind::BlockDiagonal };
        let rho = lift(&s, kind).unwrap();
        let out = evolve_state(&rho, &h, t).unwrap();
        prop_assert!((out.trace() - c64::new(1.0, 0.0)).norm() <= 1e-10);
        let e0 = eigs(rho.matrix());
        let e1 = eigs(out.matrix());
        if !coherent {
            prop_assert!(e1[0] >= -1e-9);
        }
        let ent = |e: &[f64]| -e.iter().filter(|l| **l > 1e-14).map(|l| l * l.ln()).sum::<f64>();
        prop_assert!((ent(&e0) - ent(&e1)).abs() <= 1e-8);
    }

    #[test]
    fn heisenberg_and_schrodinger_pictures_agree(seed in any::<u64>(), t in 0.0f64..10.0, lambda in 0.0f64..1.0) {
        let h = small_hamiltonian(lambda);
        let mut rng = sampling::rng(seed);
        let s = sampling::random_hybrid_state(h.grid(), 2, &mut rng);
        let rho = lift(&s, LiftKind::Coherent).unwrap();
        let f = sampling::random_hybrid_operator(h.grid(), 2, 3, &mut rng).realize().to_dense();
        let lhs = tr(&(evolve_state(&rho, &h, t).unwrap().matrix() * &f));
        let rhs = tr(&(rho.matrix() * evolve_observable(&f, &h, t).unwrap()));
        prop_assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1.0));
    }

    #[test]
    fn classical_marginal_ignores_quantum_hamiltonian(seed in any::<u64>(), t in 0.0f64..6.0) {
        let g = grid(4);
        let mut rng = sampling::rng(seed);
        let hc = HybridHamiltonian::builder(&g, 2).preset(HamiltonianPreset::Harmonic).build().unwrap();
        let hq = HybridHamiltonian::builder(&g, 2)
            .preset(HamiltonianPreset::Harmonic)
            .quantum(sampling::random_hermitian(2, &mut rng))
            .build()
            .unwrap();
        let s = sampling::random_hybrid_state(&g, 2, &mut rng);
        let rho = lift(&s, LiftKind::Coherent).unwrap();
        let a = evolve_state(&rho, &hc, t).unwrap().classical_marginal_values();
        let b = evolve_state(&rho, &hq, t).unwrap().classical_marginal_values();
        prop_assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-10));
    }

    /// Multiplicative couplings only move `ξ`-off-diagonal entries, so the
    /// marginal of a block state starts out coupling-independent.
    #[test]
    fn coupling_leaves_initial_marginal_rate_unchanged(seed in any::<u64>(), lambda in 0.0f64..2.0) {
        let h0 = small_hamiltonian(0.0).operator().to_dense();
        let h1 = small_hamiltonian(lambda).operator().to_dense();
        let mut rng = sampling::rng(seed);
        let s = sampling::random_hybrid_state(&grid(4), 2, &mut rng);
        let rho = lift(&s, LiftKind::BlockDiagonal).unwrap().matrix().clone();
        let rate = |h: &CMat| {
            let c = h * &rho - &rho * h;
            (0..rho.nrows() / 2).map(|x| (c[(2 * x, 2 * x)] + c[(2 * x + 1, 2 * x + 1)]).im).collect::<Vec<_>>()
        };
        let (a, b) = (rate(&h0), rate(&h1));
        prop_assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-10));
    }
}

#[test]
fn grid_functions_are_shape_checked() {
    let g = grid(4);
    assert!(GridFunction::new(vec![0.0; 15], &g).is_err());
    assert!(QuantumState::new(CMat::zeros(2, 2)).is_err());
}
