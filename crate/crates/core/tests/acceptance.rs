//! Acceptance criteria. Run with `cargo test --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;

use fermi_modes::analysis::{
    designated_pair, even_restriction_equal, expectation, hermitian_spectrum, is_uncorrelated,
    majorana_projection, odd_odd_witness, product_expectation, product_functional_consistency,
    projection_meet, separable_fit, witness_is_sound, Consistency,
};
use fermi_modes::bipartition::{check_microcausality, Bipartition};
use fermi_modes::car_ops::{jw_matrix, ladder_matrix, poly_to_matrix, verify_car};
use fermi_modes::cli::Report;
use fermi_modes::fock::{
    two_branch_mixture, two_branch_state, DensityOperator, FockVector, OccupationState,
};
use fermi_modes::opalg::{parse, OperatorPoly, Parity};
use fermi_modes::Complex64;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c1() {
    for m in 1..=8 {
        assert_eq!(verify_car(m).unwrap(), 0.0, "M = {m}");
    }
}

fn c2() {
    for m in 1..=8 {
        for i in 1..=m {
            for dagger in [false, true] {
                let jw = jw_matrix(i, dagger, m).unwrap();
                let sign = ladder_matrix(i, dagger, m).unwrap();
                assert_eq!(jw, sign, "mode {i}, dagger {dagger}, M = {m}");
            }
        }
    }
}

fn c3() {
    for n in [1, 3, 5] {
        let psi = two_branch_state(n).unwrap();
        let (p, q) = designated_pair(&Bipartition::contiguous(n, 2 * n).unwrap());
        assert_eq!(p.parity(), Parity::Odd);
        assert_eq!(q.parity(), Parity::Odd);
        let v = product_expectation(&psi, &p, &q).unwrap();
        assert!((v.norm() - 0.5).abs() < 1e-12, "N = {n}: {v}");
        println!("    N = {n}: value {v} (phase recorded only)");
    }
}

fn c4() {
    for n in [1, 3] {
        let b = Bipartition::contiguous(n, 2 * n).unwrap();
        let cmp = even_restriction_equal(
            &two_branch_state(n).unwrap(),
            &two_branch_mixture(n).unwrap(),
            &b,
            4,
        )
        .unwrap();
        assert!(cmp.max_diff < 1e-10, "N = {n}: {}", cmp.max_diff);
    }
    // The ket (|1100⟩ + |0011⟩)/√2 differs from the mixture only on the
    // coherence a2a1 ⊗ a3†a4†, whose expectation is ±1/2.
    let b = Bipartition::contiguous(2, 4).unwrap();
    let cmp = even_restriction_equal(
        &two_branch_state(2).unwrap(),
        &two_branch_mixture(2).unwrap(),
        &b,
        4,
    )
    .unwrap();
    let oracle = product_expectation(
        &two_branch_state(2).unwrap(),
        &parse("a2*a1").unwrap(),
        &parse("A3*A4").unwrap(),
    )
    .unwrap()
    .norm();
    assert!((oracle - 0.5).abs() < 1e-12);
    assert!(cmp.max_diff >= 0.5 - 1e-10, "N = 2: {}", cmp.max_diff);
}

fn c5() {
    for n in [1, 3] {
        let m = 2 * n;
        let p1 = poly_to_matrix(&majorana_projection(1), m).unwrap();
        let p2 = poly_to_matrix(&majorana_projection(n + 1), m).unwrap();
        let pqp = p1.matmul(&p2).unwrap().matmul(&p1).unwrap();
        let nonzero: Vec<f64> = hermitian_spectrum(&pqp)
            .unwrap()
            .into_iter()
            .filter(|l| l.abs() > 1e-10)
            .collect();
        assert!(!nonzero.is_empty());
        assert!(
            nonzero.iter().all(|l| (l - 0.5).abs() < 1e-10),
            "{nonzero:?}"
        );
        let meet = projection_meet(&p1, &p2, 1e-12, 64).unwrap();
        assert!(meet.converged);
        assert_eq!(meet.rank, 0);
        assert!(meet.meet.max_abs() < 1e-10);
        assert!(
            meet.residual < 1e-8,
            "method disagreement {}",
            meet.residual
        );
    }
}

fn c6() {
    for n in [1, 3] {
        let m = 2 * n;
        let psi = two_branch_state(n).unwrap();
        let p1 = majorana_projection(1);
        let p2 = majorana_projection(n + 1);
        let u = is_uncorrelated(&psi, &p1, &p2, 1e-10).unwrap();
        assert!(!u.uncorrelated);
        assert!(u.lhs.abs() < 1e-10);
        assert!(u.rhs > 0.2);
        assert!((u.lhs - u.rhs).abs() > 1e-10);
        // dense oracle for each factor
        let v = DVector::from_vec(psi.to_dense().unwrap());
        for (p, got) in [(&p1, u.first_value), (&p2, u.second_value)] {
            let d = poly_to_matrix(p, m).unwrap().to_dense().unwrap();
            let want = (v.adjoint() * d * &v)[(0, 0)].re;
            assert!((want - got).abs() < 1e-12);
            assert!((want - 0.5).abs() < 1e-12);
        }
        println!(
            "    N = {n}: <P1> = {}, <P2> = {}, rhs = {} (each factor 1/2, not 1/4)",
            u.first_value, u.second_value, u.rhs
        );
    }
}

fn coherent(modes: usize, mode: usize) -> FockVector {
    let s = 0.5f64.sqrt();
    FockVector::from_amplitudes(
        modes,
        [
            (OccupationState::vacuum(modes), Complex64::new(s, 0.0)),
            (
                OccupationState::from_occupied(modes, &[mode]).unwrap(),
                Complex64::new(s, 0.0),
            ),
        ],
    )
    .unwrap()
}

fn random_diagonal(modes: usize, rng: &mut ChaCha8Rng) -> DensityOperator {
    let dim = 1 << modes;
    let w: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    let total: f64 = w.iter().sum();
    let m = DMatrix::from_diagonal(&DVector::from_iterator(
        dim,
        w.iter().map(|x| Complex64::new(x / total, 0.0)),
    ));
    DensityOperator::from_matrix(modes, m).unwrap()
}

fn c7() {
    let b = Bipartition::contiguous(3, 6).unwrap();
    let w1 = coherent(6, 1);
    let w2 = coherent(6, 4);
    assert!(matches!(
        product_functional_consistency(&w1, &w2, &b, 3).unwrap(),
        Consistency::Inconsistent { .. }
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let d1 = random_diagonal(6, &mut rng);
        let d2 = random_diagonal(6, &mut rng);
        assert_eq!(
            product_functional_consistency(&d1, &d2, &b, 3).unwrap(),
            Consistency::Consistent
        );
    }
    let basis = FockVector::basis(OccupationState::parse_bits("101100").unwrap());
    assert_eq!(
        product_functional_consistency(&basis, &basis, &b, 3).unwrap(),
        Consistency::Consistent
    );
}

fn random_poly(modes: usize, rng: &mut ChaCha8Rng) -> OperatorPoly {
    let mut p = OperatorPoly::zero();
    for _ in 0..rng.gen_range(1..5) {
        let len = rng.gen_range(0..4);
        let factors: Vec<_> = (0..len)
            .map(|_| {
                let mode = rng.gen_range(1..=modes);
                if rng.gen() {
                    fermi_modes::opalg::Factor::create(mode)
                } else {
                    fermi_modes::opalg::Factor::annihilate(mode)
                }
            })
            .collect();
        let z = Complex64::new(rng.gen_range(-2..=2) as f64, rng.gen_range(-1..=1) as f64);
        p = p + OperatorPoly::word(z, &factors);
    }
    p
}

fn c8() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let labels = [Parity::Even, Parity::Odd];
    let mut tested = 0;
    while tested < 200 {
        let modes = rng.gen_range(1..=6);
        let p = random_poly(modes, &mut rng);
        let q = random_poly(modes, &mut rng);
        assert_eq!(p.theta().theta(), p);
        assert_eq!((&p * &q).theta(), &p.theta() * &q.theta());
        assert_eq!(p.normal_order().normal_order(), p.normal_order());
        let mp = poly_to_matrix(&p, modes).unwrap();
        let mq = poly_to_matrix(&q, modes).unwrap();
        assert!(
            poly_to_matrix(&(&p * &q), modes)
                .unwrap()
                .distance(&mp.matmul(&mq).unwrap())
                .unwrap()
                < 1e-12
        );
        let (pe, po) = p.even_odd_split();
        let (qe, qo) = q.even_odd_split();
        for (x, lx) in [(&pe, labels[0]), (&po, labels[1])] {
            for (y, ly) in [(&qe, labels[0]), (&qo, labels[1])] {
                let prod = x * y;
                let want = if lx == ly { Parity::Even } else { Parity::Odd };
                assert!(prod.is_zero() || prod.parity() == want);
            }
        }
        tested += 1;
    }
    let singles: Vec<OperatorPoly> = (1..=3)
        .flat_map(|i| [OperatorPoly::annihilate(i), OperatorPoly::create(i)])
        .collect();
    for p in &singles {
        for q in &singles {
            for r in &singles {
                let lhs = (p * q).commutator(r);
                let rhs = p * &q.anticommutator(r) - &p.anticommutator(r) * q;
                assert_eq!(lhs, rhs);
            }
        }
    }
    for m in 2..=8 {
        for b in Bipartition::all(m) {
            assert_eq!(check_microcausality(&b).unwrap(), 0.0, "{b}");
        }
    }
    for n in [1, 2, 3] {
        let b = Bipartition::contiguous(n, 2 * n).unwrap();
        let psi = two_branch_state(n).unwrap();
        let r = odd_odd_witness(&psi, &b, 3).unwrap();
        assert!(witness_is_sound(&r, &psi, &b));
    }
}

fn c9() {
    let b1 = Bipartition::contiguous(1, 2).unwrap();
    for n in [1, 2, 3] {
        let b = Bipartition::contiguous(n, 2 * n).unwrap();
        let fit = separable_fit(&two_branch_mixture(n).unwrap(), &b, 0, 0).unwrap();
        assert!(fit.residual < 1e-9, "N = {n}: {}", fit.residual);
    }
    let rho = DensityOperator::from_pure(&two_branch_state(1).unwrap()).unwrap();
    let mut worst = f64::INFINITY;
    for dict in [0, 4, 32, 128] {
        for seed in 0..4 {
            let fit = separable_fit(&rho, &b1, dict, seed).unwrap();
            worst = worst.min(fit.residual);
        }
    }
    assert!(worst >= 0.3, "{worst}");
    println!("    smallest residual on the N = 1 ket: {worst}");
}

fn c10() {
    let out = Command::new(env!("CARGO_BIN_EXE_fma"))
        .args(["demo-psi", "--n", "3", "--format", "json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: Report = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.verdict, "entangled-certified");
    assert_eq!(report.modes, 6);
    let w = report.witness.as_ref().unwrap();
    let p = parse(&w.a1).unwrap();
    let q = parse(&w.a2).unwrap();
    let psi = two_branch_state(3).unwrap();
    let v = product_expectation(&psi, &p, &q).unwrap();
    assert!((v - Complex64::from(&w.value)).norm() < 1e-12);
    assert!((v.norm() - 0.5).abs() < 1e-12);
    let d = &report.details;
    assert_eq!(d["even_restriction_equal"], true);
    assert!(d["meet_norm"].as_f64().unwrap() < 1e-10);
    let eig = d["pqp_nonzero_eigenvalues"].as_array().unwrap();
    assert_eq!(eig.len(), 1);
    assert!((eig[0].as_f64().unwrap() - 0.5).abs() < 1e-10);
    assert_eq!(d["uncorrelated"], false);
    assert!(d["meet_expectation"].as_f64().unwrap().abs() < 1e-10);
    assert!(d["product_of_expectations"].as_f64().unwrap() > 0.2);
    assert_eq!(d["self_check_passed"], true);
    let n1 = expectation(&psi, &parse("A1*a1").unwrap()).unwrap();
    assert!((n1.re - 0.5).abs() < 1e-12);
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn()); 10] = [
        ("1 CAR exactness", c1),
        ("2 Jordan-Wigner faithfulness", c2),
        ("3 odd-odd witness value 1/2", c3),
        ("4 even-sector indistinguishability", c4),
        ("5 projection meet", c5),
        ("6 correlation verdict", c6),
        ("7 product-functional contradiction", c7),
        ("8 property suites", c8),
        ("9 separable fit sanity", c9),
        ("10 CLI demo report", c10),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let ok = catch_unwind(AssertUnwindSafe(f)).is_ok();
        println!("{} criterion {name}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
