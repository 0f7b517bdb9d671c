use std::collections::BTreeSet;

use fermi_modes::analysis::{
    canonical_monomials, expectation, odd_odd_witness, projection_meet, witness_is_sound,
};
use fermi_modes::bipartition::{check_microcausality, membership, Bipartition, Side};
use fermi_modes::car_ops::{jw_matrix, ladder_matrix, poly_to_matrix, SparseOperator};
use fermi_modes::fock::{
    basis_index, sector_basis, two_branch_mixture, two_branch_state, DensityOperator, FockVector,
    OccupationState,
};
use fermi_modes::opalg::{Factor, ModeSet, OperatorPoly, Parity};
use fermi_modes::Complex64;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn factor(modes: usize) -> impl Strategy<Value = Factor> {
    (1..=modes, any::<bool>()).prop_map(|(m, d)| {
        if d {
            Factor::create(m)
        } else {
            Factor::annihilate(m)
        }
    })
}

fn poly(modes: usize) -> impl Strategy<Value = OperatorPoly> {
    let term = (
        -3i32..=3,
        -2i32..=2,
        prop::collection::vec(factor(modes), 0..5),
    );
    prop::collection::vec(term, 1..5).prop_map(|terms| {
        OperatorPoly::from_words(
            terms
                .into_iter()
                .map(|(re, im, w)| (Complex64::new(re as f64, im as f64), w)),
        )
    })
}

fn sized_poly() -> impl Strategy<Value = (usize, OperatorPoly)> {
    (1usize..=6).prop_flat_map(|m| (Just(m), poly(m)))
}

fn sized_pair() -> impl Strategy<Value = (usize, OperatorPoly, OperatorPoly)> {
    (1usize..=6).prop_flat_map(|m| (Just(m), poly(m), poly(m)))
}

fn matrix(p: &OperatorPoly, modes: usize) -> SparseOperator {
    poly_to_matrix(p, modes).unwrap()
}

fn close(a: &SparseOperator, b: &SparseOperator) -> bool {
    a.distance(b).unwrap() < 1e-12
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn normal_order_is_idempotent_and_faithful((m, p) in sized_poly()) {
        let n = p.normal_order();
        prop_assert_eq!(&n.normal_order(), &n);
        prop_assert!(n.monomials().iter().all(|mono| mono.is_canonical()));
        // words multiplied directly on the sign-rule basis, no rewriting
        let mut direct = SparseOperator::zero(m);
        for (w, z) in p.terms() {
            let mut acc = SparseOperator::identity(m);
            for f in w {
                acc = acc.matmul(&ladder_matrix(f.mode, f.dagger, m).unwrap()).unwrap();
            }
            direct = direct.add(&acc.scale(z)).unwrap();
        }
        prop_assert!(close(&matrix(&n, m), &direct));
    }

    #[test]
    fn matrices_respect_algebra((m, p, q) in sized_pair()) {
        let (mp, mq) = (matrix(&p, m), matrix(&q, m));
        prop_assert!(close(&matrix(&(&p + &q), m), &mp.add(&mq).unwrap()));
        prop_assert!(close(&matrix(&(&p * &q), m), &mp.matmul(&mq).unwrap()));
        prop_assert!(close(&matrix(&p.adjoint(), m), &mp.adjoint()));
    }

    #[test]
    fn theta_is_an_involutive_homomorphism((_m, p, q) in sized_pair()) {
        prop_assert_eq!(p.theta().theta(), p.clone());
        prop_assert_eq!((&p * &q).theta(), &p.theta() * &q.theta());
        prop_assert_eq!((&p + &q).theta(), &p.theta() + &q.theta());
    }

    #[test]
    fn parity_grading_multiplies((_m, p, q) in sized_pair()) {
        let (pe, po) = p.even_odd_split();
        let (qe, qo) = q.even_odd_split();
        prop_assert_eq!(&pe + &po, p.clone());
        let table = [
            (&pe, &qe, Parity::Even),
            (&po, &qo, Parity::Even),
            (&pe, &qo, Parity::Odd),
            (&po, &qe, Parity::Odd),
        ];
        for (x, y, want) in table {
            let prod = x * y;
            if !prod.is_zero() {
                prop_assert_eq!(prod.parity(), want);
            }
        }
    }

    #[test]
    fn canonical_form_equality_matches_matrix_equality((m, p, q) in sized_pair()) {
        let same_form = p == q;
        let same_matrix = close(&matrix(&p, m), &matrix(&q, m));
        prop_assert_eq!(same_form, same_matrix);
        // a rewritten copy of p, built from its canonical terms in reverse
        let rebuilt = OperatorPoly::from_words(
            p.terms().collect::<Vec<_>>().into_iter().rev().map(|(w, z)| (z, w.to_vec())),
        );
        prop_assert_eq!(&rebuilt, &p);
    }

    #[test]
    fn expectation_of_self_adjoint_is_real((m, p) in sized_poly(), seed in any::<u64>()) {
        let h = &p + &p.adjoint();
        let dim = 1usize << m;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let amps: Vec<_> = (0..dim)
            .map(|k| {
                (
                    OccupationState::from_index(k, m).unwrap(),
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                )
            })
            .collect();
        let v = FockVector::from_amplitudes(m, amps).unwrap();
        if v.norm() > 0.0 {
            let v = v.normalized().unwrap();
            prop_assert!(expectation(&v, &h).unwrap().im.abs() < 1e-12 * (1.0 + h.len() as f64 * 10.0));
        }
    }

    #[test]
    fn membership_is_closed_under_addition((p, q) in (poly(2), poly(2))) {
        let b = Bipartition::contiguous(2, 4).unwrap();
        prop_assert!(membership(&p, &b, Side::First));
        prop_assert!(membership(&q, &b, Side::First));
        prop_assert!(membership(&(&p + &q), &b, Side::First));
    }
}

#[test]
fn commutator_product_identity_on_single_factors() {
    let singles: Vec<OperatorPoly> = (1..=3)
        .flat_map(|i| [OperatorPoly::annihilate(i), OperatorPoly::create(i)])
        .collect();
    let mut count = 0;
    for a in &singles {
        for b in &singles {
            for c in &singles {
                let lhs = (a * b).commutator(c);
                let rhs = a * &b.anticommutator(c) - &a.anticommutator(c) * b;
                assert_eq!(lhs, rhs, "{a} {b} {c}");
                count += 1;
            }
        }
    }
    assert_eq!(count, 216);
}

#[test]
fn basis_index_is_a_bijection() {
    for m in 0..=12 {
        let mut seen = BTreeSet::new();
        for k in 0..1usize << m {
            let s = OccupationState::from_index(k, m).unwrap();
            assert_eq!(basis_index(&s), k);
            if m > 0 {
                assert_eq!(OccupationState::parse_bits(&s.to_bit_string()).unwrap(), s);
            }
            seen.insert(k);
        }
        assert_eq!(seen.len(), 1 << m);
        let sectors: usize = (0..=m).map(|n| sector_basis(m, n).unwrap().len()).sum();
        assert_eq!(sectors, 1 << m);
    }
}

#[test]
fn presets_respect_particle_number() {
    for n in 1..=4 {
        assert!(two_branch_state(n).unwrap().in_sector(n as u32));
        let rho = two_branch_mixture(n).unwrap();
        let total = (1..=2 * n).fold(OperatorPoly::zero(), |acc, i| acc + OperatorPoly::number(i));
        let nm = matrix(&total, 2 * n).to_dense().unwrap();
        let r = rho.matrix();
        let comm: DMatrix<Complex64> = &nm * r - r * &nm;
        assert!(comm.iter().all(|z| z.norm() < 1e-14));
    }
}

#[test]
fn jordan_wigner_matches_sign_rule() {
    for m in 1..=8 {
        for i in 1..=m {
            for d in [false, true] {
                assert_eq!(jw_matrix(i, d, m).unwrap(), ladder_matrix(i, d, m).unwrap());
            }
        }
    }
}

#[test]
fn monomial_matrices_have_unit_entries() {
    let all: ModeSet = (1..=4).collect();
    for w in canonical_monomials(&all, 4) {
        let p = OperatorPoly::word(Complex64::new(1.0, 0.0), &w);
        for (_, z) in matrix(&p, 4).entries() {
            assert!(z == Complex64::new(1.0, 0.0) || z == Complex64::new(-1.0, 0.0));
        }
    }
}

#[test]
fn number_conserving_even_polys_commute_with_total_number() {
    let total = (1..=4).fold(OperatorPoly::zero(), |acc, i| acc + OperatorPoly::number(i));
    for s in [
        "A1*a2",
        "A1*A3*a4*a2 + 2*A2*a2",
        "A4*a1 + A1*a4",
        "(1+2i)*A1*A2*a2*a1",
    ] {
        let p: OperatorPoly = s.parse().unwrap();
        assert!(p.commutator(&total).is_zero(), "{s}");
    }
}

#[test]
fn microcausality_for_every_bipartition() {
    for m in 2..=8 {
        for b in Bipartition::all(m) {
            assert_eq!(check_microcausality(&b).unwrap(), 0.0, "{b}");
        }
    }
}

#[test]
fn cross_partition_grading() {
    let b = Bipartition::contiguous(2, 4).unwrap();
    let left = canonical_monomials(b.first(), 3);
    let right = canonical_monomials(b.second(), 3);
    for l in &left {
        for r in &right {
            let p = OperatorPoly::word(Complex64::new(1.0, 0.0), l);
            let q = OperatorPoly::word(Complex64::new(1.0, 0.0), r);
            if l.len() % 2 == 1 && r.len() % 2 == 1 {
                assert!(p.anticommutator(&q).is_zero());
            } else {
                assert!(p.commutator(&q).is_zero());
            }
        }
    }
}

#[test]
fn witness_soundness_on_random_states() {
    let b = Bipartition::contiguous(2, 4).unwrap();
    for seed in 0u64..40 {
        let amps = (0..16usize).map(|k| {
            let x = (seed * 31 + k as u64 * 17) % 7;
            (
                OccupationState::from_index(k, 4).unwrap(),
                Complex64::new(x as f64 - 3.0, ((seed + k as u64) % 3) as f64 - 1.0),
            )
        });
        let v = FockVector::from_amplitudes(4, amps)
            .unwrap()
            .normalized()
            .unwrap();
        let r = odd_odd_witness(&v, &b, 3).unwrap();
        assert!(witness_is_sound(&r, &v, &b), "seed {seed}");
    }
}

/// Projector onto the column span of `m`.
fn span_projector(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let svd = m.clone().svd(true, false);
    let u = svd.u.unwrap();
    let cols: Vec<_> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > 1e-9)
        .map(|k| u.column(k).into_owned())
        .collect();
    let mut p = DMatrix::zeros(m.nrows(), m.nrows());
    for c in cols {
        p += &c * c.adjoint();
    }
    p
}

/// Range(P) ∩ Range(Q) as the null space of (1-P; 1-Q).
fn intersection_oracle(p: &DMatrix<Complex64>, q: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = p.nrows();
    let id = DMatrix::<Complex64>::identity(n, n);
    let mut stacked = DMatrix::zeros(2 * n, n);
    stacked.rows_mut(0, n).copy_from(&(&id - p));
    stacked.rows_mut(n, n).copy_from(&(&id - q));
    let svd = stacked.svd(false, true);
    let vt = svd.v_t.unwrap();
    let mut r = DMatrix::zeros(n, n);
    for k in 0..n {
        let s = if k < svd.singular_values.len() {
            svd.singular_values[k]
        } else {
            0.0
        };
        if s < 1e-9 {
            let v = vt.row(k).adjoint();
            r += &v * v.adjoint();
        }
    }
    r
}

#[test]
fn meet_is_the_largest_common_subprojection() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for trial in 0..50 {
        let modes = rng.gen_range(1..=4);
        let dim = 1usize << modes;
        let mut random_cols = |k: usize| {
            DMatrix::from_fn(dim, k, |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
        };
        // shared directions make a nontrivial meet likely
        let shared = random_cols(trial % 3);
        let extra_p = random_cols(1);
        let extra_q = random_cols(1);
        let join = |a: &DMatrix<Complex64>, b: &DMatrix<Complex64>| {
            let mut m = DMatrix::zeros(dim, a.ncols() + b.ncols());
            m.columns_mut(0, a.ncols()).copy_from(a);
            m.columns_mut(a.ncols(), b.ncols()).copy_from(b);
            m
        };
        let p = span_projector(&join(&shared, &extra_p));
        let q = span_projector(&join(&shared, &extra_q));
        let ps = SparseOperator::from_dense(modes, &p);
        let qs = SparseOperator::from_dense(modes, &q);
        let r = projection_meet(&ps, &qs, 1e-12, 64).unwrap();
        let meet = r.meet.to_dense().unwrap();
        let oracle = intersection_oracle(&p, &q);
        let diff = (&meet - &oracle)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-8, "trial {trial}: {diff}");
        let below_p = (&p * &meet - &meet)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let below_q = (&q * &meet - &meet)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(below_p < 1e-8 && below_q < 1e-8);
    }
}

#[test]
fn density_json_round_trip() {
    let rho = two_branch_mixture(2).unwrap();
    let back = DensityOperator::from_json(&rho.to_json()).unwrap();
    assert_eq!(back.matrix(), rho.matrix());
}
