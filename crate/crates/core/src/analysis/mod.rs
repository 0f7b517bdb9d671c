//! State-level analyses over a bipartition.
//!
//! States are used only through their expectation functional, described by the
//! [`Expectation`] trait: pure [`FockVector`]s and mixed [`DensityOperator`]s
//! both evaluate products of ladder operators directly on the occupation basis,
//! without materialising operator matrices.

mod fit;
mod meet;
mod witness;

use num_complex::Complex64;

use crate::car_ops::{apply_word, SparseOperator};
use crate::fock::{DensityOperator, FockVector, State};
use crate::opalg::{Factor, ModeSet, OperatorPoly};
use crate::{Error, Result};

pub use fit::{separable_fit, ProductAtom, SeparableFit};
pub use meet::{
    hermitian_spectrum, is_uncorrelated, majorana_projection, projection_meet, MeetMethod,
    MeetResult, Uncorrelation, PROJECTION_TOL,
};
pub use witness::{
    designated_pair, even_restriction_equal, odd_odd_witness, product_functional_consistency,
    witness_is_sound, Consistency, EvenComparison, Verdict, WitnessReport, CERTIFY_TOL,
};

/// Expectation functional of a state.
pub trait Expectation {
    fn modes(&self) -> usize;

    /// `ω(f_1 f_2 ⋯ f_k)` for a product written in the given order.
    fn word_expectation(&self, word: &[Factor]) -> Complex64;

    /// `ω(M)` for an explicit matrix on the same Fock space.
    fn operator_expectation(&self, m: &SparseOperator) -> Complex64;
}

impl Expectation for FockVector {
    fn modes(&self) -> usize {
        FockVector::modes(self)
    }

    fn word_expectation(&self, word: &[Factor]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (col, z) in self.iter() {
            if let Some((sign, row)) = apply_word(col, word) {
                acc += self.get(row).conj() * z * sign;
            }
        }
        acc
    }

    fn operator_expectation(&self, m: &SparseOperator) -> Complex64 {
        m.entries()
            .map(|((r, c), z)| self.get(r).conj() * z * self.get(c))
            .sum()
    }
}

impl Expectation for DensityOperator {
    fn modes(&self) -> usize {
        DensityOperator::modes(self)
    }

    fn word_expectation(&self, word: &[Factor]) -> Complex64 {
        // Tr(ρW) = Σ_c ρ[c, r(c)] · W[r(c), c]
        let mut acc = Complex64::new(0.0, 0.0);
        for col in 0..self.dim() {
            if let Some((sign, row)) = apply_word(col, word) {
                acc += self.get(col, row) * sign;
            }
        }
        acc
    }

    fn operator_expectation(&self, m: &SparseOperator) -> Complex64 {
        m.entries().map(|((r, c), z)| self.get(c, r) * z).sum()
    }
}

impl Expectation for State {
    fn modes(&self) -> usize {
        State::modes(self)
    }

    fn word_expectation(&self, word: &[Factor]) -> Complex64 {
        match self {
            State::Pure(v) => v.word_expectation(word),
            State::Mixed(r) => r.word_expectation(word),
        }
    }

    fn operator_expectation(&self, m: &SparseOperator) -> Complex64 {
        match self {
            State::Pure(v) => v.operator_expectation(m),
            State::Mixed(r) => r.operator_expectation(m),
        }
    }
}

fn check_poly_modes<S: Expectation + ?Sized>(state: &S, p: &OperatorPoly) -> Result<()> {
    match p.max_mode() {
        Some(m) if m > state.modes() => Err(Error::DimensionMismatch {
            expected: state.modes(),
            found: m,
        }),
        _ => Ok(()),
    }
}

/// `⟨ψ|P|ψ⟩` or `Tr(ρP)`.
pub fn expectation<S: Expectation + ?Sized>(state: &S, p: &OperatorPoly) -> Result<Complex64> {
    check_poly_modes(state, p)?;
    Ok(p.terms().map(|(w, z)| z * state.word_expectation(w)).sum())
}

/// `ω(p q)` evaluated term by term without normal-ordering the product.
pub fn product_expectation<S: Expectation + ?Sized>(
    state: &S,
    p: &OperatorPoly,
    q: &OperatorPoly,
) -> Result<Complex64> {
    check_poly_modes(state, p)?;
    check_poly_modes(state, q)?;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut word = Vec::new();
    for (wp, zp) in p.terms() {
        for (wq, zq) in q.terms() {
            word.clear();
            word.extend_from_slice(wp);
            word.extend_from_slice(wq);
            acc += zp * zq * state.word_expectation(&word);
        }
    }
    Ok(acc)
}

/// All canonical monomials over `modes` with degree `<= max_degree`, sorted by
/// degree and then by factor order.
pub fn canonical_monomials(modes: &ModeSet, max_degree: usize) -> Vec<Vec<Factor>> {
    let list: Vec<usize> = modes.iter().copied().collect();
    let n = list.len();
    assert!(n < 16, "monomial enumeration over {n} modes is too large");
    let mut out = Vec::new();
    for dag in 0u32..1 << n {
        for ann in 0u32..1 << n {
            let degree = (dag.count_ones() + ann.count_ones()) as usize;
            if degree > max_degree {
                continue;
            }
            let mut w: Vec<Factor> = (0..n)
                .filter(|k| dag >> k & 1 == 1)
                .map(|k| Factor::create(list[k]))
                .collect();
            w.extend(
                (0..n)
                    .rev()
                    .filter(|k| ann >> k & 1 == 1)
                    .map(|k| Factor::annihilate(list[k])),
            );
            out.push(w);
        }
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::car_ops::poly_to_matrix;
    use crate::fock::{two_branch_state, OccupationState};
    use crate::opalg::parse;

    #[test]
    fn expectation_examples() {
        let vac = FockVector::vacuum(3);
        assert_eq!(
            expectation(&vac, &OperatorPoly::identity()).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        let psi = two_branch_state(1).unwrap();
        let n1 = expectation(&psi, &parse("A1*a1").unwrap()).unwrap();
        assert!((n1 - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!(matches!(
            expectation(&psi, &parse("a3").unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    /// Brute-force oracle: dense ⟨ψ|M|ψ⟩ with the matrix built separately.
    #[test]
    fn pure_and_mixed_agree_with_dense_evaluation() {
        let psi = FockVector::from_amplitudes(
            3,
            [
                (
                    OccupationState::parse_bits("100").unwrap(),
                    Complex64::new(0.6, 0.0),
                ),
                (
                    OccupationState::parse_bits("110").unwrap(),
                    Complex64::new(0.0, 0.8),
                ),
            ],
        )
        .unwrap();
        let rho = DensityOperator::from_pure(&psi).unwrap();
        for s in [
            "A2*a1",
            "A1*a1 + 0.5*A2*A1*a2*a1",
            "a1 + A2",
            "(2+1i)*A3*a2",
        ] {
            let p = parse(s).unwrap();
            let m = poly_to_matrix(&p, 3).unwrap().to_dense().unwrap();
            let v = nalgebra::DVector::from_vec(psi.to_dense().unwrap());
            let want = (v.adjoint() * &m * &v)[(0, 0)];
            let got_pure = expectation(&psi, &p).unwrap();
            let got_mixed = expectation(&rho, &p).unwrap();
            assert!((got_pure - want).norm() < 1e-14, "{s}");
            assert!((got_mixed - want).norm() < 1e-14, "{s}");
        }
    }

    #[test]
    fn monomial_enumeration_counts() {
        let modes: ModeSet = [1, 2, 3].into_iter().collect();
        assert_eq!(canonical_monomials(&modes, 6).len(), 64);
        // degree-d monomials over n modes: C(2n, d)
        let by_degree = |d| {
            canonical_monomials(&modes, 6)
                .iter()
                .filter(|w| w.len() == d)
                .count()
        };
        assert_eq!(by_degree(1), 6);
        assert_eq!(by_degree(2), 15);
        assert_eq!(by_degree(3), 20);
        let all = canonical_monomials(&modes, 3);
        assert!(all.windows(2).all(|w| w[0].len() <= w[1].len()));
        for w in &all {
            let p = OperatorPoly::word(Complex64::new(1.0, 0.0), w);
            assert_eq!(p.len(), 1);
            assert_eq!(p.coefficient(w), Complex64::new(1.0, 0.0));
        }
    }
}
