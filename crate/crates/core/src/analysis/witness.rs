use num_complex::Complex64;

use super::{canonical_monomials, product_expectation, Expectation};
use crate::bipartition::{is_local, Bipartition};
use crate::opalg::{Factor, ModeSet, OperatorPoly, Parity};
use crate::{Error, Result};

/// Smallest `|ω(A₁ᵒA₂ᵒ)|` accepted as a genuine odd–odd correlation.
pub const CERTIFY_TOL: f64 = 1e-9;
/// Largest difference still counted as equal by [`even_restriction_equal`].
pub const EVEN_EQUAL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    EntangledCertified,
    NoCertificate,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::EntangledCertified => "entangled-certified",
            Verdict::NoCertificate => "no-certificate",
        }
    }
}

/// Outcome of the odd–odd witness search. `NoCertificate` is not a claim of
/// separability.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessReport {
    pub verdict: Verdict,
    pub witness_pair: Option<(OperatorPoly, OperatorPoly)>,
    pub value: Complex64,
    pub search_degree: usize,
    pub candidates_checked: usize,
}

/// `(Π_{i∈I1} a_i, Π_{j∈I2} a_j†)` with both products in ascending mode order.
pub fn designated_pair(b: &Bipartition) -> (OperatorPoly, OperatorPoly) {
    let one = Complex64::new(1.0, 0.0);
    let first: Vec<Factor> = b.first().iter().map(|&m| Factor::annihilate(m)).collect();
    let second: Vec<Factor> = b.second().iter().map(|&m| Factor::create(m)).collect();
    (
        OperatorPoly::word(one, &first),
        OperatorPoly::word(one, &second),
    )
}

fn odd_monomials(modes: &ModeSet, max_degree: usize) -> Vec<Vec<Factor>> {
    canonical_monomials(modes, max_degree)
        .into_iter()
        .filter(|w| w.len() % 2 == 1)
        .collect()
}

fn from_word(w: &[Factor]) -> OperatorPoly {
    OperatorPoly::word(Complex64::new(1.0, 0.0), w)
}

/// Searches odd local products `A₁ᵒA₂ᵒ` with nonvanishing expectation.
///
/// Candidates run in ascending total degree, then factor order, with per-side
/// degree capped at `max_degree`. The designated full-block pair is tried
/// first within its total degree, or after every other candidate if it lies
/// beyond the cap; it only counts when both of its components are odd.
pub fn odd_odd_witness<S: Expectation + ?Sized>(
    state: &S,
    b: &Bipartition,
    max_degree: usize,
) -> Result<WitnessReport> {
    if max_degree == 0 {
        return Err(Error::Domain(
            "witness search degree must be at least 1".into(),
        ));
    }
    if b.modes() != state.modes() {
        return Err(Error::DimensionMismatch {
            expected: state.modes(),
            found: b.modes(),
        });
    }
    let left = odd_monomials(b.first(), max_degree);
    let right = odd_monomials(b.second(), max_degree);
    let mut pairs: Vec<(&Vec<Factor>, &Vec<Factor>)> = left
        .iter()
        .flat_map(|l| right.iter().map(move |r| (l, r)))
        .collect();
    pairs.sort_by(|x, y| {
        (x.0.len() + x.1.len())
            .cmp(&(y.0.len() + y.1.len()))
            .then_with(|| x.0.cmp(y.0))
            .then_with(|| x.1.cmp(y.1))
    });

    let (d1, d2) = designated_pair(b);
    let designated_degree = b.first().len() + b.second().len();
    let designated_ok = d1.parity() == Parity::Odd && d2.parity() == Parity::Odd;
    let within_cap = b.first().len() <= max_degree && b.second().len() <= max_degree;

    let mut checked = 0;
    let mut try_pair = |p: &OperatorPoly, q: &OperatorPoly| -> Result<Option<Complex64>> {
        checked += 1;
        let v = product_expectation(state, p, q)?;
        Ok((v.norm() > CERTIFY_TOL).then_some(v))
    };
    let certified = |p: OperatorPoly, q: OperatorPoly, v: Complex64, checked| WitnessReport {
        verdict: Verdict::EntangledCertified,
        witness_pair: Some((p, q)),
        value: v,
        search_degree: max_degree,
        candidates_checked: checked,
    };

    let mut designated_done = !designated_ok;
    for (l, r) in pairs {
        if !designated_done && within_cap && l.len() + r.len() >= designated_degree {
            designated_done = true;
            if let Some(v) = try_pair(&d1, &d2)? {
                return Ok(certified(d1, d2, v, checked));
            }
        }
        let (p, q) = (from_word(l), from_word(r));
        if let Some(v) = try_pair(&p, &q)? {
            return Ok(certified(p, q, v, checked));
        }
    }
    if !designated_done {
        if let Some(v) = try_pair(&d1, &d2)? {
            return Ok(certified(d1, d2, v, checked));
        }
    }
    Ok(WitnessReport {
        verdict: Verdict::NoCertificate,
        witness_pair: None,
        value: Complex64::new(0.0, 0.0),
        search_degree: max_degree,
        candidates_checked: checked,
    })
}

/// Whether `ω(A₁A₂) := ω₁(A₁)ω₂(A₂)` can define a state.
#[derive(Clone, Debug, PartialEq)]
pub enum Consistency {
    Consistent,
    /// Self-adjoint odd `first` on block 1 and `second` on block 2 with
    /// `ω₁(first) ≠ 0 ≠ ω₂(second)`: hermiticity would force the factorized
    /// value of `first·second` to be imaginary, yet it is real and nonzero.
    Inconsistent {
        first: OperatorPoly,
        second: OperatorPoly,
        first_value: f64,
        second_value: f64,
    },
}

/// Self-adjoint odd elements `m + m†` and `i(m − m†)` for each odd canonical
/// monomial `m` of degree `<= max_degree`, each pair listed once.
fn self_adjoint_odd(modes: &ModeSet, max_degree: usize) -> Vec<OperatorPoly> {
    let i = Complex64::new(0.0, 1.0);
    let mut out = Vec::new();
    for w in odd_monomials(modes, max_degree) {
        let m = from_word(&w);
        let adj = m.adjoint();
        let adj_word = adj
            .terms()
            .next()
            .map(|(f, _)| f.to_vec())
            .expect("nonzero");
        if adj_word < w {
            continue;
        }
        out.push(&m + &adj);
        out.push((&m - &adj).scale(i));
    }
    out
}

fn first_nonvanishing<S: Expectation + ?Sized>(
    state: &S,
    candidates: &[OperatorPoly],
) -> Result<Option<(OperatorPoly, f64)>> {
    for p in candidates {
        let v = super::expectation(state, p)?;
        if v.norm() > CERTIFY_TOL {
            return Ok(Some((p.clone(), v.re)));
        }
    }
    Ok(None)
}

/// Exhaustive search (per-side degree `<= max_degree`) for self-adjoint odd
/// elements on which both factor states are nonzero.
pub fn product_functional_consistency<S1, S2>(
    w1: &S1,
    w2: &S2,
    b: &Bipartition,
    max_degree: usize,
) -> Result<Consistency>
where
    S1: Expectation + ?Sized,
    S2: Expectation + ?Sized,
{
    for m in [w1.modes(), w2.modes()] {
        if m != b.modes() {
            return Err(Error::DimensionMismatch {
                expected: b.modes(),
                found: m,
            });
        }
    }
    let Some((first, first_value)) =
        first_nonvanishing(w1, &self_adjoint_odd(b.first(), max_degree))?
    else {
        return Ok(Consistency::Consistent);
    };
    let Some((second, second_value)) =
        first_nonvanishing(w2, &self_adjoint_odd(b.second(), max_degree))?
    else {
        return Ok(Consistency::Consistent);
    };
    Ok(Consistency::Inconsistent {
        first,
        second,
        first_value,
        second_value,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvenComparison {
    pub equal: bool,
    pub max_diff: f64,
    pub worst_pair: Option<(OperatorPoly, OperatorPoly)>,
    pub pairs_compared: usize,
}

/// Compares two states on every product `A₁ᵉA₂ᵉ` of even canonical monomials
/// (identity included) with per-side degree `<= max_degree`.
pub fn even_restriction_equal<S1, S2>(
    s1: &S1,
    s2: &S2,
    b: &Bipartition,
    max_degree: usize,
) -> Result<EvenComparison>
where
    S1: Expectation + ?Sized,
    S2: Expectation + ?Sized,
{
    if s1.modes() != s2.modes() || s1.modes() != b.modes() {
        return Err(Error::DimensionMismatch {
            expected: s1.modes(),
            found: if s2.modes() != s1.modes() {
                s2.modes()
            } else {
                b.modes()
            },
        });
    }
    let even = |set: &ModeSet| -> Vec<Vec<Factor>> {
        canonical_monomials(set, max_degree)
            .into_iter()
            .filter(|w| w.len() % 2 == 0)
            .collect()
    };
    let left = even(b.first());
    let right = even(b.second());
    let mut max_diff = 0.0f64;
    let mut worst = None;
    let mut word = Vec::new();
    for l in &left {
        for r in &right {
            word.clear();
            word.extend_from_slice(l);
            word.extend_from_slice(r);
            let d = (s1.word_expectation(&word) - s2.word_expectation(&word)).norm();
            if d > max_diff {
                max_diff = d;
                worst = Some((l, r));
            }
        }
    }
    let equal = max_diff < EVEN_EQUAL_TOL;
    Ok(EvenComparison {
        equal,
        max_diff,
        worst_pair: worst
            .filter(|_| !equal)
            .map(|(l, r)| (from_word(l), from_word(r))),
        pairs_compared: left.len() * right.len(),
    })
}

/// Checks the witness invariants: odd components, locality and reproducible value.
pub fn witness_is_sound<S: Expectation + ?Sized>(
    report: &WitnessReport,
    state: &S,
    b: &Bipartition,
) -> bool {
    match (&report.verdict, &report.witness_pair) {
        (Verdict::NoCertificate, _) => true,
        (Verdict::EntangledCertified, Some((p, q))) => {
            p.parity() == Parity::Odd
                && q.parity() == Parity::Odd
                && is_local(p, q, b)
                && report.value.norm() > CERTIFY_TOL
                && product_expectation(state, p, q)
                    .map(|v| (v - report.value).norm() <= 1e-12)
                    .unwrap_or(false)
        }
        _ => false,
    }
}
