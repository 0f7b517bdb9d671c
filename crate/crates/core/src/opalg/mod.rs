//! Operator polynomials in creation and annihilation operators.
//!
//! Every [`OperatorPoly`] is stored in normal-ordered canonical form: creation
//! operators first in ascending mode order, then annihilation operators in
//! descending mode order. Rewriting into that form uses only the
//! anticommutation relations `{a_i, a_j†} = δ_ij`, `{a_i, a_j} = {a_i†, a_j†} = 0`,
//! so two polynomials are equal as operators iff their canonical forms agree.

mod parse;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_complex::Complex64;

pub use parse::{parse, ParseError, ParseErrorKind};

/// Coefficients below this magnitude are dropped after every arithmetic pass.
pub const PRUNE_TOL: f64 = 1e-15;

/// Set of 1-based mode indices.
pub type ModeSet = BTreeSet<usize>;

/// A single ladder operator: `a_mode` or, with `dagger`, `a_mode†`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Factor {
    pub mode: usize,
    pub dagger: bool,
}

impl Factor {
    pub fn annihilate(mode: usize) -> Self {
        Self {
            mode,
            dagger: false,
        }
    }

    pub fn create(mode: usize) -> Self {
        Self { mode, dagger: true }
    }

    pub fn adjoint(self) -> Self {
        Self {
            mode: self.mode,
            dagger: !self.dagger,
        }
    }

    /// Position in canonical order; daggers ascending, then non-daggers descending.
    fn rank(self) -> (u8, isize) {
        if self.dagger {
            (0, self.mode as isize)
        } else {
            (1, -(self.mode as isize))
        }
    }
}

impl Ord for Factor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank().cmp(&other.rank())
    }
}

impl PartialOrd for Factor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.dagger { 'A' } else { 'a' }, self.mode)
    }
}

/// Canonical factor list used as a map key: shorter words sort first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Word(Vec<Factor>);

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One coefficient times an ordered product of ladder operators.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coefficient: Complex64,
    pub factors: Vec<Factor>,
}

impl Monomial {
    pub fn new(coefficient: Complex64, factors: Vec<Factor>) -> Self {
        Self {
            coefficient,
            factors,
        }
    }

    pub fn degree(&self) -> usize {
        self.factors.len()
    }

    /// `true` if the factors are already in canonical order without repeats.
    pub fn is_canonical(&self) -> bool {
        self.factors.windows(2).all(|w| w[0] < w[1])
    }
}

/// Grade of a polynomial under the parity automorphism.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
            Parity::Mixed => "mixed",
        })
    }
}

/// Complex-linear combination of normal-ordered monomials.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OperatorPoly {
    terms: BTreeMap<Word, Complex64>,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

impl OperatorPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::scalar(c(1.0))
    }

    pub fn scalar(z: Complex64) -> Self {
        let mut p = Self::zero();
        p.accumulate(Vec::new(), z);
        p
    }

    pub fn annihilate(mode: usize) -> Self {
        Self::word(c(1.0), &[Factor::annihilate(mode)])
    }

    pub fn create(mode: usize) -> Self {
        Self::word(c(1.0), &[Factor::create(mode)])
    }

    /// `a_mode† a_mode`.
    pub fn number(mode: usize) -> Self {
        Self::word(c(1.0), &[Factor::create(mode), Factor::annihilate(mode)])
    }

    /// Normal-orders an arbitrary product `coefficient · f_1 f_2 ⋯ f_k`.
    pub fn word(coefficient: Complex64, factors: &[Factor]) -> Self {
        let mut p = Self::zero();
        p.push_word(coefficient, factors.to_vec());
        p.prune();
        p
    }

    /// Normal-orders a sum of arbitrary products.
    pub fn from_words<I>(words: I) -> Self
    where
        I: IntoIterator<Item = (Complex64, Vec<Factor>)>,
    {
        let mut p = Self::zero();
        for (z, w) in words {
            p.push_word(z, w);
        }
        p.prune();
        p
    }

    /// Rewrites `coefficient · word` into canonical monomials by adjacent
    /// transpositions; a swap of `a_i` past `a_i†` emits the shorter δ-term.
    fn push_word(&mut self, coefficient: Complex64, word: Vec<Factor>) {
        let mut stack = vec![(coefficient, word)];
        'outer: while let Some((mut z, mut w)) = stack.pop() {
            loop {
                let inversion = (1..w.len()).find(|&k| w[k - 1] >= w[k]);
                let Some(k) = inversion else {
                    self.accumulate(w, z);
                    continue 'outer;
                };
                if w[k - 1] == w[k] {
                    // (a_i)^2 = (a_i†)^2 = 0
                    continue 'outer;
                }
                if w[k - 1].mode == w[k].mode {
                    // a_i a_i† = 1 − a_i† a_i
                    let mut shorter = w.clone();
                    shorter.drain(k - 1..=k);
                    stack.push((z, shorter));
                }
                w.swap(k - 1, k);
                z = -z;
            }
        }
    }

    fn accumulate(&mut self, factors: Vec<Factor>, z: Complex64) {
        *self.terms.entry(Word(factors)).or_default() += z;
    }

    fn prune(&mut self) {
        self.terms.retain(|_, z| z.norm() >= PRUNE_TOL);
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of stored monomials.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Canonical monomials in storage order (ascending degree, then factor order).
    pub fn terms(&self) -> impl Iterator<Item = (&[Factor], Complex64)> + '_ {
        self.terms.iter().map(|(w, &z)| (w.0.as_slice(), z))
    }

    pub fn monomials(&self) -> Vec<Monomial> {
        self.terms()
            .map(|(f, z)| Monomial::new(z, f.to_vec()))
            .collect()
    }

    /// Coefficient of a canonical factor list (zero if absent).
    pub fn coefficient(&self, factors: &[Factor]) -> Complex64 {
        self.terms
            .get(&Word(factors.to_vec()))
            .copied()
            .unwrap_or_default()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|w| w.0.len()).max().unwrap_or(0)
    }

    pub fn max_mode(&self) -> Option<usize> {
        self.terms
            .keys()
            .flat_map(|w| w.0.iter().map(|f| f.mode))
            .max()
    }

    /// Re-derives the canonical form of every stored word.
    pub fn normal_order(&self) -> Self {
        Self::from_words(self.terms.iter().map(|(w, &z)| (z, w.0.clone())))
    }

    pub fn scale(&self, z: Complex64) -> Self {
        let mut p = Self {
            terms: self
                .terms
                .iter()
                .map(|(w, &v)| (w.clone(), v * z))
                .collect(),
        };
        p.prune();
        p
    }

    /// The parity automorphism: every ladder operator changes sign.
    pub fn theta(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(w, &z)| (w.clone(), if w.0.len() % 2 == 0 { z } else { -z }))
                .collect(),
        }
    }

    /// `(even, odd)` parts; `self = even + odd`.
    pub fn even_odd_split(&self) -> (Self, Self) {
        let (even, odd): (BTreeMap<_, _>, BTreeMap<_, _>) = self
            .terms
            .iter()
            .map(|(w, &z)| (w.clone(), z))
            .partition(|(w, _)| w.0.len() % 2 == 0);
        (Self { terms: even }, Self { terms: odd })
    }

    /// Zero counts as even.
    pub fn parity(&self) -> Parity {
        let mut even = false;
        let mut odd = false;
        for w in self.terms.keys() {
            if w.0.len() % 2 == 0 {
                even = true;
            } else {
                odd = true;
            }
        }
        match (even, odd) {
            (_, false) => Parity::Even,
            (false, true) => Parity::Odd,
            (true, true) => Parity::Mixed,
        }
    }

    pub fn support_modes(&self) -> ModeSet {
        self.terms
            .keys()
            .flat_map(|w| w.0.iter().map(|f| f.mode))
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_words(self.terms.iter().map(|(w, &z)| {
            let rev: Vec<Factor> = w.0.iter().rev().map(|f| f.adjoint()).collect();
            (z.conj(), rev)
        }))
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.approx_eq(&self.adjoint(), 0.0)
    }

    /// Coefficient-wise comparison within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let diff = self - other;
        diff.terms.values().all(|z| z.norm() <= tol)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        &(self * other) + &(other * self)
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        let mut p = self.clone();
        for (w, &z) in &other.terms {
            *p.terms.entry(w.clone()).or_default() += z * sign;
        }
        p.prune();
        p
    }

    fn product(&self, other: &Self) -> Self {
        let mut p = Self::zero();
        for (wl, &zl) in &self.terms {
            for (wr, &zr) in &other.terms {
                let mut w = Vec::with_capacity(wl.0.len() + wr.0.len());
                w.extend_from_slice(&wl.0);
                w.extend_from_slice(&wr.0);
                p.push_word(zl * zr, w);
            }
        }
        p.prune();
        p
    }
}

impl Add for &OperatorPoly {
    type Output = OperatorPoly;
    fn add(self, rhs: &OperatorPoly) -> OperatorPoly {
        self.combine(rhs, 1.0)
    }
}

impl Sub for &OperatorPoly {
    type Output = OperatorPoly;
    fn sub(self, rhs: &OperatorPoly) -> OperatorPoly {
        self.combine(rhs, -1.0)
    }
}

impl Mul for &OperatorPoly {
    type Output = OperatorPoly;
    fn mul(self, rhs: &OperatorPoly) -> OperatorPoly {
        self.product(rhs)
    }
}

impl Neg for &OperatorPoly {
    type Output = OperatorPoly;
    fn neg(self) -> OperatorPoly {
        self.scale(c(-1.0))
    }
}

macro_rules! owned_binop {
    ($tr:ident, $f:ident) => {
        impl $tr for OperatorPoly {
            type Output = OperatorPoly;
            fn $f(self, rhs: OperatorPoly) -> OperatorPoly {
                (&self).$f(&rhs)
            }
        }
    };
}

owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);

impl Neg for OperatorPoly {
    type Output = OperatorPoly;
    fn neg(self) -> OperatorPoly {
        -&self
    }
}

impl FromStr for OperatorPoly {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse(s)
    }
}

fn write_coefficient(f: &mut fmt::Formatter<'_>, z: Complex64) -> fmt::Result {
    if z.im == 0.0 {
        write!(f, "{}", z.re)
    } else if z.re == 0.0 {
        write!(f, "{}i", z.im)
    } else if z.im < 0.0 {
        write!(f, "({}-{}i)", z.re, -z.im)
    } else {
        write!(f, "({}+{}i)", z.re, z.im)
    }
}

/// Renders in the expression grammar accepted by [`parse`]; the output re-parses
/// to an identical polynomial.
impl fmt::Display for OperatorPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (w, &z)) in self.terms.iter().enumerate() {
            // pull a negative real sign out into the separator
            let (neg, z) = if z.im == 0.0 && z.re < 0.0 {
                (true, -z)
            } else {
                (false, z)
            };
            match (k == 0, neg) {
                (true, true) => f.write_str("-")?,
                (true, false) => {}
                (false, true) => f.write_str(" - ")?,
                (false, false) => f.write_str(" + ")?,
            }
            let unit = z == c(1.0);
            if !unit || w.0.is_empty() {
                write_coefficient(f, z)?;
            }
            for (j, factor) in w.0.iter().enumerate() {
                if j > 0 || !unit {
                    f.write_str("*")?;
                }
                write!(f, "{factor}")?;
            }
        }
        Ok(())
    }
}
