//! Ladder operators on the occupation basis and their sparse matrices.
//!
//! Applying `a_i` or `a_i†` to a basis state picks up the sign
//! `(-1)^{Σ_{j<i} n_j}`, counted with a popcount of the bits below mode `i`.
//! [`jw_matrix`] builds the same matrices a second way, from Jordan–Wigner
//! Pauli strings, so the two constructions can be checked against each other.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::fock::{
    check_dense, index_bits, parse_index, DensityEntry, DensityFile, OccupationState,
};
use crate::opalg::{Factor, OperatorPoly};
use crate::{Error, Result};

/// Entries below this magnitude are never stored.
pub const DROP_TOL: f64 = 1e-15;

fn sign_below(bits: u64, mode: usize) -> f64 {
    let mask = (1u64 << (mode - 1)) - 1;
    if (bits & mask).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Acts with one ladder operator on a raw bit pattern. `mode` must be valid.
#[inline]
pub(crate) fn apply_factor_bits(bits: u64, f: Factor) -> Option<(f64, u64)> {
    let bit = 1u64 << (f.mode - 1);
    let occupied = bits & bit != 0;
    if occupied == f.dagger {
        return None;
    }
    Some((sign_below(bits, f.mode), bits ^ bit))
}

/// Acts with the product `f_1 f_2 ⋯ f_k` on a basis index; the rightmost
/// factor acts first. Modes are not range-checked.
pub(crate) fn apply_word(index: usize, word: &[Factor]) -> Option<(f64, usize)> {
    let mut bits = index as u64;
    let mut sign = 1.0;
    for &f in word.iter().rev() {
        let (s, b) = apply_factor_bits(bits, f)?;
        sign *= s;
        bits = b;
    }
    Some((sign, bits as usize))
}

fn check_mode(mode: usize, modes: usize) -> Result<()> {
    if mode == 0 || mode > modes {
        return Err(Error::ModeOutOfRange { mode, modes });
    }
    Ok(())
}

/// `a_i |s⟩`: `None` if mode `i` is empty.
pub fn apply_annihilate(s: &OccupationState, mode: usize) -> Result<Option<(i8, OccupationState)>> {
    apply_ladder(s, Factor::annihilate(mode))
}

/// `a_i† |s⟩`: `None` if mode `i` is already occupied.
pub fn apply_create(s: &OccupationState, mode: usize) -> Result<Option<(i8, OccupationState)>> {
    apply_ladder(s, Factor::create(mode))
}

fn apply_ladder(s: &OccupationState, f: Factor) -> Result<Option<(i8, OccupationState)>> {
    check_mode(f.mode, s.modes())?;
    Ok(apply_factor_bits(s.bits(), f).map(|(sign, bits)| {
        (
            sign as i8,
            OccupationState::new(bits, s.modes()).expect("same mode count"),
        )
    }))
}

/// Sparse `2^M × 2^M` complex matrix keyed by `(row, column)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    modes: usize,
    entries: BTreeMap<(usize, usize), Complex64>,
}

impl SparseOperator {
    pub fn zero(modes: usize) -> Self {
        Self {
            modes,
            entries: BTreeMap::new(),
        }
    }

    pub fn identity(modes: usize) -> Self {
        let mut m = Self::zero(modes);
        for k in 0..m.dim() {
            m.entries.insert((k, k), Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_entries<I>(modes: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = ((usize, usize), Complex64)>,
    {
        let mut m = Self::zero(modes);
        let dim = m.dim();
        for ((r, c), z) in entries {
            if r >= dim || c >= dim {
                return Err(Error::Domain(format!(
                    "entry ({r}, {c}) outside a {dim}-dimensional space"
                )));
            }
            *m.entries.entry((r, c)).or_default() += z;
        }
        m.prune();
        Ok(m)
    }

    /// Sparse copy of a dense matrix, dropping entries below [`DROP_TOL`].
    pub fn from_dense(modes: usize, dense: &DMatrix<Complex64>) -> Self {
        let mut m = Self::zero(modes);
        for c in 0..dense.ncols() {
            for r in 0..dense.nrows() {
                let z = dense[(r, c)];
                if z.norm() >= DROP_TOL {
                    m.entries.insert((r, c), z);
                }
            }
        }
        m
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        check_dense(self.modes)?;
        let dim = self.dim();
        let mut d = DMatrix::zeros(dim, dim);
        for (&(r, c), &z) in &self.entries {
            d[(r, c)] = z;
        }
        Ok(d)
    }

    fn prune(&mut self) {
        self.entries.retain(|_, z| z.norm() >= DROP_TOL);
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        1 << self.modes
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries.get(&(row, col)).copied().unwrap_or_default()
    }

    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), Complex64)> + '_ {
        self.entries.iter().map(|(&k, &z)| (k, z))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest entry magnitude, `‖·‖_max`.
    pub fn max_abs(&self) -> f64 {
        self.entries.values().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex64 {
        self.entries
            .iter()
            .filter(|((r, c), _)| r == c)
            .map(|(_, &z)| z)
            .sum()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            modes: self.modes,
            entries: self
                .entries
                .iter()
                .map(|(&(r, c), z)| ((c, r), z.conj()))
                .collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut m = Self {
            modes: self.modes,
            entries: self.entries.iter().map(|(&k, &z)| (k, z * s)).collect(),
        };
        m.prune();
        m
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.modes != other.modes {
            return Err(Error::DimensionMismatch {
                expected: self.modes,
                found: other.modes,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut m = self.clone();
        for (&k, &z) in &other.entries {
            *m.entries.entry(k).or_default() += z;
        }
        m.prune();
        Ok(m)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut rows: HashMap<usize, Vec<(usize, Complex64)>> = HashMap::new();
        for (&(r, c), &z) in &other.entries {
            rows.entry(r).or_default().push((c, z));
        }
        let mut m = Self::zero(self.modes);
        for (&(r, k), &a) in &self.entries {
            if let Some(row) = rows.get(&k) {
                for &(c, b) in row {
                    *m.entries.entry((r, c)).or_default() += a * b;
                }
            }
        }
        m.prune();
        Ok(m)
    }

    pub fn anticommutator(&self, other: &Self) -> Result<Self> {
        self.matmul(other)?.add(&other.matmul(self)?)
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    /// `max |A_rc − B_rc|`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.distance(&self.adjoint())
            .map(|d| d <= tol)
            .unwrap_or(false)
    }

    /// `max(‖P² − P‖_max, ‖P − P†‖_max)`.
    pub fn projection_defect(&self) -> f64 {
        let sq = self.matmul(self).expect("same dimension");
        let idem = sq.distance(self).expect("same dimension");
        let herm = self.distance(&self.adjoint()).expect("same dimension");
        idem.max(herm)
    }

    /// Serializes in the density-operator entry format.
    pub fn to_json(&self) -> String {
        let file = DensityFile {
            modes: self.modes,
            entries: self
                .entries
                .iter()
                .map(|(&(r, c), z)| DensityEntry {
                    row_bits: index_bits(r, self.modes),
                    col_bits: index_bits(c, self.modes),
                    re: z.re,
                    im: z.im,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("operator serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DensityFile = serde_json::from_str(text)?;
        let mut entries = Vec::with_capacity(file.entries.len());
        for e in &file.entries {
            entries.push((
                (
                    parse_index(&e.row_bits, file.modes)?,
                    parse_index(&e.col_bits, file.modes)?,
                ),
                Complex64::new(e.re, e.im),
            ));
        }
        Self::from_entries(file.modes, entries)
    }
}

/// Matrix of `a_i` (or `a_i†`) assembled column by column from the sign rule.
pub fn ladder_matrix(mode: usize, dagger: bool, modes: usize) -> Result<SparseOperator> {
    check_mode(mode, modes)?;
    check_dense(modes)?;
    let f = Factor { mode, dagger };
    let mut m = SparseOperator::zero(modes);
    for col in 0..1u64 << modes {
        if let Some((sign, row)) = apply_factor_bits(col, f) {
            m.entries
                .insert((row as usize, col as usize), Complex64::new(sign, 0.0));
        }
    }
    Ok(m)
}

/// Single-mode spin operator in the `(empty, occupied)` basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// Image of the single-mode basis state `bit`, with its phase.
    fn act(self, bit: u64) -> (Complex64, u64) {
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => (one, bit),
            Pauli::X => (one, bit ^ 1),
            Pauli::Y => (if bit == 0 { i } else { -i }, bit ^ 1),
            Pauli::Z => (if bit == 0 { one } else { -one }, bit),
        }
    }
}

/// Coefficient times a tensor product of single-mode Paulis; position `k`
/// acts on mode `k + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    pub coefficient: Complex64,
    pub ops: Vec<Pauli>,
}

impl PauliString {
    pub fn new(coefficient: Complex64, ops: Vec<Pauli>) -> Self {
        Self { coefficient, ops }
    }

    /// Dense Kronecker action written out entry by entry.
    pub fn to_sparse(&self) -> Result<SparseOperator> {
        let modes = self.ops.len();
        check_dense(modes)?;
        let mut m = SparseOperator::zero(modes);
        for col in 0..1u64 << modes {
            let mut phase = self.coefficient;
            let mut row = 0u64;
            for (k, p) in self.ops.iter().enumerate() {
                let (z, b) = p.act(col >> k & 1);
                phase *= z;
                row |= b << k;
            }
            if phase.norm() >= DROP_TOL {
                m.entries.insert((row as usize, col as usize), phase);
            }
        }
        Ok(m)
    }
}

/// Sum of Pauli strings on a common mode count.
pub fn pauli_sum_matrix(modes: usize, strings: &[PauliString]) -> Result<SparseOperator> {
    let mut acc = SparseOperator::zero(modes);
    for s in strings {
        if s.ops.len() != modes {
            return Err(Error::DimensionMismatch {
                expected: modes,
                found: s.ops.len(),
            });
        }
        acc = acc.add(&s.to_sparse()?)?;
    }
    Ok(acc)
}

/// Jordan–Wigner image of a single ladder operator as two Pauli strings:
/// `a_i = Z^{⊗(i-1)} ⊗ (X + iY)/2 ⊗ 1`, `a_i† = Z^{⊗(i-1)} ⊗ (X − iY)/2 ⊗ 1`.
pub fn jw_strings(mode: usize, dagger: bool, modes: usize) -> Result<[PauliString; 2]> {
    check_mode(mode, modes)?;
    let string = |p: Pauli| {
        (1..=modes)
            .map(|j| match j.cmp(&mode) {
                std::cmp::Ordering::Less => Pauli::Z,
                std::cmp::Ordering::Equal => p,
                std::cmp::Ordering::Greater => Pauli::I,
            })
            .collect::<Vec<_>>()
    };
    let y_coef = if dagger { -0.5 } else { 0.5 };
    Ok([
        PauliString::new(Complex64::new(0.5, 0.0), string(Pauli::X)),
        PauliString::new(Complex64::new(0.0, y_coef), string(Pauli::Y)),
    ])
}

/// Matrix of `a_i` / `a_i†` through the spin representation.
pub fn jw_matrix(mode: usize, dagger: bool, modes: usize) -> Result<SparseOperator> {
    pauli_sum_matrix(modes, &jw_strings(mode, dagger, modes)?)
}

/// Largest deviation from the canonical anticommutation relations over all
/// mode pairs. Exactly zero when assembly is correct.
pub fn verify_car(modes: usize) -> Result<f64> {
    check_dense(modes)?;
    let ann: Vec<SparseOperator> = (1..=modes)
        .map(|i| ladder_matrix(i, false, modes))
        .collect::<Result<_>>()?;
    let cre: Vec<SparseOperator> = ann.iter().map(|a| a.adjoint()).collect();
    let id = SparseOperator::identity(modes);
    let zero = SparseOperator::zero(modes);
    let mut worst = 0.0f64;
    for i in 0..modes {
        for j in 0..modes {
            let delta = if i == j { &id } else { &zero };
            worst = worst
                .max(ann[i].anticommutator(&cre[j])?.distance(delta)?)
                .max(ann[i].anticommutator(&ann[j])?.max_abs())
                .max(cre[i].anticommutator(&cre[j])?.max_abs());
        }
    }
    Ok(worst)
}

/// Matrix of a polynomial; each product acts right-to-left on basis columns.
pub fn poly_to_matrix(p: &OperatorPoly, modes: usize) -> Result<SparseOperator> {
    if let Some(m) = p.max_mode() {
        check_mode(m, modes)?;
    }
    check_dense(modes)?;
    let mut out = SparseOperator::zero(modes);
    for (word, z) in p.terms() {
        for col in 0..1usize << modes {
            if let Some((sign, row)) = apply_word(col, word) {
                *out.entries.entry((row, col)).or_default() += z * sign;
            }
        }
    }
    out.prune();
    Ok(out)
}
