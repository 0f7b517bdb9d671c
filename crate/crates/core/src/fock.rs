//! Occupation-number basis, state vectors and density operators.
//!
//! A basis vector of an `M`-mode system is an `M`-bit pattern; mode `i`
//! (1-based) lives in bit `i - 1`, so the canonical index of a pattern is
//! `Σ_i n_i 2^{i-1}` and the vacuum has index 0. Phases are always relative to
//! the ket ordering `(a_1†)^{n_1} ⋯ (a_M†)^{n_M}|0⟩`.

use std::collections::BTreeMap;
use std::env;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, DEFAULT_MAX_DENSE_MODES};

/// Tolerance on `‖ψ‖₂ = 1`, Hermiticity and unit trace.
pub const NORM_TOL: f64 = 1e-12;
/// Smallest eigenvalue still accepted as positive semidefinite.
pub const PSD_TOL: f64 = -1e-10;
/// Hard limit from the `u64` bit pattern.
pub const MAX_MODES: usize = 63;

/// Mode limit for dense storage, overridable through `FMA_MAX_MODES`.
pub fn max_dense_modes() -> usize {
    env::var("FMA_MAX_MODES")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_DENSE_MODES)
}

pub(crate) fn check_dense(modes: usize) -> Result<()> {
    let limit = max_dense_modes();
    if modes > limit {
        return Err(Error::ModeLimit { modes, limit });
    }
    Ok(())
}

/// One Fock basis vector: the occupation numbers of every mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationState {
    bits: u64,
    modes: usize,
}

impl OccupationState {
    pub fn new(bits: u64, modes: usize) -> Result<Self> {
        if modes > MAX_MODES {
            return Err(Error::ModeLimit {
                modes,
                limit: MAX_MODES,
            });
        }
        if bits >> modes != 0 {
            return Err(Error::Domain(format!(
                "bit pattern {bits:#b} does not fit in {modes} modes"
            )));
        }
        Ok(Self { bits, modes })
    }

    pub fn vacuum(modes: usize) -> Self {
        Self { bits: 0, modes }
    }

    /// The state with exactly the listed (1-based) modes occupied.
    pub fn from_occupied(modes: usize, occupied: &[usize]) -> Result<Self> {
        let mut bits = 0u64;
        for &m in occupied {
            if m == 0 || m > modes {
                return Err(Error::ModeOutOfRange { mode: m, modes });
            }
            bits |= 1 << (m - 1);
        }
        Self::new(bits, modes)
    }

    pub fn from_index(index: usize, modes: usize) -> Result<Self> {
        Self::new(index as u64, modes)
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn index(&self) -> usize {
        self.bits as usize
    }

    pub fn is_occupied(&self, mode: usize) -> bool {
        mode >= 1 && mode <= self.modes && self.bits >> (mode - 1) & 1 == 1
    }

    pub fn particle_count(&self) -> u32 {
        self.bits.count_ones()
    }

    /// Mode-1-first rendering, e.g. `"110"` for modes 1 and 2 occupied.
    pub fn to_bit_string(&self) -> String {
        (0..self.modes)
            .map(|k| if self.bits >> k & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    pub fn parse_bits(text: &str) -> Result<Self> {
        if text.len() > MAX_MODES {
            return Err(Error::ModeLimit {
                modes: text.len(),
                limit: MAX_MODES,
            });
        }
        let mut bits = 0u64;
        let mut modes = 0;
        for (k, c) in text.chars().enumerate() {
            match c {
                '0' => {}
                '1' => bits |= 1 << k,
                _ => {
                    return Err(Error::StateFormat(format!(
                        "invalid occupation character {c:?} in {text:?}"
                    )))
                }
            }
            modes += 1;
        }
        if modes == 0 {
            return Err(Error::StateFormat("empty occupation pattern".into()));
        }
        Self::new(bits, modes)
    }
}

impl fmt::Display for OccupationState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}⟩", self.to_bit_string())
    }
}

/// Canonical index of a basis state.
pub fn basis_index(s: &OccupationState) -> usize {
    s.index()
}

/// All states with exactly `particles` occupied modes, in ascending index order.
pub fn sector_basis(modes: usize, particles: usize) -> Result<Vec<OccupationState>> {
    if particles > modes {
        return Err(Error::Domain(format!(
            "particle number {particles} exceeds mode count {modes}"
        )));
    }
    if modes > MAX_MODES {
        return Err(Error::ModeLimit {
            modes,
            limit: MAX_MODES,
        });
    }
    if modes > 32 {
        return Err(Error::ModeLimit { modes, limit: 32 });
    }
    Ok((0u64..1 << modes)
        .filter(|b| b.count_ones() as usize == particles)
        .map(|bits| OccupationState { bits, modes })
        .collect())
}

/// A pure state as a sparse map from basis index to amplitude.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    modes: usize,
    amplitudes: BTreeMap<usize, Complex64>,
}

impl FockVector {
    pub fn zero(modes: usize) -> Self {
        Self {
            modes,
            amplitudes: BTreeMap::new(),
        }
    }

    pub fn basis(s: OccupationState) -> Self {
        let mut v = Self::zero(s.modes());
        v.amplitudes.insert(s.index(), Complex64::new(1.0, 0.0));
        v
    }

    pub fn vacuum(modes: usize) -> Self {
        Self::basis(OccupationState::vacuum(modes))
    }

    pub fn from_amplitudes<I>(modes: usize, amplitudes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (OccupationState, Complex64)>,
    {
        let mut v = Self::zero(modes);
        for (s, z) in amplitudes {
            if s.modes() != modes {
                return Err(Error::DimensionMismatch {
                    expected: modes,
                    found: s.modes(),
                });
            }
            v.add(s.index(), z);
        }
        Ok(v)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        1 << self.modes
    }

    /// Adds `z` to the amplitude at `index`, dropping exact zeros.
    pub(crate) fn add(&mut self, index: usize, z: Complex64) {
        let entry = self.amplitudes.entry(index).or_default();
        *entry += z;
        if *entry == Complex64::new(0.0, 0.0) {
            self.amplitudes.remove(&index);
        }
    }

    pub fn amplitude(&self, s: &OccupationState) -> Complex64 {
        self.amplitudes.get(&s.index()).copied().unwrap_or_default()
    }

    /// Nonzero entries as `(basis index, amplitude)` in ascending index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.amplitudes.iter().map(|(&k, &z)| (k, z))
    }

    pub fn get(&self, index: usize) -> Complex64 {
        self.amplitudes.get(&index).copied().unwrap_or_default()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .values()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOL
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::Domain("cannot normalize the zero vector".into()));
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = Self::zero(self.modes);
        for (&k, &z) in &self.amplitudes {
            out.add(k, c * z);
        }
        out
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &FockVector) -> Complex64 {
        let (small, large, flip) = if self.amplitudes.len() <= other.amplitudes.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (&k, &z) in &small.amplitudes {
            if let Some(&w) = large.amplitudes.get(&k) {
                acc += if flip { w.conj() * z } else { z.conj() * w };
            }
        }
        acc
    }

    /// `true` when every nonzero amplitude has the given particle number.
    pub fn in_sector(&self, particles: u32) -> bool {
        self.amplitudes
            .keys()
            .all(|&k| (k as u64).count_ones() == particles)
    }

    pub fn to_dense(&self) -> Result<Vec<Complex64>> {
        check_dense(self.modes)?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (&k, &z) in &self.amplitudes {
            out[k] = z;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let file = StateFile {
            modes: self.modes,
            amplitudes: self
                .amplitudes
                .iter()
                .map(|(&k, z)| AmplitudeEntry {
                    bits: index_bits(k, self.modes),
                    re: z.re,
                    im: z.im,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("state file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: StateFile = serde_json::from_str(text)?;
        file.into_vector()
    }
}

/// A mixed state as a dense `2^M × 2^M` matrix in canonical basis order.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    modes: usize,
    matrix: DMatrix<Complex64>,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn from_matrix(modes: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        check_dense(modes)?;
        let dim = 1usize << modes;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::InvalidDensity(format!(
                "expected a {dim}×{dim} matrix, found {}×{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm = (&matrix - matrix.adjoint()).camax();
        if herm > NORM_TOL {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (deviation {herm:.3e})"
            )));
        }
        let tr = matrix.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > NORM_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr} is not 1")));
        }
        let hermitian = (&matrix + matrix.adjoint()).map(|z| z * 0.5);
        let min_eig = hermitian
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < PSD_TOL {
            return Err(Error::InvalidDensity(format!(
                "not positive semidefinite (min eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(Self { modes, matrix })
    }

    pub fn from_pure(psi: &FockVector) -> Result<Self> {
        Self::mixture(&[(1.0, psi.clone())])
    }

    /// `Σ_k w_k |ψ_k⟩⟨ψ_k|`; weights and vectors are validated by `from_matrix`.
    pub fn mixture(components: &[(f64, FockVector)]) -> Result<Self> {
        let modes = components
            .first()
            .map(|(_, v)| v.modes())
            .ok_or_else(|| Error::Domain("empty mixture".into()))?;
        check_dense(modes)?;
        let dim = 1usize << modes;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for (w, v) in components {
            if v.modes() != modes {
                return Err(Error::DimensionMismatch {
                    expected: modes,
                    found: v.modes(),
                });
            }
            for (r, zr) in v.iter() {
                for (c, zc) in v.iter() {
                    m[(r, c)] += zr * zc.conj() * *w;
                }
            }
        }
        Self::from_matrix(modes, m)
    }

    pub fn maximally_mixed(modes: usize) -> Result<Self> {
        check_dense(modes)?;
        let dim = 1usize << modes;
        let m = DMatrix::<Complex64>::identity(dim, dim).map(|z| z / dim as f64);
        Self::from_matrix(modes, m)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        1 << self.modes
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ |ρ_rc|² for Hermitian ρ
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn to_json(&self) -> String {
        let dim = self.dim();
        let mut entries = Vec::new();
        for r in 0..dim {
            for c in 0..dim {
                let z = self.matrix[(r, c)];
                if z != Complex64::new(0.0, 0.0) {
                    entries.push(DensityEntry {
                        row_bits: index_bits(r, self.modes),
                        col_bits: index_bits(c, self.modes),
                        re: z.re,
                        im: z.im,
                    });
                }
            }
        }
        let file = DensityFile {
            modes: self.modes,
            entries,
        };
        serde_json::to_string_pretty(&file).expect("density file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DensityFile = serde_json::from_str(text)?;
        file.into_operator()
    }
}

/// Either kind of state, as read from a state file.
#[derive(Clone, Debug, PartialEq)]
pub enum State {
    Pure(FockVector),
    Mixed(DensityOperator),
}

impl State {
    pub fn modes(&self) -> usize {
        match self {
            State::Pure(v) => v.modes(),
            State::Mixed(r) => r.modes(),
        }
    }

    pub fn to_density(&self) -> Result<DensityOperator> {
        match self {
            State::Pure(v) => DensityOperator::from_pure(v),
            State::Mixed(r) => Ok(r.clone()),
        }
    }

    pub fn to_json(&self) -> String {
        match self {
            State::Pure(v) => v.to_json(),
            State::Mixed(r) => r.to_json(),
        }
    }

    /// Reads either file format, dispatching on the `amplitudes`/`entries` key.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if value.get("amplitudes").is_some() {
            let file: StateFile = serde_json::from_value(value)?;
            Ok(State::Pure(file.into_vector()?))
        } else if value.get("entries").is_some() {
            let file: DensityFile = serde_json::from_value(value)?;
            Ok(State::Mixed(file.into_operator()?))
        } else {
            Err(Error::StateFormat(
                "expected an \"amplitudes\" or \"entries\" array".into(),
            ))
        }
    }
}

impl From<FockVector> for State {
    fn from(v: FockVector) -> Self {
        State::Pure(v)
    }
}

impl From<DensityOperator> for State {
    fn from(r: DensityOperator) -> Self {
        State::Mixed(r)
    }
}

pub(crate) fn index_bits(index: usize, modes: usize) -> String {
    OccupationState {
        bits: index as u64,
        modes,
    }
    .to_bit_string()
}

pub(crate) fn parse_index(bits: &str, modes: usize) -> Result<usize> {
    let s = OccupationState::parse_bits(bits)?;
    if s.modes() != modes {
        return Err(Error::StateFormat(format!(
            "pattern {bits:?} has {} modes, file declares {modes}",
            s.modes()
        )));
    }
    Ok(s.index())
}

#[derive(Serialize, Deserialize)]
struct AmplitudeEntry {
    bits: String,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    modes: usize,
    amplitudes: Vec<AmplitudeEntry>,
}

impl StateFile {
    fn into_vector(self) -> Result<FockVector> {
        if self.modes == 0 || self.modes > MAX_MODES {
            return Err(Error::StateFormat(format!(
                "unsupported mode count {}",
                self.modes
            )));
        }
        let mut v = FockVector::zero(self.modes);
        for e in self.amplitudes {
            let k = parse_index(&e.bits, self.modes)?;
            if v.amplitudes.contains_key(&k) {
                return Err(Error::StateFormat(format!(
                    "duplicate pattern {:?}",
                    e.bits
                )));
            }
            v.add(k, Complex64::new(e.re, e.im));
        }
        Ok(v)
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct DensityEntry {
    pub(crate) row_bits: String,
    pub(crate) col_bits: String,
    pub(crate) re: f64,
    pub(crate) im: f64,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct DensityFile {
    pub(crate) modes: usize,
    pub(crate) entries: Vec<DensityEntry>,
}

impl DensityFile {
    fn into_operator(self) -> Result<DensityOperator> {
        if self.modes == 0 {
            return Err(Error::StateFormat("unsupported mode count 0".into()));
        }
        check_dense(self.modes)?;
        let dim = 1usize << self.modes;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        let mut seen = std::collections::HashSet::new();
        for e in self.entries {
            let r = parse_index(&e.row_bits, self.modes)?;
            let c = parse_index(&e.col_bits, self.modes)?;
            if !seen.insert((r, c)) {
                return Err(Error::StateFormat(format!(
                    "duplicate entry ({:?}, {:?})",
                    e.row_bits, e.col_bits
                )));
            }
            m[(r, c)] = Complex64::new(e.re, e.im);
        }
        DensityOperator::from_matrix(self.modes, m)
    }
}

fn block_bits(particles: usize, offset: usize) -> u64 {
    ((1u64 << particles) - 1) << offset
}

/// `(|N;0⟩ + |0;N⟩)/√2` on `2N` modes: first block full or second block full.
pub fn two_branch_state(particles: usize) -> Result<FockVector> {
    let modes = two_branch_modes(particles)?;
    let half = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let mut v = FockVector::zero(modes);
    v.add(block_bits(particles, 0) as usize, half);
    v.add(block_bits(particles, particles) as usize, half);
    Ok(v)
}

/// `½|N;0⟩⟨N;0| + ½|0;N⟩⟨0;N|`, the incoherent counterpart of [`two_branch_state`].
pub fn two_branch_mixture(particles: usize) -> Result<DensityOperator> {
    let modes = two_branch_modes(particles)?;
    let first = OccupationState::new(block_bits(particles, 0), modes)?;
    let second = OccupationState::new(block_bits(particles, particles), modes)?;
    DensityOperator::mixture(&[
        (0.5, FockVector::basis(first)),
        (0.5, FockVector::basis(second)),
    ])
}

/// `|N;0⟩`: the first `N` of `2N` modes occupied.
pub fn first_block_state(particles: usize) -> Result<FockVector> {
    let modes = two_branch_modes(particles)?;
    Ok(FockVector::basis(OccupationState::new(
        block_bits(particles, 0),
        modes,
    )?))
}

fn two_branch_modes(particles: usize) -> Result<usize> {
    if particles == 0 {
        return Err(Error::Domain(
            "particle number must be at least 1 for the two-branch state".into(),
        ));
    }
    if 2 * particles > MAX_MODES {
        return Err(Error::ModeLimit {
            modes: 2 * particles,
            limit: MAX_MODES,
        });
    }
    Ok(2 * particles)
}
