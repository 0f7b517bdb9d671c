//! Splits of the mode set into two complementary blocks.
//!
//! Each block generates a subalgebra from the ladder operators of its modes.
//! Operators from different blocks anticommute at the level of single ladder
//! operators; whole elements commute only when at least one of them is even.

use std::fmt;
use std::str::FromStr;

use crate::car_ops::{ladder_matrix, SparseOperator};
use crate::opalg::{ModeSet, OperatorPoly};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

/// Two disjoint, nonempty mode sets covering `1..=modes`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bipartition {
    modes: usize,
    first: ModeSet,
    second: ModeSet,
}

impl Bipartition {
    /// `I1 = {1..m}`, `I2 = {m+1..M}`.
    pub fn contiguous(m: usize, modes: usize) -> Result<Self> {
        if m == 0 || m >= modes {
            return Err(Error::InvalidBipartition(format!(
                "split point {m} must satisfy 1 <= m < {modes}"
            )));
        }
        Self::from_sets((1..=m).collect(), (m + 1..=modes).collect())
    }

    pub fn from_sets(first: ModeSet, second: ModeSet) -> Result<Self> {
        if first.is_empty() || second.is_empty() {
            return Err(Error::InvalidBipartition("a side is empty".into()));
        }
        if first.contains(&0) || second.contains(&0) {
            return Err(Error::InvalidBipartition(
                "modes are numbered from 1".into(),
            ));
        }
        if let Some(m) = first.intersection(&second).next() {
            return Err(Error::InvalidBipartition(format!(
                "mode {m} is on both sides"
            )));
        }
        let modes = first.len() + second.len();
        let top = *first.iter().chain(second.iter()).max().expect("nonempty");
        if top != modes {
            let missing: Vec<String> = (1..=top)
                .filter(|m| !first.contains(m) && !second.contains(m))
                .map(|m| m.to_string())
                .collect();
            return Err(Error::InvalidBipartition(format!(
                "modes {} are not covered",
                missing.join(",")
            )));
        }
        Ok(Self {
            modes,
            first,
            second,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn first(&self) -> &ModeSet {
        &self.first
    }

    pub fn second(&self) -> &ModeSet {
        &self.second
    }

    pub fn side(&self, side: Side) -> &ModeSet {
        match side {
            Side::First => &self.first,
            Side::Second => &self.second,
        }
    }

    /// Every contiguous or non-contiguous bipartition of `modes` modes, each
    /// unordered pair listed once (mode 1 always on the first side).
    pub fn all(modes: usize) -> Vec<Self> {
        if modes < 2 {
            return Vec::new();
        }
        (1u64..1 << (modes - 1))
            .map(|mask| {
                // bit k of mask places mode k+2 on the second side
                let second: ModeSet = (0..modes - 1)
                    .filter(|k| mask >> k & 1 == 1)
                    .map(|k| k + 2)
                    .collect();
                let first: ModeSet = (1..=modes).filter(|m| !second.contains(m)).collect();
                Self::from_sets(first, second).expect("valid by construction")
            })
            .collect()
    }
}

fn join(set: &ModeSet) -> String {
    set.iter()
        .map(|m| m.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", join(&self.first), join(&self.second))
    }
}

fn parse_modes(text: &str) -> Result<ModeSet> {
    let mut set = ModeSet::new();
    for part in text.split(',') {
        let m: usize = part
            .trim()
            .parse()
            .map_err(|_| Error::InvalidBipartition(format!("{part:?} is not a mode index")))?;
        if !set.insert(m) {
            return Err(Error::InvalidBipartition(format!("mode {m} listed twice")));
        }
    }
    Ok(set)
}

/// Accepts `"1,2|3,4"` or the contiguous shorthand `"m:2/4"`.
impl FromStr for Bipartition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("m:") {
            let (m, total) = rest.split_once('/').ok_or_else(|| {
                Error::InvalidBipartition(format!("expected m:<m>/<M>, found {s:?}"))
            })?;
            let parse = |t: &str| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidBipartition(format!("{t:?} is not an integer")))
            };
            return Self::contiguous(parse(m)?, parse(total)?);
        }
        let (a, b) = s
            .split_once('|')
            .ok_or_else(|| Error::InvalidBipartition(format!("missing '|' in {s:?}")))?;
        Self::from_sets(parse_modes(a)?, parse_modes(b)?)
    }
}

/// `true` iff the support of `p` lies inside the chosen block. Scalars belong
/// to both blocks.
pub fn membership(p: &OperatorPoly, b: &Bipartition, side: Side) -> bool {
    p.support_modes().is_subset(b.side(side))
}

/// `true` iff `p` lives on the first block and `q` on the second, so `pq` is
/// a local product.
pub fn is_local(p: &OperatorPoly, q: &OperatorPoly, b: &Bipartition) -> bool {
    membership(p, b, Side::First) && membership(q, b, Side::Second)
}

/// Largest `‖{a#_i, a#_j}‖_max` over `i` in the first block, `j` in the second
/// and all four dagger combinations.
pub fn check_microcausality(b: &Bipartition) -> Result<f64> {
    let modes = b.modes();
    let ops = |set: &ModeSet| -> Result<Vec<SparseOperator>> {
        let mut v = Vec::new();
        for &i in set {
            let a = ladder_matrix(i, false, modes)?;
            v.push(a.adjoint());
            v.push(a);
        }
        Ok(v)
    };
    let left = ops(b.first())?;
    let right = ops(b.second())?;
    let mut worst = 0.0f64;
    for x in &left {
        for y in &right {
            worst = worst.max(x.anticommutator(y)?.max_abs());
        }
    }
    Ok(worst)
}

/// `true` iff `[p, q] = 0` symbolically, for `p` on the first block and `q`
/// on the second.
pub fn check_algebraic_independence(
    p: &OperatorPoly,
    q: &OperatorPoly,
    b: &Bipartition,
) -> Result<bool> {
    if !is_local(p, q, b) {
        return Err(Error::Domain(format!(
            "operands are not local for bipartition {b}: {p} / {q}"
        )));
    }
    Ok(p.commutator(q).is_zero())
}
