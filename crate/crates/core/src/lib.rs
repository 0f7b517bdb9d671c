//! Second-quantized fermionic mode algebra on a finite Fock space.
//!
//! The crate is organised bottom-up:
//!
//! - [`fock`]: occupation-number basis, sparse state vectors, dense density
//!   operators and the two-branch preset states.
//! - [`car_ops`]: signed action of creation/annihilation operators on basis
//!   states, sparse matrices, and the Jordan–Wigner spin representation.
//! - [`opalg`]: symbolic operator polynomials with a normal-ordered canonical
//!   form, the parity automorphism, commutators and an expression parser.
//! - [`bipartition`]: splits of the mode set into two blocks, subalgebra
//!   membership, locality, micro-causality and commutation checks.
//! - [`analysis`]: expectations, odd–odd entanglement witnesses, the
//!   product-functional consistency test, even-sector comparison, projection
//!   meets, uncorrelatedness and a separable-mixture fit.
//! - [`cli`]: the `fma` command-line front end and its JSON reports.
//!
//! Modes are numbered from 1. Mode 1 is the least-significant bit of a basis
//! index, and kets are ordered as `|n_1 … n_M⟩ = (a_1†)^{n_1} ⋯ (a_M†)^{n_M}|0⟩`.

pub mod analysis;
pub mod bipartition;
pub mod car_ops;
pub mod cli;
mod error;
pub mod fock;
pub mod opalg;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Default upper bound on the mode count for dense 2^M × 2^M storage.
pub const DEFAULT_MAX_DENSE_MODES: usize = 14;
