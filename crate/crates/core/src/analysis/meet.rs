//! Meets in the projection lattice and the uncorrelatedness test.
//!
//! The meet `P ∧ Q` is the projector onto `ran P ∩ ran Q`. It is computed by
//! two independent routes: the limit of `P(PQP)^n P`, and the eigenvalue-2
//! eigenspace of `P + Q`. The returned projector comes from the spectral route;
//! the limit is kept as a cross-check.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{expectation, Expectation};
use crate::car_ops::{poly_to_matrix, SparseOperator};
use crate::opalg::OperatorPoly;
use crate::{Error, Result};

/// Idempotence/Hermiticity tolerance for accepting an input projection.
pub const PROJECTION_TOL: f64 = 1e-10;
/// Agreement required between the two meet routes.
const AGREEMENT_TOL: f64 = 1e-8;
/// Spectrum points strictly inside `(GAP, 1 − GAP)` mean the limit has not settled.
const GAP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeetMethod {
    IteratedProduct,
    RangeIntersection,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeetResult {
    pub meet: SparseOperator,
    /// Number of squarings of `PQP`; the last iterate is `(PQP)^(2^iterations)`.
    pub iterations: usize,
    pub method: MeetMethod,
    /// `‖iterated − spectral‖_max`.
    pub residual: f64,
    /// `false` when the iterated limit still had spectrum away from `{0, 1}`.
    pub converged: bool,
    /// Rank of the meet.
    pub rank: usize,
}

/// `(1 + a_i + a_i†)/2`, a projection because `(a_i + a_i†)² = 1`.
pub fn majorana_projection(mode: usize) -> OperatorPoly {
    let half = Complex64::new(0.5, 0.0);
    (&(&OperatorPoly::identity() + &OperatorPoly::annihilate(mode)) + &OperatorPoly::create(mode))
        .scale(half)
}

/// Eigenvalues (ascending) of the Hermitian part of `m`.
pub fn hermitian_spectrum(m: &SparseOperator) -> Result<Vec<f64>> {
    let d = m.to_dense()?;
    let h = (&d + d.adjoint()).map(|z| z * 0.5);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(ev)
}

fn hermitian(d: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (d + d.adjoint()).map(|z| z * 0.5)
}

/// Projector onto the span of eigenvectors of `h` whose eigenvalue passes `keep`.
fn spectral_projector(
    h: &DMatrix<Complex64>,
    keep: impl Fn(f64) -> bool,
) -> (DMatrix<Complex64>, usize) {
    let eig = hermitian(h).symmetric_eigen();
    let n = h.nrows();
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    let mut rank = 0;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if keep(lambda) {
            let v = eig.eigenvectors.column(k);
            out += v * v.adjoint();
            rank += 1;
        }
    }
    (out, rank)
}

fn max_abs(d: &DMatrix<Complex64>) -> f64 {
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn check_projection(m: &SparseOperator) -> Result<()> {
    let deviation = m.projection_defect();
    if deviation > PROJECTION_TOL {
        return Err(Error::NotProjection { deviation });
    }
    Ok(())
}

/// Largest projection below both `p` and `q`.
///
/// The iterated route squares `X = PQP` until successive iterates differ by
/// less than `tol` (at most `max_iter` squarings), then snaps the spectrum of
/// `PXP` to `{0, 1}` at 0.5. If the two routes disagree by more than `1e-8`
/// after the limit converged, that is an error.
pub fn projection_meet(
    p: &SparseOperator,
    q: &SparseOperator,
    tol: f64,
    max_iter: usize,
) -> Result<MeetResult> {
    if p.modes() != q.modes() {
        return Err(Error::DimensionMismatch {
            expected: p.modes(),
            found: q.modes(),
        });
    }
    check_projection(p)?;
    check_projection(q)?;
    let pd = p.to_dense()?;
    let qd = q.to_dense()?;

    // iterated products
    let mut x = hermitian(&(&pd * &qd * &pd));
    let mut iterations = 0;
    while iterations < max_iter {
        let next = hermitian(&(&x * &x));
        iterations += 1;
        let delta = max_abs(&(&next - &x));
        x = next;
        if delta < tol {
            break;
        }
    }
    let limit = hermitian(&(&pd * &x * &pd));
    let spectrum = limit.symmetric_eigenvalues();
    let converged = spectrum.iter().all(|&l| l <= GAP || l >= 1.0 - GAP);
    let (iterated, _) = spectral_projector(&limit, |l| l > 0.5);

    // range intersection: P + Q has eigenvalue 2 exactly on ran P ∩ ran Q
    let (spectral, rank) = spectral_projector(&(&pd + &qd), |l| l >= 2.0 - AGREEMENT_TOL);

    let residual = max_abs(&(&iterated - &spectral));
    if converged && residual > AGREEMENT_TOL {
        return Err(Error::MeetDisagreement { residual });
    }
    Ok(MeetResult {
        meet: SparseOperator::from_dense(p.modes(), &spectral),
        iterations,
        method: MeetMethod::RangeIntersection,
        residual,
        converged,
        rank,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Uncorrelation {
    pub uncorrelated: bool,
    /// `ω(P ∧ Q)`.
    pub lhs: f64,
    /// `ω(P) ω(Q)`.
    pub rhs: f64,
    pub first_value: f64,
    pub second_value: f64,
    pub meet: MeetResult,
}

/// Tests `ω(P ∧ Q) = ω(P) ω(Q)` for two projection polynomials.
pub fn is_uncorrelated<S: Expectation + ?Sized>(
    state: &S,
    p: &OperatorPoly,
    q: &OperatorPoly,
    tol: f64,
) -> Result<Uncorrelation> {
    let modes = state.modes();
    let pm = poly_to_matrix(p, modes)?;
    let qm = poly_to_matrix(q, modes)?;
    let meet = projection_meet(&pm, &qm, 1e-12, 64)?;
    let lhs = state.operator_expectation(&meet.meet).re;
    let first_value = expectation(state, p)?.re;
    let second_value = expectation(state, q)?.re;
    let rhs = first_value * second_value;
    Ok(Uncorrelation {
        uncorrelated: (lhs - rhs).abs() <= tol,
        lhs,
        rhs,
        first_value,
        second_value,
        meet,
    })
}
