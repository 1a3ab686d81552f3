//! Projective Hilbert space: rays of unit states with a canonical gauge
//! choice, plus the Fubini-Study inner product and the structures it
//! induces, the Riemannian metric g = 2*hbar*Re<<.,.>>, the symplectic form
//! Omega = 2*hbar*Im<<.,.>>, and the complex structure J.
//!
//! Tangents to projective space are handled through horizontal
//! representatives ([`HorizontalTangent`]); as long as two tangents share a
//! base representative, the Fubini-Study inner product reduces to the plain
//! Hermitian inner product of the representatives.

use num_complex::Complex64;

use crate::config::Config;
use crate::error::{GqmError, Result};
use crate::hilbert::{
    check_same_dim, expectation, hermitian_inner, CVector, HermitianOperator, HorizontalTangent,
    StateVector,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A point of projective space stored through its canonical representative:
/// unit norm, with the largest-modulus component rotated to the positive
/// real axis (ties broken by lowest index). Canonicalizing makes equality
/// checks and serialized output reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectivePoint {
    rep: StateVector,
}

impl ProjectivePoint {
    pub fn rep(&self) -> &StateVector {
        &self.rep
    }

    pub fn dim(&self) -> usize {
        self.rep.dim()
    }

    /// True when the two points are the same ray: |<rep1, rep2>| = 1 within
    /// `cfg.tol_eq`.
    pub fn coincides_with(&self, other: &ProjectivePoint, cfg: &Config) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let overlap = self.rep.components().dotc(other.rep.components()).norm();
        (overlap - 1.0).abs() <= cfg.tol_eq
    }
}

/// Sends a nonzero vector to its ray: normalizes, then applies the canonical
/// phase. The returned representative is stable under re-projection.
pub fn project(psi: &CVector) -> Result<ProjectivePoint> {
    let state = StateVector::normalized(psi.clone())?;
    Ok(canonicalize(state))
}

fn canonicalize(state: StateVector) -> ProjectivePoint {
    let v = state.into_components();
    let mut best = 0usize;
    let mut best_mod = v[0].norm();
    for k in 1..v.len() {
        let m = v[k].norm();
        if m > best_mod {
            best_mod = m;
            best = k;
        }
    }
    // best_mod >= 1/sqrt(dim) > 0 for a unit vector
    let phase = v[best].conj() / best_mod;
    let gauged = v * phase;
    ProjectivePoint {
        rep: StateVector::normalized(gauged).expect("unit vector stays unit under phase"),
    }
}

/// Fubini-Study inner product of two horizontal tangents at the same base.
/// For unit bases and horizontal representatives this is just the Hermitian
/// inner product of the representatives.
pub fn fs_inner(v: &HorizontalTangent, w: &HorizontalTangent, cfg: &Config) -> Result<Complex64> {
    if !v.same_base(w, cfg) {
        return Err(GqmError::BaseMismatch);
    }
    hermitian_inner(v.vector(), w.vector())
}

/// Fubini-Study metric g(V, W) = 2 hbar Re <<V, W>>.
pub fn metric_g(v: &HorizontalTangent, w: &HorizontalTangent, cfg: &Config) -> Result<f64> {
    Ok(2.0 * cfg.hbar * fs_inner(v, w, cfg)?.re)
}

/// Fubini-Study symplectic form Omega(V, W) = 2 hbar Im <<V, W>>.
pub fn symplectic_omega(v: &HorizontalTangent, w: &HorizontalTangent, cfg: &Config) -> Result<f64> {
    Ok(2.0 * cfg.hbar * fs_inner(v, w, cfg)?.im)
}

/// Complex structure J: multiplication by i on the horizontal representative.
/// Squares to minus the identity and preserves horizontality.
pub fn complex_structure_j(v: &HorizontalTangent) -> HorizontalTangent {
    let rotated = v.vector() * I;
    HorizontalTangent::new(v.base().clone(), rotated, &Config::default())
        .expect("i * horizontal stays horizontal")
}

/// Pushforward of the Hamiltonian field of A to projective space at the
/// given point, expressed at the canonical representative psi:
/// (-i/hbar) (A - <A>) psi.
pub fn pushforward_field(
    a: &HermitianOperator,
    point: &ProjectivePoint,
    cfg: &Config,
) -> Result<HorizontalTangent> {
    cfg.validate()?;
    let psi = point.rep();
    check_same_dim(a.dim(), psi.dim())?;
    let mean = expectation(a, psi)?;
    let apsi = a.apply(psi)?;
    let vec = (apsi - psi.components() * Complex64::new(mean, 0.0)) * (-I / cfg.hbar);
    HorizontalTangent::new(psi.clone(), vec, cfg)
}
