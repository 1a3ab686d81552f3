//! Variances, symmetrized covariances, and the Robertson-Schrodinger
//! inequality. The inequality is checked in two independently computed
//! forms: the operator form
//!
//!   (dA)^2 (dB)^2 - C(A,B)^2  >=  ( (1/2i) <[A,B]> )^2
//!
//! and the geometric form on projective space
//!
//!   g(Xa,Xa) g(Xb,Xb) - g(Xa,Xb)^2  >=  Omega(Xa,Xb)^2
//!
//! which are related entrywise by the factor (2/hbar)^2. Keeping the two
//! computations separate is the point: their agreement is one of the
//! verification targets, not an assumption.

use serde::Serialize;

use crate::config::Config;
use crate::error::Result;
use crate::hilbert::{commutator, expectation, hermitian_inner, HermitianOperator, StateVector};
use crate::projective::{
    complex_structure_j, metric_g, project, pushforward_field, symplectic_omega, ProjectivePoint,
};

/// Standard deviation dA = sqrt(<(A - <A>)^2>). Nonnegative; rounding dips
/// below zero are clamped.
pub fn uncertainty(a: &HermitianOperator, psi: &StateVector) -> Result<f64> {
    Ok(variance(a, psi)?.sqrt())
}

fn variance(a: &HermitianOperator, psi: &StateVector) -> Result<f64> {
    let centered = centered_apply(a, psi)?;
    let var = hermitian_inner(&centered, &centered)?.re;
    Ok(var.max(0.0))
}

/// (A - <A>) psi.
fn centered_apply(a: &HermitianOperator, psi: &StateVector) -> Result<crate::hilbert::CVector> {
    let mean = expectation(a, psi)?;
    let apsi = a.apply(psi)?;
    Ok(apsi - psi.components() * num_complex::Complex64::new(mean, 0.0))
}

/// Symmetrized covariance C(A,B) = 1/2 <{A - <A>, B - <B>}>.
pub fn covariance(a: &HermitianOperator, b: &HermitianOperator, psi: &StateVector) -> Result<f64> {
    let ca = centered_apply(a, psi)?;
    let cb = centered_apply(b, psi)?;
    // Re <(A-<A>)psi, (B-<B>)psi> is exactly the symmetrized expectation
    Ok(hermitian_inner(&ca, &cb)?.re)
}

/// The 2x2 statistical moment matrix of a pair of observables, scaled to
/// match the Fubini-Study metric: (2/hbar) [[dA^2, C], [C, dB^2]].
///
/// This equals the pullback metric of the map (s,t) -> flow point driven by
/// A and B; the agreement is verified, not assumed, by the pointwise module.
#[derive(Debug, Clone, Serialize)]
pub struct CovarianceTensor {
    pub entries: [[f64; 2]; 2],
    #[serde(skip)]
    pub base: ProjectivePoint,
    pub hbar: f64,
}

impl CovarianceTensor {
    pub fn det(&self) -> f64 {
        self.entries[0][0] * self.entries[1][1] - self.entries[0][1] * self.entries[1][0]
    }
}

pub fn covariance_tensor(
    a: &HermitianOperator,
    b: &HermitianOperator,
    psi: &StateVector,
    cfg: &Config,
) -> Result<CovarianceTensor> {
    cfg.validate()?;
    let scale = 2.0 / cfg.hbar;
    let va = variance(a, psi)?;
    let vb = variance(b, psi)?;
    let c = covariance(a, b, psi)?;
    Ok(CovarianceTensor {
        entries: [[scale * va, scale * c], [scale * c, scale * vb]],
        base: project(psi.components())?,
        hbar: cfg.hbar,
    })
}

/// Robertson-Schrodinger check for one (A, B, psi) triple, with the operator
/// and geometric forms side by side.
#[derive(Debug, Clone, Serialize)]
pub struct RsReport {
    /// dA^2 dB^2 - C^2.
    pub lhs_operator: f64,
    /// ((1/2i) <[A,B]>)^2.
    pub rhs_operator: f64,
    /// g(Xa,Xa) g(Xb,Xb) - g(Xa,Xb)^2 for the pushforward fields.
    pub lhs_geometric: f64,
    /// Omega(Xa,Xb)^2.
    pub rhs_geometric: f64,
    /// |slack_operator| <= tol_eq.
    pub saturated: bool,
}

impl RsReport {
    pub fn slack_operator(&self) -> f64 {
        self.lhs_operator - self.rhs_operator
    }

    pub fn slack_geometric(&self) -> f64 {
        self.lhs_geometric - self.rhs_geometric
    }

    /// Largest deviation between the geometric quantities and the operator
    /// quantities rescaled by (2/hbar)^2.
    pub fn form_gap(&self, hbar: f64) -> f64 {
        let k = (2.0 / hbar).powi(2);
        let lhs = (self.lhs_geometric - k * self.lhs_operator).abs();
        let rhs = (self.rhs_geometric - k * self.rhs_operator).abs();
        lhs.max(rhs)
    }
}

/// Evaluates both forms of the Robertson-Schrodinger inequality at psi.
///
/// The operator form goes through expectations of A, B, and their
/// commutator; the geometric form goes through the Fubini-Study metric and
/// symplectic form on the pushforward fields. No quantity is reused across
/// the two routes.
pub fn rs_check(
    a: &HermitianOperator,
    b: &HermitianOperator,
    psi: &StateVector,
    cfg: &Config,
) -> Result<RsReport> {
    cfg.validate()?;

    // operator route
    let va = variance(a, psi)?;
    let vb = variance(b, psi)?;
    let c = covariance(a, b, psi)?;
    let lhs_operator = va * vb - c * c;
    let comm = commutator(a, b)?;
    let z = psi.components().dotc(&(&comm * psi.components()));
    // <[A,B]> is purely imaginary; (1/2i) <[A,B]> = Im(z)/2
    let rhs_operator = (z.im / 2.0).powi(2);

    // geometric route
    let point = project(psi.components())?;
    let xa = pushforward_field(a, &point, cfg)?;
    let xb = pushforward_field(b, &point, cfg)?;
    let gaa = metric_g(&xa, &xa, cfg)?;
    let gbb = metric_g(&xb, &xb, cfg)?;
    let gab = metric_g(&xa, &xb, cfg)?;
    let lhs_geometric = gaa * gbb - gab * gab;
    let om = symplectic_omega(&xa, &xb, cfg)?;
    let rhs_geometric = om * om;

    Ok(RsReport {
        lhs_operator,
        rhs_operator,
        lhs_geometric,
        rhs_geometric,
        saturated: (lhs_operator - rhs_operator).abs() <= cfg.tol_eq,
    })
}

/// True when the pushforward field of B is J applied to the pushforward
/// field of A, i.e. the pair generates a holomorphic direction. Uses a
/// relative tolerance: ||Xb - J Xa|| <= tol_eq * (||Xa|| + ||Xb||).
pub fn saturation_witness(
    a: &HermitianOperator,
    b: &HermitianOperator,
    psi: &StateVector,
    cfg: &Config,
) -> Result<bool> {
    let point = project(psi.components())?;
    let xa = pushforward_field(a, &point, cfg)?;
    let xb = pushforward_field(b, &point, cfg)?;
    let jxa = complex_structure_j(&xa);
    let gap = (xb.vector() - jxa.vector()).norm();
    Ok(gap <= cfg.tol_eq * (xa.norm() + xb.norm()))
}
