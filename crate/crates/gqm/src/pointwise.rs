//! Pointwise energy identity for a two-parameter map into projective space.
//!
//! A pair of observables (A, B) drives a map u(s, t) whose differential at a
//! point has columns d_s = Xa and d_t = Xb, the pushforward Hamiltonian
//! fields. Three densities are attached to the differential:
//!
//! - the area density sqrt(det h), where h is the pullback of the
//!   Fubini-Study metric (this is the coefficient of ds^dt in (1/2)|du|^2 dA
//!   when lengths on the source are measured in h itself);
//! - the symplectic density Omega(d_s, d_t);
//! - the antiholomorphic energy |dbar u|^2, measured against the conformal
//!   structure that h induces on the source.
//!
//! They satisfy the exact identity
//!
//!   sqrt(det h) = |dbar u|^2 + Omega(d_s, d_t)
//!
//! whenever h is nondegenerate, which makes the Robertson-Schrodinger
//! inequality literally an energy inequality: the symplectic density never
//! exceeds the area density, with equality exactly on holomorphic data.
//!
//! Note the two conformal structures in play. The *reported* antiholomorphic
//! components use the standard structure on the source (rotating d_s into
//! d_t), which is what the Cauchy-Riemann residual and the saturation
//! witness test. The *norm* uses the h-compatible structure, which is the
//! one the identity above holds for; the two coincide precisely when the
//! differential is conformal, e.g. on holomorphic data.

use num_complex::Complex64;
use serde::Serialize;

use crate::config::Config;
use crate::error::{GqmError, Result};
use crate::hilbert::{CVector, HermitianOperator, HorizontalTangent, StateVector};
use crate::projective::{project, pushforward_field, ProjectivePoint};
use crate::uncertainty::CovarianceTensor;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Differential of a map into projective space at one point: the base point
/// and the two coordinate derivatives as horizontal tangents there.
#[derive(Debug, Clone)]
pub struct MapDifferential {
    base: ProjectivePoint,
    d_s: HorizontalTangent,
    d_t: HorizontalTangent,
}

impl MapDifferential {
    /// Assembles a differential from parts; both tangents must sit at the
    /// base point's representative.
    pub fn new(
        base: ProjectivePoint,
        d_s: HorizontalTangent,
        d_t: HorizontalTangent,
        cfg: &Config,
    ) -> Result<Self> {
        let at_base = |t: &HorizontalTangent| {
            (t.base().components() - base.rep().components()).norm() <= cfg.tol_eq
        };
        if !at_base(&d_s) || !at_base(&d_t) {
            return Err(GqmError::BaseMismatch);
        }
        Ok(MapDifferential { base, d_s, d_t })
    }

    pub fn base(&self) -> &ProjectivePoint {
        &self.base
    }

    pub fn d_s(&self) -> &HorizontalTangent {
        &self.d_s
    }

    pub fn d_t(&self) -> &HorizontalTangent {
        &self.d_t
    }
}

/// Differential of the map driven by a pair of observables at psi:
/// d_s = Xa, d_t = Xb at the projection of psi.
pub fn map_differential(
    a: &HermitianOperator,
    b: &HermitianOperator,
    psi: &StateVector,
    cfg: &Config,
) -> Result<MapDifferential> {
    let base = project(psi.components())?;
    let d_s = pushforward_field(a, &base, cfg)?;
    let d_t = pushforward_field(b, &base, cfg)?;
    Ok(MapDifferential { base, d_s, d_t })
}

/// Pullback of the Fubini-Study metric through the differential:
/// h_kl = 2 hbar Re <d_k, d_l>. Returned as a covariance tensor because
/// that is what it provably equals; the agreement with the moment-based
/// construction is checked entrywise in tests rather than assumed.
pub fn pullback_metric(d: &MapDifferential, cfg: &Config) -> CovarianceTensor {
    CovarianceTensor {
        entries: metric_entries(d, cfg),
        base: d.base.clone(),
        hbar: cfg.hbar,
    }
}

fn metric_entries(d: &MapDifferential, cfg: &Config) -> [[f64; 2]; 2] {
    let two_hbar = 2.0 * cfg.hbar;
    let v = d.d_s.vector();
    let w = d.d_t.vector();
    let h_ss = two_hbar * v.dotc(v).re;
    let h_tt = two_hbar * w.dotc(w).re;
    let h_st = two_hbar * v.dotc(w).re;
    [[h_ss, h_st], [h_st, h_tt]]
}

fn det2(h: &[[f64; 2]; 2]) -> f64 {
    h[0][0] * h[1][1] - h[0][1] * h[1][0]
}

/// Checks det h against the degeneracy and positivity tolerances. Returns
/// None when degenerate, the determinant otherwise.
fn checked_det(h: &[[f64; 2]; 2], cfg: &Config) -> Result<Option<f64>> {
    let det = det2(h);
    if det < -cfg.tol_psd {
        return Err(GqmError::PsdViolation { det });
    }
    if det <= cfg.tol_psd {
        return Ok(None);
    }
    Ok(Some(det))
}

/// Energy density (1/2)|du|^2 with source lengths measured in the pullback
/// metric itself: h^{kl} contracted against the Gram matrix of the
/// differentials. Identically 1 wherever the pullback is nondegenerate,
/// which is exactly what gets verified. `None` signals a degenerate point.
pub fn energy_density(d: &MapDifferential, cfg: &Config) -> Result<Option<f64>> {
    let h = metric_entries(d, cfg);
    let det = match checked_det(&h, cfg)? {
        None => return Ok(None),
        Some(det) => det,
    };
    // fresh Gram matrix (same definition as h; the contraction is the check)
    let g = metric_entries(d, cfg);
    let trace = h[1][1] * g[0][0] - 2.0 * h[0][1] * g[0][1] + h[0][0] * g[1][1];
    Ok(Some(0.5 * trace / det))
}

/// Area density sqrt(det h): the coefficient of ds^dt in the energy 2-form
/// of the map measured in its own pullback metric. Zero when degenerate.
pub fn energy_form_coeff(d: &MapDifferential, cfg: &Config) -> Result<f64> {
    let h = metric_entries(d, cfg);
    Ok(match checked_det(&h, cfg)? {
        None => 0.0,
        Some(det) => det.sqrt(),
    })
}

/// Symplectic density Omega(d_s, d_t) = 2 hbar Im <d_s, d_t>: the
/// coefficient of ds^dt in the pullback of the symplectic form.
pub fn symplectic_form_coeff(d: &MapDifferential, cfg: &Config) -> f64 {
    2.0 * cfg.hbar * d.d_s.vector().dotc(d.d_t.vector()).im
}

/// Antiholomorphic part of the differential.
#[derive(Debug, Clone)]
pub struct AntiholomorphicPart {
    /// The antiholomorphic energy density entering the identity
    /// sqrt(det h) = norm_sq + Omega(d_s, d_t); measured with the
    /// h-compatible conformal structure, zero at degenerate points.
    pub norm_sq: f64,
    /// s-column of (1/2)(du + J du j) for the standard structure
    /// (j d/ds = d/dt): (1/2)(d_s + J d_t). The t-column is -i times this.
    pub components: CVector,
}

/// Splits off the antiholomorphic part of the differential. See the module
/// notes for the two conformal structures involved.
pub fn antiholomorphic_part(d: &MapDifferential, cfg: &Config) -> Result<AntiholomorphicPart> {
    let v = d.d_s.vector();
    let w = d.d_t.vector();
    let components = (v + w * I) * Complex64::new(0.5, 0.0);
    let norm_sq = dbar_energy(d, cfg)?;
    Ok(AntiholomorphicPart {
        norm_sq,
        components,
    })
}

/// |dbar u|^2 against the conformal structure of the pullback metric,
/// including the area factor, so that the pointwise identity holds exactly.
fn dbar_energy(d: &MapDifferential, cfg: &Config) -> Result<f64> {
    let h = metric_entries(d, cfg);
    let det = match checked_det(&h, cfg)? {
        None => return Ok(0.0),
        Some(det) => det,
    };
    let sq = det.sqrt();
    let v = d.d_s.vector();
    let w = d.d_t.vector();
    // rotation by the h-compatible complex structure on the source:
    // j_h d/ds = (-h_st d/ds + h_ss d/dt)/sqrt(det),
    // j_h d/dt = (-h_tt d/ds + h_st d/dt)/sqrt(det)
    let p_s = (v * Complex64::new(-h[0][1] / sq, 0.0)) + (w * Complex64::new(h[0][0] / sq, 0.0));
    let p_t = (v * Complex64::new(-h[1][1] / sq, 0.0)) + (w * Complex64::new(h[0][1] / sq, 0.0));
    let col_s = (v + p_s * I) * Complex64::new(0.5, 0.0);
    let col_t = (w + p_t * I) * Complex64::new(0.5, 0.0);
    let two_hbar = 2.0 * cfg.hbar;
    let g_ss = two_hbar * col_s.dotc(&col_s).re;
    let g_st = two_hbar * col_s.dotc(&col_t).re;
    let g_tt = two_hbar * col_t.dotc(&col_t).re;
    // contract with h^{kl}, then multiply by the area factor sqrt(det)
    Ok((h[1][1] * g_ss - 2.0 * h[0][1] * g_st + h[0][0] * g_tt) / sq)
}

/// All three densities of the pointwise identity, evaluated together.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    /// Area density sqrt(det h).
    pub energy_coeff: f64,
    /// Symplectic density Omega(d_s, d_t).
    pub symplectic_coeff: f64,
    /// Antiholomorphic energy density.
    pub dbar_norm_sq: f64,
    /// det h <= tol_psd: the differential does not span a 2-plane.
    pub degenerate: bool,
}

impl IdentityReport {
    /// energy - symplectic - dbar; rounding-level for nondegenerate input.
    pub fn residual(&self) -> f64 {
        self.energy_coeff - self.symplectic_coeff - self.dbar_norm_sq
    }
}

/// Evaluates the full pointwise identity at one differential.
pub fn identity_report(d: &MapDifferential, cfg: &Config) -> Result<IdentityReport> {
    let h = metric_entries(d, cfg);
    let det = checked_det(&h, cfg)?;
    let energy_coeff = det.map_or(0.0, f64::sqrt);
    let symplectic_coeff = symplectic_form_coeff(d, cfg);
    let dbar_norm_sq = dbar_energy(d, cfg)?;
    Ok(IdentityReport {
        energy_coeff,
        symplectic_coeff,
        dbar_norm_sq,
        degenerate: det.is_none(),
    })
}

/// Evaluates the pointwise identity for the map driven by a pair of
/// observables at psi: builds the differential, then reports all three
/// densities and the degeneracy flag.
pub fn verify_identity(
    a: &HermitianOperator,
    b: &HermitianOperator,
    psi: &StateVector,
    cfg: &Config,
) -> Result<IdentityReport> {
    let d = map_differential(a, b, psi, cfg)?;
    identity_report(&d, cfg)
}

/// Max-norm residual of the Cauchy-Riemann system for the pair of columns,
/// in interleaved real coordinates: zero exactly when d_t = J d_s.
pub fn cauchy_riemann_residual(d: &MapDifferential) -> f64 {
    let v = d.d_s.vector();
    let w = d.d_t.vector();
    let mut worst = 0.0f64;
    for k in 0..v.len() {
        // real pair (Re v_k, Im v_k) against (Re w_k, Im w_k):
        // holomorphic means Re v = Im w and Im v = -Re w
        let r1 = (v[k].re - w[k].im).abs();
        let r2 = (v[k].im + w[k].re).abs();
        worst = worst.max(r1).max(r2);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{expectation, pauli_x, pauli_y, pauli_z, random_hermitian, random_state};
    use crate::uncertainty::covariance_tensor;

    fn cfg() -> Config {
        Config::default()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Interleaved real coordinates scaled so the standard symplectic form
    /// sum dy_odd ^ dy_even reproduces 2 hbar Im <.,.>.
    fn symplectic_coords(v: &CVector, hbar: f64) -> Vec<f64> {
        let s = (2.0 * hbar).sqrt();
        let mut out = Vec::with_capacity(2 * v.len());
        for z in v.iter() {
            out.push(s * z.re);
            out.push(s * z.im);
        }
        out
    }

    #[test]
    fn pauli_pair_is_conformal_at_north_pole() {
        let cfg = cfg();
        let up = north_pole();
        let d = map_differential(&pauli_x(), &pauli_y(), &up, &cfg).unwrap();
        let h = pullback_metric(&d, &cfg);
        assert!((h.entries[0][0] - 2.0).abs() < 1e-14);
        assert!((h.entries[1][1] - 2.0).abs() < 1e-14);
        assert!(h.entries[0][1].abs() < 1e-14);
        assert_eq!(energy_density(&d, &cfg).unwrap(), Some(1.0));
        assert!((energy_form_coeff(&d, &cfg).unwrap() - 2.0).abs() < 1e-14);
        assert!((symplectic_form_coeff(&d, &cfg) - 2.0).abs() < 1e-14);
        let part = antiholomorphic_part(&d, &cfg).unwrap();
        assert!(part.norm_sq.abs() < 1e-14);
        assert!(part.components.norm() < 1e-14);
        assert!(cauchy_riemann_residual(&d) < 1e-14);
        let report = verify_identity(&pauli_x(), &pauli_y(), &up, &cfg).unwrap();
        assert!(!report.degenerate);
        assert!(report.residual().abs() < 1e-13);
    }

    fn north_pole() -> StateVector {
        StateVector::basis(2, 0).unwrap()
    }

    #[test]
    fn z_partner_is_degenerate_at_its_eigenstate() {
        let cfg = cfg();
        let up = north_pole();
        let report = verify_identity(&pauli_x(), &pauli_z(), &up, &cfg).unwrap();
        assert!(report.degenerate);
        assert_eq!(report.energy_coeff, 0.0);
        assert!(report.symplectic_coeff.abs() < 1e-14);
        let d = map_differential(&pauli_x(), &pauli_z(), &up, &cfg).unwrap();
        assert_eq!(energy_density(&d, &cfg).unwrap(), None);
    }

    #[test]
    fn repeated_observable_is_degenerate_with_nonzero_columns() {
        let cfg = cfg();
        let up = north_pole();
        let d = map_differential(&pauli_x(), &pauli_x(), &up, &cfg).unwrap();
        let report = identity_report(&d, &cfg).unwrap();
        assert!(report.degenerate);
        assert_eq!(report.energy_coeff, 0.0);
        assert_eq!(report.dbar_norm_sq, 0.0);
        // the raw antiholomorphic column (1/2)(d_s + J d_s) does not vanish
        let part = antiholomorphic_part(&d, &cfg).unwrap();
        assert!(part.components.norm() > 0.5);
        assert!(cauchy_riemann_residual(&d) > 0.5);
    }

    #[test]
    fn identity_holds_on_random_triples() {
        let cfg = cfg();
        let half = Config::with_hbar(0.5).unwrap();
        for seed in 0..300 {
            for conf in [&cfg, &half] {
                let psi = random_state(4, 40_000 + seed).unwrap();
                let a = random_hermitian(4, 41_000 + seed).unwrap();
                let b = random_hermitian(4, 42_000 + seed).unwrap();
                let report = verify_identity(&a, &b, &psi, conf).unwrap();
                if report.degenerate {
                    continue; // essentially never for random data
                }
                assert!(
                    report.residual().abs() < 1e-9,
                    "identity residual {} at seed {seed}",
                    report.residual()
                );
                assert!(report.dbar_norm_sq >= 0.0);
                assert!(report.energy_coeff >= report.symplectic_coeff - 1e-10);
                let d = map_differential(&a, &b, &psi, conf).unwrap();
                let density = energy_density(&d, conf).unwrap().unwrap();
                assert!((density - 1.0).abs() < 1e-9, "density {density}");
            }
        }
    }

    #[test]
    fn rescaling_an_observable_rescales_the_densities() {
        let cfg = cfg();
        let lambda = 3.5;
        let psi = random_state(3, 45_001).unwrap();
        let a = random_hermitian(3, 45_002).unwrap();
        let b = random_hermitian(3, 45_003).unwrap();
        let scaled =
            crate::hilbert::HermitianOperator::new(a.matrix() * c(lambda, 0.0), &cfg).unwrap();
        let base = verify_identity(&a, &b, &psi, &cfg).unwrap();
        let stretched = verify_identity(&scaled, &b, &psi, &cfg).unwrap();
        let hb = pullback_metric(&map_differential(&a, &b, &psi, &cfg).unwrap(), &cfg);
        let hs = pullback_metric(&map_differential(&scaled, &b, &psi, &cfg).unwrap(), &cfg);
        assert!((hs.entries[0][0] - lambda * lambda * hb.entries[0][0]).abs() < 1e-9);
        assert!((stretched.energy_coeff - lambda * base.energy_coeff).abs() < 1e-9);
        assert!((stretched.symplectic_coeff - lambda * base.symplectic_coeff).abs() < 1e-9);
        assert!(stretched.residual().abs() < 1e-9);
    }

    #[test]
    fn pullback_metric_equals_covariance_tensor() {
        let cfg = cfg();
        for seed in 0..100 {
            let psi = random_state(3, 50_000 + seed).unwrap();
            let a = random_hermitian(3, 51_000 + seed).unwrap();
            let b = random_hermitian(3, 52_000 + seed).unwrap();
            let d = map_differential(&a, &b, &psi, &cfg).unwrap();
            let h = pullback_metric(&d, &cfg);
            let m = covariance_tensor(&a, &b, &psi, &cfg).unwrap();
            for k in 0..2 {
                for l in 0..2 {
                    assert!(
                        (h.entries[k][l] - m.entries[k][l]).abs() < 1e-12,
                        "entry ({k},{l}): {} vs {}",
                        h.entries[k][l],
                        m.entries[k][l]
                    );
                }
            }
            assert!(h.base.coincides_with(&m.base, &cfg));
        }
    }

    #[test]
    fn symplectic_density_matches_determinant_sum_oracle() {
        // oracle: in scaled real coordinates the symplectic density is the
        // sum over component planes of det [[v_re, w_re], [v_im, w_im]]
        for (seed, hbar) in [(1u64, 1.0), (2, 0.5), (3, 2.0)] {
            let conf = Config::with_hbar(hbar).unwrap();
            let psi = random_state(5, 60_000 + seed).unwrap();
            let a = random_hermitian(5, 61_000 + seed).unwrap();
            let b = random_hermitian(5, 62_000 + seed).unwrap();
            let d = map_differential(&a, &b, &psi, &conf).unwrap();
            let vs = symplectic_coords(d.d_s().vector(), hbar);
            let ws = symplectic_coords(d.d_t().vector(), hbar);
            let mut oracle = 0.0;
            for k in (0..vs.len()).step_by(2) {
                oracle += vs[k] * ws[k + 1] - vs[k + 1] * ws[k];
            }
            let got = symplectic_form_coeff(&d, &conf);
            assert!((got - oracle).abs() < 1e-10, "got {got}, oracle {oracle}");
        }
    }

    #[test]
    fn energy_density_matches_real_coordinate_contraction() {
        // oracle: contract h^{kl} against the Gram matrix formed in real
        // coordinates, where the ambient metric is 2 hbar times the dot
        // product of interleaved components
        let conf = Config::with_hbar(0.7).unwrap();
        let psi = random_state(4, 70_001).unwrap();
        let a = random_hermitian(4, 70_002).unwrap();
        let b = random_hermitian(4, 70_003).unwrap();
        let d = map_differential(&a, &b, &psi, &conf).unwrap();
        let h = metric_entries(&d, &conf);
        let det = h[0][0] * h[1][1] - h[0][1] * h[0][1];
        let real_dot = |x: &CVector, y: &CVector| {
            let mut acc = 0.0;
            for k in 0..x.len() {
                acc += x[k].re * y[k].re + x[k].im * y[k].im;
            }
            2.0 * conf.hbar * acc
        };
        let g = [
            [
                real_dot(d.d_s().vector(), d.d_s().vector()),
                real_dot(d.d_s().vector(), d.d_t().vector()),
            ],
            [
                real_dot(d.d_t().vector(), d.d_s().vector()),
                real_dot(d.d_t().vector(), d.d_t().vector()),
            ],
        ];
        let oracle = 0.5 * (h[1][1] * g[0][0] - 2.0 * h[0][1] * g[0][1] + h[0][0] * g[1][1]) / det;
        let got = energy_density(&d, &conf).unwrap().unwrap();
        assert!((got - oracle).abs() < 1e-12);
        assert!((got - 1.0).abs() < 1e-12);
    }

    #[test]
    fn area_density_matches_moment_determinant() {
        // sqrt(det h) should equal (2/hbar) sqrt(dA^2 dB^2 - C^2)
        let conf = Config::with_hbar(0.5).unwrap();
        let psi = random_state(3, 80_001).unwrap();
        let a = random_hermitian(3, 80_002).unwrap();
        let b = random_hermitian(3, 80_003).unwrap();
        let d = map_differential(&a, &b, &psi, &conf).unwrap();
        let m = covariance_tensor(&a, &b, &psi, &conf).unwrap();
        let got = energy_form_coeff(&d, &conf).unwrap();
        assert!((got - m.det().max(0.0).sqrt()).abs() < 1e-11);
    }

    #[test]
    fn holomorphic_pairs_zero_every_residual() {
        let cfg = cfg();
        for seed in 0..20 {
            let psi = random_state(3, 90_000 + seed).unwrap();
            let a = random_hermitian(3, 91_000 + seed).unwrap();
            let mean = expectation(&a, &psi).unwrap();
            let phi: CVector =
                (a.apply(&psi).unwrap() - psi.components() * c(mean, 0.0)) * c(0.0, 1.0);
            let outer = &phi * psi.components().adjoint() + psi.components() * phi.adjoint();
            let b = crate::hilbert::HermitianOperator::new(outer, &cfg).unwrap();
            let d = map_differential(&a, &b, &psi, &cfg).unwrap();
            let scale = d.d_s().norm() + d.d_t().norm();
            assert!(cauchy_riemann_residual(&d) <= 1e-12 * scale.max(1.0));
            let part = antiholomorphic_part(&d, &cfg).unwrap();
            assert!(part.norm_sq <= 1e-10);
            assert!(part.components.norm() <= 1e-10 * scale.max(1.0));
            let report = identity_report(&d, &cfg).unwrap();
            assert!((report.energy_coeff - report.symplectic_coeff).abs() <= 1e-10);
        }
    }

    #[test]
    fn mismatched_bases_are_rejected() {
        let cfg = cfg();
        let up = StateVector::basis(2, 0).unwrap();
        let down = StateVector::basis(2, 1).unwrap();
        let p_up = project(up.components()).unwrap();
        let t_up = pushforward_field(&pauli_x(), &p_up, &cfg).unwrap();
        let p_down = project(down.components()).unwrap();
        let t_down = pushforward_field(&pauli_x(), &p_down, &cfg).unwrap();
        assert!(matches!(
            MapDifferential::new(p_up, t_up, t_down, &cfg),
            Err(GqmError::BaseMismatch)
        ));
    }
}
