use serde::{Deserialize, Serialize};

use crate::error::{GqmError, Result};

/// Shared numerical context: the value of hbar and the tolerances used for
/// equality checks and positive-semidefiniteness tests.
///
/// Every geometric quantity in the crate carries an explicit hbar scaling
/// (metric and symplectic form scale like 2*hbar, Hamiltonian fields like
/// 1/hbar), so changing `hbar` here rescales all downstream results
/// consistently. The default is hbar = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    /// Planck's constant over 2 pi, in whatever units the operators use.
    pub hbar: f64,
    /// Tolerance for equality of real/complex scalars and vectors.
    pub tol_eq: f64,
    /// Tolerance below which a determinant counts as degenerate rather than
    /// negative-definite.
    pub tol_psd: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            hbar: 1.0,
            tol_eq: 1e-10,
            tol_psd: 1e-12,
        }
    }
}

impl Config {
    /// Config with a non-default hbar and default tolerances.
    pub fn with_hbar(hbar: f64) -> Result<Self> {
        let cfg = Config {
            hbar,
            ..Config::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Rejects non-positive hbar and non-positive or non-finite tolerances.
    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0) || !self.hbar.is_finite() {
            return Err(GqmError::InvalidParameter(format!(
                "hbar must be positive and finite, got {}",
                self.hbar
            )));
        }
        if !(self.tol_eq > 0.0) || !self.tol_eq.is_finite() {
            return Err(GqmError::InvalidParameter(format!(
                "tol_eq must be positive and finite, got {}",
                self.tol_eq
            )));
        }
        if !(self.tol_psd > 0.0) || !self.tol_psd.is_finite() {
            return Err(GqmError::InvalidParameter(format!(
                "tol_psd must be positive and finite, got {}",
                self.tol_psd
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_hbar_one() {
        let cfg = Config::default();
        assert_eq!(cfg.hbar, 1.0);
        assert_eq!(cfg.tol_eq, 1e-10);
        assert_eq!(cfg.tol_psd, 1e-12);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_hbar() {
        assert!(Config::with_hbar(0.0).is_err());
        assert!(Config::with_hbar(-1.0).is_err());
        assert!(Config::with_hbar(f64::NAN).is_err());
        assert!(Config::with_hbar(0.5).is_ok());
    }
}
