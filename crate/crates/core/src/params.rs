//! Model parameters and physical constants.
//!
//! The model is controlled by an action scale `h` and per-coordinate
//! diffusion intensities `a_i` (position) and `b_i` (momentum).  Every
//! Gaussian width in the toolkit derives from these three numbers; the
//! position-smoothing variance is `sigma_i^2 = h a_i / (4 pi b_i)` and the
//! momentum-smoothing variance is `h b_i / (4 pi a_i)`.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Action scale (dimensionless in natural units, erg*s in physical runs).
    pub h: f64,
    /// Position diffusion intensity per coordinate, length n.
    pub a: Vec<f64>,
    /// Momentum diffusion intensity per coordinate, length n.
    pub b: Vec<f64>,
}

impl ModelParams {
    pub fn new(h: f64, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "h".into(),
                reason: format!("must be positive and finite, got {h}"),
            });
        }
        if a.is_empty() || a.len() != b.len() {
            return Err(ModelError::InvalidParameter {
                name: "a, b".into(),
                reason: format!(
                    "intensity vectors must be nonempty and equal length, got {} and {}",
                    a.len(),
                    b.len()
                ),
            });
        }
        for (name, v) in [("a", &a), ("b", &b)] {
            if let Some(bad) = v.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
                return Err(ModelError::InvalidParameter {
                    name: name.into(),
                    reason: format!("every component must be positive and finite, got {bad}"),
                });
            }
        }
        Ok(Self { h, a, b })
    }

    /// Same intensity on every one of `n` coordinates.
    pub fn isotropic(h: f64, a: f64, b: f64, n: usize) -> Result<Self> {
        Self::new(h, vec![a; n], vec![b; n])
    }

    /// The natural-unit default: h = 1, a = b = 1, one coordinate.
    pub fn unit() -> Self {
        Self { h: 1.0, a: vec![1.0], b: vec![1.0] }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// Position-smoothing variance `h a_i / (4 pi b_i)` for coordinate i.
    pub fn sigma_q_sq(&self, i: usize) -> f64 {
        self.h * self.a[i] / (4.0 * std::f64::consts::PI * self.b[i])
    }

    /// Momentum-smoothing variance `h b_i / (4 pi a_i)` for coordinate i.
    pub fn sigma_p_sq(&self, i: usize) -> f64 {
        self.h * self.b[i] / (4.0 * std::f64::consts::PI * self.a[i])
    }

    /// Common ratio a/b when the intensities are isotropic across
    /// coordinates; anything else is rejected (the radial closed forms
    /// require a single smoothing width).
    pub fn isotropic_ratio(&self) -> Result<f64> {
        let r0 = self.a[0] / self.b[0];
        for i in 1..self.dim() {
            let ri = self.a[i] / self.b[i];
            if (ri - r0).abs() > 1e-12 * r0.abs() {
                return Err(ModelError::Anisotropic {
                    reason: format!("a_i/b_i differs across coordinates: {r0} vs {ri}"),
                });
            }
        }
        Ok(r0)
    }

    /// Requires a single coordinate; the grid-based operations are 1D.
    pub fn require_1d(&self) -> Result<()> {
        if self.dim() != 1 {
            return Err(ModelError::InvalidParameter {
                name: "n".into(),
                reason: format!("grid operations support one coordinate, got n = {}", self.dim()),
            });
        }
        Ok(())
    }
}

/// CGS constants used by the hydrogen-level calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Electron charge, esu.
    pub electron_charge_esu: f64,
    /// Electron mass, g.
    pub electron_mass_g: f64,
    /// Reduced Planck constant, erg*s.
    pub hbar_erg_s: f64,
    /// Fine-structure constant.
    pub alpha: f64,
    /// Speed of light, cm/s.
    pub c_cm_s: f64,
}

impl PhysicalConstants {
    /// Snapshot with alpha = 1/137, kept for reproduction runs.
    pub fn cgs_snapshot() -> Self {
        Self {
            electron_charge_esu: 4.80320e-10,
            electron_mass_g: 9.10938e-28,
            hbar_erg_s: 1.05457e-27,
            alpha: 1.0 / 137.0,
            c_cm_s: 2.99792e10,
        }
    }

    /// Same snapshot with the modern fine-structure constant.
    pub fn with_modern_alpha() -> Self {
        Self { alpha: 1.0 / 137.035999, ..Self::cgs_snapshot() }
    }

    /// Internal consistency: alpha must equal e^2/(hbar c) to 1e-3 relative.
    pub fn validate(&self) -> Result<()> {
        let from_charge =
            self.electron_charge_esu.powi(2) / (self.hbar_erg_s * self.c_cm_s);
        let rel = (from_charge - self.alpha).abs() / self.alpha;
        if rel > 1e-3 {
            return Err(ModelError::InvalidParameter {
                name: "alpha".into(),
                reason: format!(
                    "e^2/(hbar c) = {from_charge:.6e} disagrees with alpha = {:.6e} (rel {rel:.2e})",
                    self.alpha
                ),
            });
        }
        Ok(())
    }

    /// Bohr radius hbar^2/(m e^2), cm.
    pub fn bohr_radius_cm(&self) -> f64 {
        self.hbar_erg_s.powi(2)
            / (self.electron_mass_g * self.electron_charge_esu.powi(2))
    }

    /// Unreduced Planck constant 2 pi hbar, erg*s.
    pub fn planck_h(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.hbar_erg_s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_parameters() {
        assert!(ModelParams::isotropic(0.0, 1.0, 1.0, 1).is_err());
        assert!(ModelParams::isotropic(1.0, -1.0, 1.0, 1).is_err());
        assert!(ModelParams::isotropic(1.0, 1.0, f64::NAN, 1).is_err());
        assert!(ModelParams::new(1.0, vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(ModelParams::new(1.0, vec![], vec![]).is_err());
    }

    #[test]
    fn smoothing_variances() {
        let p = ModelParams::isotropic(2.0, 3.0, 5.0, 2).unwrap();
        let pi = std::f64::consts::PI;
        assert!((p.sigma_q_sq(0) - 2.0 * 3.0 / (4.0 * pi * 5.0)).abs() < 1e-15);
        assert!((p.sigma_p_sq(1) - 2.0 * 5.0 / (4.0 * pi * 3.0)).abs() < 1e-15);
        assert!(p.sigma_q_sq(0) > 0.0);
    }

    #[test]
    fn isotropy_check() {
        let p = ModelParams::new(1.0, vec![2.0, 4.0], vec![1.0, 2.0]).unwrap();
        assert!((p.isotropic_ratio().unwrap() - 2.0).abs() < 1e-14);
        let q = ModelParams::new(1.0, vec![2.0, 4.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(q.isotropic_ratio(), Err(ModelError::Anisotropic { .. })));
    }

    #[test]
    fn constants_snapshot_is_consistent() {
        PhysicalConstants::cgs_snapshot().validate().unwrap();
        PhysicalConstants::with_modern_alpha().validate().unwrap();
        let c = PhysicalConstants::cgs_snapshot();
        // Bohr radius near 5.29e-9 cm.
        assert!((c.bohr_radius_cm() - 5.29e-9).abs() < 0.02e-9);
    }
}
