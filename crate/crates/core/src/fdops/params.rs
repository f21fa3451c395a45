use serde::{Deserialize, Serialize};

use crate::error::{PlateError, Result};

/// Coefficients of the generalized Kirchhoff-Love plate
/// `rho_h w_tt = -k0 w + tension lap w - d bih w - k1 w_t + t1 lap w_t + F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateParams {
    pub rho_h: f64,
    #[serde(default)]
    pub k0: f64,
    #[serde(default)]
    pub tension: f64,
    #[serde(default)]
    pub d: f64,
    #[serde(default)]
    pub k1: f64,
    #[serde(default)]
    pub t1: f64,
    #[serde(default)]
    pub nu: f64,
}

impl PlateParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.rho_h, self.k0, self.tension, self.d, self.k1, self.t1, self.nu].iter().all(|v| v.is_finite());
        if !finite {
            return Err(PlateError::Config("plate parameters must be finite".into()));
        }
        if self.rho_h <= 0.0 {
            return Err(PlateError::Config(format!("rho_h must be positive, got {}", self.rho_h)));
        }
        for (name, v) in [("k0", self.k0), ("tension", self.tension), ("d", self.d), ("k1", self.k1), ("t1", self.t1)] {
            if v < 0.0 {
                return Err(PlateError::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(0.0..0.5).contains(&self.nu) {
            return Err(PlateError::Config(format!("nu must lie in [0, 0.5), got {}", self.nu)));
        }
        Ok(())
    }

    /// Bending plate from material data. Rigidity is `E h^3 / (12 (1 - nu^2))`.
    pub fn from_material(youngs: f64, thickness: f64, density: f64, nu: f64) -> Self {
        PlateParams { rho_h: density * thickness, k0: 0.0, tension: 0.0, d: flexural_rigidity(youngs, thickness, nu), k1: 0.0, t1: 0.0, nu }
    }

    /// Pure bending plate (`k0 = tension = k1 = t1 = 0`).
    pub fn bending(rho_h: f64, d: f64, nu: f64) -> Self {
        PlateParams { rho_h, k0: 0.0, tension: 0.0, d, k1: 0.0, t1: 0.0, nu }
    }

    pub fn is_damped(&self) -> bool {
        self.k1 > 0.0 || self.t1 > 0.0
    }

    pub fn undamped(&self) -> Self {
        PlateParams { k1: 0.0, t1: 0.0, ..*self }
    }
}

pub fn flexural_rigidity(youngs: f64, thickness: f64, nu: f64) -> f64 {
    youngs * thickness.powi(3) / (12.0 * (1.0 - nu * nu))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chladni_material() {
        let p = PlateParams::from_material(69e9, 1e-3, 2700.0, 0.33);
        assert!((p.rho_h - 2.7).abs() < 1e-12);
        assert!((p.d - 6.4527).abs() < 5e-5, "D = {}", p.d);
    }

    #[test]
    fn validation() {
        let mut p = PlateParams { rho_h: 1.0, k0: 0.0, tension: 0.0, d: 1.0, k1: 0.0, t1: 0.0, nu: 0.3 };
        assert!(p.validate().is_ok());
        p.nu = 0.5;
        assert!(p.validate().is_err());
        p.nu = 0.3;
        p.rho_h = 0.0;
        assert!(p.validate().is_err());
    }
}
