//! PC22 amplification, the super-ellipse stability region, worst-case
//! Fourier symbols and the time-step rule.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PlateError, Result};
use crate::fdops::PlateParams;
use crate::mesh::{min_physical_spacing, Mesh, MeshKind};

pub const CSF_PC22: f64 = 0.9;
pub const CSF_NB2: f64 = 90.0;

/// Half super-ellipse `|Re z/a|^n + |Im z/b|^n <= 1, Re z <= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperEllipse {
    pub a: f64,
    pub b: f64,
    pub n: f64,
}

impl Default for SuperEllipse {
    fn default() -> Self {
        SuperEllipse { a: 1.75, b: 1.2, n: 1.5 }
    }
}

impl SuperEllipse {
    /// Point on the boundary at parameter `s` in [0, pi]: s=0 -> +ib,
    /// s=pi/2 -> -a, s=pi -> -ib.
    pub fn boundary_point(&self, s: f64) -> Complex64 {
        let (c, sn) = (s.sin(), s.cos());
        let e = 2.0 / self.n;
        Complex64::new(-self.a * c.abs().powf(e), self.b * sn.signum() * sn.abs().powf(e))
    }

    /// The super-ellipse norm `(|Re z/a|^n + |Im z/b|^n)^(1/n)`.
    pub fn norm(&self, z: Complex64) -> f64 {
        ((z.re / self.a).abs().powf(self.n) + (z.im / self.b).abs().powf(self.n)).powf(1.0 / self.n)
    }
}

/// Both roots of `zeta^2 - (1 + z + 3/4 z^2) zeta + z^2/4 = 0`.
pub fn pc22_roots(z: Complex64) -> (Complex64, Complex64) {
    let p = 1.0 + z + 0.75 * z * z;
    let s = (p * p - z * z).sqrt();
    (0.5 * (p + s), 0.5 * (p - s))
}

/// Largest root modulus of the PC22 characteristic polynomial.
pub fn pc22_amplification(z: Complex64) -> f64 {
    let (a, b) = pc22_roots(z);
    a.norm().max(b.norm())
}

pub fn in_region(z: Complex64, e: &SuperEllipse) -> bool {
    z.re <= 0.0 && (z.re / e.a).abs().powf(e.n) + (z.im / e.b).abs().powf(e.n) <= 1.0
}

/// Extent `y*` of the PC22 stability region along the imaginary axis,
/// located by bisection of `|zeta(iy)| = 1` on `[1, 2]`.
pub fn imaginary_axis_extent() -> f64 {
    let g = |y: f64| pc22_amplification(Complex64::new(0.0, y)) - 1.0;
    let (mut lo, mut hi) = (1.0, 2.0);
    debug_assert!(g(lo) < 0.0 && g(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    UnderDamped,
    OverDamped,
    Critical,
}

/// Maxima of the scaled operator symbols and the resulting worst-case
/// eigenvalue of the semi-discrete first-order system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolBounds {
    pub k_hat_max: f64,
    pub b_hat_max: f64,
    pub lambda_max: Complex64,
    pub regime: Regime,
}

pub fn fourier_symbol_max(p: &PlateParams, h1: f64, h2: f64) -> SymbolBounds {
    let s = 1.0 / (h1 * h1) + 1.0 / (h2 * h2);
    let k = (p.k0 + 4.0 * p.tension * s + 16.0 * p.d * s * s) / p.rho_h;
    let b = (p.k1 + 4.0 * p.t1 * s) / p.rho_h;
    let disc = 0.25 * b * b - k;
    let (lambda, regime) = if disc < 0.0 {
        (Complex64::new(-0.5 * b, (-disc).sqrt()), Regime::UnderDamped)
    } else if disc == 0.0 {
        (Complex64::new(-b, 0.0), Regime::Critical)
    } else {
        (Complex64::new(-b, 0.0), Regime::OverDamped)
    };
    SymbolBounds { k_hat_max: k, b_hat_max: b, lambda_max: lambda, regime }
}

/// Symbol bounds using the spacings the time-step rule uses on `m`.
pub fn mesh_symbol_max(p: &PlateParams, m: &Mesh) -> SymbolBounds {
    match m.kind {
        MeshKind::Rectangle { .. } => fourier_symbol_max(p, m.h1, m.h2),
        MeshKind::Annulus { .. } => {
            let h = min_physical_spacing(m);
            fourier_symbol_max(p, h, h)
        }
    }
}

/// `dt = csf / ||lambda||_e`, the largest step keeping `dt lambda` inside
/// the super-ellipse when `csf = 1`.
pub fn dt_for_lambda(lambda: Complex64, e: &SuperEllipse, csf: f64) -> Result<f64> {
    if !(csf > 0.0) {
        return Err(PlateError::Config(format!("stability factor must be positive, got {csf}")));
    }
    let nrm = e.norm(lambda);
    if nrm == 0.0 {
        return Err(PlateError::NoDynamics);
    }
    Ok(csf / nrm)
}

pub fn stable_dt(p: &PlateParams, m: &Mesh, csf: f64) -> Result<f64> {
    dt_for_lambda(mesh_symbol_max(p, m).lambda_max, &SuperEllipse::default(), csf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_rectangle;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn amplification_examples() {
        assert!((pc22_amplification(c(0.0, 0.0)) - 1.0).abs() < 1e-15);
        assert!(pc22_amplification(c(0.1, 0.0)) > 1.0);
        assert!(pc22_amplification(c(-1.75, 0.0)) <= 1.0);
    }

    #[test]
    fn region_examples() {
        let e = SuperEllipse::default();
        assert!(in_region(c(0.0, 0.0), &e));
        assert!(in_region(c(0.0, 1.2), &e));
        assert!(!in_region(c(-2.0, 0.0), &e));
        assert!(!in_region(c(0.1, 0.0), &e));
    }

    #[test]
    fn symbol_examples() {
        let p = PlateParams { rho_h: 1.0, k0: 0.0, tension: 0.0, d: 1.0, k1: 0.0, t1: 0.0, nu: 0.0 };
        let s = fourier_symbol_max(&p, 1.0, 1.0);
        assert_eq!(s.k_hat_max, 64.0);
        assert_eq!(s.b_hat_max, 0.0);
        assert_eq!(s.lambda_max, c(0.0, 8.0));
        assert_eq!(s.regime, Regime::UnderDamped);

        let q = PlateParams { rho_h: 2.0, k0: 0.0, tension: 0.0, d: 0.0, k1: 1e6, t1: 0.0, nu: 0.0 };
        let s = fourier_symbol_max(&q, 0.1, 0.1);
        assert_eq!(s.regime, Regime::OverDamped);
        assert_eq!(s.lambda_max, c(-5e5, 0.0));
    }

    #[test]
    fn dt_examples() {
        let m = build_rectangle(0.0, 1.0, 0.0, 1.0, 11, 11).unwrap();
        let p = PlateParams { rho_h: 1.0, k0: 0.0, tension: 0.0, d: 1.0, k1: 0.0, t1: 0.0, nu: 0.0 };
        let k = fourier_symbol_max(&p, 0.1, 0.1).k_hat_max;
        let dt = stable_dt(&p, &m, 0.9).unwrap();
        assert!((dt - 0.9 * 1.2 / k.sqrt()).abs() < 1e-15 * dt.max(1.0));

        let q = PlateParams { rho_h: 1.0, k0: 0.0, tension: 0.0, d: 0.0, k1: 4.0, t1: 0.0, nu: 0.0 };
        let dt = stable_dt(&q, &m, 0.9).unwrap();
        assert!((dt - 0.9 * 1.75 / 4.0).abs() < 1e-15);

        let z = PlateParams { rho_h: 1.0, k0: 0.0, tension: 0.0, d: 0.0, k1: 0.0, t1: 0.0, nu: 0.0 };
        assert!(matches!(stable_dt(&z, &m, 0.9), Err(PlateError::NoDynamics)));
    }

    #[test]
    fn refinement_quarters_bending_dt() {
        let p = PlateParams { rho_h: 2.7, k0: 0.0, tension: 0.0, d: 6.4527, k1: 0.0, t1: 0.0, nu: 0.3 };
        let a = build_rectangle(0.0, 1.0, 0.0, 1.0, 41, 41).unwrap();
        let b = build_rectangle(0.0, 1.0, 0.0, 1.0, 81, 81).unwrap();
        let r = stable_dt(&p, &b, 0.9).unwrap() / stable_dt(&p, &a, 0.9).unwrap();
        assert!((r - 0.25).abs() < 1e-12);
    }

    #[test]
    fn boundary_parametrisation_lies_on_curve() {
        let e = SuperEllipse::default();
        for k in 0..=100 {
            let z = e.boundary_point(std::f64::consts::PI * k as f64 / 100.0);
            assert!((e.norm(z) - 1.0).abs() < 1e-12);
            assert!(z.re <= 0.0);
        }
    }
}
