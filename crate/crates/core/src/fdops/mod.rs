//! Centered second-order difference operators, boundary closures and
//! sparse assembly.
//!
//! `K_h = k0 - tension lap_h + d lap_h lap_h`, `B_h = k1 - t1 lap_h`.

pub mod assemble;
pub mod boundary;
pub mod field;
pub mod forcing;
pub mod params;

pub use assemble::{assemble, Assembled};
pub use boundary::{fill_ghosts, BcKind, BoundarySpec, Closure, DataFn, DataOrder, SideSpec};
pub use field::Field;
pub use forcing::{ForcingSpec, Waveform};
pub use params::{flexural_rigidity, PlateParams};

use crate::mesh::Mesh;

/// Laplacian coefficients for every storage line `i1 = -2 .. n1+1`.
pub(crate) fn coeff_table(m: &Mesh) -> Vec<[f64; 5]> {
    (-2..m.n1 as isize + 2).map(|i1| m.laplacian_coeffs(i1)).collect()
}

/// `dst = lap src` on the index box `[a1, b1) x [a2, b2)`.
#[allow(clippy::too_many_arguments)]
fn lap_box(m: &Mesh, coef: &[[f64; 5]], src: &[f64], dst: &mut [f64], a1: isize, b1: isize, a2: isize, b2: isize) {
    let s = m.stride();
    for i2 in a2..b2 {
        let row = ((i2 + 2) as usize) * s;
        for i1 in a1..b1 {
            let k = row + (i1 + 2) as usize;
            let c = &coef[(i1 + 2) as usize];
            dst[k] = c[0] * src[k - 1] + c[1] * src[k + 1] + c[2] * src[k - s] + c[3] * src[k + s] + c[4] * src[k];
        }
    }
}

/// Laplacian on the physical points plus the first ghost ring.
fn lap_ring1(m: &Mesh, coef: &[[f64; 5]], src: &[f64], dst: &mut [f64]) {
    let (n1, n2) = (m.n1 as isize, m.n2 as isize);
    if m.periodic2 {
        lap_box(m, coef, src, dst, -1, n1 + 1, 0, n2);
        m.wrap_fill(dst);
    } else {
        lap_box(m, coef, src, dst, -1, n1 + 1, -1, n2 + 1);
    }
}

fn lap_physical(m: &Mesh, coef: &[[f64; 5]], src: &[f64], dst: &mut [f64]) {
    lap_box(m, coef, src, dst, 0, m.n1 as isize, 0, m.n2 as isize);
}

/// Discrete Laplacian. Requires ghost layer 1; the result is defined on the
/// physical points and ghost layer 1, and is zero elsewhere.
pub fn laplacian(m: &Mesh, f: &Field) -> Field {
    let coef = coeff_table(m);
    let mut out = Field::zeros(m);
    out.time = f.time;
    lap_ring1(m, &coef, &f.values, &mut out.values);
    out
}

/// Composed biharmonic `lap_h lap_h` at physical points. Requires both
/// ghost layers.
pub fn biharmonic(m: &Mesh, f: &Field) -> Field {
    let coef = coeff_table(m);
    let mut l = vec![0.0; m.storage_len()];
    lap_ring1(m, &coef, &f.values, &mut l);
    let mut out = Field::zeros(m);
    out.time = f.time;
    lap_physical(m, &coef, &l, &mut out.values);
    out
}

/// `K_h w` at physical points.
pub fn apply_k(p: &PlateParams, m: &Mesh, w: &Field) -> Field {
    let mut k = Kernel::new(p, m);
    let mut out = Field::zeros(m);
    out.time = w.time;
    k.k_into(&w.values, &mut out.values);
    out
}

/// `B_h v` at physical points.
pub fn apply_b(p: &PlateParams, m: &Mesh, v: &Field) -> Field {
    let mut k = Kernel::new(p, m);
    let mut out = Field::zeros(m);
    out.time = v.time;
    k.b_into(&v.values, &mut out.values);
    out
}

/// Reusable scratch for repeated operator application.
pub(crate) struct Kernel {
    mesh: Mesh,
    p: PlateParams,
    coef: Vec<[f64; 5]>,
    lap: Vec<f64>,
    lap2: Vec<f64>,
}

impl Kernel {
    pub fn new(p: &PlateParams, m: &Mesh) -> Self {
        Kernel { mesh: *m, p: *p, coef: coeff_table(m), lap: vec![0.0; m.storage_len()], lap2: vec![0.0; m.storage_len()] }
    }

    pub fn k_into(&mut self, w: &[f64], out: &mut [f64]) {
        let m = self.mesh;
        let p = self.p;
        if p.d != 0.0 {
            lap_ring1(&m, &self.coef, w, &mut self.lap);
            lap_physical(&m, &self.coef, &self.lap, &mut self.lap2);
        } else {
            lap_physical(&m, &self.coef, w, &mut self.lap);
        }
        for_physical(&m, |k| {
            out[k] = p.k0 * w[k] - p.tension * self.lap[k] + p.d * self.lap2[k];
        });
    }

    pub fn b_into(&mut self, v: &[f64], out: &mut [f64]) {
        let m = self.mesh;
        let p = self.p;
        if p.t1 != 0.0 {
            lap_physical(&m, &self.coef, v, &mut self.lap);
        }
        for_physical(&m, |k| {
            let l = if p.t1 != 0.0 { self.lap[k] } else { 0.0 };
            out[k] = p.k1 * v[k] - p.t1 * l;
        });
    }

    /// `out = (F - K w - B v) / rho_h` at physical points; `f` may be None.
    pub fn accel_into(&mut self, w: &[f64], v: &[f64], f: Option<&[f64]>, out: &mut [f64]) {
        let m = self.mesh;
        let p = self.p;
        if p.d != 0.0 {
            lap_ring1(&m, &self.coef, w, &mut self.lap);
            lap_physical(&m, &self.coef, &self.lap, &mut self.lap2);
        } else {
            lap_physical(&m, &self.coef, w, &mut self.lap);
        }
        // K part first so the damping Laplacian can reuse `lap`
        let inv = 1.0 / p.rho_h;
        for_physical(&m, |k| {
            let kw = p.k0 * w[k] - p.tension * self.lap[k] + p.d * self.lap2[k];
            out[k] = -kw;
        });
        if p.t1 != 0.0 {
            lap_physical(&m, &self.coef, v, &mut self.lap);
        }
        for_physical(&m, |k| {
            let l = if p.t1 != 0.0 { self.lap[k] } else { 0.0 };
            let fk = f.map_or(0.0, |f| f[k]);
            out[k] = (out[k] - (p.k1 * v[k] - p.t1 * l) + fk) * inv;
        });
    }
}

/// Visit the storage index of every physical point.
#[inline]
pub(crate) fn for_physical(m: &Mesh, mut f: impl FnMut(usize)) {
    let s = m.stride();
    for i2 in 0..m.n2 {
        let row = (i2 + 2) * s + 2;
        for i1 in 0..m.n1 {
            f(row + i1);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_annulus, build_rectangle};
    use std::f64::consts::PI;

    fn bending(d: f64) -> PlateParams {
        PlateParams { rho_h: 1.0, k0: 0.0, tension: 0.0, d, k1: 0.0, t1: 0.0, nu: 0.3 }
    }

    #[test]
    fn laplacian_of_quadratic_and_constant() {
        let m = build_rectangle(0.0, 1.0, 0.0, 1.0, 11, 11).unwrap();
        let f = Field::from_fn(&m, |x, y| x * x + y * y);
        let l = laplacian(&m, &f);
        let c = laplacian(&m, &Field::from_fn(&m, |_, _| 3.0));
        for i2 in 0..11 {
            for i1 in 0..11 {
                assert!((l.get(i1, i2) - 4.0).abs() < 1e-10);
                assert!(c.get(i1, i2).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn laplacian_symbol_on_sine() {
        // sin(2 pi x) sampled on a uniform grid is an eigenvector of the 3-point stencil
        let m = build_rectangle(0.0, 1.0, 0.0, 1.0, 41, 41).unwrap();
        let h = m.h1;
        let f = Field::from_fn(&m, |x, _| (2.0 * PI * x).sin());
        let l = laplacian(&m, &f);
        let sym = -(2.0 * (PI * h).sin() / h).powi(2);
        for i2 in 0..41 {
            for i1 in 0..41 {
                assert!((l.get(i1, i2) - sym * f.get(i1, i2)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn biharmonic_monomials_and_symbol() {
        let m = build_rectangle(0.0, 1.0, 0.0, 1.0, 21, 21).unwrap();
        let q = biharmonic(&m, &Field::from_fn(&m, |x, y| x * x + y * y));
        let x4 = biharmonic(&m, &Field::from_fn(&m, |x, _| x.powi(4)));
        for i2 in 0..21 {
            for i1 in 0..21 {
                assert!(q.get(i1, i2).abs() < 1e-7);
                assert!((x4.get(i1, i2) - 24.0).abs() < 1e-6, "{}", x4.get(i1, i2));
            }
        }
        let f = Field::from_fn(&m, |x, y| (2.0 * PI * x).sin() * (2.0 * PI * y).sin());
        let b = biharmonic(&m, &f);
        let k = |h: f64| (2.0 * (PI * h).sin() / h).powi(2);
        let sym = (k(m.h1) + k(m.h2)).powi(2);
        for i2 in 0..21 {
            for i1 in 0..21 {
                assert!((b.get(i1, i2) - sym * f.get(i1, i2)).abs() < 1e-7 * sym);
            }
        }
    }

    #[test]
    fn k_and_b_trivial_cases() {
        let m = build_rectangle(0.0, 1.0, 0.0, 1.0, 11, 11).unwrap();
        let f = Field::from_fn(&m, |x, y| x * x + y * y);
        let p0 = PlateParams { rho_h: 1.0, k0: 2.5, tension: 0.0, d: 0.0, k1: 1.0, t1: 0.0, nu: 0.0 };
        let kw = apply_k(&p0, &m, &f);
        let bv = apply_b(&p0, &m, &f);
        let p1 = PlateParams { k1: 0.0, t1: 0.1, ..p0 };
        let bt = apply_b(&p1, &m, &f);
        let kq = apply_k(&bending(1.0), &m, &f);
        for i2 in 0..11 {
            for i1 in 0..11 {
                let v = f.get(i1, i2);
                assert_eq!(kw.get(i1, i2), 2.5 * v);
                assert_eq!(bv.get(i1, i2), v);
                assert!((bt.get(i1, i2) + 0.4).abs() < 1e-10);
                assert!(kq.get(i1, i2).abs() < 1e-7);
            }
        }
        let p2 = PlateParams { k1: 0.0, t1: 0.0, ..p0 };
        assert!(apply_b(&p2, &m, &f).max_abs() == 0.0);
    }

    #[test]
    fn polar_laplacian_is_second_order() {
        // lap of r^2 cos(2 th)=x^2-y^2 is 0; lap of r^4 is 16 r^2
        let errs: Vec<f64> = [20usize, 40]
            .iter()
            .map(|&n| {
                let m = build_annulus(0.5, 1.0, n + 1, 4 * n).unwrap();
                let f = Field::from_fn(&m, |x, y| (x * x + y * y).powi(2) + x * x * y);
                let l = laplacian(&m, &f);
                let mut e = 0.0f64;
                for i2 in 0..m.n2 as isize {
                    for i1 in 0..m.n1 as isize {
                        let (x, y) = m.coords(i1, i2);
                        e = e.max((l.get(i1, i2) - 16.0 * (x * x + y * y) - 2.0 * y).abs());
                    }
                }
                e
            })
            .collect();
        let ratio = errs[0] / errs[1];
        assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
    }
}
