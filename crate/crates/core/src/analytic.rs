//! Closed-form reference solutions: the manufactured solution and its
//! forcing and boundary data, and the simply supported rectangle series.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{PlateError, Result};
use crate::fdops::forcing::{SpaceFn, TimeFn};
use crate::fdops::{BcKind, BoundarySpec, DataFn, Field, ForcingSpec, PlateParams, SideSpec};
use crate::mesh::{Mesh, MeshKind, Side};

/// `sin^4(pi (s + 1))` and its first four derivatives.
fn quartic(s: f64) -> [f64; 5] {
    let u = PI * (s + 1.0);
    let (sn, c) = u.sin_cos();
    let (s2, c2) = (sn * sn, c * c);
    [
        s2 * s2,
        4.0 * PI * s2 * sn * c,
        4.0 * PI * PI * s2 * (3.0 * c2 - s2),
        4.0 * PI.powi(3) * (6.0 * sn * c2 * c - 10.0 * s2 * sn * c),
        4.0 * PI.powi(4) * (6.0 * c2 * c2 - 48.0 * s2 * c2 + 10.0 * s2 * s2),
    ]
}

/// Spatial factor `S(x, y) = sin^4(pi(x+1)) sin^4(pi(y+1))` of the
/// manufactured solution `w = S(x, y) cos(2 pi t)`, with the partials the
/// operators and boundary conditions need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmsPartials {
    pub w: f64,
    pub wx: f64,
    pub wy: f64,
    pub wxx: f64,
    pub wxy: f64,
    pub wyy: f64,
    pub wxxx: f64,
    pub wxxy: f64,
    pub wxyy: f64,
    pub wyyy: f64,
    pub lap: f64,
    pub bih: f64,
    pub lap_x: f64,
    pub lap_y: f64,
}

pub fn mms_spatial(x: f64, y: f64) -> MmsPartials {
    let a = quartic(x);
    let b = quartic(y);
    let lap = a[2] * b[0] + a[0] * b[2];
    MmsPartials {
        w: a[0] * b[0],
        wx: a[1] * b[0],
        wy: a[0] * b[1],
        wxx: a[2] * b[0],
        wxy: a[1] * b[1],
        wyy: a[0] * b[2],
        wxxx: a[3] * b[0],
        wxxy: a[2] * b[1],
        wxyy: a[1] * b[2],
        wyyy: a[0] * b[3],
        lap,
        bih: a[4] * b[0] + 2.0 * a[2] * b[2] + a[0] * b[4],
        lap_x: a[3] * b[0] + a[1] * b[2],
        lap_y: a[2] * b[1] + a[0] * b[3],
    }
}

fn mms_time(t: f64) -> f64 {
    (2.0 * PI * t).cos()
}

fn mms_time_rate(t: f64) -> f64 {
    -2.0 * PI * (2.0 * PI * t).sin()
}

/// Manufactured solution value.
pub fn mms_w(x: f64, y: f64, t: f64) -> f64 {
    mms_spatial(x, y).w * mms_time(t)
}

pub fn mms_wt(x: f64, y: f64, t: f64) -> f64 {
    mms_spatial(x, y).w * mms_time_rate(t)
}

/// Forcing that makes `mms_w` an exact solution of the plate equation.
pub fn mms_forcing(p: &PlateParams, x: f64, y: f64, t: f64) -> f64 {
    let s = mms_spatial(x, y);
    let (a, b) = mms_forcing_parts(p, &s);
    a * (2.0 * PI * t).cos() + b * (2.0 * PI * t).sin()
}

/// `F = A cos(2 pi t) + B sin(2 pi t)`.
fn mms_forcing_parts(p: &PlateParams, s: &MmsPartials) -> (f64, f64) {
    let w2 = 4.0 * PI * PI;
    let a = -w2 * p.rho_h * s.w + p.k0 * s.w - p.tension * s.lap + p.d * s.bih;
    let b = -2.0 * PI * p.k1 * s.w + 2.0 * PI * p.t1 * s.lap;
    (a, b)
}

/// The manufactured forcing in separable form (spatial parts sampled once).
pub fn mms_forcing_spec(p: &PlateParams) -> ForcingSpec {
    let (pa, pb) = (*p, *p);
    let sa: SpaceFn = Arc::new(move |x, y| mms_forcing_parts(&pa, &mms_spatial(x, y)).0);
    let sb: SpaceFn = Arc::new(move |x, y| mms_forcing_parts(&pb, &mms_spatial(x, y)).1);
    let ta: TimeFn = Arc::new(|t| (2.0 * PI * t).cos());
    let tb: TimeFn = Arc::new(|t| (2.0 * PI * t).sin());
    ForcingSpec::Separable(vec![(sa, ta), (sb, tb)])
}

fn normal_for(side: Side, x: f64, y: f64) -> [f64; 2] {
    match side {
        Side::Left => [-1.0, 0.0],
        Side::Right => [1.0, 0.0],
        Side::Bottom => [0.0, -1.0],
        Side::Top => [0.0, 1.0],
        Side::Inner | Side::Outer => {
            let r = x.hypot(y);
            let s = if side == Side::Inner { -1.0 } else { 1.0 };
            [s * x / r, s * y / r]
        }
    }
}

fn w_nn(s: &MmsPartials, n: [f64; 2]) -> f64 {
    n[0] * n[0] * s.wxx + 2.0 * n[0] * n[1] * s.wxy + n[1] * n[1] * s.wyy
}

fn dn_w_nn(s: &MmsPartials, n: [f64; 2]) -> f64 {
    let (a, b) = (n[0], n[1]);
    a * a * a * s.wxxx + 3.0 * a * a * b * s.wxxy + 3.0 * a * b * b * s.wxyy + b * b * b * s.wyyy
}

/// Spatial factors of the two boundary right-hand sides for `kind` on `side`.
pub fn mms_boundary_spatial(kind: BcKind, side: Side, nu: f64, x: f64, y: f64) -> (f64, f64) {
    let s = mms_spatial(x, y);
    let n = normal_for(side, x, y);
    let wnn = w_nn(&s, n);
    let moment = wnn + nu * (s.lap - wnn);
    match kind {
        BcKind::Clamped => (s.w, n[0] * s.wx + n[1] * s.wy),
        BcKind::Supported => (s.w, moment),
        BcKind::Free => {
            let dn_lap = n[0] * s.lap_x + n[1] * s.lap_y;
            (moment, (nu - 1.0) * dn_w_nn(&s, n) + (2.0 - nu) * dn_lap)
        }
    }
}

fn separable_data(f: impl Fn(f64, f64) -> f64 + Send + Sync + Clone + 'static) -> DataFn {
    let g = f.clone();
    DataFn::with_rate(move |x, y, t| f(x, y) * mms_time(t), move |x, y, t| g(x, y) * mms_time_rate(t))
}

/// Boundary specification carrying the manufactured data for `kind` on
/// every side of `m`.
pub fn mms_boundary(m: &Mesh, kind: BcKind, nu: f64) -> BoundarySpec {
    let mut spec = BoundarySpec::uniform(m, kind);
    for &side in m.sides() {
        let g0 = separable_data(move |x, y| mms_boundary_spatial(kind, side, nu, x, y).0);
        let g1 = separable_data(move |x, y| mms_boundary_spatial(kind, side, nu, x, y).1);
        spec = spec.with_side(side, SideSpec::with_data(kind, Some(g0), Some(g1)));
    }
    if matches!(m.kind, MeshKind::Rectangle { .. }) {
        spec.corner = Some(separable_data(|x, y| mms_spatial(x, y).wxy));
    }
    spec
}

/// Natural angular frequency of the supported `L x H` bending plate.
pub fn supported_omega(m: usize, n: usize, l: f64, h: f64, p: &PlateParams) -> f64 {
    let (m, n) = (m as f64, n as f64);
    PI * PI * (m * m / (l * l) + n * n / (h * h)) * (p.d / p.rho_h).sqrt()
}

/// Standing-wave solution `sin(m pi x/L) sin(n pi y/H) cos(omega t)`.
#[allow(clippy::too_many_arguments)]
pub fn standing_wave(m: usize, n: usize, x: f64, y: f64, t: f64, l: f64, h: f64, p: &PlateParams) -> f64 {
    let w = supported_omega(m, n, l, h, p);
    (m as f64 * PI * x / l).sin() * (n as f64 * PI * y / h).sin() * (w * t).cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeriesTruncation {
    pub m: usize,
    pub n: usize,
}

impl SeriesTruncation {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(PlateError::Invalid("series truncation needs M, N >= 1".into()));
        }
        Ok(SeriesTruncation { m, n })
    }
}

/// Precomputed modal series for the supported rectangle at rest, driven by
/// the uniform load `f0 sin(xi t)`.
#[derive(Debug, Clone)]
pub struct ForcedSeries {
    terms: Vec<(f64, f64, f64, f64)>,
    xi: f64,
    l: f64,
    h: f64,
}

impl ForcedSeries {
    pub fn new(f0: f64, xi: f64, trunc: SeriesTruncation, l: f64, h: f64, p: &PlateParams) -> Result<Self> {
        let mut terms = Vec::new();
        for m in 1..=trunc.m {
            for n in 1..=trunc.n {
                let w = supported_omega(m, n, l, h, p);
                if (xi - w).abs() <= 1e-12 * w {
                    return Err(PlateError::Resonant { m, n });
                }
                let fm = 1.0 - (m as f64 * PI).cos();
                let fnn = 1.0 - (n as f64 * PI).cos();
                let amp = 2.0 * f0 * fm * fnn / (p.rho_h * (m * n) as f64 * PI * PI * w);
                if m % 2 == 1 && n % 2 == 1 {
                    terms.push((m as f64, n as f64, amp, w));
                }
            }
        }
        Ok(ForcedSeries { terms, xi, l, h })
    }

    pub fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        let xi = self.xi;
        let sx = (xi * t).sin();
        self.terms
            .iter()
            .map(|&(m, n, amp, w)| {
                let sw = (w * t).sin();
                let tmn = amp * ((sx + sw) / (xi + w) - (sx - sw) / (xi - w));
                (m * PI * x / self.l).sin() * (n * PI * y / self.h).sin() * tmn
            })
            .sum()
    }
}

/// Truncated series solution of the supported plate driven by `f0 sin(xi t)`.
#[allow(clippy::too_many_arguments)]
pub fn forced_response(x: f64, y: f64, t: f64, f0: f64, xi: f64, trunc: SeriesTruncation, l: f64, h: f64, p: &PlateParams) -> Result<f64> {
    Ok(ForcedSeries::new(f0, xi, trunc, l, h, p)?.eval(x, y, t))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub max_norm: f64,
    /// Root-mean-square error over the same points.
    pub l2_norm: f64,
    pub grid: String,
    pub time: f64,
}

/// Errors over all physical (interior and boundary) points.
pub fn error_norms(m: &Mesh, numeric: &Field, exact: impl Fn(f64, f64, f64) -> f64, t: f64, grid: &str) -> ErrorReport {
    let mut mx = 0.0f64;
    let mut sq = 0.0;
    let mut count = 0usize;
    for i2 in 0..m.n2 as isize {
        for i1 in 0..m.n1 as isize {
            let (x, y) = m.coords(i1, i2);
            let e = (numeric.get(i1, i2) - exact(x, y, t)).abs();
            mx = mx.max(e);
            sq += e * e;
            count += 1;
        }
    }
    ErrorReport { max_norm: mx, l2_norm: (sq / count as f64).sqrt(), grid: grid.to_string(), time: t }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mms_values() {
        assert!((mms_w(0.5, 0.5, 0.0) - 1.0).abs() < 1e-14);
        assert!(mms_w(-1.0, 0.3, 0.2).abs() < 1e-14);
        assert!(mms_w(1.0, 0.3, 0.2).abs() < 1e-14);
        assert!((mms_w(0.25, 0.25, 0.5) + 0.0625).abs() < 1e-14);
    }

    #[test]
    fn quartic_derivatives_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-3;
        for _ in 0..20 {
            let s: f64 = rng.random_range(-1.0..1.0);
            let d = quartic(s);
            for k in 0..4 {
                let fd = (quartic(s + h)[k] - quartic(s - h)[k]) / (2.0 * h);
                let scale = d[k + 1].abs().max(PI.powi(k as i32 + 1));
                assert!((fd - d[k + 1]).abs() < 1e-4 * scale, "order {}: {fd} vs {}", k + 1, d[k + 1]);
            }
        }
    }

    #[test]
    fn forcing_oracle() {
        let trivial = PlateParams { rho_h: 1.0, k0: 0.0, tension: 0.0, d: 0.0, k1: 0.0, t1: 0.0, nu: 0.0 };
        for &(x, y, t) in &[(0.3, -0.2, 0.1), (0.5, 0.5, 0.0), (-0.7, 0.4, 0.8)] {
            let f = mms_forcing(&trivial, x, y, t);
            assert!((f + 4.0 * PI * PI * mms_w(x, y, t)).abs() < 1e-10);
        }
        let p = PlateParams { rho_h: 1.0, k0: 2.0, tension: 1.0, d: 0.01, k1: 5.0, t1: 0.1, nu: 0.1 };
        assert!(mms_forcing(&p, -1.0, -1.0, 0.3).abs() < 1e-9);
        // brute-force oracle: nested central differences
        let h = 1e-3;
        let w = |x: f64, y: f64| mms_spatial(x, y).w;
        let lap = |x: f64, y: f64| (w(x + h, y) + w(x - h, y) + w(x, y + h) + w(x, y - h) - 4.0 * w(x, y)) / (h * h);
        let hb = 1e-2;
        let lap2 = |x: f64, y: f64| {
            let l = |a: f64, b: f64| mms_spatial(a, b).lap;
            (l(x + hb, y) + l(x - hb, y) + l(x, y + hb) + l(x, y - hb) - 4.0 * l(x, y)) / (hb * hb)
        };
        let (x, y) = (0.5, 0.5);
        let want = -4.0 * PI * PI * w(x, y) + 2.0 * w(x, y) - lap(x, y) + 0.01 * lap2(x, y);
        let got = mms_forcing(&p, x, y, 0.0);
        assert!((got - want).abs() < 1e-2 * want.abs(), "{got} vs {want}");
    }

    #[test]
    fn supported_plate_frequencies() {
        let p = PlateParams { rho_h: 2.7, k0: 0.0, tension: 0.0, d: 6.4527, k1: 0.0, t1: 0.0, nu: 0.3 };
        let rows = [
            (1, 1, 4.8567),
            (1, 2, 12.1417),
            (2, 2, 19.4267),
            (1, 3, 24.2834),
            (2, 3, 31.5684),
            (1, 4, 41.2817),
            (3, 3, 43.7100),
            (2, 4, 48.5667),
            (3, 4, 60.7084),
        ];
        for (m, n, f) in rows {
            let got = supported_omega(m, n, 1.0, 1.0, &p) / (2.0 * PI);
            assert!((got - f).abs() < 5e-5, "({m},{n}) {got} vs {f}");
        }
        let unit = PlateParams { rho_h: 1.0, d: 1.0, ..p };
        assert!((supported_omega(1, 1, 1.0, 1.0, &unit) - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn standing_wave_period() {
        let p = PlateParams { rho_h: 2.7, k0: 0.0, tension: 0.0, d: 6.4527, k1: 0.0, t1: 0.0, nu: 0.3 };
        let per = 2.0 * PI / supported_omega(1, 2, 1.0, 1.0, &p);
        for &(x, y) in &[(0.2, 0.1), (0.7, 0.3)] {
            let a = standing_wave(1, 2, x, y, 0.0, 1.0, 1.0, &p);
            let b = standing_wave(1, 2, x, y, per, 1.0, 1.0, &p);
            assert!((a - b).abs() < 1e-12);
            assert!((a - (PI * x).sin() * (2.0 * PI * y).sin()).abs() < 1e-15);
        }
        assert!(standing_wave(1, 2, 0.3, 0.5, 0.1, 1.0, 1.0, &p).abs() < 1e-15);
    }

    #[test]
    fn forced_series_structure() {
        let p = PlateParams { rho_h: 1.0, k0: 0.0, tension: 0.0, d: 0.1, k1: 0.0, t1: 0.0, nu: 0.3 };
        let tr = SeriesTruncation::new(7, 7).unwrap();
        assert_eq!(forced_response(0.2, 0.1, 0.0, 1000.0, 40.0, tr, 0.4, 0.2, &p).unwrap(), 0.0);
        let s = ForcedSeries::new(1000.0, 40.0, tr, 0.4, 0.2, &p).unwrap();
        assert_eq!(s.terms.len(), 16);
        let w11 = supported_omega(1, 1, 0.4, 0.2, &p);
        assert!(matches!(ForcedSeries::new(1000.0, w11, tr, 0.4, 0.2, &p), Err(PlateError::Resonant { m: 1, n: 1 })));
    }

    #[test]
    fn error_norm_examples() {
        let m = crate::mesh::build_rectangle(-1.0, 1.0, -1.0, 1.0, 11, 11).unwrap();
        let f = Field::from_fn(&m, |x, y| mms_w(x, y, 0.0));
        assert_eq!(error_norms(&m, &f, mms_w, 0.0, "G10").max_norm, 0.0);
        let g = Field::from_fn(&m, |x, y| mms_w(x, y, 0.0) + 1e-3);
        let r = error_norms(&m, &g, mms_w, 0.0, "G10");
        assert!((r.max_norm - 1e-3).abs() < 1e-15 && (r.l2_norm - 1e-3).abs() < 1e-15);
    }
}
