//! Structured meshes (Cartesian rectangle, polar annulus) with two ghost layers.
//!
//! Storage is one flat array per grid function covering `i1 in -2..n1+2`,
//! `i2 in -2..n2+2`, with `i1` running fastest.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{PlateError, Result};

/// Number of ghost layers on every side.
pub const GHOST: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MeshKind {
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
    Annulus { r_in: f64, r_out: f64 },
}

/// Boundary component identifier. The derive order is the ownership order
/// used for rectangle corners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
    Inner,
    Outer,
}

impl Side {
    /// Outward step in index space.
    pub fn outward(self) -> (isize, isize) {
        match self {
            Side::Left | Side::Inner => (-1, 0),
            Side::Right | Side::Outer => (1, 0),
            Side::Bottom => (0, -1),
            Side::Top => (0, 1),
        }
    }

    /// Index axis normal to the side (1 or 2).
    pub fn axis(self) -> usize {
        match self {
            Side::Bottom | Side::Top => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Bottom => "bottom",
            Side::Top => "top",
            Side::Inner => "inner",
            Side::Outer => "outer",
        }
    }
}

/// One boundary grid point with its local frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub i1: isize,
    pub i2: isize,
    pub x: f64,
    pub y: f64,
    pub normal: [f64; 2],
    pub tangent: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySide {
    pub side: Side,
    pub points: Vec<BoundaryPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub kind: MeshKind,
    pub n1: usize,
    pub n2: usize,
    pub h1: f64,
    pub h2: f64,
    pub ghost: usize,
    pub periodic2: bool,
}

pub fn build_rectangle(x0: f64, x1: f64, y0: f64, y1: f64, n1: usize, n2: usize) -> Result<Mesh> {
    if !(x1 > x0) || !(y1 > y0) || !x0.is_finite() || !x1.is_finite() || !y0.is_finite() || !y1.is_finite() {
        return Err(PlateError::Config(format!("degenerate rectangle [{x0}, {x1}] x [{y0}, {y1}]")));
    }
    if n1 < 5 || n2 < 5 {
        return Err(PlateError::Config(format!("rectangle needs at least 5 points per direction, got {n1} x {n2}")));
    }
    Ok(Mesh {
        kind: MeshKind::Rectangle { x0, x1, y0, y1 },
        n1,
        n2,
        h1: (x1 - x0) / (n1 - 1) as f64,
        h2: (y1 - y0) / (n2 - 1) as f64,
        ghost: GHOST,
        periodic2: false,
    })
}

pub fn build_annulus(r_in: f64, r_out: f64, n1: usize, n2: usize) -> Result<Mesh> {
    if !(r_in > 0.0) || !(r_out > r_in) || !r_out.is_finite() {
        return Err(PlateError::Config(format!("annulus needs 0 < r_in < r_out, got r_in={r_in}, r_out={r_out}")));
    }
    if n1 < 5 || n2 < 8 {
        return Err(PlateError::Config(format!("annulus needs n1 >= 5 and n2 >= 8, got {n1} x {n2}")));
    }
    let h1 = (r_out - r_in) / (n1 - 1) as f64;
    // the first ghost ring must stay at positive radius for the polar Laplacian
    if r_in - h1 <= 0.0 {
        return Err(PlateError::Config(format!("radial spacing {h1} too coarse for inner radius {r_in}")));
    }
    Ok(Mesh { kind: MeshKind::Annulus { r_in, r_out }, n1, n2, h1, h2: 2.0 * PI / n2 as f64, ghost: GHOST, periodic2: true })
}

/// Smallest physical spacing, used by the stability symbols on mapped grids.
pub fn min_physical_spacing(m: &Mesh) -> f64 {
    match m.kind {
        MeshKind::Rectangle { .. } => m.h1.min(m.h2),
        MeshKind::Annulus { r_in, .. } => m.h1.min(r_in * m.h2),
    }
}

impl Mesh {
    #[inline]
    pub fn stride(&self) -> usize {
        self.n1 + 2 * GHOST
    }

    #[inline]
    pub fn storage_len(&self) -> usize {
        (self.n1 + 2 * GHOST) * (self.n2 + 2 * GHOST)
    }

    /// Raw storage offset, no wrapping. Valid for `-2 <= i < n + 2`.
    #[inline]
    pub fn index(&self, i1: isize, i2: isize) -> usize {
        debug_assert!(i1 >= -2 && i1 < self.n1 as isize + 2, "i1={i1} out of range");
        debug_assert!(i2 >= -2 && i2 < self.n2 as isize + 2, "i2={i2} out of range");
        ((i2 + 2) as usize) * self.stride() + (i1 + 2) as usize
    }

    /// Wrap the periodic index; identity on rectangles.
    #[inline]
    pub fn canonical(&self, i1: isize, i2: isize) -> (isize, isize) {
        if self.periodic2 {
            (i1, i2.rem_euclid(self.n2 as isize))
        } else {
            (i1, i2)
        }
    }

    /// Storage offset of the canonical representative.
    #[inline]
    pub fn cindex(&self, i1: isize, i2: isize) -> usize {
        let (a, b) = self.canonical(i1, i2);
        self.index(a, b)
    }

    /// Inverse of `index`.
    #[inline]
    pub fn unindex(&self, k: usize) -> (isize, isize) {
        let s = self.stride();
        ((k % s) as isize - 2, (k / s) as isize - 2)
    }

    /// Radius of the line `i1` (annulus only).
    #[inline]
    pub fn radius(&self, i1: isize) -> f64 {
        match self.kind {
            MeshKind::Annulus { r_in, .. } => r_in + i1 as f64 * self.h1,
            MeshKind::Rectangle { .. } => f64::NAN,
        }
    }

    /// Physical coordinates of a (possibly ghost) index.
    pub fn coords(&self, i1: isize, i2: isize) -> (f64, f64) {
        match self.kind {
            MeshKind::Rectangle { x0, y0, .. } => (x0 + i1 as f64 * self.h1, y0 + i2 as f64 * self.h2),
            MeshKind::Annulus { .. } => {
                let (_, j) = self.canonical(i1, i2);
                let r = self.radius(i1);
                let th = j as f64 * self.h2;
                (r * th.cos(), r * th.sin())
            }
        }
    }

    /// True for points of the physical grid (interior or boundary).
    #[inline]
    pub fn is_physical(&self, i1: isize, i2: isize) -> bool {
        i1 >= 0 && i1 < self.n1 as isize && i2 >= 0 && i2 < self.n2 as isize
    }

    /// Which sides a physical point lies on.
    pub fn sides_at(&self, i1: isize, i2: isize) -> Vec<Side> {
        let mut out = Vec::new();
        let l1 = self.n1 as isize - 1;
        let l2 = self.n2 as isize - 1;
        match self.kind {
            MeshKind::Rectangle { .. } => {
                if i1 == 0 {
                    out.push(Side::Left);
                }
                if i1 == l1 {
                    out.push(Side::Right);
                }
                if i2 == 0 {
                    out.push(Side::Bottom);
                }
                if i2 == l2 {
                    out.push(Side::Top);
                }
            }
            MeshKind::Annulus { .. } => {
                if i1 == 0 {
                    out.push(Side::Inner);
                }
                if i1 == l1 {
                    out.push(Side::Outer);
                }
            }
        }
        out
    }

    pub fn sides(&self) -> &'static [Side] {
        match self.kind {
            MeshKind::Rectangle { .. } => &[Side::Left, Side::Right, Side::Bottom, Side::Top],
            MeshKind::Annulus { .. } => &[Side::Inner, Side::Outer],
        }
    }

    /// Outward unit normal of `side` at physical point (x, y).
    pub fn normal_at(&self, side: Side, x: f64, y: f64) -> [f64; 2] {
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

    /// Index spacing along the normal of `side`.
    pub fn normal_spacing(&self, side: Side) -> f64 {
        if side.axis() == 1 {
            self.h1
        } else {
            self.h2
        }
    }

    /// Boundary points grouped by side. Rectangle corners go to the left or
    /// right side, so every boundary point is listed once.
    pub fn boundary_sides(&self) -> Vec<BoundarySide> {
        let n1 = self.n1 as isize;
        let n2 = self.n2 as isize;
        let mut out = Vec::new();
        for &side in self.sides() {
            let idx: Vec<(isize, isize)> = match side {
                Side::Left | Side::Inner => (0..n2).map(|j| (0, j)).collect(),
                Side::Right | Side::Outer => (0..n2).map(|j| (n1 - 1, j)).collect(),
                Side::Bottom => (1..n1 - 1).map(|i| (i, 0)).collect(),
                Side::Top => (1..n1 - 1).map(|i| (i, n2 - 1)).collect(),
            };
            let points = idx
                .into_iter()
                .map(|(i1, i2)| {
                    let (x, y) = self.coords(i1, i2);
                    let normal = self.normal_at(side, x, y);
                    BoundaryPoint { i1, i2, x, y, normal, tangent: [-normal[1], normal[0]] }
                })
                .collect();
            out.push(BoundarySide { side, points });
        }
        out
    }

    /// Copy the periodic angular ghost columns from their interior aliases.
    pub fn wrap_fill(&self, values: &mut [f64]) {
        if !self.periodic2 {
            return;
        }
        let s = self.stride();
        let n2 = self.n2 as isize;
        for (dst, src) in [(-2, n2 - 2), (-1, n2 - 1), (n2, 0), (n2 + 1, 1)] {
            let d = ((dst + 2) as usize) * s;
            let o = ((src + 2) as usize) * s;
            values.copy_within(o..o + s, d);
        }
    }

    /// Five-point Laplacian coefficients `[west, east, south, north, centre]`
    /// on the line `i1`. The stencil depends on `i1` only.
    pub fn laplacian_coeffs(&self, i1: isize) -> [f64; 5] {
        match self.kind {
            MeshKind::Rectangle { .. } => {
                let a = 1.0 / (self.h1 * self.h1);
                let b = 1.0 / (self.h2 * self.h2);
                [a, a, b, b, -2.0 * (a + b)]
            }
            MeshKind::Annulus { .. } => {
                let r = self.radius(i1);
                if r <= 0.0 {
                    return [0.0; 5];
                }
                let a = 1.0 / (self.h1 * self.h1);
                let c = 1.0 / (2.0 * r * self.h1);
                let b = 1.0 / (r * r * self.h2 * self.h2);
                [a - c, a + c, b, b, -2.0 * (a + b)]
            }
        }
    }

    /// Nearest physical grid point to (x, y).
    pub fn nearest_point(&self, x: f64, y: f64) -> (isize, isize) {
        match self.kind {
            MeshKind::Rectangle { x0, y0, .. } => {
                let i = ((x - x0) / self.h1).round() as isize;
                let j = ((y - y0) / self.h2).round() as isize;
                (i.clamp(0, self.n1 as isize - 1), j.clamp(0, self.n2 as isize - 1))
            }
            MeshKind::Annulus { r_in, .. } => {
                let r = x.hypot(y);
                let th = y.atan2(x).rem_euclid(2.0 * PI);
                let i = ((r - r_in) / self.h1).round() as isize;
                let j = (th / self.h2).round() as isize;
                self.canonical(i.clamp(0, self.n1 as isize - 1), j)
            }
        }
    }

    /// Fractional index coordinates of a physical point, or None if outside.
    pub fn locate(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let tol = 1e-12;
        match self.kind {
            MeshKind::Rectangle { x0, x1, y0, y1 } => {
                if x < x0 - tol * (x1 - x0) || x > x1 + tol * (x1 - x0) || y < y0 - tol * (y1 - y0) || y > y1 + tol * (y1 - y0) {
                    return None;
                }
                Some((((x - x0) / self.h1).clamp(0.0, (self.n1 - 1) as f64), ((y - y0) / self.h2).clamp(0.0, (self.n2 - 1) as f64)))
            }
            MeshKind::Annulus { r_in, r_out } => {
                let r = x.hypot(y);
                if r < r_in * (1.0 - tol) || r > r_out * (1.0 + tol) {
                    return None;
                }
                let th = y.atan2(x).rem_euclid(2.0 * PI);
                Some((((r - r_in) / self.h1).clamp(0.0, (self.n1 - 1) as f64), th / self.h2))
            }
        }
    }

    /// Domain extent used as a length scale (largest side or radial width).
    pub fn length_scale(&self) -> f64 {
        match self.kind {
            MeshKind::Rectangle { x0, x1, y0, y1 } => (x1 - x0).max(y1 - y0),
            MeshKind::Annulus { r_in, r_out } => r_out - r_in,
        }
    }

    /// Area weight of a physical point for discrete inner products.
    #[inline]
    pub fn cell_weight(&self, i1: isize) -> f64 {
        match self.kind {
            MeshKind::Rectangle { .. } => self.h1 * self.h2,
            MeshKind::Annulus { .. } => self.radius(i1) * self.h1 * self.h2,
        }
    }
}
