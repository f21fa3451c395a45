use crate::mesh::{Mesh, GHOST};

/// Grid function over physical and ghost points.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub n1: usize,
    pub n2: usize,
    pub values: Vec<f64>,
    pub time: f64,
}

impl Field {
    pub fn zeros(m: &Mesh) -> Self {
        Field { n1: m.n1, n2: m.n2, values: vec![0.0; m.storage_len()], time: 0.0 }
    }

    /// Sample `f(x, y)` at every storage location, ghosts included.
    pub fn from_fn(m: &Mesh, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Field::zeros(m);
        let (n1, n2) = (m.n1 as isize, m.n2 as isize);
        for i2 in -2..n2 + 2 {
            for i1 in -2..n1 + 2 {
                let (x, y) = m.coords(i1, i2);
                let v = f(x, y);
                out.values[m.index(i1, i2)] = v;
            }
        }
        out
    }

    #[inline]
    fn stride(&self) -> usize {
        self.n1 + 2 * GHOST
    }

    #[inline]
    pub fn get(&self, i1: isize, i2: isize) -> f64 {
        self.values[((i2 + 2) as usize) * self.stride() + (i1 + 2) as usize]
    }

    #[inline]
    pub fn set(&mut self, i1: isize, i2: isize, v: f64) {
        let s = self.stride();
        self.values[((i2 + 2) as usize) * s + (i1 + 2) as usize] = v;
    }

    pub fn matches(&self, m: &Mesh) -> bool {
        self.n1 == m.n1 && self.n2 == m.n2 && self.values.len() == m.storage_len()
    }

    /// Max-norm over physical points.
    pub fn max_abs(&self) -> f64 {
        let mut mx = 0.0f64;
        for i2 in 0..self.n2 as isize {
            for i1 in 0..self.n1 as isize {
                let v = self.get(i1, i2);
                if !v.is_finite() {
                    return f64::INFINITY;
                }
                mx = mx.max(v.abs());
            }
        }
        mx
    }

    /// Physical values, `i1` fastest.
    pub fn physical(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n1 * self.n2);
        for i2 in 0..self.n2 as isize {
            for i1 in 0..self.n1 as isize {
                out.push(self.get(i1, i2));
            }
        }
        out
    }

    /// Bilinear interpolation at fractional index coordinates.
    pub fn interpolate(&self, m: &Mesh, s1: f64, s2: f64) -> f64 {
        let i = (s1.floor() as isize).clamp(0, (m.n1 as isize - 2).max(0));
        let a = s1 - i as f64;
        let (j, b) = if m.periodic2 {
            let j = s2.floor() as isize;
            (j, s2 - j as f64)
        } else {
            let j = (s2.floor() as isize).clamp(0, (m.n2 as isize - 2).max(0));
            (j, s2 - j as f64)
        };
        let g = |p: isize, q: isize| self.values[m.cindex(p, q)];
        (1.0 - a) * (1.0 - b) * g(i, j) + a * (1.0 - b) * g(i + 1, j) + (1.0 - a) * b * g(i, j + 1) + a * b * g(i + 1, j + 1)
    }
}
