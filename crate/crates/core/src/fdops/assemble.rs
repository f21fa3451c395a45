use std::collections::BTreeMap;

use crate::error::Result;
use crate::fdops::boundary::{BoundarySpec, Closure, DataOrder, Layout};
use crate::fdops::params::PlateParams;
use crate::linalg::SparseMatrix;
use crate::mesh::Mesh;

/// `c0 I + cK K_h + cB B_h` on PDE points, boundary-equation rows on the
/// closure unknowns. Rows and columns follow `layout` (PDE dofs first).
#[derive(Debug, Clone)]
pub struct Assembled {
    pub matrix: SparseMatrix,
    pub layout: Layout,
}

impl Assembled {
    /// Gather a storage vector into dof order.
    pub fn gather(&self, values: &[f64]) -> Vec<f64> {
        self.layout.pde.iter().chain(&self.layout.bc).map(|&k| values[k]).collect()
    }

    /// Scatter dof-ordered values into storage.
    pub fn scatter(&self, x: &[f64], values: &mut [f64]) {
        for (&k, &v) in self.layout.pde.iter().chain(&self.layout.bc).zip(x) {
            values[k] = v;
        }
    }

    /// Right-hand side of the boundary rows at time t.
    pub fn boundary_rhs(&self, closure: &Closure, t: f64, order: DataOrder) -> Vec<f64> {
        closure.rows.iter().map(|r| closure.row_data(r, t, order)).collect()
    }
}

/// Stencil of `c0 I + cK K_h + cB B_h` at physical point (i1, i2), as
/// canonical storage index -> coefficient.
pub(crate) fn pde_stencil(p: &PlateParams, m: &Mesh, i1: isize, i2: isize, c0: f64, ck: f64, cb: f64) -> BTreeMap<usize, f64> {
    let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
    let mut add = |a: isize, b: isize, c: f64| {
        if c != 0.0 {
            *acc.entry(m.cindex(a, b)).or_insert(0.0) += c;
        }
    };
    let lap = |a: isize, b: isize| {
        let c = m.laplacian_coeffs(a);
        [(a - 1, b, c[0]), (a + 1, b, c[1]), (a, b - 1, c[2]), (a, b + 1, c[3]), (a, b, c[4])]
    };
    add(i1, i2, c0 + ck * p.k0 + cb * p.k1);
    let tl = -ck * p.tension - cb * p.t1;
    for (a, b, c) in lap(i1, i2) {
        add(a, b, tl * c);
        if ck * p.d != 0.0 {
            for (e, f, g) in lap(a, b) {
                add(e, f, ck * p.d * c * g);
            }
        }
    }
    acc
}

/// Assemble against an existing closure (which fixes the unknown layout).
pub fn assemble_with(p: &PlateParams, closure: &Closure, c0: f64, ck: f64, cb: f64) -> Assembled {
    let m = closure.mesh();
    let layout = closure.layout.clone();
    let npde = layout.pde.len();
    let mut trips = Vec::new();
    for (r, &k) in layout.pde.iter().enumerate() {
        let (i1, i2) = m.unindex(k);
        for (col, c) in pde_stencil(p, m, i1, i2, c0, ck, cb) {
            let dof = layout.dof_of[col];
            assert!(dof != Layout::NONE, "stencil at ({i1},{i2}) reaches an inactive point");
            trips.push((r, dof, c));
        }
    }
    for (r, row) in closure.rows.iter().enumerate() {
        for &(k, c) in &row.terms {
            trips.push((npde + r, layout.dof_of[k], c));
        }
    }
    let n = layout.n_dofs();
    Assembled { matrix: SparseMatrix::from_triplets(n, n, trips), layout }
}

/// Build the closure for `b` and assemble `c0 I + cK K_h + cB B_h`.
pub fn assemble(p: &PlateParams, m: &Mesh, b: &BoundarySpec, c0: f64, ck: f64, cb: f64) -> Result<Assembled> {
    let closure = Closure::new(m, b, p.nu)?;
    Ok(assemble_with(p, &closure, c0, ck, cb))
}
