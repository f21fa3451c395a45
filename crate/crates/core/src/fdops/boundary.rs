//! Discrete boundary conditions as a linear closure.
//!
//! Every boundary equation (Dirichlet value, normal-derivative, moment,
//! shear, second-layer extrapolation, corner twist, pin) is one sparse row
//! over grid values. Unknowns of the closure are the boundary values of
//! Dirichlet sides, both ghost layers, rectangle corner diagonals and pins;
//! everything else referenced by a row is a PDE point whose value is known
//! when ghosts are filled. The square block over the unknowns is factored
//! once, so a fill is one sparse solve and is exactly idempotent.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{PlateError, Result};
use crate::fdops::field::Field;
use crate::linalg::{DirectSolver, SparseMatrix};
use crate::mesh::{Mesh, MeshKind, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    Clamped,
    Supported,
    Free,
}

impl BcKind {
    /// Sides that prescribe the boundary value itself.
    pub fn is_dirichlet(self) -> bool {
        !matches!(self, BcKind::Free)
    }
}

pub type DataClosure = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Time-dependent boundary data `g(x, y, t)` with an optional exact rate.
#[derive(Clone)]
pub struct DataFn {
    value: DataClosure,
    rate: Option<DataClosure>,
}

impl DataFn {
    pub fn new(f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        DataFn { value: Arc::new(f), rate: None }
    }

    pub fn with_rate(f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static, df: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        DataFn { value: Arc::new(f), rate: Some(Arc::new(df)) }
    }

    pub fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        (self.value)(x, y, t)
    }

    /// `dg/dt`, by a centered difference when no exact rate was given.
    pub fn rate(&self, x: f64, y: f64, t: f64) -> f64 {
        match &self.rate {
            Some(r) => r(x, y, t),
            None => {
                let e = 1e-5 * t.abs().max(1.0);
                ((self.value)(x, y, t + e) - (self.value)(x, y, t - e)) / (2.0 * e)
            }
        }
    }
}

impl fmt::Debug for DataFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DataFn(rate: {})", if self.rate.is_some() { "exact" } else { "fd" })
    }
}

/// Which boundary data a fill uses: the values `g`, their rates `dg/dt`
/// (for velocities), or zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataOrder {
    Value,
    Rate,
    Homogeneous,
}

/// Condition on one side. `g0`, `g1` are the right-hand sides of the two
/// boundary equations of that kind (zero when absent):
/// clamped `w = g0, dw/dn = g1`; supported `w = g0, w_nn + nu w_tt = g1`;
/// free `w_nn + nu w_tt = g0, d/dn[w_nn + (2 - nu) w_tt] = g1`.
#[derive(Debug, Clone)]
pub struct SideSpec {
    pub kind: BcKind,
    pub g0: Option<DataFn>,
    pub g1: Option<DataFn>,
}

impl SideSpec {
    pub fn new(kind: BcKind) -> Self {
        SideSpec { kind, g0: None, g1: None }
    }

    pub fn with_data(kind: BcKind, g0: Option<DataFn>, g1: Option<DataFn>) -> Self {
        SideSpec { kind, g0, g1 }
    }
}

/// Boundary kinds and data for every side, plus optional corner twist data
/// and pinned points.
#[derive(Debug, Clone)]
pub struct BoundarySpec {
    pub sides: Vec<(Side, SideSpec)>,
    /// Right-hand side of the corner condition `w_xy = c` where free edges meet.
    pub corner: Option<DataFn>,
    pub pins: Vec<(isize, isize)>,
}

impl BoundarySpec {
    pub fn uniform(m: &Mesh, kind: BcKind) -> Self {
        BoundarySpec { sides: m.sides().iter().map(|&s| (s, SideSpec::new(kind))).collect(), corner: None, pins: Vec::new() }
    }

    pub fn with_side(mut self, side: Side, spec: SideSpec) -> Self {
        if let Some(e) = self.sides.iter_mut().find(|(s, _)| *s == side) {
            e.1 = spec;
        } else {
            self.sides.push((side, spec));
        }
        self
    }

    /// Pin the grid point nearest to (x, y).
    pub fn with_pin_nearest(mut self, m: &Mesh, x: f64, y: f64) -> Self {
        let p = m.nearest_point(x, y);
        if !self.pins.contains(&p) {
            self.pins.push(p);
        }
        self
    }

    pub fn side(&self, side: Side) -> Option<&SideSpec> {
        self.sides.iter().find(|(s, _)| *s == side).map(|(_, v)| v)
    }

    pub fn kind(&self, side: Side) -> Option<BcKind> {
        self.side(side).map(|s| s.kind)
    }

    /// Same kinds and pins, all data removed.
    pub fn homogeneous(&self) -> Self {
        BoundarySpec { sides: self.sides.iter().map(|(s, v)| (*s, SideSpec::new(v.kind))).collect(), corner: None, pins: self.pins.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Source {
    Zero,
    G0(Side),
    G1(Side),
    Corner,
}

/// One boundary equation over canonical storage indices.
#[derive(Debug, Clone)]
pub(crate) struct BcRow {
    pub terms: Vec<(usize, f64)>,
    pub source: Source,
    pub x: f64,
    pub y: f64,
}

/// Unknown numbering shared by the closure, assembly and modal solver.
#[derive(Debug, Clone)]
pub struct Layout {
    /// Storage indices of points carrying the PDE.
    pub pde: Vec<usize>,
    /// Storage indices of closure unknowns.
    pub bc: Vec<usize>,
    /// Storage index -> dof (PDE points first, then closure unknowns).
    pub dof_of: Vec<usize>,
}

impl Layout {
    pub const NONE: usize = usize::MAX;

    pub fn n_dofs(&self) -> usize {
        self.pde.len() + self.bc.len()
    }
}

/// Factored boundary closure for one mesh and boundary specification.
pub struct Closure {
    mesh: Mesh,
    spec: BoundarySpec,
    pub(crate) rows: Vec<BcRow>,
    pub layout: Layout,
    known: Vec<Vec<(usize, f64)>>,
    solver: DirectSolver,
}

impl fmt::Debug for Closure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Closure").field("rows", &self.rows.len()).field("pde_points", &self.layout.pde.len()).finish()
    }
}

struct RowSet<'a> {
    m: &'a Mesh,
    nu: f64,
    rows: Vec<BcRow>,
}

type Terms = Vec<(isize, isize, f64)>;

impl RowSet<'_> {
    fn push(&mut self, terms: Terms, source: Source, at: (isize, isize)) {
        let mut merged: HashMap<usize, f64> = HashMap::new();
        let mut order = Vec::new();
        for (i1, i2, c) in terms {
            let k = self.m.cindex(i1, i2);
            let e = merged.entry(k).or_insert_with(|| {
                order.push(k);
                0.0
            });
            *e += c;
        }
        let terms = order.into_iter().map(|k| (k, merged[&k])).filter(|&(_, c)| c != 0.0).collect();
        let (x, y) = self.m.coords(at.0, at.1);
        self.rows.push(BcRow { terms, source, x, y });
    }

    fn lap(&self, i1: isize, i2: isize, s: f64) -> Terms {
        let c = self.m.laplacian_coeffs(i1);
        vec![(i1 - 1, i2, s * c[0]), (i1 + 1, i2, s * c[1]), (i1, i2 - 1, s * c[2]), (i1, i2 + 1, s * c[3]), (i1, i2, s * c[4])]
    }

    fn dnn(&self, p: (isize, isize), d: (isize, isize), h: f64, s: f64) -> Terms {
        let a = s / (h * h);
        vec![(p.0 + d.0, p.1 + d.1, a), (p.0, p.1, -2.0 * a), (p.0 - d.0, p.1 - d.1, a)]
    }

    /// `w_nn + nu (lap - w_nn)` at p.
    fn moment(&self, p: (isize, isize), d: (isize, isize), h: f64) -> Terms {
        let mut t = self.dnn(p, d, h, 1.0 - self.nu);
        t.extend(self.lap(p.0, p.1, self.nu));
        t
    }

    /// `w_nn + (2 - nu) (lap - w_nn)` at q, scaled.
    fn q(&self, q: (isize, isize), d: (isize, isize), h: f64, s: f64) -> Terms {
        let mut t = self.dnn(q, d, h, (self.nu - 1.0) * s);
        t.extend(self.lap(q.0, q.1, (2.0 - self.nu) * s));
        t
    }

    /// Equations of one side at boundary point p, Dirichlet row optional.
    fn side_rows(&mut self, p: (isize, isize), side: Side, kind: BcKind, with_value: bool) {
        let d = side.outward();
        let h = self.m.normal_spacing(side);
        let g = |k: isize| (p.0 + k * d.0, p.1 + k * d.1);
        match kind {
            BcKind::Clamped | BcKind::Supported => {
                if with_value {
                    self.push(vec![(p.0, p.1, 1.0)], Source::G0(side), p);
                }
                if kind == BcKind::Clamped {
                    let s = 1.0 / (2.0 * h);
                    self.push(vec![(g(1).0, g(1).1, s), (g(-1).0, g(-1).1, -s)], Source::G1(side), p);
                    self.push(vec![(g(2).0, g(2).1, 1.0), (g(-2).0, g(-2).1, -1.0)], Source::Zero, p);
                } else {
                    let t = self.moment(p, d, h);
                    self.push(t, Source::G1(side), p);
                    self.push(vec![(g(2).0, g(2).1, 1.0), (g(-2).0, g(-2).1, 1.0), (p.0, p.1, -2.0)], Source::Zero, p);
                }
            }
            BcKind::Free => {
                let t = self.moment(p, d, h);
                self.push(t, Source::G0(side), p);
                let s = 1.0 / (2.0 * h);
                let mut t = self.q(g(1), d, h, s);
                t.extend(self.q(g(-1), d, h, -s));
                self.push(t, Source::G1(side), p);
            }
        }
    }
}

impl Closure {
    pub fn new(m: &Mesh, spec: &BoundarySpec, nu: f64) -> Result<Self> {
        for &s in m.sides() {
            if spec.side(s).is_none() {
                return Err(PlateError::Config(format!("no boundary condition for side '{}'", s.name())));
            }
        }
        for (s, _) in &spec.sides {
            if !m.sides().contains(s) {
                return Err(PlateError::Config(format!("side '{}' does not exist on this mesh", s.name())));
            }
        }
        let (n1, n2) = (m.n1 as isize, m.n2 as isize);
        let mut set = RowSet { m, nu, rows: Vec::new() };
        let mut fixed: Vec<usize> = Vec::new();

        match m.kind {
            MeshKind::Annulus { .. } => {
                for &side in m.sides() {
                    let kind = spec.kind(side).unwrap();
                    let i1 = if side == Side::Inner { 0 } else { n1 - 1 };
                    for i2 in 0..n2 {
                        if kind.is_dirichlet() {
                            fixed.push(m.index(i1, i2));
                        }
                        set.side_rows((i1, i2), side, kind, true);
                    }
                }
            }
            MeshKind::Rectangle { .. } => {
                for &side in m.sides() {
                    let kind = spec.kind(side).unwrap();
                    let pts: Vec<(isize, isize)> = match side {
                        Side::Left => (1..n2 - 1).map(|j| (0, j)).collect(),
                        Side::Right => (1..n2 - 1).map(|j| (n1 - 1, j)).collect(),
                        Side::Bottom => (1..n1 - 1).map(|i| (i, 0)).collect(),
                        _ => (1..n1 - 1).map(|i| (i, n2 - 1)).collect(),
                    };
                    for p in pts {
                        if kind.is_dirichlet() {
                            fixed.push(m.index(p.0, p.1));
                        }
                        set.side_rows(p, side, kind, true);
                    }
                }
                for (c, a, b) in [
                    ((0, 0), Side::Left, Side::Bottom),
                    ((n1 - 1, 0), Side::Right, Side::Bottom),
                    ((0, n2 - 1), Side::Left, Side::Top),
                    ((n1 - 1, n2 - 1), Side::Right, Side::Top),
                ] {
                    let (ka, kb) = (spec.kind(a).unwrap(), spec.kind(b).unwrap());
                    let value_from_a = ka.is_dirichlet();
                    let value_from_b = !value_from_a && kb.is_dirichlet();
                    if value_from_a || value_from_b {
                        fixed.push(m.index(c.0, c.1));
                    }
                    set.side_rows(c, a, ka, value_from_a);
                    set.side_rows(c, b, kb, value_from_b);
                    let (da, db) = (a.outward(), b.outward());
                    if ka == BcKind::Free || kb == BcKind::Free {
                        let s = 1.0 / (4.0 * m.h1 * m.h2);
                        set.push(vec![(c.0 + 1, c.1 + 1, s), (c.0 + 1, c.1 - 1, -s), (c.0 - 1, c.1 + 1, -s), (c.0 - 1, c.1 - 1, s)], Source::Corner, c);
                    } else {
                        set.push(vec![(c.0 + da.0 + db.0, c.1 + da.1 + db.1, 1.0), (c.0 - da.0 - db.0, c.1 - da.1 - db.1, -1.0)], Source::Zero, c);
                    }
                }
            }
        }

        for &(i1, i2) in &spec.pins {
            if !m.is_physical(i1, i2) {
                return Err(PlateError::Config(format!("pin ({i1},{i2}) is not a grid point")));
            }
            let k = m.index(i1, i2);
            if fixed.contains(&k) {
                return Err(PlateError::Config(format!("pin ({i1},{i2}) lies on a prescribed boundary")));
            }
            fixed.push(k);
            set.push(vec![(i1, i2, 1.0)], Source::Zero, (i1, i2));
        }

        let rows = set.rows;
        let mut is_fixed = vec![false; m.storage_len()];
        for &k in &fixed {
            is_fixed[k] = true;
        }
        let mut dof_of = vec![Layout::NONE; m.storage_len()];
        let mut pde = Vec::new();
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                let k = m.index(i1, i2);
                if !is_fixed[k] {
                    dof_of[k] = pde.len();
                    pde.push(k);
                }
            }
        }
        let mut bc = Vec::new();
        for &k in fixed.iter() {
            if dof_of[k] == Layout::NONE {
                dof_of[k] = pde.len() + bc.len();
                bc.push(k);
            }
        }
        for row in &rows {
            for &(k, _) in &row.terms {
                if dof_of[k] == Layout::NONE {
                    let (i1, i2) = m.unindex(k);
                    if m.is_physical(i1, i2) {
                        return Err(PlateError::Config(format!("internal: physical point ({i1},{i2}) unclassified")));
                    }
                    dof_of[k] = pde.len() + bc.len();
                    bc.push(k);
                }
            }
        }
        if bc.len() != rows.len() {
            return Err(PlateError::Config(format!("boundary closure is not square: {} equations for {} unknowns", rows.len(), bc.len())));
        }

        let npde = pde.len();
        let mut trips = Vec::new();
        let mut known = Vec::with_capacity(rows.len());
        for (r, row) in rows.iter().enumerate() {
            let mut kn = Vec::new();
            for &(k, c) in &row.terms {
                let dof = dof_of[k];
                if dof >= npde {
                    trips.push((r, dof - npde, c));
                } else {
                    kn.push((k, c));
                }
            }
            known.push(kn);
        }
        let cbb = SparseMatrix::from_triplets(rows.len(), bc.len(), trips);
        let solver = DirectSolver::factor(&cbb).map_err(|e| PlateError::Config(format!("boundary closure is singular: {e}")))?;
        Ok(Closure { mesh: *m, spec: spec.clone(), rows, layout: Layout { pde, bc, dof_of }, known, solver })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn spec(&self) -> &BoundarySpec {
        &self.spec
    }

    pub(crate) fn row_data(&self, row: &BcRow, t: f64, order: DataOrder) -> f64 {
        if order == DataOrder::Homogeneous {
            return 0.0;
        }
        let f = match row.source {
            Source::Zero => None,
            Source::G0(s) => self.spec.side(s).and_then(|v| v.g0.as_ref()),
            Source::G1(s) => self.spec.side(s).and_then(|v| v.g1.as_ref()),
            Source::Corner => self.spec.corner.as_ref(),
        };
        match (f, order) {
            (None, _) => 0.0,
            (Some(f), DataOrder::Value) => f.eval(row.x, row.y, t),
            (Some(f), _) => f.rate(row.x, row.y, t),
        }
    }

    /// Overwrite boundary values and ghosts so every boundary equation holds.
    pub fn fill(&self, values: &mut [f64], t: f64, order: DataOrder) -> Result<()> {
        let mut rhs: Vec<f64> = Vec::with_capacity(self.rows.len());
        for (row, kn) in self.rows.iter().zip(&self.known) {
            let mut d = self.row_data(row, t, order);
            for &(k, c) in kn {
                d -= c * values[k];
            }
            rhs.push(d);
        }
        self.solver.solve(&mut rhs)?;
        for (&k, &v) in self.layout.bc.iter().zip(&rhs) {
            values[k] = v;
        }
        self.mesh.wrap_fill(values);
        Ok(())
    }

    pub fn fill_field(&self, f: &mut Field, t: f64, order: DataOrder) -> Result<()> {
        self.fill(&mut f.values, t, order)
    }

    /// Largest boundary-equation residual for the given values.
    pub fn residual(&self, values: &[f64], t: f64, order: DataOrder) -> f64 {
        self.rows
            .iter()
            .map(|row| {
                let lhs: f64 = row.terms.iter().map(|&(k, c)| c * values[k]).sum();
                (lhs - self.row_data(row, t, order)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Fill boundary values and both ghost layers of `f` at time `t`.
/// Builds a closure on every call; time steppers keep one instead.
pub fn fill_ghosts(m: &Mesh, f: &mut Field, b: &BoundarySpec, nu: f64, t: f64) -> Result<()> {
    Closure::new(m, b, nu)?.fill(&mut f.values, t, DataOrder::Value)
}
