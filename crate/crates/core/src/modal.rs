//! Discrete eigenproblem `K_h phi = lambda phi` under homogeneous boundary
//! conditions, natural frequencies and nodal lines.

use std::collections::HashMap;
use std::f64::consts::PI;

use faer::{Mat, Side as FaerSide};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{PlateError, Result};
use crate::fdops::assemble::assemble_with;
use crate::fdops::{BcKind, BoundarySpec, Closure, DataOrder, Field, Kernel, PlateParams};
use crate::linalg::{DirectSolver, SparseMatrix};
use crate::mesh::{Mesh, MeshKind};

#[derive(Debug, Clone)]
pub struct Mode {
    pub lambda: f64,
    /// Natural frequency in Hz.
    pub frequency: f64,
    /// Unit 2-norm over the PDE points, ghosts filled.
    pub phi: Field,
    /// `|K_h phi - lambda phi|_2`.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct ModalOptions {
    /// Subspace size; `k + 4` when None.
    pub block: Option<usize>,
    pub max_sweeps: usize,
    /// Spectral shift; a small negative multiple of the operator scale when None.
    pub shift: Option<f64>,
    pub seed: u64,
}

impl Default for ModalOptions {
    fn default() -> Self {
        ModalOptions { block: None, max_sweeps: 2000, shift: None, seed: 17 }
    }
}

/// `(1 / 2 pi) sqrt(lambda / rho_h)`.
pub fn natural_frequency(lambda: f64, rho_h: f64) -> Result<f64> {
    if !(rho_h > 0.0) {
        return Err(PlateError::Invalid(format!("rho_h must be positive, got {rho_h}")));
    }
    if lambda < 0.0 {
        return Err(PlateError::NegativeEigenvalue(lambda));
    }
    Ok((lambda / rho_h).sqrt() / (2.0 * PI))
}

/// Magnitude of the lowest continuum eigenvalues of `K` on `m`.
pub fn operator_scale(p: &PlateParams, m: &Mesh) -> f64 {
    let k = PI / m.length_scale();
    let s = p.k0 + p.tension * k * k + p.d * k.powi(4);
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

/// The eliminated operator on PDE points: fill homogeneous ghosts, apply K.
struct Operator<'a> {
    closure: &'a Closure,
    kernel: Kernel,
    work: Vec<f64>,
    out: Vec<f64>,
}

impl Operator<'_> {
    fn apply(&mut self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let pde = &self.closure.layout.pde;
        self.work.iter_mut().for_each(|v| *v = 0.0);
        for (&k, &v) in pde.iter().zip(x) {
            self.work[k] = v;
        }
        self.closure.fill(&mut self.work, 0.0, DataOrder::Homogeneous)?;
        self.kernel.k_into(&self.work, &mut self.out);
        for (r, &k) in pde.iter().enumerate() {
            y[r] = self.out[k];
        }
        Ok(())
    }
}

fn orthonormalize(y: &Mat<f64>) -> Mat<f64> {
    y.qr().compute_thin_Q()
}

fn col_norm(m: &Mat<f64>, j: usize) -> f64 {
    (0..m.nrows()).map(|i| m[(i, j)] * m[(i, j)]).sum::<f64>().sqrt()
}

/// Ritz pairs of the small projected matrix, sorted by |theta|. Complex
/// conjugate pairs (non-normal rounding) contribute their real and
/// imaginary parts as two real vectors.
/// Ritz pairs ordered by distance from the shift.
fn ritz(h: &Mat<f64>, sigma: f64) -> Result<(Vec<f64>, Mat<f64>)> {
    let p = h.nrows();
    let hn = (0..p).flat_map(|i| (0..p).map(move |j| (i, j))).fold(0.0f64, |a, (i, j)| a.max(h[(i, j)].abs()));
    let asym = (0..p).flat_map(|i| (0..p).map(move |j| (i, j))).fold(0.0f64, |a, (i, j)| a.max((h[(i, j)] - h[(j, i)]).abs()));
    let (vals, vecs) = if asym <= 1e-10 * hn.max(f64::MIN_POSITIVE) {
        let sym = Mat::<f64>::from_fn(p, p, |i, j| 0.5 * (h[(i, j)] + h[(j, i)]));
        let e = sym.self_adjoint_eigen(FaerSide::Lower).map_err(|e| PlateError::Solver(format!("projected eigenproblem failed: {e:?}")))?;
        let s = e.S().column_vector();
        let vals: Vec<f64> = (0..p).map(|i| s[i]).collect();
        (vals, e.U().to_owned())
    } else {
        let e = h.eigen().map_err(|e| PlateError::Solver(format!("projected eigenproblem failed: {e:?}")))?;
        let s = e.S().column_vector();
        let u = e.U();
        let mut vals = vec![0.0; p];
        let mut vecs = Mat::<f64>::zeros(p, p);
        let mut j = 0;
        while j < p {
            let z = s[j];
            vals[j] = z.re;
            if z.im.abs() > 0.0 && j + 1 < p {
                vals[j + 1] = z.re;
                for i in 0..p {
                    vecs[(i, j)] = u[(i, j)].re;
                    vecs[(i, j + 1)] = u[(i, j)].im;
                }
                j += 2;
            } else {
                for i in 0..p {
                    vecs[(i, j)] = u[(i, j)].re;
                }
                j += 1;
            }
        }
        (vals, vecs)
    };
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| (vals[a] - sigma).abs().total_cmp(&(vals[b] - sigma).abs()));
    let sorted = order.iter().map(|&j| vals[j]).collect();
    let u = Mat::<f64>::from_fn(p, p, |i, j| vecs[(i, order[j])]);
    Ok((sorted, u))
}

/// The `k` eigenpairs of smallest |lambda| by shift-invert subspace
/// iteration with Rayleigh-Ritz projection; each residual is at most
/// `tol * max(|lambda|, operator_scale)`.
pub fn solve_modes(p: &PlateParams, m: &Mesh, b: &BoundarySpec, k: usize, tol: f64) -> Result<Vec<Mode>> {
    solve_modes_with(p, m, b, k, tol, &ModalOptions::default())
}

pub fn solve_modes_with(p: &PlateParams, m: &Mesh, b: &BoundarySpec, k: usize, tol: f64, opts: &ModalOptions) -> Result<Vec<Mode>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    if !(tol > 0.0) {
        return Err(PlateError::Config(format!("eigen tolerance must be positive, got {tol}")));
    }
    let closure = Closure::new(m, &b.homogeneous(), p.nu)?;
    let n = closure.layout.pde.len();
    let block = opts.block.unwrap_or(k + 4).max(k).min(n);
    if k > n {
        return Err(PlateError::Config(format!("requested {k} modes but only {n} unknowns")));
    }
    let scale = operator_scale(p, m);
    let sigma = opts.shift.unwrap_or(-0.1 * scale);
    let shifted = assemble_with(p, &closure, -sigma, 1.0, 0.0);
    let lu = DirectSolver::factor(&shifted.matrix)?;
    let ndof = shifted.layout.n_dofs();
    let mut op = Operator { closure: &closure, kernel: Kernel::new(p, m), work: vec![0.0; m.storage_len()], out: vec![0.0; m.storage_len()] };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = Mat::<f64>::from_fn(n, block, |_, _| rng.random_range(-1.0..1.0));
    let mut cols = vec![vec![0.0; ndof]; block];
    let mut ybuf = vec![0.0; n];
    let mut worst = f64::INFINITY;
    for sweep in 1..=opts.max_sweeps {
        for (j, c) in cols.iter_mut().enumerate() {
            c.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..n {
                c[i] = x[(i, j)];
            }
        }
        let rhs = cols.clone();
        lu.solve_many(&mut cols)?;
        refine(&shifted.matrix, &lu, &rhs, &mut cols)?;
        let y = Mat::<f64>::from_fn(n, block, |i, j| cols[j][i]);
        let q = orthonormalize(&y);
        let mut aq = Mat::<f64>::zeros(n, block);
        for j in 0..block {
            let col: Vec<f64> = (0..n).map(|i| q[(i, j)]).collect();
            op.apply(&col, &mut ybuf)?;
            for i in 0..n {
                aq[(i, j)] = ybuf[i];
            }
        }
        let h = q.transpose() * &aq;
        let (theta, u) = ritz(&h, sigma)?;
        x = &q * &u;
        let ax = &aq * &u;
        worst = 0.0;
        let mut done = true;
        for j in 0..k {
            let nx = col_norm(&x, j);
            let r = (0..n).map(|i| (ax[(i, j)] - theta[j] * x[(i, j)]).powi(2)).sum::<f64>().sqrt() / nx;
            let rel = r / theta[j].abs().max(scale);
            worst = worst.max(rel);
            if rel > tol {
                done = false;
            }
        }
        if done {
            return finish(p, m, &closure, &mut op, &x, &theta, k, tol, scale);
        }
        if sweep == opts.max_sweeps {
            break;
        }
    }
    Err(PlateError::NoConvergence { sweeps: opts.max_sweeps, worst })
}

/// Two steps of iterative refinement; the bordered matrix mixes PDE rows
/// scaled like `h^-4` with boundary rows scaled like `h^-1`, and plain LU
/// solves leave errors that would cap the attainable eigen residual.
fn refine(a: &SparseMatrix, lu: &DirectSolver, rhs: &[Vec<f64>], x: &mut [Vec<f64>]) -> Result<()> {
    let n = a.nrows;
    let mut ax = vec![0.0; n];
    for _ in 0..2 {
        let mut corr: Vec<Vec<f64>> = Vec::with_capacity(x.len());
        for (xj, bj) in x.iter().zip(rhs) {
            a.matvec(xj, &mut ax);
            corr.push(bj.iter().zip(&ax).map(|(b, v)| b - v).collect());
        }
        lu.solve_many(&mut corr)?;
        for (xj, cj) in x.iter_mut().zip(&corr) {
            xj.iter_mut().zip(cj).for_each(|(a, c)| *a += c);
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn finish(p: &PlateParams, m: &Mesh, closure: &Closure, op: &mut Operator, x: &Mat<f64>, theta: &[f64], k: usize, tol: f64, scale: f64) -> Result<Vec<Mode>> {
    let n = x.nrows();
    let mut vecs: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let nx = col_norm(x, j);
            (0..n).map(|i| x[(i, j)] / nx).collect()
        })
        .collect();
    // orthonormal basis inside each (near-)degenerate cluster
    let gap = 1e-6;
    let mut start = 0;
    while start < k {
        let mut end = start + 1;
        while end < k && (theta[end] - theta[start]).abs() <= gap * theta[start].abs().max(scale) {
            end += 1;
        }
        for j in start..end {
            for i in start..j {
                let d: f64 = vecs[j].iter().zip(&vecs[i]).map(|(a, b)| a * b).sum();
                let (lo, hi) = vecs.split_at_mut(j);
                hi[0].iter_mut().zip(&lo[i]).for_each(|(a, b)| *a -= d * b);
            }
            let nv = vecs[j].iter().map(|v| v * v).sum::<f64>().sqrt();
            vecs[j].iter_mut().for_each(|v| *v /= nv);
        }
        start = end;
    }
    let mut ax = vec![0.0; n];
    let mut modes = Vec::with_capacity(k);
    for v in vecs.iter_mut() {
        let big = v.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
        if big < 0.0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
        op.apply(v, &mut ax)?;
        let lambda: f64 = v.iter().zip(&ax).map(|(a, b)| a * b).sum();
        let residual = ax.iter().zip(v.iter()).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        let frequency = if lambda < 0.0 && lambda.abs() <= tol * scale { 0.0 } else { natural_frequency(lambda, p.rho_h)? };
        let mut phi = Field::zeros(m);
        for (&kk, &c) in closure.layout.pde.iter().zip(v.iter()) {
            phi.values[kk] = c;
        }
        closure.fill(&mut phi.values, 0.0, DataOrder::Homogeneous)?;
        modes.push(Mode { lambda, frequency, phi, residual });
    }
    modes.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(modes)
}

/// Count near-degenerate neighbour pairs: consecutive eigenvalues within
/// `rel` of each other, each mode used at most once.
pub fn count_degenerate_pairs(lambdas: &[f64], rel: f64) -> usize {
    let mut pairs = 0;
    let mut i = 0;
    while i + 1 < lambdas.len() {
        let (a, b) = (lambdas[i], lambdas[i + 1]);
        if (b - a).abs() <= rel * a.abs().max(b.abs()) {
            pairs += 1;
            i += 2;
        } else {
            i += 1;
        }
    }
    pairs
}

/// Zero contours of a grid function as polylines in physical coordinates.
#[derive(Debug, Clone, Default, Serialize)]
pub struct NodalLineSet {
    pub polylines: Vec<Vec<[f64; 2]>>,
}

impl NodalLineSet {
    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = &[f64; 2]> {
        self.polylines.iter().flatten()
    }
}

type EdgeKey = (usize, usize);

struct Seg {
    a: (EdgeKey, [f64; 2]),
    b: (EdgeKey, [f64; 2]),
}

/// Marching squares over the physical cells of `m`. Values with
/// `|phi| <= eps * max|phi|` count as positive, so contours through grid
/// points are reported once; segments lying on the domain boundary are
/// dropped (those are boundary conditions, not nodal lines).
pub fn nodal_lines(m: &Mesh, phi: &Field) -> NodalLineSet {
    let amax = phi.max_abs();
    if !(amax > 0.0) || !amax.is_finite() {
        return NodalLineSet::default();
    }
    let eps = 1e-9 * amax;
    let val = |i1: isize, i2: isize| {
        let v = phi.get(i1, i2);
        if v.abs() <= eps {
            0.0
        } else {
            v
        }
    };
    let pos = |v: f64| v >= 0.0;
    let (n1, n2) = (m.n1 as isize, m.n2 as isize);
    let c2 = if m.periodic2 { n2 } else { n2 - 1 };
    let to_xy = |s1: f64, s2: f64| -> [f64; 2] {
        match m.kind {
            MeshKind::Rectangle { x0, y0, .. } => [x0 + s1 * m.h1, y0 + s2 * m.h2],
            MeshKind::Annulus { r_in, .. } => {
                let r = r_in + s1 * m.h1;
                let th = s2 * m.h2;
                [r * th.cos(), r * th.sin()]
            }
        }
    };
    let on_boundary = |s1: f64, s2: f64| -> bool {
        let tol = 1e-12;
        let b1 = s1.abs() < tol || (s1 - (n1 - 1) as f64).abs() < tol;
        let b2 = !m.periodic2 && (s2.abs() < tol || (s2 - (n2 - 1) as f64).abs() < tol);
        b1 || b2
    };
    let mut segs: Vec<Seg> = Vec::new();
    for j in 0..c2 {
        for i in 0..n1 - 1 {
            // corners counter-clockwise in index space
            let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let v: Vec<f64> = c.iter().map(|&(a, b)| val(a, b)).collect();
            let s: Vec<bool> = v.iter().map(|&x| pos(x)).collect();
            let mut hits: Vec<(EdgeKey, [f64; 2], bool)> = Vec::new();
            for e in 0..4 {
                let (p, q) = (e, (e + 1) % 4);
                if s[p] == s[q] {
                    continue;
                }
                let t = v[p] / (v[p] - v[q]);
                let s1 = c[p].0 as f64 + t * (c[q].0 - c[p].0) as f64;
                let s2 = c[p].1 as f64 + t * (c[q].1 - c[p].1) as f64;
                let ka = m.cindex(c[p].0, c[p].1);
                let kb = m.cindex(c[q].0, c[q].1);
                let key = (ka.min(kb), ka.max(kb));
                let s2w = if m.periodic2 && s2 >= n2 as f64 { s2 - n2 as f64 } else { s2 };
                hits.push((key, to_xy(s1, s2w), on_boundary(s1, s2)));
            }
            let mut add = |a: &(EdgeKey, [f64; 2], bool), b: &(EdgeKey, [f64; 2], bool)| {
                if !(a.2 && b.2) {
                    segs.push(Seg { a: (a.0, a.1), b: (b.0, b.1) });
                }
            };
            match hits.len() {
                2 => add(&hits[0], &hits[1]),
                4 => {
                    // saddle: the centre value decides which corners connect
                    let centre = 0.25 * v.iter().sum::<f64>();
                    if pos(centre) == s[0] {
                        add(&hits[0], &hits[3]);
                        add(&hits[1], &hits[2]);
                    } else {
                        add(&hits[0], &hits[1]);
                        add(&hits[2], &hits[3]);
                    }
                }
                _ => {}
            }
        }
    }
    chain(segs)
}

fn chain(segs: Vec<Seg>) -> NodalLineSet {
    let mut by_key: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (i, s) in segs.iter().enumerate() {
        by_key.entry(s.a.0).or_default().push(i);
        by_key.entry(s.b.0).or_default().push(i);
    }
    let mut used = vec![false; segs.len()];
    let mut lines = Vec::new();
    for start in 0..segs.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut line = std::collections::VecDeque::new();
        line.push_back(segs[start].a.1);
        line.push_back(segs[start].b.1);
        for forward in [true, false] {
            let mut key = if forward { segs[start].b.0 } else { segs[start].a.0 };
            loop {
                let next = by_key.get(&key).and_then(|v| v.iter().copied().find(|&i| !used[i]));
                let Some(i) = next else { break };
                used[i] = true;
                let (pt, k2) = if segs[i].a.0 == key { (segs[i].b.1, segs[i].b.0) } else { (segs[i].a.1, segs[i].a.0) };
                if forward {
                    line.push_back(pt);
                } else {
                    line.push_front(pt);
                }
                key = k2;
            }
        }
        lines.push(line.into_iter().collect());
    }
    NodalLineSet { polylines: lines }
}

/// Exact eigenvalues of the discrete bending operator on the simply
/// supported `L x H` rectangle: `D (k_m^2 + k_n^2)^2` with
/// `k_m = 2 sin(m pi h1 / 2L) / h1` in the scaled form used by the grid.
pub fn supported_discrete_eigenvalue(mi: usize, ni: usize, m: &Mesh, d: f64) -> Option<f64> {
    match m.kind {
        MeshKind::Rectangle { x0, x1, y0, y1 } => {
            let km = 2.0 * (mi as f64 * PI * m.h1 / (2.0 * (x1 - x0))).sin() / m.h1;
            let kn = 2.0 * (ni as f64 * PI * m.h2 / (2.0 * (y1 - y0))).sin() / m.h2;
            let s = km * km + kn * kn;
            Some(d * s * s)
        }
        MeshKind::Annulus { .. } => None,
    }
}

/// Check that every side of `b` is of a kind for which the operator is
/// definite (no free-floating rigid motion), used only for diagnostics.
pub fn is_definite_setup(p: &PlateParams, m: &Mesh, b: &BoundarySpec) -> bool {
    p.k0 > 0.0 || !b.pins.is_empty() || m.sides().iter().any(|&s| b.kind(s) != Some(BcKind::Free))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_rectangle;

    #[test]
    fn frequency_examples() {
        assert!((natural_frequency(4.0 * PI * PI * 2.5, 2.5).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(natural_frequency(0.0, 1.0).unwrap(), 0.0);
        assert!(matches!(natural_frequency(-1.0, 1.0), Err(PlateError::NegativeEigenvalue(_))));
    }

    #[test]
    fn pair_counting() {
        assert_eq!(count_degenerate_pairs(&[1.0, 1.001, 2.0, 3.0, 3.0, 3.0], 0.005), 2);
        assert_eq!(count_degenerate_pairs(&[1.0, 2.0], 0.005), 0);
    }

    #[test]
    fn supported_square_small() {
        let m = build_rectangle(0.0, 1.0, 0.0, 1.0, 11, 11).unwrap();
        let p = PlateParams::bending(1.0, 1.0, 0.3);
        let b = BoundarySpec::uniform(&m, BcKind::Supported);
        let modes = solve_modes(&p, &m, &b, 4, 1e-11).unwrap();
        let want = [(1, 1), (1, 2), (2, 1), (2, 2)].map(|(a, c)| supported_discrete_eigenvalue(a, c, &m, 1.0).unwrap());
        for (md, w) in modes.iter().zip(want) {
            assert!((md.lambda - w).abs() < 1e-9 * w, "{} vs {w}", md.lambda);
        }
    }

    #[test]
    fn zero_field_has_no_lines() {
        let m = build_rectangle(0.0, 1.0, 0.0, 1.0, 11, 11).unwrap();
        assert!(nodal_lines(&m, &Field::zeros(&m)).is_empty());
    }

    #[test]
    fn straight_line_through_cells() {
        let m = build_rectangle(0.0, 1.0, 0.0, 1.0, 10, 10).unwrap();
        let f = Field::from_fn(&m, |_, y| y - 0.5);
        let lines = nodal_lines(&m, &f);
        assert_eq!(lines.polylines.len(), 1);
        for v in lines.vertices() {
            assert!((v[1] - 0.5).abs() < 1e-12);
        }
        assert_eq!(lines.polylines[0].len(), 10);
    }
}
