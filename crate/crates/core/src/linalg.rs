//! Sparse matrices and linear solvers.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{PlateError, Result};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseMatrix {
    /// Build from `(row, col, value)` triplets; duplicates are summed and
    /// explicit zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trips: Vec<(usize, usize, f64)>) -> Self {
        trips.sort_unstable_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut values: Vec<f64> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trips {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        let mut m = SparseMatrix { nrows, ncols, indptr, indices, values };
        m.drop_zeros();
        m
    }

    fn drop_zeros(&mut self) {
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.values[k] != 0.0 {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |k| (self.indices[k], self.values[k]))
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        for (r, yr) in y.iter_mut().enumerate().take(self.nrows) {
            let mut s = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                s += self.values[k] * x[self.indices[k]];
            }
            *yr = s;
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows).map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|r| self.row(r).find(|&(c, _)| c == r).map(|(_, v)| v).unwrap_or(0.0)).collect()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(cc, _)| cc == c).map(|(_, v)| v).unwrap_or(0.0)
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let trips: Vec<Triplet<usize, usize, f64>> = (0..self.nrows).flat_map(|r| self.row(r).map(move |(c, v)| Triplet::new(r, c, v))).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trips).map_err(|e| PlateError::Solver(format!("sparse matrix creation failed: {e:?}")))
    }
}

/// Sparse LU factorization with partial pivoting.
pub struct DirectSolver {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl DirectSolver {
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(PlateError::Solver(format!("matrix is {}x{}, not square", a.nrows, a.ncols)));
        }
        let lu = a.to_faer()?.sp_lu().map_err(|e| PlateError::Solver(format!("sparse LU failed: {e:?}")))?;
        Ok(DirectSolver { n: a.nrows, lu })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve in place; `b` becomes `x`.
    pub fn solve(&self, b: &mut [f64]) -> Result<()> {
        if self.n == 0 {
            return Ok(());
        }
        let mut rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(rhs.as_mut());
        for (i, v) in b.iter_mut().enumerate() {
            *v = rhs[(i, 0)];
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(PlateError::Solver("non-finite solution (singular matrix?)".into()));
        }
        Ok(())
    }

    /// Solve for several right-hand sides stored as columns.
    pub fn solve_many(&self, cols: &mut [Vec<f64>]) -> Result<()> {
        if cols.is_empty() || self.n == 0 {
            return Ok(());
        }
        let mut rhs = Mat::<f64>::from_fn(self.n, cols.len(), |i, j| cols[j][i]);
        self.lu.solve_in_place(rhs.as_mut());
        for (j, c) in cols.iter_mut().enumerate() {
            for (i, v) in c.iter_mut().enumerate() {
                *v = rhs[(i, j)];
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(PlateError::Solver("non-finite solution (singular matrix?)".into()));
            }
        }
        Ok(())
    }
}

/// Jacobi-preconditioned BiCGSTAB. Returns the iteration count.
pub fn bicgstab(a: &SparseMatrix, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<usize> {
    let n = b.len();
    let dinv: Vec<f64> = a.diagonal().iter().map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>();
    let norm = |u: &[f64]| dot(u, u).sqrt();

    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    if norm(&r) <= tol * bnorm {
        return Ok(0);
    }
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 1..=max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new == 0.0 {
            return Err(PlateError::Solver("BiCGSTAB breakdown (rho = 0)".into()));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = dinv[i] * p[i];
        }
        a.matvec(&y, &mut v);
        alpha = rho / dot(&r0, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= tol * bnorm {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            return Ok(it);
        }
        for i in 0..n {
            z[i] = dinv[i] * s[i];
        }
        a.matvec(&z, &mut t);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm(&r) <= tol * bnorm {
            return Ok(it);
        }
        if omega == 0.0 || !omega.is_finite() {
            return Err(PlateError::Solver("BiCGSTAB breakdown (omega = 0)".into()));
        }
    }
    Err(PlateError::Solver(format!("BiCGSTAB did not converge in {max_iter} iterations")))
}

/// Linear solver choice for repeated solves with one matrix.
// one per simulation, so the variant size gap does not matter
#[allow(clippy::large_enum_variant)]
pub enum LinearSolver {
    Direct(DirectSolver),
    Iterative { matrix: SparseMatrix, tol: f64, max_iter: usize },
}

impl LinearSolver {
    pub fn solve(&self, b: &mut [f64]) -> Result<()> {
        match self {
            LinearSolver::Direct(d) => d.solve(b),
            LinearSolver::Iterative { matrix, tol, max_iter } => {
                let rhs = b.to_vec();
                let mut x = vec![0.0; rhs.len()];
                bicgstab(matrix, &rhs, &mut x, *tol, *max_iter)?;
                b.copy_from_slice(&x);
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson_1d(n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.5));
            }
        }
        SparseMatrix::from_triplets(n, n, t)
    }

    #[test]
    fn duplicates_are_summed() {
        let m = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 1, 1.0), (1, 0, 0.0)]);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn direct_and_iterative_agree() {
        let n = 50;
        let a = poisson_1d(n);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut x1 = b.clone();
        DirectSolver::factor(&a).unwrap().solve(&mut x1).unwrap();
        let mut x2 = vec![0.0; n];
        bicgstab(&a, &b, &mut x2, 1e-13, 500).unwrap();
        let mut r = vec![0.0; n];
        a.matvec(&x1, &mut r);
        for i in 0..n {
            assert!((r[i] - b[i]).abs() < 1e-12);
            assert!((x1[i] - x2[i]).abs() < 1e-10);
        }
    }
}
