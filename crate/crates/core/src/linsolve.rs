//! Sparse nonsymmetric linear solves.
//!
//! The primary path is right-preconditioned BiCGStab with an ILU(0)
//! preconditioner. Systems with at most [`DIRECT_LIMIT`] unknowns fall back to
//! a banded LU factorization with partial pivoting when the Krylov iteration
//! breaks down or runs out of iterations.

use crate::error::{Error, Result};

/// Largest system handed to the banded direct solver.
pub const DIRECT_LIMIT: usize = 2000;

/// Default relative residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Compressed sparse row matrix. Columns within a row are sorted and unique
/// and every diagonal entry is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<usize>,
}

impl SparseOperator {
    /// Builds a matrix from per-row `(column, value)` lists. Duplicate columns
    /// are summed and missing diagonals are inserted as explicit zeros.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut diag = Vec::with_capacity(n);
        row_ptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.push((i, 0.0));
            row.sort_by_key(|e| e.0);
            let start = cols.len();
            for (c, v) in row {
                assert!(c < n, "column {c} out of range for n = {n}");
                if cols.len() > start && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            let d = start + cols[start..].binary_search(&i).expect("diagonal inserted");
            diag.push(d);
            row_ptr.push(cols.len());
        }
        SparseOperator { n, row_ptr, cols, vals, diag }
    }

    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); n];
        for &(r, c, v) in triplets {
            rows[r].push((c, v));
        }
        Self::from_rows(rows)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_rows((0..n).map(|i| vec![(i, 1.0)]).collect())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// Entry `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// `||A x - b||_2`.
    pub fn residual_norm(&self, x: &[f64], b: &[f64]) -> f64 {
        let ax = self.matvec(x);
        norm2(&ax.iter().zip(b).map(|(a, b)| a - b).collect::<Vec<_>>())
    }

    fn bandwidths(&self) -> (usize, usize) {
        let (mut lower, mut upper) = (0, 0);
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if j < i {
                    lower = lower.max(i - j);
                } else {
                    upper = upper.max(j - i);
                }
            }
        }
        (lower, upper)
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Incomplete LU factorization with the sparsity pattern of `A`.
struct Ilu0 {
    lu: Vec<f64>,
}

impl Ilu0 {
    fn new(a: &SparseOperator) -> Option<Self> {
        let mut lu = a.vals.clone();
        let mut pos = vec![usize::MAX; a.n];
        for i in 0..a.n {
            let (start, end) = (a.row_ptr[i], a.row_ptr[i + 1]);
            for k in start..end {
                pos[a.cols[k]] = k;
            }
            for k in start..a.diag[i] {
                let col = a.cols[k];
                let pivot = lu[a.diag[col]];
                let factor = lu[k] / pivot;
                lu[k] = factor;
                for m in (a.diag[col] + 1)..a.row_ptr[col + 1] {
                    let p = pos[a.cols[m]];
                    if p != usize::MAX {
                        lu[p] -= factor * lu[m];
                    }
                }
            }
            for k in start..end {
                pos[a.cols[k]] = usize::MAX;
            }
            let d = lu[a.diag[i]];
            if d == 0.0 || !d.is_finite() {
                return None;
            }
        }
        Some(Ilu0 { lu })
    }

    fn apply(&self, a: &SparseOperator, r: &[f64], z: &mut [f64]) {
        for i in 0..a.n {
            let mut s = r[i];
            for k in a.row_ptr[i]..a.diag[i] {
                s -= self.lu[k] * z[a.cols[k]];
            }
            z[i] = s;
        }
        for i in (0..a.n).rev() {
            let mut s = z[i];
            for k in (a.diag[i] + 1)..a.row_ptr[i + 1] {
                s -= self.lu[k] * z[a.cols[k]];
            }
            z[i] = s / self.lu[a.diag[i]];
        }
    }
}

enum Preconditioner {
    Ilu(Ilu0),
    Jacobi(Vec<f64>),
    Identity,
}

impl Preconditioner {
    fn build(a: &SparseOperator) -> Self {
        if let Some(ilu) = Ilu0::new(a) {
            return Preconditioner::Ilu(ilu);
        }
        let d: Vec<f64> = (0..a.n).map(|i| a.vals[a.diag[i]]).collect();
        if d.iter().all(|x| *x != 0.0 && x.is_finite()) {
            Preconditioner::Jacobi(d.iter().map(|x| 1.0 / x).collect())
        } else {
            Preconditioner::Identity
        }
    }

    fn apply(&self, a: &SparseOperator, r: &[f64], z: &mut [f64]) {
        match self {
            Preconditioner::Ilu(ilu) => ilu.apply(a, r, z),
            Preconditioner::Jacobi(inv) => {
                for ((zi, ri), d) in z.iter_mut().zip(r).zip(inv) {
                    *zi = ri * d;
                }
            }
            Preconditioner::Identity => z.copy_from_slice(r),
        }
    }
}

/// Outcome of a Krylov iteration that did not converge.
struct KrylovFailure {
    iterations: usize,
    residual: f64,
}

fn bicgstab(a: &SparseOperator, b: &[f64], tol: f64, max_iter: usize) -> std::result::Result<Vec<f64>, KrylovFailure> {
    let n = a.n;
    let bnorm = norm2(b);
    let target = tol * bnorm;
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    if bnorm == 0.0 {
        return Ok(x);
    }
    let precond = Preconditioner::build(a);
    let mut r_hat = r.clone();
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut rnorm = bnorm;

    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() <= 1e-300 || rho_new.abs() < 1e-14 * norm2(&r_hat) * rnorm {
            // r has become orthogonal to the shadow residual: restart.
            a.matvec_into(&x, &mut t);
            for i in 0..n {
                r[i] = b[i] - t[i];
            }
            rnorm = norm2(&r);
            if rnorm <= target {
                return Ok(x);
            }
            r_hat.copy_from_slice(&r);
            p.iter_mut().for_each(|e| *e = 0.0);
            v.iter_mut().for_each(|e| *e = 0.0);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            let rho_restart = dot(&r_hat, &r);
            if rho_restart == 0.0 {
                return Err(KrylovFailure { iterations: it, residual: rnorm / bnorm });
            }
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond.apply(a, &p, &mut p_hat);
        a.matvec_into(&p_hat, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 || !rv.is_finite() {
            return Err(KrylovFailure { iterations: it, residual: rnorm / bnorm });
        }
        alpha = rho / rv;
        for i in 0..n {
            r[i] -= alpha * v[i];
            x[i] += alpha * p_hat[i];
        }
        let snorm = norm2(&r);
        if snorm <= target && a.residual_norm(&x, b) <= target {
            return Ok(x);
        }
        precond.apply(a, &r, &mut s_hat);
        a.matvec_into(&s_hat, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 || !tt.is_finite() {
            return Err(KrylovFailure { iterations: it, residual: snorm / bnorm });
        }
        omega = dot(&t, &r) / tt;
        for i in 0..n {
            x[i] += omega * s_hat[i];
            r[i] -= omega * t[i];
        }
        rnorm = norm2(&r);
        if !rnorm.is_finite() {
            return Err(KrylovFailure { iterations: it, residual: f64::INFINITY });
        }
        if rnorm <= target {
            // Guard against drift of the recursively updated residual.
            a.matvec_into(&x, &mut t);
            for i in 0..n {
                r[i] = b[i] - t[i];
            }
            rnorm = norm2(&r);
            if rnorm <= target {
                return Ok(x);
            }
        }
        if omega == 0.0 {
            return Err(KrylovFailure { iterations: it, residual: rnorm / bnorm });
        }
    }
    Err(KrylovFailure { iterations: max_iter, residual: a.residual_norm(&x, b) / bnorm })
}

/// Banded LU with partial pivoting. Returns `None` for a singular matrix.
pub fn solve_banded(a: &SparseOperator, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.n;
    let (kl, ku) = a.bandwidths();
    // Row i stores columns i-kl ..= i+ku+kl (pivoting widens the upper band).
    let width = 2 * kl + ku + 1;
    let idx = |i: usize, j: usize| i * width + (j + kl - i);
    let mut band = vec![0.0; n * width];
    for i in 0..n {
        for (j, v) in a.row(i) {
            band[idx(i, j)] = v;
        }
    }
    let mut x = b.to_vec();
    let scale = band.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for k in 0..n {
        let last = (k + kl).min(n - 1);
        let mut piv = k;
        let mut best = band[idx(k, k)].abs();
        for i in (k + 1)..=last {
            let v = band[idx(i, k)].abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best <= 1e-14 * scale {
            return None;
        }
        let jmax = (k + kl + ku).min(n - 1);
        if piv != k {
            for j in k..=jmax {
                band.swap(idx(k, j), idx(piv, j));
            }
            x.swap(k, piv);
        }
        let pivot = band[idx(k, k)];
        for i in (k + 1)..=last {
            let f = band[idx(i, k)] / pivot;
            if f == 0.0 {
                continue;
            }
            band[idx(i, k)] = 0.0;
            for j in (k + 1)..=jmax {
                band[idx(i, j)] -= f * band[idx(k, j)];
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let jmax = (k + kl + ku).min(n - 1);
        let mut s = x[k];
        for j in (k + 1)..=jmax {
            s -= band[idx(k, j)] * x[j];
        }
        x[k] = s / band[idx(k, k)];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Solves `A x = b` to `||A x - b||_2 <= tol ||b||_2`.
pub fn solve(a: &SparseOperator, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    assert_eq!(b.len(), a.n, "right-hand side length mismatch");
    if !(tol > 0.0) {
        return Err(Error::Config(format!("linear tolerance must be positive, got {tol}")));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("right-hand side has non-finite entries".into()));
    }
    let bnorm = norm2(b);
    let failure = match bicgstab(a, b, tol, max_iter) {
        Ok(x) => {
            debug_assert!(a.residual_norm(&x, b) <= tol * bnorm);
            return Ok(x);
        }
        Err(f) => f,
    };
    if a.n <= DIRECT_LIMIT {
        if let Some(x) = solve_banded(a, b) {
            let res = a.residual_norm(&x, b);
            if res <= tol * bnorm {
                return Ok(x);
            }
            return Err(Error::LinearSolve { iterations: failure.iterations, residual: res / bnorm });
        }
    }
    Err(Error::LinearSolve { iterations: failure.iterations, residual: failure.residual })
}
