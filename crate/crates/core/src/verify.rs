//! Independent checks on computed solutions: manufactured-solution
//! convergence studies, a radial shooting oracle for constant data, and the
//! comparison (barrier) bounds that solutions must obey.

use crate::ballgrid::{build_ball_grid, Grid, Reach};
use crate::continuation::{newton_solve_with, NewtonOptions};
use crate::diffops::{Operator, ScalarField};
use crate::error::{Error, Result};
use crate::linsolve;
use crate::smallmat::SymMat;

/// Radius of the ball on which interior errors are measured.
pub const INTERIOR_RADIUS: f64 = 0.8;

fn r2(x: &[f64; 3]) -> f64 {
    x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
}

/// Closed-form exact solutions for convergence studies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MmsCase {
    /// `u = (a/2)(r^2 - 1)`.
    Quadratic { a: f64 },
    /// `u = (r^4 - 1)/4`.
    Quartic,
    /// `u = (3/2)(r^2 - 1) + 0.1 (x1^2 - x2^2)`; nonzero on the sphere.
    Offcenter,
}

const OFFCENTER_EPS: f64 = 0.1;

impl MmsCase {
    pub fn name(&self) -> &'static str {
        match self {
            MmsCase::Quadratic { .. } => "quadratic",
            MmsCase::Quartic => "quartic",
            MmsCase::Offcenter => "offcenter",
        }
    }

    pub fn exact(&self, x: &[f64; 3]) -> f64 {
        match *self {
            MmsCase::Quadratic { a } => 0.5 * a * (r2(x) - 1.0),
            MmsCase::Quartic => 0.25 * (r2(x) * r2(x) - 1.0),
            MmsCase::Offcenter => 1.5 * (r2(x) - 1.0) + OFFCENTER_EPS * (x[0] * x[0] - x[1] * x[1]),
        }
    }

    pub fn hessian(&self, x: &[f64; 3], dim: usize) -> SymMat {
        match *self {
            MmsCase::Quadratic { a } => SymMat::scaled_identity(dim, a),
            MmsCase::Quartic => {
                // grad u = r^2 x, so D^2 u = r^2 I + 2 x x^T
                let mut m = SymMat::scaled_identity(dim, r2(x));
                for i in 0..dim {
                    for j in 0..dim {
                        m.a[i][j] += 2.0 * x[i] * x[j];
                    }
                }
                m
            }
            MmsCase::Offcenter => {
                let mut m = SymMat::scaled_identity(dim, 3.0);
                m.a[0][0] += 2.0 * OFFCENTER_EPS;
                m.a[1][1] -= 2.0 * OFFCENTER_EPS;
                m
            }
        }
    }

    /// `f = det(D^2 u) + sigma tr(D^2 u)` from the closed-form Hessian.
    pub fn rhs(&self, x: &[f64; 3], dim: usize, sigma: f64) -> f64 {
        let h = self.hessian(x, dim);
        h.det() + sigma * h.trace()
    }

    /// Describes why the exact solution falls outside the admissible class
    /// for `sigma`, if it does.
    pub fn hypothesis_violation(&self, grid: &Grid, sigma: f64) -> Option<String> {
        let d = grid.dim();
        for x in grid.nodes() {
            let h = self.hessian(x, d);
            let eig = h.eigenvalues();
            let ell = h.cofactor().add(&SymMat::scaled_identity(d, sigma)).eigenvalues()[0];
            let gap = h.det() - h.trace();
            let bad = if sigma > 0.0 {
                eig[0] < 0.0 || ell <= 0.0
            } else if sigma < 0.0 {
                eig[0] <= 0.0 || gap <= 0.0
            } else {
                eig[0] <= 0.0
            };
            if bad {
                return Some(format!(
                    "at x = ({:.4}, {:.4}, {:.4}): Hessian eigenvalues {eig:?}, det - trace {gap:e}, ellipticity {ell:e}",
                    x[0], x[1], x[2]
                ));
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub nodes: usize,
    /// Sup-norm error over nodes with `|x| <= 0.8`.
    pub interior_error: f64,
    pub full_error: f64,
    /// `log2` of the interior error ratio against the previous level.
    pub rate: Option<f64>,
    pub newton_iterations: usize,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmsReport {
    pub case: MmsCase,
    pub sigma: f64,
    pub dim: usize,
    pub rows: Vec<ConvergenceRow>,
    pub hypothesis_flag: Option<String>,
}

/// Runs Newton on `G[u] = f_exact` for `h = 2^-k`, `k = coarsest ..
/// coarsest + levels`, starting from `phi0 = (3/2)(r^2 - 1)`.
pub fn mms_study(
    case: MmsCase,
    sigma: f64,
    dim: usize,
    coarsest: u32,
    levels: usize,
    strict: bool,
) -> Result<MmsReport> {
    if ![-1.0, 0.0, 1.0].contains(&sigma) {
        return Err(Error::Config(format!("sigma must be +1, 0 or -1, got {sigma}")));
    }
    if coarsest < 1 {
        return Err(Error::Config("coarsest level must be at least 1 (h <= 1/2)".into()));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    let mut flag = None;
    let opts = NewtonOptions { tol: 1e-10, max_iter: 60, ..NewtonOptions::default() };
    for level in 0..levels {
        let h = 0.5f64.powi((coarsest as usize + level) as i32);
        let grid = build_ball_grid(dim, h)?;
        if flag.is_none() {
            flag = case.hypothesis_violation(&grid, sigma);
            if let (true, Some(detail)) = (strict, &flag) {
                return Err(Error::HypothesisViolated { t: 1.0, detail: format!("{} case: {detail}", case.name()) });
            }
        }
        let op = Operator::with_boundary(&grid, sigma, grid.sample_boundary(|x| case.exact(x)));
        let rhs = ScalarField::from_fn(&grid, |x| case.rhs(x, dim, sigma));
        let exact = ScalarField::from_fn(&grid, |x| case.exact(x));
        let u0 = start_with_boundary(&op)?;
        let row = match newton_solve_with(&op, &rhs, &u0, &opts) {
            Ok(out) => {
                let mut interior: f64 = 0.0;
                let mut full: f64 = 0.0;
                for (i, x) in grid.nodes().iter().enumerate() {
                    let e = (out.u.values[i] - exact.values[i]).abs();
                    full = full.max(e);
                    if r2(x).sqrt() <= INTERIOR_RADIUS {
                        interior = interior.max(e);
                    }
                }
                let rate = rows.last().filter(|p| p.failure.is_none()).map(|p| (p.interior_error / interior).log2());
                ConvergenceRow {
                    h,
                    nodes: grid.len(),
                    interior_error: interior,
                    full_error: full,
                    rate,
                    newton_iterations: out.iterations,
                    failure: None,
                }
            }
            Err(e) => ConvergenceRow {
                h,
                nodes: grid.len(),
                interior_error: f64::NAN,
                full_error: f64::NAN,
                rate: None,
                newton_iterations: 0,
                failure: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    Ok(MmsReport { case, sigma, dim, rows, hypothesis_flag: flag })
}

/// `phi0 = (3/2)(r^2 - 1)` plus the discrete harmonic extension of the
/// operator's boundary data.
fn start_with_boundary(op: &Operator) -> Result<ScalarField> {
    let grid = op.grid();
    let mut u = ScalarField::from_fn(grid, |x| 1.5 * (r2(x) - 1.0));
    if op.boundary().iter().all(|&b| b == 0.0) {
        return Ok(u);
    }
    // Laplace(w) is affine in w: the boundary data alone contributes
    // tr H[0], and the homogeneous part is the linearization at zero.
    let zero = ScalarField::zeros(grid);
    let lap = Operator::new(grid, 1.0).linearization(&zero);
    let forcing: Vec<f64> = op.hessian(&zero).matrices.iter().map(|m| -m.trace()).collect();
    let w = linsolve::solve(&lap, &forcing, linsolve::DEFAULT_TOL, 4000)?;
    for (v, wi) in u.values.iter_mut().zip(w) {
        *v += wi;
    }
    Ok(u)
}

/// Radial profile `r -> u(r)` from the shooting oracle.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    /// `u''(0)`, the double root of the equation at the origin.
    pub curvature_at_origin: f64,
    /// `(r, u, u')` at the integrator's accepted steps, `r` increasing.
    knots: Vec<[f64; 3]>,
}

impl RadialSolution {
    pub fn at_origin(&self) -> f64 {
        self.knots[0][1]
    }

    /// Cubic Hermite interpolation of the integrated profile.
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, 1.0);
        let k = &self.knots;
        if r <= k[0][0] {
            return k[0][1] + 0.5 * self.curvature_at_origin * (r * r - k[0][0] * k[0][0]);
        }
        let i = k.partition_point(|p| p[0] < r).clamp(1, k.len() - 1);
        let (a, b) = (k[i - 1], k[i]);
        let dr = b[0] - a[0];
        let s = (r - a[0]) / dr;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * a[1] + h10 * dr * a[2] + h01 * b[1] + h11 * dr * b[2]
    }
}

/// Largest admissible root of `a^d + sigma d a = f`.
fn origin_curvature(f: f64, sigma: f64, dim: usize) -> Result<f64> {
    let g = |a: f64| a.powi(dim as i32) + sigma * dim as f64 * a - f;
    let mut lo = if sigma < 0.0 { 1.0 } else { 0.0 };
    if g(lo) > 0.0 {
        return Err(Error::Oracle(format!("no admissible curvature at the origin for f = {f}")));
    }
    let mut hi = lo + 1.0;
    while g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e8 {
            return Err(Error::Oracle("curvature bracket not found".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

type Rhs2<'a> = &'a dyn Fn(f64, &[f64; 2]) -> Result<[f64; 2]>;

/// Adaptive Dormand-Prince 5(4) integration of `y' = rhs(r, y)` from `r0` to
/// `r1`; returns the accepted `(r, y)` pairs.
fn dopri5(rhs: Rhs2, r0: f64, y0: [f64; 2], r1: f64, tol: f64) -> Result<Vec<(f64, [f64; 2])>> {
    const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] =
        [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];
    let mut out = vec![(r0, y0)];
    let (mut r, mut y) = (r0, y0);
    let mut step = r0.max(1e-8);
    let mut guard = 0usize;
    while r < r1 {
        guard += 1;
        if guard > 1_000_000 {
            return Err(Error::Oracle("integrator exceeded step budget".into()));
        }
        step = step.min(r1 - r);
        let mut k = [[0.0; 2]; 7];
        for s in 0..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                ys[0] += step * A[s][j] * kj[0];
                ys[1] += step * A[s][j] * kj[1];
            }
            k[s] = rhs(r + C[s] * step, &ys)?;
        }
        let mut y5 = y;
        let mut err: f64 = 0.0;
        for c in 0..2 {
            let mut e = 0.0;
            for s in 0..7 {
                y5[c] += step * B5[s] * k[s][c];
                e += step * (B5[s] - B4[s]) * k[s][c];
            }
            let sc = tol * (1.0 + y[c].abs().max(y5[c].abs()));
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            step *= 0.1;
            continue;
        }
        if err <= 1.0 {
            r += step;
            y = y5;
            out.push((r, y));
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        step *= factor;
        if step < 1e-300 {
            return Err(Error::Oracle("integrator step underflow".into()));
        }
    }
    Ok(out)
}

/// Radial solution of `det(D^2 u) + sigma Laplace(u) = f_const` on the unit
/// ball with `u(1) = 0`, by shooting on `u(0)`.
///
/// With `v = u'` the radial equation reads
/// `v' ((v/r)^(d-1) + sigma) = f - sigma (d-1) v / r` with `v(0) = 0`; the
/// integration starts just off the origin from the Taylor data.
pub fn radial_oracle(f_const: f64, sigma: f64, dim: usize) -> Result<RadialSolution> {
    if dim != 2 && dim != 3 {
        return Err(Error::Config(format!("radial oracle supports d = 2, 3, got {dim}")));
    }
    let a = origin_curvature(f_const, sigma, dim)?;
    let dm1 = (dim - 1) as f64;
    let rhs = move |r: f64, y: &[f64; 2]| -> Result<[f64; 2]> {
        let q = y[1] / r;
        let denom = q.powi(dim as i32 - 1) + sigma;
        if denom.abs() < 1e-12 {
            return Err(Error::Oracle(format!("radial equation degenerates at r = {r}")));
        }
        Ok([y[1], (f_const - sigma * dm1 * q) / denom])
    };
    let r0 = 1e-7;
    let shoot =
        |c: f64| -> Result<Vec<(f64, [f64; 2])>> { dopri5(&rhs, r0, [c + 0.5 * a * r0 * r0, a * r0], 1.0, 1e-13) };
    let end = |c: f64| -> Result<f64> { Ok(shoot(c)?.last().unwrap().1[0]) };

    let (mut lo, mut hi) = (-1.0, 0.0);
    let mut expand = 0;
    while end(lo)? > 0.0 {
        lo *= 2.0;
        expand += 1;
        if expand > 60 {
            return Err(Error::Oracle("shooting bracket not found".into()));
        }
    }
    while end(hi)? < 0.0 {
        hi = if hi == 0.0 { 1.0 } else { hi * 2.0 };
        expand += 1;
        if expand > 60 {
            return Err(Error::Oracle("shooting bracket not found".into()));
        }
    }
    let mut c = 0.5 * (lo + hi);
    for _ in 0..200 {
        c = 0.5 * (lo + hi);
        let e = end(c)?;
        if e.abs() < 1e-10 && hi - lo < 1e-12 {
            break;
        }
        if e < 0.0 {
            lo = c;
        } else {
            hi = c;
        }
    }
    if end(c)?.abs() >= 1e-10 {
        return Err(Error::Oracle("shooting did not converge".into()));
    }
    let mut knots = vec![[0.0, c, 0.0]];
    knots.extend(shoot(c)?.into_iter().map(|(r, y)| [r, y[0], y[1]]));
    Ok(RadialSolution { curvature_at_origin: a, knots })
}

/// Constant `A` in the barrier `u >= A(|x|^2 - 1)`.
///
/// For `sigma = +1`, `Laplace(u) <= f` gives `A = max f / (2d)`; otherwise the
/// start quadratic with parameter `mu` is a lower barrier and `A = mu / 2`.
pub fn barrier_constant(sigma: f64, dim: usize, max_f: f64, mu: f64) -> f64 {
    if sigma > 0.0 {
        max_f / (2.0 * dim as f64)
    } else {
        0.5 * mu
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierReport {
    pub a: f64,
    pub tol: f64,
    pub max_u: f64,
    /// `min_x (u - A(|x|^2 - 1))`.
    pub min_barrier_gap: f64,
    /// Largest `|u(node)| / distance` over stencil arms ending on the sphere.
    pub max_normal_quotient: f64,
    /// `max_x Laplace(u)` and `max f`, reported for `sigma = +1`.
    pub max_laplacian: Option<f64>,
    pub max_f: f64,
    pub upper_ok: bool,
    pub barrier_ok: bool,
    pub normal_ok: bool,
    pub laplacian_ok: Option<bool>,
}

impl BarrierReport {
    pub fn all_pass(&self) -> bool {
        self.upper_ok && self.barrier_ok && self.normal_ok && self.laplacian_ok.unwrap_or(true)
    }
}

/// Checks `u <= 0`, `u >= A(|x|^2 - 1)`, the boundary difference quotient
/// bound `2A` and, for `sigma = +1`, `Laplace(u) <= max f`, each up to `tol`.
pub fn barrier_check(grid: &Grid, u: &ScalarField, f: &ScalarField, sigma: f64, a: f64, tol: f64) -> BarrierReport {
    let max_u = u.max();
    let min_barrier_gap =
        grid.nodes().iter().zip(&u.values).map(|(x, v)| v - a * (r2(x) - 1.0)).fold(f64::INFINITY, f64::min);
    let h = grid.spacing();
    let mut max_normal_quotient: f64 = 0.0;
    for n in 0..grid.len() {
        for (d, dir) in grid.directions().iter().enumerate() {
            if let Reach::Boundary { theta, .. } = grid.reach(n, d) {
                let len = h * theta * ((dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]) as f64).sqrt();
                max_normal_quotient = max_normal_quotient.max(u.values[n].abs() / len);
            }
        }
    }
    let max_f = f.max();
    let max_laplacian = (sigma > 0.0).then(|| {
        Operator::new(grid, sigma).hessian(u).matrices.iter().map(|m| m.trace()).fold(f64::NEG_INFINITY, f64::max)
    });
    BarrierReport {
        a,
        tol,
        max_u,
        min_barrier_gap,
        max_normal_quotient,
        max_laplacian,
        max_f,
        upper_ok: max_u <= tol,
        barrier_ok: min_barrier_gap >= -tol,
        normal_ok: max_normal_quotient <= 2.0 * a + tol,
        laplacian_ok: max_laplacian.map(|l| l <= max_f + tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_reproduces_start_quadratic() {
        let sol = radial_oracle(36.0, 1.0, 3).unwrap();
        assert!((sol.curvature_at_origin - 3.0).abs() < 1e-12);
        assert!((sol.at_origin() + 1.5).abs() < 1e-8, "{}", sol.at_origin());
        for r in [0.1, 0.37, 0.5, 0.9, 1.0] {
            assert!((sol.eval(r) - 1.5 * (r * r - 1.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn oracle_constant_hessian_four() {
        let sol = radial_oracle(76.0, 1.0, 3).unwrap();
        assert!((sol.at_origin() + 2.0).abs() < 1e-8);
    }

    #[test]
    fn oracle_other_signs() {
        // mu = 3: 27 - 9 = 18 for sigma = -1; 27 for sigma = 0
        let s = radial_oracle(18.0, -1.0, 3).unwrap();
        assert!((s.at_origin() + 1.5).abs() < 1e-8);
        let s = radial_oracle(27.0, 0.0, 3).unwrap();
        assert!((s.at_origin() + 1.5).abs() < 1e-8);
        let s = radial_oracle(15.0, 1.0, 2).unwrap();
        assert!((s.at_origin() + 1.5).abs() < 1e-8);
    }

    #[test]
    fn oracle_general_value_is_between_quadratics() {
        // 36 < 48 < 76, so the profile sits between mu = 3 and mu = 4.
        let s = radial_oracle(48.0, 1.0, 3).unwrap();
        assert!(s.at_origin() < -1.5 && s.at_origin() > -2.0, "{}", s.at_origin());
        assert!(s.eval(1.0).abs() < 1e-10);
    }

    #[test]
    fn barrier_on_start_quadratic() {
        let g = build_ball_grid(3, 0.125).unwrap();
        let u = ScalarField::from_fn(&g, |x| 1.5 * (r2(x) - 1.0));
        let f = ScalarField::constant(&g, 36.0);
        let rep = barrier_check(&g, &u, &f, 1.0, 1.5, 1e-9);
        assert!(rep.all_pass(), "{rep:?}");
        assert!(rep.max_normal_quotient <= 3.0 + 1e-12);
        assert!((barrier_constant(1.0, 3, 36.0, 3.0) - 6.0).abs() < 1e-15);
        assert!(barrier_check(&g, &u, &f, 1.0, 6.0, 1e-9).all_pass());
        assert_eq!(barrier_constant(1.0, 3, 48.0, 3.0), 8.0);
    }

    #[test]
    fn barrier_on_zero() {
        let g = build_ball_grid(2, 0.25).unwrap();
        let z = ScalarField::zeros(&g);
        let rep = barrier_check(&g, &z, &z, -1.0, 0.0, 1e-12);
        assert!(rep.upper_ok && rep.barrier_ok && rep.normal_ok && rep.laplacian_ok.is_none());
    }

    #[test]
    fn barrier_detects_violation() {
        let g = build_ball_grid(2, 0.25).unwrap();
        let u = ScalarField::from_fn(&g, |x| 2.0 * (r2(x) - 1.0));
        let rep = barrier_check(&g, &u, &ScalarField::constant(&g, 1.0), -1.0, 1.0, 1e-9);
        assert!(!rep.barrier_ok && !rep.normal_ok && rep.upper_ok);
    }

    #[test]
    fn quadratic_mms_is_exact() {
        let rep = mms_study(MmsCase::Quadratic { a: 4.0 }, 1.0, 3, 2, 3, false).unwrap();
        assert!(rep.hypothesis_flag.is_none());
        assert_eq!(MmsCase::Quadratic { a: 4.0 }.rhs(&[0.1, 0.2, 0.3], 3, 1.0), 76.0);
        for row in &rep.rows {
            assert!(row.failure.is_none());
            assert!(row.full_error < 1e-11, "{row:?}");
        }
    }

    #[test]
    fn offcenter_mms_is_exact() {
        let rep = mms_study(MmsCase::Offcenter, 1.0, 2, 2, 3, false).unwrap();
        for row in &rep.rows {
            assert!(row.full_error < 1e-11, "{row:?}");
        }
    }

    #[test]
    fn quartic_rhs_closed_form() {
        let x = [0.3, -0.2, 0.5];
        let r2v = r2(&x);
        let f = MmsCase::Quartic.rhs(&x, 3, 1.0);
        assert!((f - (3.0 * r2v.powi(3) + 5.0 * r2v)).abs() < 1e-14);
        let e = MmsCase::Quartic.hessian(&x, 3).eigenvalues();
        assert!((e[0] - r2v).abs() < 1e-13 && (e[1] - r2v).abs() < 1e-13 && (e[2] - 3.0 * r2v).abs() < 1e-13);
    }

    #[test]
    fn quartic_negative_sigma_is_flagged() {
        match mms_study(MmsCase::Quartic, -1.0, 3, 2, 2, true) {
            Err(Error::HypothesisViolated { .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let g = build_ball_grid(3, 0.25).unwrap();
        assert!(MmsCase::Quartic.hypothesis_violation(&g, -1.0).is_some());
        assert!(MmsCase::Quartic.hypothesis_violation(&g, 1.0).is_none());
    }
}
