//! Method of continuity along `rhs(t) = t f + (1 - t) G[phi0]`.
//!
//! The start `phi0 = (mu/2)(|x|^2 - 1)` solves the `t = 0` problem exactly.
//! Each step is a damped Newton solve warm-started from the last accepted
//! iterate; the step in `t` halves on failure and doubles after cheap
//! successes. Hessian lower bounds and cone conditions are recorded at every
//! accepted step and, in strict mode, enforced.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ballgrid::Grid;
use crate::diffops::{MonitorReport, Operator, ScalarField};
use crate::error::{Error, Result};
use crate::linsolve;

/// Hessian lower bound required along the `sigma = +1` path.
pub const HESSIAN_THRESHOLD: f64 = 3.0;

/// Problem data for one continuation run.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub sigma: f64,
    pub f: ScalarField,
    pub initial_mu: f64,
    pub strict_hypotheses: bool,
}

/// Value of the operator on `phi0`: `mu^d + sigma d mu`.
pub fn start_value(sigma: f64, dim: usize, mu: f64) -> f64 {
    mu.powi(dim as i32) + sigma * dim as f64 * mu
}

/// Default `mu`: 3 for `sigma >= 0`; for `sigma = -1` the `mu > 1` solving
/// `mu^d - d mu = max f + 1`, so the start value dominates `f`.
pub fn default_mu(sigma: f64, dim: usize, max_f: f64) -> f64 {
    if sigma >= 0.0 {
        return 3.0;
    }
    let target = (max_f + 1.0).max(1.0);
    let g = |mu: f64| start_value(-1.0, dim, mu) - target;
    let (mut lo, mut hi) = (1.0, 2.0);
    while g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

impl ProblemSpec {
    /// Problem with the default starting quadratic.
    pub fn new(dim: usize, sigma: f64, f: ScalarField, strict: bool) -> Result<Self> {
        let mu = default_mu(sigma, dim, f.max());
        Self::with_mu(dim, sigma, f, mu, strict)
    }

    pub fn with_mu(dim: usize, sigma: f64, f: ScalarField, mu: f64, strict: bool) -> Result<Self> {
        let spec = ProblemSpec { sigma, f, initial_mu: mu, strict_hypotheses: strict };
        spec.validate(dim)?;
        Ok(spec)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if ![-1.0, 0.0, 1.0].contains(&self.sigma) {
            return Err(Error::Config(format!("sigma must be +1, 0 or -1, got {}", self.sigma)));
        }
        if !self.f.is_finite() {
            return Err(Error::Config("right-hand side has non-finite values".into()));
        }
        if !(self.initial_mu > 0.0 && self.initial_mu.is_finite()) {
            return Err(Error::Config(format!("mu must be positive, got {}", self.initial_mu)));
        }
        if self.sigma < 0.0 {
            let g0 = start_value(-1.0, dim, self.initial_mu);
            if g0 <= self.f.max() {
                return Err(Error::Config(format!(
                    "mu = {} gives start value {g0} which does not exceed max f = {}",
                    self.initial_mu,
                    self.f.max()
                )));
            }
        }
        Ok(())
    }

    /// Hypothesis on `f` required by strict mode.
    fn check_strict_data(&self, dim: usize) -> Result<()> {
        let min_f = self.f.min();
        if self.sigma > 0.0 {
            let bound = start_value(1.0, dim, HESSIAN_THRESHOLD);
            if min_f <= bound {
                return Err(Error::HypothesisViolated {
                    t: 0.0,
                    detail: format!("min f = {min_f} must exceed {bound}"),
                });
            }
        } else if min_f <= 0.0 {
            return Err(Error::HypothesisViolated { t: 0.0, detail: format!("min f = {min_f} must be positive") });
        }
        Ok(())
    }
}

/// `phi0 = (mu/2)(|x|^2 - 1)` at the interior nodes.
pub fn initial_solution(spec: &ProblemSpec, grid: &Grid) -> ScalarField {
    let mu = spec.initial_mu;
    ScalarField::from_fn(grid, |x| 0.5 * mu * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Sup-norm tolerance on `G[u] - rhs`.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    pub linear_tol: f64,
    pub linear_max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-8,
            max_iter: 30,
            max_halvings: 6,
            linear_tol: linsolve::DEFAULT_TOL,
            linear_max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub u: ScalarField,
    pub iterations: usize,
    pub residual: f64,
}

fn sup_residual(op: &Operator, u: &ScalarField, rhs: &ScalarField) -> f64 {
    op.apply(u).values.iter().zip(&rhs.values).map(|(g, r)| (g - r).abs()).fold(0.0, f64::max)
}

/// Damped Newton iteration for `G[u] = rhs` starting at `u0`.
///
/// A trial step is accepted when it lowers the sup-norm residual and keeps
/// the linearization elliptic; otherwise the step is halved, at most
/// `max_halvings` times.
pub fn newton_solve_with(
    op: &Operator,
    rhs: &ScalarField,
    u0: &ScalarField,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome> {
    let start_ell = op.min_ellipticity(u0);
    if !(start_ell > 0.0) {
        return Err(Error::EllipticityLost { iteration: 0, min_ellipticity: start_ell });
    }
    let mut u = u0.clone();
    let mut residual = sup_residual(op, &u, rhs);
    let mut iterations = 0;
    while residual > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::NewtonStalled { iterations, residual });
        }
        iterations += 1;
        let r: Vec<f64> = op.apply(&u).values.iter().zip(&rhs.values).map(|(g, f)| f - g).collect();
        let jac = op.linearization(&u);
        let w = linsolve::solve(&jac, &r, opts.linear_tol, opts.linear_max_iter)?;
        let mut alpha = 1.0;
        let mut accepted = None;
        let mut last_ell = f64::NAN;
        for _ in 0..=opts.max_halvings {
            let trial = ScalarField::new(u.values.iter().zip(&w).map(|(a, b)| a + alpha * b).collect());
            let res = sup_residual(op, &trial, rhs);
            if res.is_finite() && res < residual {
                last_ell = op.min_ellipticity(&trial);
                if last_ell > 0.0 {
                    accepted = Some((trial, res));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((trial, res)) => {
                u = trial;
                residual = res;
            }
            None if last_ell <= 0.0 => {
                return Err(Error::EllipticityLost { iteration: iterations, min_ellipticity: last_ell });
            }
            None => return Err(Error::NewtonStalled { iterations, residual }),
        }
    }
    Ok(NewtonOutcome { u, iterations, residual })
}

/// Newton solve with homogeneous Dirichlet data.
pub fn newton_solve(
    spec: &ProblemSpec,
    grid: &Grid,
    rhs: &ScalarField,
    u0: &ScalarField,
    tol: f64,
    max_iter: usize,
) -> Result<NewtonOutcome> {
    let op = Operator::new(grid, spec.sigma);
    let opts = NewtonOptions { tol, max_iter, ..NewtonOptions::default() };
    newton_solve_with(&op, rhs, u0, &opts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    pub t_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Successful steps using at most this many Newton iterations double the step.
    pub fast_iterations: usize,
    pub newton: NewtonOptions,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            t_step: 0.1,
            min_step: 1e-4,
            max_step: 0.25,
            fast_iterations: 3,
            newton: NewtonOptions::default(),
        }
    }
}

/// One accepted point on the continuation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub newton_iterations: usize,
    pub residual_sup: f64,
    pub monitors: MonitorReport,
}

#[derive(Debug, Clone)]
pub struct ContinuationState {
    pub t: f64,
    pub u: ScalarField,
    pub step: f64,
    pub history: Vec<StepRecord>,
    /// Hypothesis violations observed in warn mode, as `(t, description)`.
    pub violations: Vec<(f64, String)>,
}

/// Continuation driver with inspectable state, also after a failure.
pub struct Continuation<'a> {
    spec: &'a ProblemSpec,
    grid: &'a Grid,
    opts: ContinuationOptions,
    start_rhs: ScalarField,
    state: ContinuationState,
}

impl<'a> Continuation<'a> {
    pub fn new(spec: &'a ProblemSpec, grid: &'a Grid, opts: ContinuationOptions) -> Result<Self> {
        spec.validate(grid.dim())?;
        if spec.f.len() != grid.len() {
            return Err(Error::Config(format!("f has {} values for {} nodes", spec.f.len(), grid.len())));
        }
        if !(opts.t_step > 0.0 && opts.t_step <= 1.0) {
            return Err(Error::Config(format!("initial step must lie in (0, 1], got {}", opts.t_step)));
        }
        let op = Operator::new(grid, spec.sigma);
        let u = initial_solution(spec, grid);
        let start_rhs = op.apply(&u);
        let monitors = op.monitors(&u, &start_rhs);
        let state = ContinuationState {
            t: 0.0,
            step: opts.t_step.min(opts.max_step),
            history: vec![StepRecord { t: 0.0, newton_iterations: 0, residual_sup: monitors.residual_sup, monitors }],
            u,
            violations: Vec::new(),
        };
        Ok(Continuation { spec, grid, opts, start_rhs, state })
    }

    pub fn state(&self) -> &ContinuationState {
        &self.state
    }

    pub fn into_state(self) -> ContinuationState {
        self.state
    }

    /// Right-hand side at `t`, formed from the convex combination directly.
    pub fn rhs_at(&self, t: f64) -> ScalarField {
        let values =
            self.spec.f.values.iter().zip(&self.start_rhs.values).map(|(f, g0)| t * f + (1.0 - t) * g0).collect();
        ScalarField::new(values)
    }

    fn hypothesis_failures(&self, m: &MonitorReport) -> Option<String> {
        if self.spec.sigma > 0.0 {
            (m.min_hessian_eig <= HESSIAN_THRESHOLD)
                .then(|| format!("min Hessian eigenvalue {} <= {HESSIAN_THRESHOLD}", m.min_hessian_eig))
        } else if self.spec.sigma < 0.0 {
            if m.min_hessian_eig <= 0.0 {
                Some(format!("min Hessian eigenvalue {} <= 0", m.min_hessian_eig))
            } else if m.min_cone_gap <= 0.0 {
                Some(format!("min det - trace {} <= 0", m.min_cone_gap))
            } else {
                None
            }
        } else {
            (m.min_hessian_eig <= 0.0).then(|| format!("min Hessian eigenvalue {} <= 0", m.min_hessian_eig))
        }
    }

    /// Runs to `t = 1`.
    pub fn run(&mut self) -> Result<()> {
        if self.spec.strict_hypotheses {
            self.spec.check_strict_data(self.grid.dim())?;
        }
        let op = Operator::new(self.grid, self.spec.sigma);
        while self.state.t < 1.0 {
            let t_try = (self.state.t + self.state.step).min(1.0);
            let rhs = self.rhs_at(t_try);
            match newton_solve_with(&op, &rhs, &self.state.u, &self.opts.newton) {
                Ok(out) => {
                    let monitors = op.monitors(&out.u, &rhs);
                    if let Some(detail) = self.hypothesis_failures(&monitors) {
                        if self.spec.strict_hypotheses {
                            return Err(Error::HypothesisViolated { t: t_try, detail });
                        }
                        self.state.violations.push((t_try, detail));
                    }
                    self.state.history.push(StepRecord {
                        t: t_try,
                        newton_iterations: out.iterations,
                        residual_sup: out.residual,
                        monitors,
                    });
                    self.state.t = t_try;
                    self.state.u = out.u;
                    if out.iterations <= self.opts.fast_iterations {
                        self.state.step = (2.0 * self.state.step).min(self.opts.max_step);
                    }
                }
                Err(Error::Config(msg)) => return Err(Error::Config(msg)),
                Err(_) => {
                    self.state.step *= 0.5;
                    if self.state.step < self.opts.min_step {
                        return Err(Error::ContinuationStalled { t: self.state.t, step: self.state.step });
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn run_continuation(spec: &ProblemSpec, grid: &Grid, opts: ContinuationOptions) -> Result<ContinuationState> {
    let mut c = Continuation::new(spec, grid, opts)?;
    c.run()?;
    Ok(c.into_state())
}

/// Result of one restart in [`uniqueness_probe`].
#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: u64,
    pub amplitude: f64,
    pub result: Result<NewtonOutcome>,
}

#[derive(Debug, Clone)]
pub struct UniquenessReport {
    /// Largest pairwise sup-distance between converged restarts.
    pub max_pairwise: f64,
    pub seeds: Vec<SeedOutcome>,
}

impl UniquenessReport {
    pub fn converged(&self) -> usize {
        self.seeds.iter().filter(|s| s.result.is_ok()).count()
    }
}

/// Smooth field vanishing on the sphere with seeded random coefficients.
fn perturbation(grid: &Grid, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
    ScalarField::from_fn(grid, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        (1.0 - r2) * (c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[2] + c[4] * (3.0 * x[0] * x[1]).sin())
    })
}

/// Re-solves the `t = 1` problem from `n_seeds` perturbed starts and reports
/// how far apart the converged solutions are.
pub fn uniqueness_probe(spec: &ProblemSpec, grid: &Grid, n_seeds: usize, seed: u64) -> UniquenessReport {
    let op = Operator::new(grid, spec.sigma);
    let phi0 = initial_solution(spec, grid);
    let opts = NewtonOptions { tol: 1e-10, max_iter: 60, ..NewtonOptions::default() };
    let mut seeds = Vec::with_capacity(n_seeds);
    for k in 0..n_seeds as u64 {
        let s = seed.wrapping_add(k);
        let p = perturbation(grid, s);
        let pmax = op
            .hessian(&p)
            .matrices
            .iter()
            .map(|m| m.eigenvalues().iter().fold(0.0f64, |a, e| a.max(e.abs())))
            .fold(0.0, f64::max)
            .max(1e-12);
        let mut amplitude = 0.25 * spec.initial_mu / pmax;
        let mut start = phi0.clone();
        for _ in 0..30 {
            start = ScalarField::new(phi0.values.iter().zip(&p.values).map(|(a, b)| a + amplitude * b).collect());
            if op.min_ellipticity(&start) > 0.0 {
                break;
            }
            amplitude *= 0.5;
        }
        let result = newton_solve_with(&op, &spec.f, &start, &opts);
        seeds.push(SeedOutcome { seed: s, amplitude, result });
    }
    let solved: Vec<&ScalarField> = seeds.iter().filter_map(|s| s.result.as_ref().ok().map(|o| &o.u)).collect();
    let mut max_pairwise: f64 = 0.0;
    for i in 0..solved.len() {
        for j in (i + 1)..solved.len() {
            max_pairwise = max_pairwise.max(solved[i].sup_distance(solved[j]));
        }
    }
    UniquenessReport { max_pairwise, seeds }
}
