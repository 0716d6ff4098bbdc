//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use mongeamp::continuation::{
    initial_solution, newton_solve_with, run_continuation, uniqueness_probe, ContinuationOptions, ContinuationState,
    NewtonOptions, ProblemSpec,
};
use mongeamp::pointalg;
use mongeamp::verify::{barrier_check, barrier_constant, mms_study, radial_oracle, MmsCase};
use mongeamp::{build_ball_grid, Grid, Operator, ScalarField};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn r2(x: &[f64; 3]) -> f64 {
    x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
}

struct Run {
    grid: Grid,
    spec: ProblemSpec,
    state: Result<ContinuationState, String>,
    elapsed: Duration,
}

fn continuation_run(dim: usize, h: f64, sigma: f64, f: impl Fn(&[f64; 3]) -> f64) -> Run {
    let grid = build_ball_grid(dim, h).expect("grid");
    let spec = ProblemSpec::new(dim, sigma, ScalarField::from_fn(&grid, f), true).expect("spec");
    let start = Instant::now();
    let state = run_continuation(&spec, &grid, ContinuationOptions::default()).map_err(|e| e.to_string());
    Run { grid, spec, state, elapsed: start.elapsed() }
}

fn anchor() -> Outcome {
    let start = Instant::now();
    let grid = build_ball_grid(3, 1.0 / 16.0).unwrap();
    let spec = ProblemSpec::with_mu(3, 1.0, ScalarField::constant(&grid, 48.0), 3.0, false).unwrap();
    let g0 = Operator::new(&grid, 1.0).apply(&initial_solution(&spec, &grid));
    let err = g0.values.iter().map(|v| (v - 36.0).abs()).fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    check(err <= 1e-12 && secs < 1.0, format!("max |G[phi0] - 36| = {err:e}, {secs:.3} s"))
}

fn quadratic_exactness() -> Outcome {
    let grid = build_ball_grid(3, 1.0 / 16.0).unwrap();
    let opts = NewtonOptions { tol: 1e-11, max_iter: 60, ..NewtonOptions::default() };
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    let mut failures = Vec::new();
    for sigma in [1.0, -1.0] {
        for mu in [3.0, 3.5, 4.0, 5.0] {
            let start = Instant::now();
            let op = Operator::new(&grid, sigma);
            let rhs = ScalarField::constant(&grid, mu * mu * mu + 3.0 * sigma * mu);
            let u0 = ScalarField::from_fn(&grid, |x| 1.5 * (r2(x) - 1.0));
            let exact = ScalarField::from_fn(&grid, |x| 0.5 * mu * (r2(x) - 1.0));
            match newton_solve_with(&op, &rhs, &u0, &opts) {
                Ok(out) => worst = worst.max(out.u.sup_distance(&exact)),
                Err(e) => failures.push(format!("sigma={sigma} mu={mu}: {e}")),
            }
            slowest = slowest.max(start.elapsed().as_secs_f64());
        }
    }
    check(
        failures.is_empty() && worst < 1e-10 && slowest < 5.0,
        format!("max sup error {worst:e}, slowest case {slowest:.2} s {failures:?}"),
    )
}

fn oracle_agreement(run: &Run) -> Outcome {
    let state = match &run.state {
        Ok(s) => s,
        Err(e) => return check(false, e.clone()),
    };
    let oracle = match radial_oracle(48.0, 1.0, 3) {
        Ok(o) => o,
        Err(e) => return check(false, e.to_string()),
    };
    let center = run.grid.find([0, 0, 0]).unwrap();
    let err = (state.u.values[center] - oracle.at_origin()).abs();
    let res = state.history.last().unwrap().residual_sup;
    let secs = run.elapsed.as_secs_f64();
    check(
        state.t == 1.0 && res <= 1e-8 && err <= 2e-3 && secs < 120.0,
        format!(
            "t = {}, residual {res:e}, u(0) = {} vs oracle {} (|diff| {err:e}), {secs:.2} s",
            state.t,
            state.u.values[center],
            oracle.at_origin()
        ),
    )
}

fn hypothesis_tracking(run: &Run) -> Outcome {
    let state = match &run.state {
        Ok(s) => s,
        Err(e) => return check(false, e.clone()),
    };
    let accepted: Vec<_> = state.history.iter().filter(|r| r.t > 0.0).collect();
    let monitored = accepted.iter().filter(|r| r.monitors.min_hessian_eig.is_finite()).count();
    let min_eig = accepted.iter().map(|r| r.monitors.min_hessian_eig).fold(f64::INFINITY, f64::min);
    check(
        !accepted.is_empty() && monitored == accepted.len() && min_eig > 3.0,
        format!("{monitored}/{} accepted steps monitored, min Hessian eigenvalue {min_eig}", accepted.len()),
    )
}

fn negative_sigma_solves(runs: &[(&str, &Run)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, run) in runs {
        match &run.state {
            Ok(s) => {
                let m = &s.history.last().unwrap().monitors;
                let tol = 1e-8;
                let min_f = run.spec.f.min();
                let ok = s.t == 1.0
                    && m.residual_sup <= tol
                    && m.min_hessian_eig > 0.0
                    && m.min_cone_gap > 0.0
                    && m.min_cone_gap >= min_f - 10.0 * tol
                    && s.u.max() <= 0.0
                    && run.elapsed.as_secs_f64() < 120.0;
                pass &= ok;
                parts.push(format!(
                    "{name}: residual {:e}, min eig {:.6}, cone gap {:.6}, max u {:.3e}, {:.2} s",
                    m.residual_sup,
                    m.min_hessian_eig,
                    m.min_cone_gap,
                    s.u.max(),
                    run.elapsed.as_secs_f64()
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    check(pass, parts.join("; "))
}

fn uniqueness(runs: &[(&str, &Run)]) -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, run) in runs {
        let rep = uniqueness_probe(&run.spec, &run.grid, 3, 2024);
        let mut max = rep.max_pairwise;
        if let Ok(s) = &run.state {
            for seed in rep.seeds.iter().filter_map(|s| s.result.as_ref().ok()) {
                max = max.max(seed.u.sup_distance(&s.u));
            }
        }
        pass &= rep.converged() == 3 && max <= 1e-6;
        parts.push(format!("{name}: {}/3 converged, max distance {max:e}", rep.converged()));
    }
    let secs = start.elapsed().as_secs_f64();
    check(pass && secs < 300.0, format!("{}, {secs:.2} s", parts.join("; ")))
}

fn concavity() -> Outcome {
    let start = Instant::now();
    let real = pointalg::sample_concavity_real(10_000, 1);
    let complex = pointalg::sample_concavity_complex(10_000, 1, 3.01);
    let witness = pointalg::search_real_witness(10_000, 1);
    let secs = start.elapsed().as_secs_f64();
    let complex_ok = complex.as_ref().map(|c| c.violations == 0).unwrap_or(false);
    check(
        real.violations == 0 && complex_ok && witness.is_some() && secs < 30.0,
        format!(
            "real: {} violations (worst {:e}); complex: {}; witness {:?}; {secs:.2} s",
            real.violations,
            real.worst_normalized,
            match &complex {
                Ok(c) => format!("{} violations (worst {:e})", c.violations, c.worst_normalized),
                Err(e) => e.to_string(),
            },
            witness.map(|w| (w.lambda, w.v, w.value))
        ),
    )
}

fn identities() -> Outcome {
    let start = Instant::now();
    let n2 = pointalg::sample_n2_identity(1000, 1);
    let n3 = pointalg::sample_n3_reduction(1000, 1);
    let secs = start.elapsed().as_secs_f64();
    check(
        n2.max_relative_residual < 1e-12 && n3.max_relative_residual < 1e-12 && secs < 10.0,
        format!(
            "n=2 max relative residual {:e}, n=3 {:e}, {secs:.2} s",
            n2.max_relative_residual, n3.max_relative_residual
        ),
    )
}

fn mms_convergence() -> Outcome {
    let start = Instant::now();
    let rep = match mms_study(MmsCase::Quartic, 1.0, 3, 3, 3, false) {
        Ok(r) => r,
        Err(e) => return check(false, e.to_string()),
    };
    let secs = start.elapsed().as_secs_f64();
    let rows: Vec<String> =
        rep.rows.iter().map(|r| format!("h={} err={:e} rate={:?}", r.h, r.interior_error, r.rate)).collect();
    let rate = rep.rows.last().and_then(|r| r.rate).unwrap_or(f64::NAN);
    check(
        rep.rows.iter().all(|r| r.failure.is_none()) && rate >= 1.7 && secs < 600.0,
        format!("{}, {secs:.2} s", rows.join("; ")),
    )
}

fn barriers(runs: &[(&str, &Run)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, run) in runs {
        let Ok(state) = &run.state else {
            pass = false;
            parts.push(format!("{name}: no endpoint"));
            continue;
        };
        let h = run.grid.spacing();
        let tol = 1e-6 + 10.0 * h * h;
        let sigma = run.spec.sigma;
        let a = barrier_constant(sigma, run.grid.dim(), run.spec.f.max(), run.spec.initial_mu);
        let rep = barrier_check(&run.grid, &state.u, &run.spec.f, sigma, a, tol);
        pass &= rep.all_pass();
        parts.push(format!(
            "{name}: A={a:.4} max u {:.2e}, barrier gap {:.2e}, normal quotient {:.4} <= {:.4}, laplacian {:?} <= {}",
            rep.max_u,
            rep.min_barrier_gap,
            rep.max_normal_quotient,
            2.0 * a + tol,
            rep.max_laplacian,
            rep.max_f + tol
        ));
    }
    check(pass, parts.join("; "))
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    results.push((1, "path anchor", anchor()));
    results.push((2, "quadratic exactness", quadratic_exactness()));

    let run48 = continuation_run(3, 1.0 / 16.0, 1.0, |_| 48.0);
    results.push((3, "oracle agreement", oracle_agreement(&run48)));
    results.push((4, "hypothesis tracking", hypothesis_tracking(&run48)));

    let run_c = continuation_run(2, 1.0 / 32.0, -1.0, |_| 1.0);
    let run_x = continuation_run(2, 1.0 / 32.0, -1.0, |x| 1.0 + x[0] * x[0]);
    let negative = [("f=1", &run_c), ("f=1+x1^2", &run_x)];
    results.push((5, "negative sigma solves", negative_sigma_solves(&negative)));

    let all = [("f=48", &run48), ("f=1", &run_c), ("f=1+x1^2", &run_x)];
    results.push((6, "uniqueness probe", uniqueness(&all)));
    results.push((7, "concavity certificates", concavity()));
    results.push((8, "identity certificates", identities()));
    results.push((9, "manufactured convergence", mms_convergence()));
    results.push((10, "barrier suite", barriers(&all)));

    let mut failed = 0;
    for (n, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {tag} {name}: {}", o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
