//! Subcommand orchestration and artifact writing.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use mongeamp::continuation::{Continuation, ContinuationOptions, ContinuationState, NewtonOptions, ProblemSpec};
use mongeamp::pointalg;
use mongeamp::verify::{self, MmsCase};
use mongeamp::{build_ball_grid, Error as CoreError, Grid, ScalarField};

use crate::config::{CaseName, ConfigError, RunConfig};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const OTHER: u8 = 1;
    pub const STALLED: u8 = 2;
    pub const CONFIG: u8 = 3;
    pub const HYPOTHESIS: u8 = 4;
    pub const COUNTEREXAMPLE: u8 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] CoreError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("check failed: {0}")]
    Counterexample(String),
    #[error("solver stalled: {0}")]
    Stalled(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Core(e) => match e {
                CoreError::Config(_) => exit::CONFIG,
                CoreError::HypothesisViolated { .. } => exit::HYPOTHESIS,
                CoreError::ContinuationStalled { .. }
                | CoreError::NewtonStalled { .. }
                | CoreError::EllipticityLost { .. }
                | CoreError::LinearSolve { .. } => exit::STALLED,
                CoreError::Domain(_) | CoreError::Oracle(_) => exit::OTHER,
            },
            CliError::Io(_) => exit::OTHER,
            CliError::Counterexample(_) => exit::COUNTEREXAMPLE,
            CliError::Stalled(_) => exit::STALLED,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Mms,
    OracleCompare,
    Uniqueness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validator {
    ConcavityReal,
    ConcavityComplex,
    IdentityN2,
    IdentityN3,
}

fn missing(cfg: &RunConfig, what: &str) -> CliError {
    CliError::Config(ConfigError { line: cfg.end_line, column: 1, message: format!("missing required key '{what}'") })
}

/// Shortest round-trip decimal.
fn num(v: f64) -> String {
    format!("{v}")
}

fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

/// Right-hand side at the grid nodes from `f` or `f_csv`.
pub fn load_rhs(cfg: &RunConfig, grid: &Grid) -> CliResult<ScalarField> {
    if let Some(f) = &cfg.f {
        let field = ScalarField::from_fn(grid, |x| f.value.eval(x));
        if let Some(i) = field.values.iter().position(|v| !v.is_finite()) {
            let x = grid.nodes()[i];
            return Err(CliError::Config(ConfigError {
                line: f.line,
                column: f.column,
                message: format!("f is not finite at x = ({}, {}, {})", x[0], x[1], x[2]),
            }));
        }
        return Ok(field);
    }
    let Some(csv) = &cfg.f_csv else {
        return Err(missing(cfg, "f"));
    };
    let bad = |message: String| CliError::Config(ConfigError { line: csv.line, column: csv.column, message });
    let text = fs::read_to_string(&csv.value).map_err(|e| bad(format!("cannot read {}: {e}", csv.value.display())))?;
    let d = grid.dim();
    let mut values = Vec::with_capacity(grid.len());
    let mut rows = text.lines().filter(|l| !l.trim().is_empty());
    let header = rows.next().unwrap_or("");
    let want: Vec<String> = (1..=d).map(|i| format!("x{i}")).chain(std::iter::once("f".to_string())).collect();
    if header.split(',').map(str::trim).collect::<Vec<_>>() != want {
        return Err(bad(format!("f_csv header must be {}", want.join(","))));
    }
    for (k, row) in rows.enumerate() {
        let cells: Vec<f64> = row
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad(format!("f_csv row {} is not numeric", k + 2)))?;
        if cells.len() != d + 1 {
            return Err(bad(format!("f_csv row {} has {} columns, expected {}", k + 2, cells.len(), d + 1)));
        }
        let node = grid
            .nodes()
            .get(k)
            .ok_or_else(|| bad(format!("f_csv has more rows than the {} grid nodes", grid.len())))?;
        if (0..d).any(|i| (cells[i] - node[i]).abs() > 1e-9) {
            return Err(bad(format!("f_csv row {} does not match grid node {k}", k + 2)));
        }
        if !cells[d].is_finite() {
            return Err(bad(format!("f_csv row {} has a non-finite value", k + 2)));
        }
        values.push(cells[d]);
    }
    if values.len() != grid.len() {
        return Err(bad(format!("f_csv has {} rows for {} grid nodes", values.len(), grid.len())));
    }
    Ok(ScalarField::new(values))
}

fn problem(cfg: &RunConfig, grid: &Grid) -> CliResult<ProblemSpec> {
    let f = load_rhs(cfg, grid)?;
    Ok(match cfg.mu {
        Some(mu) => ProblemSpec::with_mu(cfg.dim, cfg.sigma, f, mu, cfg.strict)?,
        None => ProblemSpec::new(cfg.dim, cfg.sigma, f, cfg.strict)?,
    })
}

fn continuation_options(cfg: &RunConfig) -> ContinuationOptions {
    ContinuationOptions {
        t_step: cfg.t_step,
        newton: NewtonOptions { tol: cfg.newton_tol, ..NewtonOptions::default() },
        ..ContinuationOptions::default()
    }
}

pub fn path_csv(state: &ContinuationState) -> String {
    let mut s =
        String::from("t,newton_iters,residual_sup,min_hessian_eig,min_pair_product,min_cone_gap,min_ellipticity\n");
    for r in &state.history {
        let m = &r.monitors;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            num(r.t),
            r.newton_iterations,
            num(r.residual_sup),
            num(m.min_hessian_eig),
            num(m.min_pair_product),
            num(m.min_cone_gap),
            num(m.min_ellipticity)
        );
    }
    s
}

pub fn solution_csv(grid: &Grid, u: &ScalarField) -> String {
    let d = grid.dim();
    let mut s: String = (1..=d).map(|i| format!("x{i},")).collect();
    s.push_str("u\n");
    for (x, v) in grid.nodes().iter().zip(&u.values) {
        for c in &x[..d] {
            s.push_str(&num(*c));
            s.push(',');
        }
        s.push_str(&num(*v));
        s.push('\n');
    }
    s
}

fn summary_text(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

fn center_value(grid: &Grid, u: &ScalarField) -> f64 {
    grid.find([0, 0, 0]).map(|i| u.values[i]).unwrap_or(f64::NAN)
}

/// Continuation run; artifacts are written even when the run fails.
fn solve(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<(Grid, ContinuationState)> {
    let grid = build_ball_grid(cfg.dim, cfg.h)?;
    let spec = problem(cfg, &grid)?;
    let mut cont = Continuation::new(&spec, &grid, continuation_options(cfg))?;
    let outcome = cont.run();
    let state = cont.into_state();
    let last = state.history.last().expect("history holds the start record");
    let status = match &outcome {
        Ok(()) => "converged".to_string(),
        Err(e) => format!("failed: {e}"),
    };
    let mut pairs = vec![
        ("status", status),
        ("dim", cfg.dim.to_string()),
        ("h", num(cfg.h)),
        ("sigma", num(cfg.sigma)),
        ("mu", num(spec.initial_mu)),
        ("strict", cfg.strict.to_string()),
        ("nodes", grid.len().to_string()),
        ("t", num(state.t)),
        ("accepted_steps", (state.history.len() - 1).to_string()),
        ("newton_iterations", state.history.iter().map(|r| r.newton_iterations).sum::<usize>().to_string()),
        ("residual_sup", num(last.residual_sup)),
        ("min_hessian_eig", num(last.monitors.min_hessian_eig)),
        ("max_hessian_eig", num(last.monitors.max_hessian_eig)),
        ("min_pair_product", num(last.monitors.min_pair_product)),
        ("min_cone_gap", num(last.monitors.min_cone_gap)),
        ("min_ellipticity", num(last.monitors.min_ellipticity)),
        ("u_min", num(state.u.min())),
        ("u_max", num(state.u.max())),
        ("u_center", num(center_value(&grid, &state.u))),
        ("violations", state.violations.len().to_string()),
    ];
    for (t, detail) in &state.violations {
        pairs.push(("violation", format!("t={} {detail}", num(*t))));
    }
    write_file(&cfg.output_dir, "path.csv", &path_csv(&state))?;
    write_file(&cfg.output_dir, "solution.csv", &solution_csv(&grid, &state.u))?;
    write_file(&cfg.output_dir, "summary.txt", &summary_text(&pairs))?;
    writeln!(out, "{}", summary_text(&pairs).trim_end())?;
    outcome?;
    Ok((grid, state))
}

fn mms(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let case = match cfg.case.ok_or_else(|| missing(cfg, "case"))? {
        CaseName::Quadratic => MmsCase::Quadratic { a: cfg.a },
        CaseName::Quartic => MmsCase::Quartic,
        CaseName::Offcenter => MmsCase::Offcenter,
    };
    let k = -cfg.h.log2();
    if (k - k.round()).abs() > 1e-12 {
        return Err(CliError::Config(ConfigError {
            line: cfg.end_line,
            column: 1,
            message: format!("mms needs h = 2^-k for the coarsest level, got {}", cfg.h),
        }));
    }
    let report = verify::mms_study(case, cfg.sigma, cfg.dim, k.round() as u32, cfg.levels, cfg.strict)?;
    let mut csv = String::from("h,nodes,interior_error,full_error,rate,newton_iters,status\n");
    for r in &report.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            num(r.h),
            r.nodes,
            num(r.interior_error),
            num(r.full_error),
            r.rate.map(num).unwrap_or_default(),
            r.newton_iterations,
            if r.failure.is_some() { "failed" } else { "ok" }
        );
    }
    write_file(&cfg.output_dir, "mms.csv", &csv)?;
    write!(out, "{csv}")?;
    if let Some(flag) = &report.hypothesis_flag {
        writeln!(out, "hypothesis_flag={flag}")?;
    }
    if let Some(r) = report.rows.iter().find(|r| r.failure.is_some()) {
        return Err(CliError::Stalled(format!("level h={} failed: {}", r.h, r.failure.as_deref().unwrap_or(""))));
    }
    Ok(())
}

fn oracle_compare(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let f = cfg.f.as_ref().ok_or_else(|| missing(cfg, "f"))?;
    if !f.value.is_constant() {
        return Err(CliError::Config(ConfigError {
            line: f.line,
            column: f.column,
            message: "oracle-compare needs a constant f".into(),
        }));
    }
    let f_const = f.value.eval(&[0.0; 3]);
    let oracle = verify::radial_oracle(f_const, cfg.sigma, cfg.dim)?;
    let (grid, state) = solve(cfg, out)?;
    let mut csv = String::from("r,u,u_oracle\n");
    let mut sup: f64 = 0.0;
    for (x, v) in grid.nodes().iter().zip(&state.u.values) {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let o = oracle.eval(r);
        sup = sup.max((v - o).abs());
        let _ = writeln!(csv, "{},{},{}", num(r), num(*v), num(o));
    }
    let center = center_value(&grid, &state.u);
    let err0 = (center - oracle.at_origin()).abs();
    write_file(&cfg.output_dir, "oracle.csv", &csv)?;
    let pairs = [
        ("u_center", num(center)),
        ("u_oracle_center", num(oracle.at_origin())),
        ("center_error", num(err0)),
        ("sup_error", num(sup)),
        ("oracle_tol", num(cfg.oracle_tol)),
    ];
    write_file(&cfg.output_dir, "oracle_summary.txt", &summary_text(&pairs))?;
    writeln!(out, "{}", summary_text(&pairs).trim_end())?;
    if err0 > cfg.oracle_tol {
        return Err(CliError::Counterexample(format!("|u(0) - oracle(0)| = {err0} exceeds {}", cfg.oracle_tol)));
    }
    Ok(())
}

fn uniqueness(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let grid = build_ball_grid(cfg.dim, cfg.h)?;
    let spec = problem(cfg, &grid)?;
    let report = mongeamp::continuation::uniqueness_probe(&spec, &grid, cfg.seeds, cfg.seed);
    let mut csv = String::from("seed,amplitude,status,newton_iters,residual_sup\n");
    for s in &report.seeds {
        let (status, it, res) = match &s.result {
            Ok(o) => ("converged".to_string(), o.iterations.to_string(), num(o.residual)),
            Err(e) => (format!("failed: {e}").replace(',', ";"), String::new(), String::new()),
        };
        let _ = writeln!(csv, "{},{},{status},{it},{res}", s.seed, num(s.amplitude));
    }
    write_file(&cfg.output_dir, "uniqueness.csv", &csv)?;
    write!(out, "{csv}")?;
    writeln!(out, "max_pairwise={}", num(report.max_pairwise))?;
    if report.converged() < report.seeds.len() {
        return Err(CliError::Counterexample(format!(
            "{} of {} restarts did not converge",
            report.seeds.len() - report.converged(),
            report.seeds.len()
        )));
    }
    if report.max_pairwise > cfg.uniqueness_tol {
        return Err(CliError::Counterexample(format!(
            "restarts differ by {} (tolerance {})",
            report.max_pairwise, cfg.uniqueness_tol
        )));
    }
    Ok(())
}

pub fn run_command(cmd: Command, cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    match cmd {
        Command::Solve => solve(cfg, out).map(|_| ()),
        Command::Mms => mms(cfg, out),
        Command::OracleCompare => oracle_compare(cfg, out),
        Command::Uniqueness => uniqueness(cfg, out),
    }
}

pub fn run_validator(which: Validator, samples: usize, seed: u64, margin: f64, out: &mut dyn Write) -> CliResult<()> {
    writeln!(out, "samples={samples}\nseed={seed}")?;
    let failure = match which {
        Validator::IdentityN2 | Validator::IdentityN3 => {
            let rep = if which == Validator::IdentityN2 {
                pointalg::sample_n2_identity(samples, seed)
            } else {
                pointalg::sample_n3_reduction(samples, seed)
            };
            writeln!(out, "max_relative_residual={}", num(rep.max_relative_residual))?;
            (rep.max_relative_residual >= 1e-12)
                .then(|| format!("relative residual {} >= 1e-12", rep.max_relative_residual))
        }
        Validator::ConcavityReal | Validator::ConcavityComplex => {
            let rep = if which == Validator::ConcavityReal {
                pointalg::sample_concavity_real(samples, seed)
            } else {
                writeln!(out, "margin={}", num(margin))?;
                pointalg::sample_concavity_complex(samples, seed, margin)?
            };
            writeln!(out, "violations={}\nworst_normalized={}", rep.violations, num(rep.worst_normalized))?;
            for row in &rep.counterexamples {
                writeln!(out, "counterexample {row}")?;
            }
            if which == Validator::ConcavityReal {
                match pointalg::search_real_witness(samples, seed) {
                    Some(w) => {
                        writeln!(out, "sharpness_witness lambda={:?} v={:?} value={}", w.lambda, w.v, num(w.value))?
                    }
                    None => writeln!(out, "sharpness_witness none")?,
                }
            }
            (rep.violations > 0).then(|| format!("{} of {samples} samples violate the certificate", rep.violations))
        }
    };
    match failure {
        Some(msg) => Err(CliError::Counterexample(msg)),
        None => Ok(()),
    }
}
