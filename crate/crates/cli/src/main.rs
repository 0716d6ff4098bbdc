use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mongeamp_cli::config::parse_config;
use mongeamp_cli::run::{self, exit, CliError, Command, Validator};

#[derive(Parser)]
#[command(
    name = "mongeamp",
    version,
    about = "Continuation solver for det(D^2 u) + sigma Laplace(u) = f on the unit ball"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// key=value configuration file
    #[arg(long, short)]
    config: PathBuf,
    /// Overrides output_dir from the configuration
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Continuation run; writes path.csv, solution.csv and summary.txt
    Solve(ConfigArgs),
    /// Manufactured-solution convergence table
    Mms(ConfigArgs),
    /// Compare a constant-f run with the radial shooting solution
    OracleCompare(ConfigArgs),
    /// Re-solve from perturbed starts and compare
    Uniqueness(ConfigArgs),
    /// Sampled certificates for the pointwise algebra
    Verify {
        #[arg(value_enum)]
        which: Which,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Lower bound of A in units of lambda_max(B) (concavity-complex)
        #[arg(long, default_value_t = 3.01)]
        margin: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    ConcavityReal,
    ConcavityComplex,
    IdentityN2,
    IdentityN3,
}

fn execute(cmd: Cmd) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    let (command, args) = match cmd {
        Cmd::Verify { which, samples, seed, margin } => {
            let v = match which {
                Which::ConcavityReal => Validator::ConcavityReal,
                Which::ConcavityComplex => Validator::ConcavityComplex,
                Which::IdentityN2 => Validator::IdentityN2,
                Which::IdentityN3 => Validator::IdentityN3,
            };
            return run::run_validator(v, samples, seed, margin, &mut out);
        }
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Mms(a) => (Command::Mms, a),
        Cmd::OracleCompare(a) => (Command::OracleCompare, a),
        Cmd::Uniqueness(a) => (Command::Uniqueness, a),
    };
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        CliError::Config(mongeamp_cli::config::ConfigError {
            line: 0,
            column: 0,
            message: format!("cannot read {}: {e}", args.config.display()),
        })
    })?;
    let mut cfg = parse_config(&text)?;
    if let Some(dir) = args.output_dir {
        cfg.output_dir = dir;
    }
    run::run_command(command, &cfg, &mut out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::CONFIG } else { exit::OK });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
