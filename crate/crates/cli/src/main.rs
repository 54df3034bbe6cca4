use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pd3o::AlgorithmId;
use pd3o_cli::commands::{EXIT_OK, EXIT_PARSE};
use pd3o_cli::config::SetError;
use pd3o_cli::{compare, run, validate, Failure, RunConfig, Sweep};

#[derive(Parser)]
#[command(name = "pd3o", version, about = "Primal-dual three-operator splitting benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check step-size admissibility for PD3O, PDFP, Condat-Vu and AFBA
    Validate(RunArgs),
    /// Solve one configuration and write its convergence history
    Run(RunArgs),
    /// Sweep algorithms, gamma factors and lambdas on one instance
    Compare(CompareArgs),
}

/// Flags override values read from `--config`.
#[derive(Args, Clone)]
struct RunArgs {
    /// key = value file with any of the options below
    #[arg(long)]
    config: Option<PathBuf>,
    /// fused-lasso, elastic-net or toy-quadratic
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    noise_var: Option<String>,
    #[arg(long)]
    mu1: Option<String>,
    #[arg(long)]
    mu2: Option<String>,
    #[arg(long)]
    algorithm: Option<String>,
    /// gamma = factor * beta
    #[arg(long)]
    gamma_factor: Option<String>,
    /// gamma * delta
    #[arg(long)]
    lambda: Option<String>,
    /// relaxation parameter (PD3O only)
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    max_iters: Option<String>,
    /// stop once the fixed-point residual is at most this
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    log_every: Option<String>,
    /// CSV path; the JSON sidecar goes next to it
    #[arg(long)]
    output: Option<String>,
    /// run even with inadmissible step sizes
    #[arg(long)]
    force: bool,
    /// length of the reference run (0 disables dist_to_ref and gap)
    #[arg(long)]
    reference_iters: Option<String>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    base: RunArgs,
    /// comma-separated; defaults to pd3o,pdfp,condat-vu,afba
    #[arg(long, value_delimiter = ',')]
    algorithms: Vec<String>,
    /// comma-separated; defaults to the base gamma factor
    #[arg(long, value_delimiter = ',')]
    gamma_factors: Vec<String>,
    /// comma-separated; defaults to the base lambda
    #[arg(long, value_delimiter = ',')]
    lambdas: Vec<String>,
}

fn to_config(args: &RunArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    let flags = [
        ("problem", &args.problem),
        ("n", &args.n),
        ("p", &args.p),
        ("seed", &args.seed),
        ("noise-var", &args.noise_var),
        ("mu1", &args.mu1),
        ("mu2", &args.mu2),
        ("algorithm", &args.algorithm),
        ("gamma-factor", &args.gamma_factor),
        ("lambda", &args.lambda),
        ("theta", &args.theta),
        ("max-iters", &args.max_iters),
        ("tol", &args.tol),
        ("log-every", &args.log_every),
        ("output", &args.output),
        ("reference-iters", &args.reference_iters),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v).map_err(|e| match e {
                SetError::BadValue(msg) => Failure::new(EXIT_PARSE, format!("--{key}: {msg}")),
                SetError::UnknownKey => unreachable!("flag keys are valid config keys"),
            })?;
        }
    }
    if args.force {
        cfg.force = true;
    }
    Ok(cfg)
}

fn to_sweep(args: &CompareArgs, base: &RunConfig) -> Result<Sweep, Failure> {
    let bad = |flag: &str, msg: String| Failure::new(EXIT_PARSE, format!("--{flag}: {msg}"));
    let algorithms = if args.algorithms.is_empty() {
        AlgorithmId::THREE_TERM.to_vec()
    } else {
        args.algorithms
            .iter()
            .map(|s| s.parse::<AlgorithmId>().map_err(|e| bad("algorithms", e)))
            .collect::<Result<_, _>>()?
    };
    let reals = |flag: &str, values: &[String], default: f64| -> Result<Vec<f64>, Failure> {
        if values.is_empty() {
            return Ok(vec![default]);
        }
        values
            .iter()
            .map(|s| match s.trim().parse::<f64>() {
                Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
                _ => Err(bad(flag, format!("expected a positive number, got '{s}'"))),
            })
            .collect()
    };
    Ok(Sweep {
        algorithms,
        gamma_factors: reals("gamma-factors", &args.gamma_factors, base.gamma_factor)?,
        lambdas: reals("lambdas", &args.lambdas, base.lambda)?,
    })
}

fn dispatch(cli: Cli) -> Result<u8, Failure> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Validate(args) => validate(&to_config(&args)?, &mut out),
        Command::Run(args) => run(&to_config(&args)?, &mut out).map(|_| EXIT_OK),
        Command::Compare(args) => {
            let base = to_config(&args.base)?;
            let sweep = to_sweep(&args, &base)?;
            compare(&base, &sweep, &mut out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_PARSE } else { EXIT_OK });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let _ = io::stdout().flush();
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
