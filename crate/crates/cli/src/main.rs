use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use concalc_core::besov::{besov_norm, min_grid, TrigPolynomial};
use concalc_core::funcalc::{eval_on_contraction, AnalyticFunction};
use concalc_core::suite::{emit_csv, run_suite, IntRange, Suite, SuiteConfig};
use concalc_core::ComplexMatrix;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "concalc", version, about = "Functional calculus verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Tool,
}

#[derive(Subcommand)]
enum Tool {
    /// Print φ(T) as a JSON matrix.
    Eval {
        /// Taylor coefficients: {"coeffs": [[re, im], ...]}
        #[arg(long)]
        phi: PathBuf,
        /// Contraction: {"rows", "cols", "data": [[re, im], ...]}
        #[arg(long)]
        t: PathBuf,
    },
    /// Print the B^s_{pq} norm of a trigonometric polynomial.
    BesovNorm {
        /// {"min_k": K, "coeffs": [[re, im], ...]}
        #[arg(long)]
        phi: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        /// Integrability exponent; `inf` allowed.
        #[arg(long, default_value = "inf")]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        /// Circle grid size; defaults to the smallest admissible one.
        #[arg(long)]
        grid: Option<usize>,
    },
}

#[derive(Args, Debug)]
struct SuiteArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Inclusive range, `A..B`.
    #[arg(long, default_value = "1..6")]
    dims: IntRange,
    #[arg(long, default_value = "1..10")]
    degrees: IntRange,
    #[arg(long, default_value_t = 200)]
    cases: usize,
    /// Tolerance override, `suite=value`. Repeatable.
    #[arg(long = "tol", value_parser = parse_tol)]
    tol: Vec<(String, f64)>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or("expected name=value")?;
    let suite: Suite = name.parse().map_err(|e| format!("{e}"))?;
    let value: f64 = value.parse().map_err(|_| format!("bad tolerance '{value}'"))?;
    if !(value >= 0.0) {
        return Err(format!("tolerance must be non-negative, got {value}"));
    }
    Ok((suite.name().to_string(), value))
}

fn command() -> clap::Command {
    let mut cmd = Cli::command().subcommand_required(true);
    for suite in Suite::ALL {
        let sub = clap::Command::new(suite.name()).about(format!("Run the {suite} verification suite"));
        cmd = cmd.subcommand(SuiteArgs::augment_args(sub));
    }
    cmd
}

enum Failure {
    Fail,
    Usage(String),
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn run_tool(tool: Tool) -> Result<(), Failure> {
    match tool {
        Tool::Eval { phi, t } => {
            let phi: AnalyticFunction = read_json(&phi)?;
            let t: ComplexMatrix = read_json(&t)?;
            let value = eval_on_contraction(&phi, &t).map_err(|e| Failure::Usage(e.to_string()))?;
            println!("{}", serde_json::to_string(&value).expect("matrix serializes"));
        }
        Tool::BesovNorm { phi, s, p, q, grid } => {
            let phi: TrigPolynomial = read_json(&phi)?;
            let grid = grid.unwrap_or_else(|| min_grid(&phi));
            let norm = besov_norm(&phi, s, p, q, grid).map_err(|e| Failure::Usage(e.to_string()))?;
            println!("{norm}");
        }
    }
    Ok(())
}

fn run_named(suite: Suite, args: SuiteArgs) -> Result<(), Failure> {
    let mut cfg = SuiteConfig {
        seed: args.seed,
        dims: args.dims,
        degrees: args.degrees,
        cases: args.cases,
        ..SuiteConfig::default()
    };
    cfg.tolerances.extend(args.tol);
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;

    let report = run_suite(suite, &cfg).map_err(|e| Failure::Usage(e.to_string()))?;
    let json = report.to_json().map_err(|e| Failure::Usage(e.to_string()))?;
    match &args.out {
        Some(path) => fs::write(path, json + "\n").map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
        None => println!("{json}"),
    }
    if let Some(path) = &args.csv {
        emit_csv(&report, path).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let failed = report.cases.iter().filter(|c| !c.pass).count();
    eprintln!(
        "{}: {} cases, {} failed, max residual {:.3e}, {} ms",
        suite,
        report.cases.len(),
        failed,
        report.max_residual,
        report.wall_time_ms
    );
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Fail)
    }
}

fn main() -> ExitCode {
    let matches = match command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let outcome = match matches.subcommand() {
        Some((name, sub)) => match name.parse::<Suite>() {
            Ok(suite) => match SuiteArgs::from_arg_matches(sub) {
                Ok(args) => run_named(suite, args),
                Err(e) => Err(Failure::Usage(e.to_string())),
            },
            Err(_) => match Cli::from_arg_matches(&matches) {
                Ok(cli) => run_tool(cli.command),
                Err(e) => Err(Failure::Usage(e.to_string())),
            },
        },
        None => Err(Failure::Usage("missing subcommand".into())),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Fail) => ExitCode::from(EXIT_FAIL),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
