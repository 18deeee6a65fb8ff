//! `qpast` command-line front end.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 usage error, 3 runtime error.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qpast::rng::DEFAULT_SEED;
use qpast::scenarios::{self, ScenarioInfo, ScenarioSpec};
use qpast::verify;

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "qpast", version, about = "Retrodiction experiments: collapse, Bohmian trajectories and decoherent histories")]
struct Cli {
    /// Cap on worker threads for trajectory ensembles and FFTs.
    #[arg(long, global = true, env = "QP_THREADS", value_name = "N")]
    threads: Option<usize>,

    /// Print full reports instead of one-line summaries.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List scenarios with their parameters and defaults.
    List,
    /// Show a scenario's theme, parameters and checks.
    Describe { name: String },
    /// Run a scenario and write its outputs.
    Run(RunArgs),
    /// Run every acceptance criterion and print a summary.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    name: String,

    /// RNG seed; every stochastic step derives its stream from it.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Output directory [default: runs/<name>-<seed>].
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// JSON spec file: {"scenario", "seed", "params"}.
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,

    /// Parameter override (repeatable), e.g. --set ensemble.n=2000.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Overwrite an output directory that already holds a report.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Print the summary as JSON only.
    #[arg(long)]
    json: bool,

    /// Also write the JSON summary to this file.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_USAGE, message: e.to_string() }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_RUNTIME, message: e.to_string() }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    let outcome = match &cli.command {
        Command::List => {
            list();
            Ok(true)
        }
        Command::Describe { name } => scenarios::find(name).map(|s| describe(&s)).map(|_| true).map_err(usage),
        Command::Run(args) => run(args, cli.verbose),
        Command::Verify(args) => verify_all(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CHECK_FAILED),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Writes to stdout, ignoring a closed pipe (e.g. `qpast list | head`).
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn list() {
    let mut out = String::new();
    for s in scenarios::catalog() {
        let _ = writeln!(out, "{:<18} {}", s.name, s.summary);
        for p in &s.params {
            let _ = writeln!(out, "    {:<24} {:<12} {}", p.key, p.default.to_string(), p.doc);
        }
    }
    emit(&out);
}

fn describe(s: &ScenarioInfo) {
    let mut out = format!("{}\n  {}\n  theme: {}\n\nparameters:\n", s.name, s.summary, s.theme);
    for p in &s.params {
        let _ = writeln!(
            out,
            "  {:<24} {:<5} default {:<12} {}",
            p.key,
            p.default.type_name(),
            p.default.to_string(),
            p.doc
        );
    }
    out.push_str("\nchecks:\n");
    for (name, rule) in &s.checks {
        let _ = writeln!(out, "  {name:<40} {rule}");
    }
    emit(&out);
}

fn build_spec(args: &RunArgs) -> Result<ScenarioSpec, Failure> {
    let mut spec = scenarios::default_spec(&args.name, args.seed).map_err(usage)?;
    if let Some(path) = &args.spec {
        spec.apply_file(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    for o in &args.overrides {
        spec.set_pair(o).map_err(usage)?;
    }
    Ok(spec)
}

fn run(args: &RunArgs, verbose: u8) -> Result<bool, Failure> {
    let spec = build_spec(args)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| Path::new("runs").join(format!("{}-{}", spec.name, spec.seed)));
    scenarios::prepare_output_dir(&out, args.force).map_err(usage)?;
    let report = scenarios::run(&spec, Some(&out)).map_err(runtime)?;
    let mut text = String::new();
    if verbose > 0 {
        text = report.to_text();
    } else {
        let failed = report.failed_checks();
        let _ = writeln!(
            text,
            "{} {} (seed {}): {}/{} checks pass, outputs in {}",
            if report.passed { "PASS" } else { "FAIL" },
            report.scenario,
            report.seed,
            report.checks.len() - failed.len(),
            report.checks.len(),
            out.display()
        );
        for c in failed {
            let _ = writeln!(text, "  failed: {} = {:e} (want {})", c.name, c.value, c.bound.describe());
        }
    }
    emit(&text);
    Ok(report.passed)
}

fn verify_all(args: &VerifyArgs) -> Result<bool, Failure> {
    let summary = verify::run_all(args.seed);
    let json = serde_json::to_string_pretty(&summary).map_err(runtime)?;
    if let Some(path) = &args.out {
        std::fs::write(path, format!("{json}\n")).map_err(runtime)?;
    }
    let mut text = String::new();
    if args.json {
        text = json + "\n";
    } else {
        for c in &summary.criteria {
            let _ = writeln!(text, "{}", c.line());
        }
        let n = summary.criteria.iter().filter(|c| c.passed).count();
        let _ = writeln!(
            text,
            "{}: {n}/{} criteria pass (seed {})",
            if summary.passed { "PASS" } else { "FAIL" },
            summary.criteria.len(),
            summary.seed
        );
    }
    emit(&text);
    Ok(summary.passed)
}
