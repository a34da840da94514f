use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{debug, info, warn};
use prony::{Problem, PronyError, Report, RunOptions, SpuriousPolicy};
use rayon::prelude::*;
use serde_json::Value;

mod svg;

/// Spectral recovery by the generalized Prony method.
#[derive(Debug, Parser)]
#[command(name = "prony", version)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Overrides {
    /// JSON object merged over the problem's "config".
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Replaces the noise seed of the problem.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tolerance override, e.g. `rank_rel_tol=1e-9`; repeatable.
    #[arg(long = "tolerance", global = true, value_name = "KEY=VALUE")]
    tolerances: Vec<String>,
    /// Record wall-clock recovery time in reports.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Forward-evaluate the ground truth and write the problem with its measurements.
    Synth {
        problem: PathBuf,
        /// Output file (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Recover the sparse model from the measurements in a problem file.
    Recover {
        problem: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// SVG scatter of true and recovered points (needs ground truth).
        #[arg(long, value_name = "FILE")]
        plot: Option<PathBuf>,
    },
    /// Check that the symbol is injective, nonvanishing and invertible.
    ValidateSymbol { problem: PathBuf },
    /// Recover many problems concurrently, one report per input.
    Batch {
        problems: Vec<PathBuf>,
        /// Directory receiving `<stem>.report.json` files.
        #[arg(short, long)]
        out_dir: PathBuf,
    },
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<PronyError> for CliError {
    fn from(e: PronyError) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Outcome {
    Clean = 0,
    Warnings = 1,
}

type CliResult<T> = Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn write(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_tolerance(spec: &str) -> CliResult<(&str, f64)> {
    let (key, value) =
        spec.split_once('=').ok_or_else(|| CliError::Input(format!("--tolerance expects KEY=VALUE, got '{spec}'")))?;
    let value: f64 =
        value.trim().parse().map_err(|_| CliError::Input(format!("--tolerance {key}: '{value}' is not a number")))?;
    Ok((key.trim(), value))
}

fn load(path: &Path, ov: &Overrides) -> CliResult<Problem> {
    let text = read(path)?;
    let mut problem = Problem::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if let Some(cfg_path) = &ov.config {
        let patch: Value = serde_json::from_str(&read(cfg_path)?)
            .map_err(|e| CliError::Input(format!("{}: {e}", cfg_path.display())))?;
        let Value::Object(patch) = patch else {
            return Err(CliError::Input(format!("{}: config override must be a JSON object", cfg_path.display())));
        };
        let mut doc: Value = serde_json::from_str(&problem.to_json()).expect("problem JSON parses");
        let cfg = doc["config"].as_object_mut().expect("problems carry a config object");
        for (k, v) in patch {
            cfg.insert(k, v);
        }
        problem = Problem::from_json(&doc.to_string())
            .map_err(|e| CliError::Input(format!("{} merged over {}: {e}", cfg_path.display(), path.display())))?;
    }
    if let Some(seed) = ov.seed {
        match problem.noise_mut() {
            Some(noise) => noise.seed = seed,
            None => warn!("--seed given but {} has no noise block", path.display()),
        }
    }
    for spec in &ov.tolerances {
        let (key, value) = parse_tolerance(spec)?;
        problem.config_mut().set_tolerance(key, value)?;
    }
    debug!("loaded {} problem from {}", problem.kind(), path.display());
    Ok(problem)
}

fn recover_problem(path: &Path, ov: &Overrides) -> CliResult<(Problem, Report)> {
    let mut problem = load(path, ov)?;
    problem.config_mut().on_spurious = SpuriousPolicy::Warn;
    let report = problem.recover(RunOptions { timing: ov.timing })?;
    for w in report.warnings() {
        warn!("{}: {w:?}", path.display());
    }
    Ok((problem, report))
}

fn outcome(report: &Report) -> Outcome {
    if report.is_clean() {
        Outcome::Clean
    } else {
        Outcome::Warnings
    }
}

fn run(cli: &Cli) -> CliResult<Outcome> {
    let ov = &cli.overrides;
    match &cli.command {
        Command::Synth { problem, output } => {
            let p = load(problem, ov)?;
            if !p.has_truth() {
                return Err(CliError::Input(format!("{}: synth needs a 'truth' model", problem.display())));
            }
            let full = p.with_measurements()?;
            write(output.as_deref(), &full.to_json())?;
            info!("synthesized {} measurements from {}", full.kind(), problem.display());
            Ok(Outcome::Clean)
        }
        Command::Recover { problem, output, plot } => {
            let (p, report) = recover_problem(problem, ov)?;
            write(output.as_deref(), &report.to_json())?;
            if let Some(plot) = plot {
                if p.has_truth() {
                    write(Some(plot), &svg::scatter(&p.plot_data(&report)))?;
                } else {
                    warn!("--plot skipped: {} has no ground truth", problem.display());
                }
            }
            Ok(outcome(&report))
        }
        Command::ValidateSymbol { problem } => {
            let p = load(problem, ov)?;
            let v = p.validate_symbol()?;
            let mut text = serde_json::to_string_pretty(&v).expect("validation reports serialize");
            text.push('\n');
            write(None, &text)?;
            Ok(if v.passed() { Outcome::Clean } else { Outcome::Warnings })
        }
        Command::Batch { problems, out_dir } => {
            if problems.is_empty() {
                return Err(CliError::Input("batch needs at least one problem file".into()));
            }
            fs::create_dir_all(out_dir)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
            let results: Vec<CliResult<Outcome>> = problems
                .par_iter()
                .map(|path| {
                    let (_, report) = recover_problem(path, ov)?;
                    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                    write(Some(&out_dir.join(format!("{stem}.report.json"))), &report.to_json())?;
                    Ok(outcome(&report))
                })
                .collect();
            let mut worst = Outcome::Clean;
            let mut first_err = None;
            for (path, r) in problems.iter().zip(results) {
                match r {
                    Ok(o) => worst = worst.max(o),
                    Err(e) => {
                        eprintln!("error: {}: {}", path.display(), message(&e));
                        if first_err.as_ref().is_none_or(|f: &CliError| e.code() > f.code()) {
                            first_err = Some(e);
                        }
                    }
                }
            }
            match first_err {
                Some(e) => Err(e),
                None => Ok(worst),
            }
        }
    }
}

fn message(e: &CliError) -> &str {
    match e {
        CliError::Input(m) | CliError::Io(m) => m,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PRONY_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(o) => ExitCode::from(o as u8),
        Err(e) => {
            if !matches!(cli.command, Command::Batch { .. }) {
                eprintln!("error: {}", message(&e));
            }
            ExitCode::from(e.code())
        }
    }
}
