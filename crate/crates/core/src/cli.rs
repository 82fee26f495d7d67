//! Command-line front end.
//!
//! Exit codes: 0 on success (a run that records an infeasible step still
//! succeeds), 2 on configuration errors, 3 on solver or internal failures.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{ControllerKind, ExperimentConfig, Refresh};
use crate::error::Error;
use crate::rng::thread_pool;
use crate::sim::envelope::envelope_study;
use crate::sim::sweep::{cost_sweep, write_csv as write_sweep};
use crate::sim::trace::{sets_json, sets_pair, tubes_json, write_csv, RunSummary};
use crate::sim::Experiment;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "armpc", version, about = "Robust adaptive MPC experiments")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-loop run; writes a trace CSV and a summary JSON next to it.
    Run(RunArgs),
    /// Realized cost against one parameter, as CSV.
    Sweep(SweepArgs),
    /// Feasible-envelope fraction against one parameter, as JSON.
    Envelope(EnvelopeArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ControllerArg {
    Ce,
    Benchmark,
    Naive,
}

impl From<ControllerArg> for ControllerKind {
    fn from(c: ControllerArg) -> Self {
        match c {
            ControllerArg::Ce => ControllerKind::Ce,
            ControllerArg::Benchmark => ControllerKind::Benchmark,
            ControllerArg::Naive => ControllerKind::Naive,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RefreshArg {
    Episode,
    Step,
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment config (TOML, or JSON).
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    refresh: Option<RefreshArg>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    controller: Option<ControllerArg>,
    /// Trace CSV; with several episodes, one file per episode
    /// (`<stem>_ep<k>.csv`). The summary goes to `<stem>.json`.
    #[arg(long, default_value = "trace.csv")]
    out: PathBuf,
    /// Predicted reachable sets of the first episode, as JSON.
    #[arg(long)]
    tubes: Option<PathBuf>,
    /// Constraint, terminal and disturbance sets before and after the run.
    #[arg(long)]
    sets: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "w1")]
    param: String,
    /// Comma-separated parameter values.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    values: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    seeds: usize,
    /// Defaults to both `ce` and `benchmark`.
    #[arg(long, value_enum)]
    controller: Option<ControllerArg>,
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EnvelopeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "w1")]
    param: String,
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    values: Vec<f64>,
    /// Points per axis (n = 2); `grid²` Monte-Carlo samples otherwise.
    #[arg(long, default_value_t = 41)]
    grid: usize,
    #[arg(long, default_value = "envelope.json")]
    out: PathBuf,
}

/// Failure with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn config_err(e: Error) -> Failure {
    let code = match e {
        Error::Solver(_) | Error::Lp(_) => EXIT_INTERNAL,
        _ => EXIT_CONFIG,
    };
    Failure {
        code,
        message: e.to_string(),
    }
}

fn internal(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_INTERNAL,
        message: e.to_string(),
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(&common.config).map_err(config_err)?;
    if let Some(seed) = common.seed {
        cfg.run.seed = seed;
    }
    if let Some(r) = common.refresh {
        cfg.bounds.refresh = match r {
            RefreshArg::Episode => Refresh::Episode,
            RefreshArg::Step => Refresh::Step,
        };
    }
    cfg.validate().map_err(config_err)?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| internal(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Failure> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(internal)?;
    writeln!(w).map_err(internal)
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let mut cfg = load(&args.common)?;
    if let Some(c) = args.controller {
        cfg.run.controller = c.into();
    }
    let exp = Experiment::from_config(&cfg).map_err(config_err)?;
    let seed = cfg.run.seed;
    let mut controller = exp.controller(cfg.run.controller, seed).map_err(config_err)?;
    let before = sets_json(&controller);
    let results = exp.run_with(&mut controller, seed).map_err(internal)?;
    let (n, m) = (exp.n(), exp.plant.m());

    let stem = args.out.with_extension("");
    if results.len() == 1 {
        let mut w = create(&args.out)?;
        write_csv(&mut w, &results[0], n, m).map_err(internal)?;
    } else {
        for (k, r) in results.iter().enumerate() {
            let path = PathBuf::from(format!("{}_ep{}.csv", stem.display(), k + 1));
            let mut w = create(&path)?;
            write_csv(&mut w, r, n, m).map_err(internal)?;
        }
    }
    let summary = RunSummary::new(cfg.hash(), cfg.run.controller.as_str(), seed, &results);
    write_json(&stem.with_extension("json"), &summary)?;
    if let (Some(path), Some(first)) = (&args.tubes, results.first()) {
        write_json(path, &tubes_json(first))?;
    }
    if let Some(path) = &args.sets {
        write_json(path, &sets_pair(before, sets_json(&controller)))?;
    }
    Ok(())
}

fn kinds(arg: Option<ControllerArg>) -> Vec<ControllerKind> {
    match arg {
        Some(c) => vec![c.into()],
        None => vec![ControllerKind::Ce, ControllerKind::Benchmark],
    }
}

fn check_values(param: &str, values: &[f64]) -> Result<(), Failure> {
    if values.is_empty() {
        return Err(config_err(Error::Config(format!("no values given for `{param}`"))));
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let cfg = load(&args.common)?;
    check_values(&args.param, &args.values)?;
    // resolve the parameter up front so a typo is a config error
    cfg.clone().set_param(&args.param, args.values[0]).map_err(config_err)?;
    let rows = cost_sweep(&cfg, &args.param, &args.values, &kinds(args.controller), args.seeds)
        .map_err(|e| match e {
            Error::Config(_) => config_err(e),
            e => internal(e),
        })?;
    let mut w = create(&args.out)?;
    write_sweep(&mut w, &rows).map_err(internal)
}

fn cmd_envelope(args: EnvelopeArgs) -> Result<(), Failure> {
    let cfg = load(&args.common)?;
    check_values(&args.param, &args.values)?;
    cfg.clone().set_param(&args.param, args.values[0]).map_err(config_err)?;
    let kinds = [ControllerKind::Ce, ControllerKind::Benchmark];
    let points = envelope_study(&cfg, &args.param, &args.values, &kinds, args.grid).map_err(|e| {
        match e {
            Error::Config(_) | Error::InvalidArgument(_) => config_err(e),
            e => internal(e),
        }
    })?;
    write_json(&args.out, &points)
}

/// Run the CLI on `args` (including the program name); returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = thread_pool().install(|| match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Envelope(a) => cmd_envelope(a),
    });
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
