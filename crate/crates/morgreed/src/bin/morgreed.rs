//! Thin command-line front end over the `morgreed` library: synthetic
//! model generation, greedy runs, the five-method comparison, trace
//! emission, and validation sweeps.
//!
//! Exit codes: 0 success (run converged), 2 run finished without
//! converging, 1 error. Errors end with one machine-parsable JSON line on
//! stderr.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use morgreed::bench::{
    compare, fmt_float, fom_sweep, max_error_against_sweep, run_with_config, thread_limit, trace,
    RunConfig, TraceOptions,
};
use morgreed::greedy::{ErrorNorm, GreedyMode, SetPolicy};
use morgreed::rom::ReducedModel;
use morgreed::synth::{generate_synthetic, DelaySpec, SyntheticSpec};
use morgreed::system::{make_grid, GridSpacing};
use morgreed::{DelaySystem, ParametricSystem};

#[derive(Parser)]
#[command(name = "morgreed", version, about = "Greedy reduced-basis model order reduction for frequency-domain delay systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic delay system and write a model file.
    Generate(GenerateArgs),
    /// Run one greedy driver on a model and write log, ROM and summary.
    Run(RunArgs),
    /// Run all five methods on one model and emit the comparison report.
    Compare(RunArgs),
    /// Turn a run log into plot-ready CSV data.
    Trace(TraceArgs),
    /// Validate an exported ROM against its model over a frequency grid.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Output model path.
    #[arg(long, default_value = "model.json")]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    order: usize,
    #[arg(long, default_value_t = 5)]
    delays: usize,
    #[arg(long, default_value_t = 2)]
    inputs: usize,
    #[arg(long, default_value_t = 2)]
    outputs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e6)]
    f_low: f64,
    #[arg(long, default_value_t = 2e10)]
    f_high: f64,
    /// Average random off-structure entries per row.
    #[arg(long)]
    density: Option<f64>,
    /// Resonant mode pairs placed in the band.
    #[arg(long)]
    modes: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<GreedyMode>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    n_add: Option<usize>,
    #[arg(long)]
    n_del: Option<usize>,
    #[arg(long, value_parser = parse_policy)]
    set_policy: Option<SetPolicy>,
    #[arg(long)]
    rbf_shape: Option<f64>,
    #[arg(long, value_parser = parse_norm)]
    normalization: Option<ErrorNorm>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Log output path (run) — defaults to run_log.jsonl.
    #[arg(long)]
    log: Option<PathBuf>,
    /// ROM export path (run) — defaults to rom.json.
    #[arg(long)]
    rom: Option<PathBuf>,
    /// Summary path (run) — defaults to summary.json.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Report stem (compare) — defaults to report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long, default_value = "trace.csv")]
    out: PathBuf,
    #[arg(long, default_value = "samples.csv")]
    samples: PathBuf,
    /// Recompute per-iteration true errors (replays the run; costs
    /// full-order solves over the working set).
    #[arg(long)]
    true_errors: bool,
    /// Also emit the estimator-gap diagnostic column (more solves).
    #[arg(long)]
    delta: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    rom: PathBuf,
    #[arg(long, default_value_t = 1e6)]
    f_low: f64,
    #[arg(long, default_value_t = 2e10)]
    f_high: f64,
    #[arg(long, default_value_t = 1000)]
    points: usize,
    #[arg(long, default_value = "log", value_parser = parse_spacing)]
    spacing: GridSpacing,
}

fn parse_mode(s: &str) -> Result<GreedyMode, String> {
    match s {
        "standard" => Ok(GreedyMode::Standard),
        "bifidelity" => Ok(GreedyMode::Bifidelity),
        "multifidelity" => Ok(GreedyMode::Multifidelity),
        _ => Err("expected standard | bifidelity | multifidelity".into()),
    }
}

fn parse_policy(s: &str) -> Result<SetPolicy, String> {
    match s {
        "add-only" | "add_only" => Ok(SetPolicy::AddOnly),
        "add-remove" | "add_remove" => Ok(SetPolicy::AddRemove),
        _ => Err("expected add-only | add-remove".into()),
    }
}

fn parse_norm(s: &str) -> Result<ErrorNorm, String> {
    match s {
        "absolute" => Ok(ErrorNorm::Absolute),
        "relative" => Ok(ErrorNorm::Relative),
        _ => Err("expected absolute | relative".into()),
    }
}

fn parse_spacing(s: &str) -> Result<GridSpacing, String> {
    match s {
        "linear" => Ok(GridSpacing::Linear),
        "log" => Ok(GridSpacing::Log),
        _ => Err("expected linear | log".into()),
    }
}

fn build_config(args: &RunArgs) -> Result<RunConfig, morgreed::Error> {
    let mut cfg = match (&args.config, &args.model) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(model)) => RunConfig::for_model(model),
        (None, None) => {
            return Err(morgreed::Error::InvalidConfig(
                "pass --config or --model".into(),
            ))
        }
    };
    if let Some(m) = &args.model {
        cfg.model = m.clone();
    }
    if let Some(v) = args.mode {
        cfg.mode = v;
    }
    if let Some(v) = args.tol {
        cfg.tol = v;
    }
    if let Some(v) = args.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = args.n_add {
        cfg.n_add = v;
    }
    if let Some(v) = args.n_del {
        cfg.n_del = v;
    }
    if let Some(v) = args.set_policy {
        cfg.set_policy = v;
    }
    if let Some(v) = args.rbf_shape {
        cfg.rbf_shape = v;
    }
    if let Some(v) = args.normalization {
        cfg.normalization = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.max_iterations {
        cfg.max_iterations = v;
    }
    if let Some(v) = &args.log {
        cfg.output.log = Some(v.clone());
    }
    if let Some(v) = &args.rom {
        cfg.output.rom = Some(v.clone());
    }
    if let Some(v) = &args.summary {
        cfg.output.summary = Some(v.clone());
    }
    if let Some(v) = &args.report {
        cfg.output.report = Some(v.clone());
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<i32, morgreed::Error> {
    match cli.command {
        Command::Generate(a) => {
            let mut spec = SyntheticSpec::new(a.order, a.delays, a.inputs, a.outputs, a.seed);
            spec.f_low = a.f_low;
            spec.f_high = a.f_high;
            spec.delays = DelaySpec::Range {
                lo: 0.05 / a.f_high,
                hi: 2.0 / a.f_high,
            };
            if let Some(d) = a.density {
                spec.density = d;
            }
            if let Some(m) = a.modes {
                spec.num_modes = m;
            }
            let model = generate_synthetic(&spec)?;
            model.save(&a.out)?;
            println!(
                "wrote {} (n={}, d={}, inputs={}, outputs={})",
                a.out.display(),
                model.order(),
                model.num_delays(),
                a.inputs,
                a.outputs
            );
            Ok(0)
        }
        Command::Run(a) => {
            let mut cfg = build_config(&a)?;
            if cfg.output.log.is_none() {
                cfg.output.log = Some(PathBuf::from("run_log.jsonl"));
            }
            if cfg.output.rom.is_none() {
                cfg.output.rom = Some(PathBuf::from("rom.json"));
            }
            if cfg.output.summary.is_none() {
                cfg.output.summary = Some(PathBuf::from("summary.json"));
            }
            let outcome = run_with_config(&cfg)?;
            let s = &outcome.summary;
            println!(
                "{}: converged={} iterations={} fom_solves={} r={} valid_err={} runtime_s={:.2}",
                s.method,
                s.converged,
                s.iterations,
                s.fom_solves,
                s.reduced_order,
                fmt_float(s.valid_err),
                outcome.result.runtime_s
            );
            Ok(if s.converged { 0 } else { 2 })
        }
        Command::Compare(a) => {
            let mut cfg = build_config(&a)?;
            if cfg.output.report.is_none() {
                cfg.output.report = Some(PathBuf::from("report"));
            }
            let report = compare(&cfg)?;
            println!(
                "{:<18} {:>5} {:>6} {:>10} {:>4} {:>13} {:>10}",
                "method", "conv", "iter", "fom_solves", "r", "valid_err", "runtime_s"
            );
            for r in &report.rows {
                println!(
                    "{:<18} {:>5} {:>6} {:>10} {:>4} {:>13.3e} {:>10.2}",
                    r.method, r.converged, r.iterations, r.fom_solves, r.reduced_order,
                    r.valid_err, r.runtime_s
                );
            }
            let all_ok = report.rows.iter().all(|r| r.converged && r.error.is_none());
            Ok(if all_ok { 0 } else { 2 })
        }
        Command::Trace(a) => {
            trace(
                &a.log,
                &a.out,
                &a.samples,
                TraceOptions {
                    true_errors: a.true_errors,
                    delta: a.delta,
                },
            )?;
            println!("wrote {} and {}", a.out.display(), a.samples.display());
            Ok(0)
        }
        Command::Validate(a) => {
            let sys = ParametricSystem::Delay(DelaySystem::load(&a.model)?);
            let rom = ReducedModel::load(&a.rom)?;
            let grid = make_grid(a.f_low, a.f_high, a.points, a.spacing)?;
            let (sweep, solves) = fom_sweep(&sys, &grid, thread_limit())?;
            let err = max_error_against_sweep(&sweep, &rom, &grid)?;
            println!(
                "valid_err={} over {} points ({} full-order solves)",
                fmt_float(err),
                grid.len(),
                solves
            );
            Ok(0)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": e.to_string() }));
            std::process::exit(1);
        }
    }
}
