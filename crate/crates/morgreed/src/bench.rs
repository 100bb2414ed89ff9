//! Benchmark harness: run configuration, the five-method comparison
//! protocol, validation sweeps, trace emission, and report files.
//!
//! Every file this module writes is deterministic for a fixed seed and
//! config: wall-clock timings stay in memory (and on the console) and are
//! never serialized, reductions have a fixed order, and floats are written
//! with 17 significant digits.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::greedy::{
    read_run_log, run, write_run_log, ErrorNorm, GreedyConfig, GreedyMode, GreedyResult,
    IterationRecord, SetPolicy, TrainingSets,
};
use crate::linalg::{orth_extend, BasisMatrix, ComplexMatrix};
use crate::rom::{project, ReducedModel};
use crate::system::{make_grid, DelaySystem, FrequencyPoint, GridSpacing, ParametricSystem, SolveCounter};
use crate::Result;

/// Worker-thread cap from `MORGREED_THREADS`; defaults to 1 so runs are
/// reproducible out of the box.
pub fn thread_limit() -> usize {
    std::env::var("MORGREED_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

/// Map a slice in parallel, preserving index order in the output.
fn parallel_map<T, U, F>(items: &[T], threads: usize, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync,
{
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    let mut out: Vec<Vec<U>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|slice| scope.spawn(|| slice.iter().map(&f).collect::<Vec<U>>()))
            .collect();
        out = handles.into_iter().map(|h| h.join().unwrap()).collect();
    });
    out.into_iter().flatten().collect()
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    pub f_low: f64,
    pub f_high: f64,
    pub points: usize,
    pub spacing: GridSpacing,
}

impl GridSpec {
    pub fn new(f_low: f64, f_high: f64, points: usize, spacing: GridSpacing) -> Self {
        Self {
            f_low,
            f_high,
            points,
            spacing,
        }
    }

    pub fn build(&self) -> Result<Vec<FrequencyPoint>> {
        make_grid(self.f_low, self.f_high, self.points, self.spacing)
    }
}

fn default_xi() -> GridSpec {
    GridSpec::new(1e6, 2e10, 30, GridSpacing::Linear)
}

fn default_coarse() -> GridSpec {
    GridSpec::new(1e6, 2e10, 10, GridSpacing::Linear)
}

fn default_fine() -> GridSpec {
    GridSpec::new(1e6, 2e10, 100, GridSpacing::Linear)
}

fn default_validation() -> GridSpec {
    GridSpec::new(1e6, 2e10, 1000, GridSpacing::Log)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default)]
    pub log: Option<PathBuf>,
    #[serde(default)]
    pub rom: Option<PathBuf>,
    #[serde(default)]
    pub summary: Option<PathBuf>,
    /// Stem for comparison outputs (`<stem>.csv`, `<stem>.json`, per-method
    /// logs and ROM exports).
    #[serde(default)]
    pub report: Option<PathBuf>,
}

fn default_tol() -> f64 {
    1e-3
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_one() -> usize {
    1
}

fn default_max_iterations() -> usize {
    100
}

fn default_rbf_shape() -> f64 {
    30.0
}

fn default_mode() -> GreedyMode {
    GreedyMode::Standard
}

fn default_set_policy() -> SetPolicy {
    SetPolicy::AddOnly
}

fn default_normalization() -> ErrorNorm {
    ErrorNorm::Absolute
}

/// Everything one run (or comparison) needs. Loadable from JSON; CLI flags
/// override individual fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: PathBuf,
    #[serde(default = "default_mode")]
    pub mode: GreedyMode,
    #[serde(default = "default_xi")]
    pub xi: GridSpec,
    #[serde(default = "default_coarse")]
    pub xi_coarse: GridSpec,
    #[serde(default = "default_fine")]
    pub xi_fine: GridSpec,
    #[serde(default = "default_validation")]
    pub validation: GridSpec,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_one")]
    pub n_add: usize,
    #[serde(default = "default_one")]
    pub n_del: usize,
    #[serde(default = "default_set_policy")]
    pub set_policy: SetPolicy,
    #[serde(default = "default_rbf_shape")]
    pub rbf_shape: f64,
    #[serde(default = "default_normalization")]
    pub normalization: ErrorNorm,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default)]
    pub initial_index: usize,
    #[serde(default)]
    pub output: OutputPaths,
}

impl RunConfig {
    pub fn for_model(model: impl Into<PathBuf>) -> Self {
        Self {
            model: model.into(),
            mode: default_mode(),
            xi: default_xi(),
            xi_coarse: default_coarse(),
            xi_fine: default_fine(),
            validation: default_validation(),
            tol: default_tol(),
            epsilon: default_epsilon(),
            n_add: 1,
            n_del: 1,
            set_policy: default_set_policy(),
            rbf_shape: default_rbf_shape(),
            normalization: default_normalization(),
            seed: 0,
            max_iterations: default_max_iterations(),
            initial_index: 0,
            output: OutputPaths::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let data = std::fs::read(path)?;
        Ok(serde_json::from_slice(&data)?)
    }

    /// Config echo for run-log headers. Output destinations are omitted:
    /// they do not affect the run and identical runs directed at
    /// different paths must still produce byte-identical logs.
    pub fn echo(&self) -> serde_json::Value {
        let mut c = self.clone();
        c.output = OutputPaths::default();
        serde_json::to_value(&c).expect("config serializes")
    }

    pub fn greedy_config(&self) -> GreedyConfig {
        GreedyConfig {
            mode: self.mode,
            tol: self.tol,
            epsilon: self.epsilon,
            n_add: self.n_add,
            n_del: self.n_del,
            max_iterations: self.max_iterations,
            set_policy: self.set_policy,
            rbf_shape: self.rbf_shape,
            normalization: self.normalization,
            initial_index: self.initial_index,
        }
    }

    pub fn training_sets(&self) -> Result<TrainingSets> {
        Ok(TrainingSets {
            xi: self.xi.build()?,
            xi_c: self.xi_coarse.build()?,
            xi_f: self.xi_fine.build()?,
        })
    }
}

// ---------------------------------------------------------------------------
// Validation sweeps
// ---------------------------------------------------------------------------

/// Full-order transfer functions over a grid, one counted solve per point.
/// The sweep parallelizes over grid chunks with an index-ordered merge.
pub fn fom_sweep(
    sys: &ParametricSystem,
    grid: &[FrequencyPoint],
    threads: usize,
) -> Result<(Vec<ComplexMatrix>, u64)> {
    let results = parallel_map(grid, threads, |p| {
        let mut local = SolveCounter::new();
        sys.transfer_function(*p, &mut local)
    });
    let mut out = Vec::with_capacity(grid.len());
    for r in results {
        out.push(r?);
    }
    Ok((out, grid.len() as u64))
}

/// Maximum output error of a reduced model against a precomputed sweep.
pub fn max_error_against_sweep(
    sweep: &[ComplexMatrix],
    rom: &ReducedModel,
    grid: &[FrequencyPoint],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (h, p) in sweep.iter().zip(grid) {
        let h_hat = rom.reduced_transfer(*p)?;
        worst = worst.max(h.sub(&h_hat).max_abs());
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Single run
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub method: String,
    pub converged: bool,
    pub iterations: usize,
    pub fom_solves: u64,
    pub reduced_order: usize,
    pub valid_err: f64,
    pub validation_points: usize,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub result: GreedyResult,
    pub summary: RunSummary,
}

fn method_label(mode: GreedyMode, policy: SetPolicy) -> String {
    match (mode, policy) {
        (GreedyMode::Standard, _) => "standard".to_string(),
        (GreedyMode::Bifidelity, SetPolicy::AddOnly) => "bi_add_only".to_string(),
        (GreedyMode::Bifidelity, SetPolicy::AddRemove) => "bi_add_remove".to_string(),
        (GreedyMode::Multifidelity, SetPolicy::AddOnly) => "multi_add_only".to_string(),
        (GreedyMode::Multifidelity, SetPolicy::AddRemove) => "multi_add_remove".to_string(),
    }
}

/// Execute the configured run: drive the greedy loop, validate the ROM,
/// and write whatever output paths are set.
pub fn run_with_config(cfg: &RunConfig) -> Result<RunOutcome> {
    let model = DelaySystem::load(&cfg.model)?;
    let sys = ParametricSystem::Delay(model);
    let sets = cfg.training_sets()?;
    let result = run(&sys, &sets, &cfg.greedy_config())?;

    let grid = cfg.validation.build()?;
    let (sweep, _) = fom_sweep(&sys, &grid, thread_limit())?;
    let valid_err = max_error_against_sweep(&sweep, &result.rom, &grid)?;

    let summary = RunSummary {
        method: method_label(cfg.mode, cfg.set_policy),
        converged: result.converged,
        iterations: result.log.len(),
        fom_solves: result.fom_solves,
        reduced_order: result.rom.order(),
        valid_err,
        validation_points: grid.len(),
    };

    if let Some(path) = &cfg.output.log {
        write_run_log(path, &cfg.echo(), &result)?;
    }
    if let Some(path) = &cfg.output.rom {
        result.rom.save(path)?;
    }
    if let Some(path) = &cfg.output.summary {
        let file = std::fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer(&mut w, &summary)?;
        w.write_all(b"\n")?;
    }

    Ok(RunOutcome { result, summary })
}

// ---------------------------------------------------------------------------
// Comparison protocol
// ---------------------------------------------------------------------------

/// One method row of the comparison report. Runtime is kept for console
/// display but never serialized, keeping report files reproducible.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub method: String,
    pub converged: bool,
    pub iterations: usize,
    pub fom_solves: u64,
    pub reduced_order: usize,
    pub valid_err: f64,
    pub error: Option<String>,
    #[serde(skip)]
    pub runtime_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ReportRow>,
    pub validation_points: usize,
}

/// The five benchmark methods in report order.
pub fn comparison_methods() -> [(GreedyMode, SetPolicy); 5] {
    [
        (GreedyMode::Standard, SetPolicy::AddOnly),
        (GreedyMode::Bifidelity, SetPolicy::AddOnly),
        (GreedyMode::Bifidelity, SetPolicy::AddRemove),
        (GreedyMode::Multifidelity, SetPolicy::AddOnly),
        (GreedyMode::Multifidelity, SetPolicy::AddRemove),
    ]
}

/// Run all five methods on one model, validate every ROM against a shared
/// full-order sweep of the validation grid, and (when a report stem is
/// configured) write the CSV/JSON report plus per-method logs and ROMs.
pub fn compare(cfg: &RunConfig) -> Result<ComparisonReport> {
    let model = DelaySystem::load(&cfg.model)?;
    let sys = ParametricSystem::Delay(model);
    let sets = cfg.training_sets()?;
    let threads = thread_limit();

    let methods = comparison_methods();
    let runs: Vec<(String, Result<GreedyResult>)> = parallel_map(&methods, threads, |&(mode, policy)| {
        let mut gc = cfg.greedy_config();
        gc.mode = mode;
        gc.set_policy = policy;
        (method_label(mode, policy), run(&sys, &sets, &gc))
    });

    let grid = cfg.validation.build()?;
    let (sweep, _) = fom_sweep(&sys, &grid, threads)?;

    let mut rows = Vec::new();
    let mut artifacts: Vec<(String, GreedyResult)> = Vec::new();
    for (label, outcome) in runs {
        match outcome {
            Ok(result) => {
                let valid_err = max_error_against_sweep(&sweep, &result.rom, &grid)?;
                rows.push(ReportRow {
                    method: label.clone(),
                    converged: result.converged,
                    iterations: result.log.len(),
                    fom_solves: result.fom_solves,
                    reduced_order: result.rom.order(),
                    valid_err,
                    error: None,
                    runtime_s: result.runtime_s,
                });
                artifacts.push((label, result));
            }
            Err(e) => rows.push(ReportRow {
                method: label,
                converged: false,
                iterations: 0,
                fom_solves: 0,
                reduced_order: 0,
                valid_err: f64::NAN,
                error: Some(e.to_string()),
                runtime_s: 0.0,
            }),
        }
    }

    let report = ComparisonReport {
        rows,
        validation_points: grid.len(),
    };

    if let Some(stem) = &cfg.output.report {
        write_report(stem, &report)?;
        for (label, result) in &artifacts {
            let mut cfg_echo = cfg.clone();
            for &(mode, policy) in &methods {
                if method_label(mode, policy) == *label {
                    cfg_echo.mode = mode;
                    cfg_echo.set_policy = policy;
                }
            }
            write_run_log(
                &stem.with_extension("").with_file_name(format!(
                    "{}_{label}.log.jsonl",
                    stem_name(stem)
                )),
                &cfg_echo.echo(),
                result,
            )?;
            result.rom.save(&stem.with_extension("").with_file_name(format!(
                "{}_{label}.rom.json",
                stem_name(stem)
            )))?;
        }
    }

    Ok(report)
}

fn stem_name(stem: &Path) -> String {
    stem.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".to_string())
}

/// 17 significant digits, `.` decimal separator.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_report(stem: &Path, report: &ComparisonReport) -> Result<()> {
    let csv_path = stem.with_extension("csv");
    let file = std::fs::File::create(&csv_path)?;
    let mut w = BufWriter::new(file);
    w.write_all(b"method,converged,iterations,fom_solves,reduced_order,valid_err,error\n")?;
    for r in &report.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.method,
            r.converged,
            r.iterations,
            r.fom_solves,
            r.reduced_order,
            fmt_float(r.valid_err),
            r.error.as_deref().unwrap_or("")
        )?;
    }
    drop(w);

    let json_path = stem.with_extension("json");
    let file = std::fs::File::create(&json_path)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, report)?;
    w.write_all(b"\n")?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Trace emission
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default)]
pub struct TraceOptions {
    /// Recompute the per-iteration true error over the working set
    /// (replays the run; costs full-order solves).
    pub true_errors: bool,
    /// Also emit the per-iteration estimator-gap diagnostic (more solves).
    pub delta: bool,
}

/// Turn a run log into plot-ready CSV data: error decay per iteration and
/// the selected-sample scatter.
pub fn trace(
    log_path: &Path,
    out_csv: &Path,
    samples_csv: &Path,
    opts: TraceOptions,
) -> Result<()> {
    let (config_echo, records) = read_run_log(log_path)?;
    if records.is_empty() {
        return Err(Error::MissingLog(format!(
            "{}: no iteration records",
            log_path.display()
        )));
    }

    let mut true_cols: Vec<Option<f64>> = vec![None; records.len()];
    let mut delta_cols: Vec<Option<f64>> = vec![None; records.len()];
    if opts.true_errors || opts.delta {
        let cfg: RunConfig = serde_json::from_value(config_echo)?;
        replay_errors(&cfg, &records, opts, &mut true_cols, &mut delta_cols)?;
    }

    let file = std::fs::File::create(out_csv)?;
    let mut w = BufWriter::new(file);
    w.write_all(b"iteration,estimator_max,true_error_max,delta_max,frozen,selected_f\n")?;
    for (i, r) in records.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.iteration,
            fmt_float(r.epsilon),
            true_cols[i].map(fmt_float).unwrap_or_default(),
            delta_cols[i].map(fmt_float).unwrap_or_default(),
            r.frozen,
            fmt_float(r.mu_star)
        )?;
    }
    drop(w);

    let file = std::fs::File::create(samples_csv)?;
    let mut w = BufWriter::new(file);
    w.write_all(b"iteration,snapshot_f,mu_star\n")?;
    for r in &records {
        writeln!(
            w,
            "{},{},{}",
            r.iteration,
            fmt_float(r.snapshot_f),
            fmt_float(r.mu_star)
        )?;
    }
    Ok(())
}

/// Rebuild the per-iteration bases from the logged snapshot frequencies
/// (the loop is deterministic, so this reproduces the run exactly) and
/// compute the requested per-iteration diagnostics over the working set.
fn replay_errors(
    cfg: &RunConfig,
    records: &[IterationRecord],
    opts: TraceOptions,
    true_cols: &mut [Option<f64>],
    delta_cols: &mut [Option<f64>],
) -> Result<()> {
    let model = DelaySystem::load(&cfg.model)?;
    let sys = ParametricSystem::Delay(model);
    let sets = cfg.training_sets()?;
    let mut working = match cfg.mode {
        GreedyMode::Standard => sets.xi.clone(),
        _ => sets.xi_c.clone(),
    };
    let scale = scale_for_replay(cfg, &sys, &working)?;

    let mut v = BasisMatrix::empty(sys.order());
    let mut est = crate::estimator::ResidualEstimator::empty(sys.order());
    let mut counter = SolveCounter::new();
    for (i, r) in records.iter().enumerate() {
        let x = sys.solve_fom(FrequencyPoint::new(r.snapshot_f), &mut counter)?;
        v = orth_extend(&v, &x)?;
        let rom = project(&sys, &v)?;
        if let Some(fr) = r.residual_snapshot_f {
            est = est.update_vr(&sys, &v, FrequencyPoint::new(fr), &mut counter)?;
        }
        if opts.true_errors {
            let mut worst: f64 = 0.0;
            for p in &working {
                worst = worst.max(crate::rom::output_error(&sys, &rom, *p, &mut counter)?);
            }
            true_cols[i] = Some(worst / scale);
        }
        if opts.delta {
            let mut worst: f64 = 0.0;
            for p in &working {
                worst = worst.max(est.delta_diagnostic(&sys, &rom, *p, &mut counter)?);
            }
            delta_cols[i] = Some(worst / scale);
        }
        for f in &r.added {
            working.push(FrequencyPoint::new(*f));
        }
        for f in &r.removed {
            if let Some(pos) = working.iter().position(|p| p.f == *f) {
                working.remove(pos);
            }
        }
    }
    Ok(())
}

fn scale_for_replay(
    cfg: &RunConfig,
    sys: &ParametricSystem,
    initial_working: &[FrequencyPoint],
) -> Result<f64> {
    match cfg.normalization {
        ErrorNorm::Absolute => Ok(1.0),
        ErrorNorm::Relative => {
            let mut counter = SolveCounter::new();
            let mut s: f64 = 0.0;
            for p in initial_working {
                s = s.max(sys.transfer_function(*p, &mut counter)?.max_abs());
            }
            Ok(s.max(f64::MIN_POSITIVE))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_synthetic, SyntheticSpec};

    fn small_config(dir: &Path) -> RunConfig {
        let spec = SyntheticSpec::new(30, 3, 2, 2, 61);
        let model = generate_synthetic(&spec).unwrap();
        let model_path = dir.join("model.json");
        model.save(&model_path).unwrap();
        let mut cfg = RunConfig::for_model(&model_path);
        cfg.xi = GridSpec::new(1e6, 2e10, 12, GridSpacing::Linear);
        cfg.xi_coarse = GridSpec::new(1e6, 2e10, 8, GridSpacing::Linear);
        cfg.xi_fine = GridSpec::new(1e6, 2e10, 50, GridSpacing::Linear);
        cfg.validation = GridSpec::new(1e6, 2e10, 60, GridSpacing::Log);
        cfg
    }

    #[test]
    fn run_and_summary_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(dir.path());
        cfg.output.log = Some(dir.path().join("run.jsonl"));
        cfg.output.rom = Some(dir.path().join("rom.json"));
        cfg.output.summary = Some(dir.path().join("summary.json"));
        let outcome = run_with_config(&cfg).unwrap();
        assert!(outcome.result.converged);
        assert!(cfg.output.log.as_ref().unwrap().exists());
        assert!(cfg.output.rom.as_ref().unwrap().exists());
        assert!(cfg.output.summary.as_ref().unwrap().exists());

        // Valid.err from the exported ROM matches the reported value.
        let loaded = ReducedModel::load(cfg.output.rom.as_ref().unwrap()).unwrap();
        let sys = ParametricSystem::Delay(DelaySystem::load(&cfg.model).unwrap());
        let grid = cfg.validation.build().unwrap();
        let mut counter = SolveCounter::new();
        let revalidated = crate::greedy::validate(&sys, &loaded, &grid, &mut counter).unwrap();
        let diff = (revalidated - outcome.summary.valid_err).abs();
        assert!(
            diff <= 1e-12 * outcome.summary.valid_err.max(1.0),
            "report {} vs revalidated {revalidated}",
            outcome.summary.valid_err
        );
    }

    #[test]
    fn rerun_summary_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(dir.path());
        cfg.output.summary = Some(dir.path().join("summary.json"));
        run_with_config(&cfg).unwrap();
        let first = std::fs::read(cfg.output.summary.as_ref().unwrap()).unwrap();
        run_with_config(&cfg).unwrap();
        let second = std::fs::read(cfg.output.summary.as_ref().unwrap()).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn compare_emits_all_rows_and_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(dir.path());
        cfg.output.report = Some(dir.path().join("report"));
        let report = compare(&cfg).unwrap();
        assert_eq!(report.rows.len(), 5);
        let labels: Vec<&str> = report.rows.iter().map(|r| r.method.as_str()).collect();
        assert_eq!(
            labels,
            vec![
                "standard",
                "bi_add_only",
                "bi_add_remove",
                "multi_add_only",
                "multi_add_remove"
            ]
        );
        for r in &report.rows {
            assert!(r.error.is_none(), "{}: {:?}", r.method, r.error);
            assert!(r.converged, "{} did not converge", r.method);
        }
        assert!(dir.path().join("report.csv").exists());
        assert!(dir.path().join("report.json").exists());
        assert!(dir.path().join("report_standard.log.jsonl").exists());
        assert!(dir.path().join("report_multi_add_remove.rom.json").exists());

        let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
        assert!(csv.starts_with("method,"));
        assert_eq!(csv.lines().count(), 6);
        assert!(!csv.contains('\r'));

        // Report consistency: Valid.err equals re-running validate on the
        // exported ROM.
        let sys = ParametricSystem::Delay(DelaySystem::load(&cfg.model).unwrap());
        let grid = cfg.validation.build().unwrap();
        for r in &report.rows {
            let rom_path = dir.path().join(format!("report_{}.rom.json", r.method));
            let rom = ReducedModel::load(&rom_path).unwrap();
            let mut counter = SolveCounter::new();
            let again = crate::greedy::validate(&sys, &rom, &grid, &mut counter).unwrap();
            assert!(
                (again - r.valid_err).abs() <= 1e-12 * r.valid_err.max(1.0),
                "{}: {} vs revalidated {again}",
                r.method,
                r.valid_err
            );
        }
    }

    #[test]
    fn trace_emits_rows_per_iteration() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(dir.path());
        cfg.mode = GreedyMode::Multifidelity;
        cfg.epsilon = 0.2;
        cfg.output.log = Some(dir.path().join("run.jsonl"));
        let outcome = run_with_config(&cfg).unwrap();

        let out_csv = dir.path().join("trace.csv");
        let samples_csv = dir.path().join("samples.csv");
        trace(
            cfg.output.log.as_ref().unwrap(),
            &out_csv,
            &samples_csv,
            TraceOptions {
                true_errors: true,
                delta: true,
            },
        )
        .unwrap();

        let text = std::fs::read_to_string(&out_csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), outcome.result.log.len() + 1);

        // Per-iteration gap bound: estimator within [true - delta, true + delta].
        let mut flips = 0;
        let mut prev_frozen = false;
        for line in &lines[1..] {
            let cells: Vec<&str> = line.split(',').collect();
            let est: f64 = cells[1].parse().unwrap();
            let truth: f64 = cells[2].parse().unwrap();
            let delta: f64 = cells[3].parse().unwrap();
            let frozen: bool = cells[4].parse().unwrap();
            let slack = 1e-9 * truth.max(1.0);
            assert!(est >= truth - delta - slack, "{line}");
            assert!(est <= truth + delta + slack, "{line}");
            if frozen != prev_frozen {
                flips += 1;
                prev_frozen = frozen;
            }
        }
        // epsilon = 0.2 is reachable here, so the latch flips exactly once.
        assert_eq!(flips, 1, "latch must flip exactly once");

        let samples = std::fs::read_to_string(&samples_csv).unwrap();
        assert_eq!(samples.lines().count(), outcome.result.log.len() + 1);
    }

    #[test]
    fn trace_missing_log() {
        let dir = tempfile::tempdir().unwrap();
        let r = trace(
            &dir.path().join("nope.jsonl"),
            &dir.path().join("out.csv"),
            &dir.path().join("samples.csv"),
            TraceOptions::default(),
        );
        assert!(matches!(r, Err(Error::MissingLog(_))));
    }

    #[test]
    fn parallel_map_preserves_order() {
        let items: Vec<usize> = (0..37).collect();
        let seq = parallel_map(&items, 1, |&x| x * 2);
        let par = parallel_map(&items, 4, |&x| x * 2);
        assert_eq!(seq, par);
    }
}
