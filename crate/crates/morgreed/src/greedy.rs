//! Greedy reduced-basis drivers and training-set management.
//!
//! All three drivers share one loop. Per iteration the full-order model is
//! solved at the current interpolation point `mu*` (and, while the
//! estimator is live, at `mu^r` for the auxiliary basis), the bases are
//! extended, the estimator is swept over the working set, and the next
//! `mu*` / `mu^r` are the sweep argmaxes. The bi- and multi-fidelity modes
//! additionally fit an RBF surrogate to the sweep values and use it to
//! enrich (and under `add_remove` prune) the coarse set from the fine set.
//! The multi-fidelity mode freezes the estimator once the sweep maximum
//! drops below `epsilon`, after which each iteration costs a single
//! full-order solve.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::estimator::ResidualEstimator;
use crate::linalg::{orth_extend, BasisMatrix};
use crate::rom::{output_error, project, ReducedModel};
use crate::surrogate::rbf_fit;
use crate::system::{FrequencyPoint, ParametricSystem, SolveCounter};
use crate::Result;

pub const LOG_FORMAT: &str = "morgreed-log-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreedyMode {
    Standard,
    Bifidelity,
    Multifidelity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetPolicy {
    AddOnly,
    AddRemove,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorNorm {
    /// Compare the estimator directly against `tol`.
    Absolute,
    /// Divide all estimates by the largest transfer-function magnitude
    /// over the initial working set (costs that many extra solves up
    /// front).
    Relative,
}

/// Training sets: `xi` for the standard driver, `xi_c`/`xi_f` for the
/// bi- and multi-fidelity drivers. `xi_c` evolves during a run.
#[derive(Debug, Clone)]
pub struct TrainingSets {
    pub xi: Vec<FrequencyPoint>,
    pub xi_c: Vec<FrequencyPoint>,
    pub xi_f: Vec<FrequencyPoint>,
}

impl TrainingSets {
    pub fn standard(xi: Vec<FrequencyPoint>) -> Self {
        Self {
            xi,
            xi_c: Vec::new(),
            xi_f: Vec::new(),
        }
    }

    pub fn fidelity(xi_c: Vec<FrequencyPoint>, xi_f: Vec<FrequencyPoint>) -> Self {
        Self {
            xi: Vec::new(),
            xi_c,
            xi_f,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GreedyConfig {
    pub mode: GreedyMode,
    pub tol: f64,
    /// Multi-fidelity latch threshold (`tol < epsilon < 1`).
    pub epsilon: f64,
    pub n_add: usize,
    pub n_del: usize,
    pub max_iterations: usize,
    pub set_policy: SetPolicy,
    /// IMQ shape parameter for the surrogate.
    pub rbf_shape: f64,
    pub normalization: ErrorNorm,
    /// Index of the initial `mu*` in the working set.
    pub initial_index: usize,
}

impl GreedyConfig {
    pub fn new(mode: GreedyMode, tol: f64) -> Self {
        Self {
            mode,
            tol,
            epsilon: 0.1,
            n_add: 1,
            n_del: 1,
            max_iterations: 100,
            set_policy: SetPolicy::AddOnly,
            rbf_shape: 30.0,
            normalization: ErrorNorm::Absolute,
            initial_index: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "tol must lie in (0, 1), got {}",
                self.tol
            )));
        }
        if self.mode == GreedyMode::Multifidelity && !(self.epsilon > self.tol && self.epsilon < 1.0)
        {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in (tol, 1), got {}",
                self.epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if self.rbf_shape <= 0.0 {
            return Err(Error::InvalidConfig("rbf shape must be positive".into()));
        }
        Ok(())
    }
}

/// One greedy iteration as recorded in the run log. Wall time is kept in
/// memory only so that logs from identical runs stay byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Frequency whose snapshot extended `V` this iteration.
    pub snapshot_f: f64,
    /// Frequency whose snapshot extended `V_r`, when the estimator is live.
    pub residual_snapshot_f: Option<f64>,
    /// `mu*` selected this iteration (estimator argmax).
    pub mu_star: f64,
    /// `mu^r` selected this iteration, when the estimator is live.
    pub mu_r: Option<f64>,
    pub added: Vec<f64>,
    pub removed: Vec<f64>,
    /// Sweep maximum of the (normalized) estimator.
    pub epsilon: f64,
    /// Number of estimator evaluations in this iteration's sweep.
    pub swept: usize,
    /// Working-set size after the update.
    pub coarse_size: usize,
    pub basis_size: usize,
    /// Cumulative full-order solves after this iteration.
    pub fom_solves: u64,
    pub frozen: bool,
    #[serde(skip)]
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct GreedyResult {
    pub rom: ReducedModel,
    pub estimator: ResidualEstimator,
    pub log: Vec<IterationRecord>,
    pub converged: bool,
    pub fom_solves: u64,
    pub runtime_s: f64,
    /// Scale the estimates were divided by (1 in absolute mode).
    pub normalization_scale: f64,
}

impl GreedyResult {
    /// Frequencies whose snapshots entered the primary basis.
    pub fn snapshot_frequencies(&self) -> Vec<f64> {
        self.log.iter().map(|r| r.snapshot_f).collect()
    }
}

/// Standard greedy with the residual-system estimator over a fixed
/// training set.
pub fn run_standard(
    sys: &ParametricSystem,
    xi: &[FrequencyPoint],
    config: &GreedyConfig,
) -> Result<GreedyResult> {
    let mut cfg = config.clone();
    cfg.mode = GreedyMode::Standard;
    drive(sys, xi.to_vec(), Vec::new(), &cfg)
}

/// Greedy with bi-fidelity error estimation: estimator on the coarse set,
/// RBF surrogate swept over the fine set.
pub fn run_bifidelity(
    sys: &ParametricSystem,
    sets: &TrainingSets,
    config: &GreedyConfig,
) -> Result<GreedyResult> {
    let mut cfg = config.clone();
    cfg.mode = GreedyMode::Bifidelity;
    drive(sys, sets.xi_c.clone(), sets.xi_f.clone(), &cfg)
}

/// Greedy with multi-fidelity error estimation: bi-fidelity plus the
/// estimator freeze once the sweep maximum falls below `epsilon`.
pub fn run_multifidelity(
    sys: &ParametricSystem,
    sets: &TrainingSets,
    config: &GreedyConfig,
) -> Result<GreedyResult> {
    let mut cfg = config.clone();
    cfg.mode = GreedyMode::Multifidelity;
    drive(sys, sets.xi_c.clone(), sets.xi_f.clone(), &cfg)
}

/// Dispatch on `config.mode`.
pub fn run(sys: &ParametricSystem, sets: &TrainingSets, config: &GreedyConfig) -> Result<GreedyResult> {
    match config.mode {
        GreedyMode::Standard => run_standard(sys, &sets.xi, config),
        GreedyMode::Bifidelity => run_bifidelity(sys, sets, config),
        GreedyMode::Multifidelity => run_multifidelity(sys, sets, config),
    }
}

/// Affine map from the run's frequency range onto [0, 1], fixed at run
/// start, so the surrogate shape parameter is band-independent.
#[derive(Debug, Clone, Copy)]
struct CoordMap {
    lo: f64,
    span: f64,
}

impl CoordMap {
    fn over<'a>(points: impl Iterator<Item = &'a FrequencyPoint>) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in points {
            lo = lo.min(p.f);
            hi = hi.max(p.f);
        }
        let span = if hi > lo { hi - lo } else { 1.0 };
        Self { lo, span }
    }

    fn map(&self, f: f64) -> f64 {
        (f - self.lo) / self.span
    }
}

fn drive(
    sys: &ParametricSystem,
    mut active: Vec<FrequencyPoint>,
    fine: Vec<FrequencyPoint>,
    config: &GreedyConfig,
) -> Result<GreedyResult> {
    config.validate()?;
    let with_surrogate = config.mode != GreedyMode::Standard;
    if active.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "training set needs at least 2 points, got {}",
            active.len()
        )));
    }
    if with_surrogate && fine.len() < active.len() {
        return Err(Error::InvalidConfig(format!(
            "fine set ({}) must be at least as large as the coarse set ({})",
            fine.len(),
            active.len()
        )));
    }
    if config.initial_index >= active.len() {
        return Err(Error::InvalidConfig(format!(
            "initial index {} outside the working set",
            config.initial_index
        )));
    }

    let start = Instant::now();
    let n = sys.order();
    let mut counter = SolveCounter::new();

    // Frequencies are mapped to [0, 1] before the surrogate sees them so
    // the shape parameter means the same thing on every band.
    let coord = CoordMap::over(active.iter().chain(&fine));

    let scale = match config.normalization {
        ErrorNorm::Absolute => 1.0,
        ErrorNorm::Relative => {
            let mut s: f64 = 0.0;
            for p in &active {
                s = s.max(sys.transfer_function(*p, &mut counter)?.max_abs());
            }
            if s == 0.0 {
                return Err(Error::InvalidConfig(
                    "relative normalization needs a nonzero response over the training set".into(),
                ));
            }
            s
        }
    };

    let mut v = BasisMatrix::empty(n);
    let mut est = ResidualEstimator::empty(n);
    let mut mu_star = active[config.initial_index];
    let mut mu_r = active[if config.initial_index == 0 { 1 } else { 0 }];
    let mut prev_eps = 1.0;
    let mut stagnation = 0usize;
    let mut converged = false;
    let mut log: Vec<IterationRecord> = Vec::new();
    let mut rom: Option<ReducedModel> = None;

    for iteration in 1..=config.max_iterations {
        if active.is_empty() {
            return Err(Error::EmptyCoarseSet);
        }
        let snapshot_f = mu_star.f;
        let snapshot = sys.solve_fom(mu_star, &mut counter)?;
        v = orth_extend(&v, &snapshot)?;
        let current_rom = project(sys, &v)?;

        let residual_snapshot_f = if est.is_frozen() {
            None
        } else {
            est = est.update_vr(sys, &v, mu_r, &mut counter)?;
            Some(mu_r.f)
        };

        // Estimator sweep over the working set.
        let swept = active.len();
        let mut deltas = Vec::with_capacity(swept);
        let mut defects = Vec::with_capacity(swept);
        for p in &active {
            let e = est.evaluate(sys, &current_rom, *p)?;
            deltas.push(e.delta_tilde / scale);
            defects.push(e.residual_residual);
        }
        let star_idx = argmax(&deltas);
        let new_mu_star = active[star_idx];
        let new_eps = deltas[star_idx];
        let new_mu_r = if est.is_frozen() {
            None
        } else {
            Some(active[argmax(&defects)])
        };

        let mut added = Vec::new();
        let mut removed = Vec::new();
        if with_surrogate {
            let mut order: Vec<usize> = (0..swept).collect();
            order.sort_by(|&a, &b| deltas[a].total_cmp(&deltas[b]).then(a.cmp(&b)));
            let removals: Vec<(FrequencyPoint, f64)> = order
                .iter()
                .take(config.n_del)
                .map(|&i| (active[i], deltas[i]))
                .collect();

            let coords: Vec<f64> = active.iter().map(|p| coord.map(p.f)).collect();
            let sur = rbf_fit(&coords, &deltas, config.rbf_shape)?;
            let fine_coords: Vec<f64> = fine.iter().map(|p| coord.map(p.f)).collect();
            let additions: Vec<(FrequencyPoint, f64)> = sur
                .select_candidates(&fine_coords, &coords, config.n_add)
                .into_iter()
                .map(|(i, val)| (fine[i], val))
                .collect();

            let (a, r) = update_coarse_set(
                &mut active,
                &additions,
                &removals,
                config.set_policy,
                config.tol,
                new_mu_star,
            );
            added = a;
            removed = r;
        }

        let eps = new_eps;
        if config.mode == GreedyMode::Multifidelity && !est.is_frozen() && eps < config.epsilon {
            est.freeze();
        }

        log.push(IterationRecord {
            iteration,
            snapshot_f,
            residual_snapshot_f,
            mu_star: new_mu_star.f,
            mu_r: new_mu_r.map(|p| p.f),
            added,
            removed,
            epsilon: eps,
            swept,
            coarse_size: active.len(),
            basis_size: v.num_cols(),
            fom_solves: counter.count(),
            frozen: est.is_frozen(),
            wall_time_s: start.elapsed().as_secs_f64(),
        });
        rom = Some(current_rom);

        if eps <= config.tol {
            converged = true;
            break;
        }

        // Stagnation guard: the argmax re-picking the point whose snapshot
        // was just added, while the estimate shrinks by less than 1%, three
        // times in a row means the run is going nowhere.
        if new_mu_star.f == snapshot_f && eps > 0.99 * prev_eps {
            stagnation += 1;
        } else {
            stagnation = 0;
        }
        prev_eps = eps;
        if stagnation >= 3 {
            break;
        }

        mu_star = new_mu_star;
        if let Some(m) = new_mu_r {
            mu_r = m;
        }
    }

    Ok(GreedyResult {
        rom: rom.expect("at least one iteration ran"),
        estimator: est,
        log,
        converged,
        fom_solves: counter.count(),
        runtime_s: start.elapsed().as_secs_f64(),
        normalization_scale: scale,
    })
}

/// Index of the largest value; ties go to the lowest index.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Apply one iteration's coarse-set update. Additions (paired with their
/// surrogate value) are admitted only above `tol`; removals (paired with
/// their estimator value) only below `tol`, only under `add_remove`, never
/// the current `mu*`, and never below a floor of three points. Returns the
/// frequencies actually added and removed.
pub fn update_coarse_set(
    xi_c: &mut Vec<FrequencyPoint>,
    additions: &[(FrequencyPoint, f64)],
    removals: &[(FrequencyPoint, f64)],
    policy: SetPolicy,
    tol: f64,
    mu_star: FrequencyPoint,
) -> (Vec<f64>, Vec<f64>) {
    let mut added = Vec::new();
    for &(p, delta_l) in additions {
        if delta_l > tol && !xi_c.iter().any(|q| q.f == p.f) {
            xi_c.push(p);
            added.push(p.f);
        }
    }
    let mut removed = Vec::new();
    if policy == SetPolicy::AddRemove {
        for &(p, delta) in removals {
            if delta < tol && p.f != mu_star.f && xi_c.len() > 3 {
                if let Some(pos) = xi_c.iter().position(|q| q.f == p.f) {
                    xi_c.remove(pos);
                    removed.push(p.f);
                }
            }
        }
    }
    (added, removed)
}

/// Maximum output error of the reduced model over a grid. Performs (and
/// counts) one full-order solve per grid point; report these separately
/// from the offline solves.
pub fn validate(
    sys: &ParametricSystem,
    rom: &ReducedModel,
    grid: &[FrequencyPoint],
    counter: &mut SolveCounter,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in grid {
        worst = worst.max(output_error(sys, rom, *p, counter)?);
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Run log (morgreed-log-v1)
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct LogHeader {
    format: String,
    config: serde_json::Value,
    normalization_scale: f64,
    converged: bool,
}

/// Write a run log: a header line with the config echo, then one
/// iteration record per line.
pub fn write_run_log(path: &Path, config_echo: &serde_json::Value, result: &GreedyResult) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let header = LogHeader {
        format: LOG_FORMAT.to_string(),
        config: config_echo.clone(),
        normalization_scale: result.normalization_scale,
        converged: result.converged,
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for record in &result.log {
        serde_json::to_writer(&mut w, record)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Read a run log back: the config echo and the iteration records.
pub fn read_run_log(path: &Path) -> Result<(serde_json::Value, Vec<IterationRecord>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::MissingLog(format!("{}: {e}", path.display())))?;
    let mut lines = BufReader::new(file).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::MissingLog(format!("{}: empty file", path.display())))??;
    let header: LogHeader = serde_json::from_str(&header_line)?;
    if header.format != LOG_FORMAT {
        return Err(Error::InvalidFormat(format!(
            "expected format {LOG_FORMAT}, got {}",
            header.format
        )));
    }
    let mut records = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line)?);
    }
    Ok((header.config, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ComplexMatrix, SparseTriplets};
    use crate::rom::project;
    use crate::system::{make_grid, GridSpacing};
    use crate::synth::{generate_synthetic, SyntheticSpec};
    use num_complex::Complex64;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// System whose solution is the same single column at every frequency:
    /// one snapshot spans the whole solution manifold.
    fn rank_one_system(n: usize, seed: u64) -> ParametricSystem {
        let mut rng = StdRng::seed_from_u64(seed);
        let terms = vec![(crate::system::Coefficient::Constant, SparseTriplets::identity(n))];
        let b = ComplexMatrix::from_fn(n, 1, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), 0.0));
        let c = ComplexMatrix::from_fn(2, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), 0.0));
        ParametricSystem::generic(terms, b, c).unwrap()
    }

    fn bench_system(n: usize, d: usize, seed: u64) -> ParametricSystem {
        let mut spec = SyntheticSpec::new(n, d, 2, 2, seed);
        spec.response_scale = 1.0;
        ParametricSystem::Delay(generate_synthetic(&spec).unwrap())
    }

    fn band_grid(points: usize) -> Vec<FrequencyPoint> {
        make_grid(1e6, 2e10, points, GridSpacing::Linear).unwrap()
    }

    #[test]
    fn rank_one_converges_immediately() {
        let sys = rank_one_system(20, 1);
        let xi = band_grid(8);
        let config = GreedyConfig::new(GreedyMode::Standard, 1e-3);
        let result = run_standard(&sys, &xi, &config).unwrap();
        assert!(result.converged);
        assert!(result.log.len() <= 2);
        assert!(result.log.last().unwrap().epsilon <= 1e-3);
    }

    #[test]
    fn loose_tolerance_stops_after_one_iteration() {
        let sys = rank_one_system(12, 2);
        let xi = band_grid(6);
        let config = GreedyConfig::new(GreedyMode::Standard, 0.9);
        let result = run_standard(&sys, &xi, &config).unwrap();
        assert!(result.converged);
        assert_eq!(result.log.len(), 1);
    }

    #[test]
    fn standard_counts_two_solves_per_iteration() {
        let sys = bench_system(40, 3, 5);
        let xi = band_grid(12);
        let config = GreedyConfig::new(GreedyMode::Standard, 1e-3);
        let result = run_standard(&sys, &xi, &config).unwrap();
        assert!(result.converged, "benchmark system should converge");
        let mut prev = 0;
        for r in &result.log {
            assert_eq!(r.fom_solves - prev, 2, "iteration {}", r.iteration);
            prev = r.fom_solves;
        }
        // mu* always comes from the training set.
        for r in &result.log {
            assert!(xi.iter().any(|p| p.f == r.mu_star));
        }
    }

    #[test]
    fn standard_converges_and_validates() {
        let mut spec = SyntheticSpec::new(200, 5, 2, 2, 9);
        spec.num_modes = 8;
        spec.damping = (0.2, 0.5);
        spec.mode_f_low = spec.f_high / 8.0;
        spec.response_scale = 1.0;
        let sys = ParametricSystem::Delay(generate_synthetic(&spec).unwrap());
        let xi = band_grid(24);
        let config = GreedyConfig::new(GreedyMode::Standard, 1e-3);
        let result = run_standard(&sys, &xi, &config).unwrap();
        assert!(result.converged);
        let holdout = make_grid(1e6, 2e10, 120, GridSpacing::Log).unwrap();
        let mut counter = SolveCounter::new();
        let err = validate(&sys, &result.rom, &holdout, &mut counter).unwrap();
        assert_eq!(counter.count(), 120);
        assert!(err <= config.tol, "validated error {err} above tol");
    }

    #[test]
    fn validate_full_basis_and_converged_training_set() {
        let sys = bench_system(24, 2, 63);
        let full = project(&sys, &BasisMatrix::identity(24)).unwrap();
        let grid = band_grid(10);
        let mut counter = SolveCounter::new();
        let err = validate(&sys, &full, &grid, &mut counter).unwrap();
        assert!(err <= 1e-8);

        // Over the training set of a converged run, the true error stays
        // within tol plus the estimator-gap allowance.
        let config = GreedyConfig::new(GreedyMode::Standard, 1e-3);
        let xi = band_grid(12);
        let result = run_standard(&sys, &xi, &config).unwrap();
        assert!(result.converged);
        let mut delta_max: f64 = 0.0;
        for p in &xi {
            delta_max = delta_max.max(
                result
                    .estimator
                    .delta_diagnostic(&sys, &result.rom, *p, &mut counter)
                    .unwrap(),
            );
        }
        let err = validate(&sys, &result.rom, &xi, &mut counter).unwrap();
        assert!(
            err <= config.tol + delta_max + 1e-12,
            "training-set error {err} above tol {} + delta {delta_max}",
            config.tol
        );
    }

    #[test]
    fn bifidelity_add_only_matches_standard_on_rank_one() {
        let sys = rank_one_system(16, 3);
        let sets = TrainingSets::fidelity(band_grid(6), band_grid(30));
        let config = GreedyConfig::new(GreedyMode::Bifidelity, 1e-3);
        let result = run_bifidelity(&sys, &sets, &config).unwrap();
        assert!(result.converged);
        assert!(result.log.len() <= 2);
    }

    #[test]
    fn bifidelity_add_remove_bookkeeping() {
        let sys = bench_system(50, 4, 21);
        let sets = TrainingSets::fidelity(band_grid(10), band_grid(60));
        let mut config = GreedyConfig::new(GreedyMode::Bifidelity, 1e-3);
        config.set_policy = SetPolicy::AddRemove;
        let result = run_bifidelity(&sys, &sets, &config).unwrap();
        let mut prev_size = 10usize;
        for r in &result.log {
            assert!(r.added.len() <= config.n_add);
            assert!(r.removed.len() <= config.n_del);
            if r.added.len() == 1 && r.removed.len() == 1 {
                assert_eq!(r.coarse_size, prev_size, "one add and one remove must cancel");
            }
            // The selected mu* is never removed in its own iteration.
            assert!(!r.removed.contains(&r.mu_star));
            prev_size = r.coarse_size;
        }
    }

    #[test]
    fn bifidelity_cheaper_sweeps_than_standard_on_double_grid() {
        // Few, well-damped modes so the evolving coarse set can cover the
        // band down to tol accuracy.
        let mut spec = SyntheticSpec::new(50, 4, 2, 2, 33);
        spec.num_modes = 6;
        spec.damping = (0.2, 0.5);
        spec.response_scale = 1.0;
        let sys = ParametricSystem::Delay(generate_synthetic(&spec).unwrap());
        let coarse = band_grid(10);
        let config_std = GreedyConfig::new(GreedyMode::Standard, 1e-3);
        let standard = run_standard(&sys, &band_grid(20), &config_std).unwrap();
        let mut config_bi = GreedyConfig::new(GreedyMode::Bifidelity, 1e-3);
        config_bi.set_policy = SetPolicy::AddRemove;
        let sets = TrainingSets::fidelity(coarse, band_grid(100));
        let bi = run_bifidelity(&sys, &sets, &config_bi).unwrap();
        assert!(bi.converged);

        let sweeps_std: usize = standard.log.iter().map(|r| r.swept).sum();
        let sweeps_bi: usize = bi.log.iter().map(|r| r.swept).sum();
        assert!(
            sweeps_bi < sweeps_std,
            "bi-fidelity should evaluate the estimator less: {sweeps_bi} vs {sweeps_std}"
        );

        let holdout = make_grid(1e6, 2e10, 100, GridSpacing::Log).unwrap();
        let mut counter = SolveCounter::new();
        let err = validate(&sys, &bi.rom, &holdout, &mut counter).unwrap();
        assert!(err <= 1e-3, "validated error {err} above tol");
    }

    #[test]
    fn multifidelity_latch_from_first_iteration() {
        // epsilon above the initial estimate freezes immediately; every
        // later iteration performs exactly one full-order solve.
        let sys = bench_system(40, 3, 41);
        let sets = TrainingSets::fidelity(band_grid(8), band_grid(40));
        let mut config = GreedyConfig::new(GreedyMode::Multifidelity, 1e-4);
        config.epsilon = 0.99;
        let result = run_multifidelity(&sys, &sets, &config).unwrap();
        assert!(result.log[0].frozen, "latch must engage at iteration 1");
        let mut prev = result.log[0].fom_solves;
        for r in &result.log[1..] {
            assert_eq!(r.fom_solves - prev, 1, "iteration {}", r.iteration);
            prev = r.fom_solves;
        }
    }

    #[test]
    fn multifidelity_latch_is_monotone_and_saves_solves() {
        let sys = bench_system(60, 5, 43);
        let sets = TrainingSets::fidelity(band_grid(10), band_grid(60));
        let mut config = GreedyConfig::new(GreedyMode::Multifidelity, 1e-3);
        config.epsilon = 0.1;
        config.set_policy = SetPolicy::AddRemove;
        let multi = run_multifidelity(&sys, &sets, &config).unwrap();
        assert!(multi.converged);

        let mut seen_frozen = false;
        for r in &multi.log {
            if seen_frozen {
                assert!(r.frozen, "latch must never come back off");
            }
            seen_frozen |= r.frozen;
        }
        assert!(seen_frozen, "latch should engage before convergence");

        let mut config_bi = config.clone();
        config_bi.mode = GreedyMode::Bifidelity;
        let bi = run_bifidelity(&sys, &sets, &config_bi).unwrap();
        assert!(bi.converged);
        assert!(
            multi.fom_solves <= bi.fom_solves,
            "multi-fidelity must not use more solves: {} vs {}",
            multi.fom_solves,
            bi.fom_solves
        );
    }

    #[test]
    fn deterministic_logs() {
        let sys = bench_system(40, 3, 47);
        let sets = TrainingSets::fidelity(band_grid(8), band_grid(40));
        let mut config = GreedyConfig::new(GreedyMode::Multifidelity, 1e-3);
        config.set_policy = SetPolicy::AddRemove;
        let a = run_multifidelity(&sys, &sets, &config).unwrap();
        let b = run_multifidelity(&sys, &sets, &config).unwrap();
        // Wall time is the one legitimately nondeterministic field and is
        // excluded from serialization; the serialized logs must match.
        let a_json = serde_json::to_string(&a.log).unwrap();
        let b_json = serde_json::to_string(&b.log).unwrap();
        assert_eq!(a_json, b_json);
        assert_eq!(a.fom_solves, b.fom_solves);
    }

    #[test]
    fn converged_flag_is_sound() {
        let sys = bench_system(40, 3, 53);
        let xi = band_grid(10);
        let mut config = GreedyConfig::new(GreedyMode::Standard, 1e-3);
        config.max_iterations = 1;
        let result = run_standard(&sys, &xi, &config).unwrap();
        assert!(!result.converged);
        assert!(result.log.last().unwrap().epsilon > config.tol);

        config.max_iterations = 100;
        let result = run_standard(&sys, &xi, &config).unwrap();
        if result.converged {
            assert!(result.log.last().unwrap().epsilon <= config.tol);
        }
    }

    #[test]
    fn update_coarse_set_gates() {
        let mut xi_c: Vec<FrequencyPoint> = band_grid(5);
        let initial = xi_c.clone();
        let tol = 1e-3;
        let mu_star = xi_c[0];
        let outside = FrequencyPoint::new(3.33e9);

        // Addition below tol is rejected.
        let (added, _) = update_coarse_set(
            &mut xi_c,
            &[(outside, 5e-4)],
            &[],
            SetPolicy::AddRemove,
            tol,
            mu_star,
        );
        assert!(added.is_empty());
        assert_eq!(xi_c.len(), initial.len());

        // Removal above tol is retained.
        let keeper = xi_c[2];
        let (_, removed) = update_coarse_set(
            &mut xi_c,
            &[],
            &[(keeper, 2e-3)],
            SetPolicy::AddRemove,
            tol,
            mu_star,
        );
        assert!(removed.is_empty());

        // mu* is protected even when below tol.
        let (_, removed) = update_coarse_set(
            &mut xi_c,
            &[],
            &[(mu_star, 1e-9)],
            SetPolicy::AddRemove,
            tol,
            mu_star,
        );
        assert!(removed.is_empty());

        // add_only never removes.
        let victim = xi_c[3];
        let (_, removed) = update_coarse_set(
            &mut xi_c,
            &[],
            &[(victim, 1e-9)],
            SetPolicy::AddOnly,
            tol,
            mu_star,
        );
        assert!(removed.is_empty());

        // Batch admission/removal of up to five, individually gated.
        let additions: Vec<(FrequencyPoint, f64)> = (0..5)
            .map(|i| (FrequencyPoint::new(4e9 + i as f64 * 1e8), 2e-3))
            .collect();
        let removals: Vec<(FrequencyPoint, f64)> =
            xi_c[1..].iter().map(|p| (*p, 1e-9)).collect();
        let (added, removed) = update_coarse_set(
            &mut xi_c,
            &additions,
            &removals,
            SetPolicy::AddRemove,
            tol,
            mu_star,
        );
        assert_eq!(added.len(), 5);
        assert!(removed.len() <= 5);
        assert!(xi_c.len() >= 3, "floor of three points");
    }

    #[test]
    fn run_log_round_trip() {
        let sys = bench_system(30, 2, 59);
        let xi = band_grid(8);
        let config = GreedyConfig::new(GreedyMode::Standard, 1e-3);
        let result = run_standard(&sys, &xi, &config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        let echo = serde_json::to_value(&config).unwrap();
        write_run_log(&path, &echo, &result).unwrap();
        let (echo_read, records) = read_run_log(&path).unwrap();
        assert_eq!(echo, echo_read);
        assert_eq!(records.len(), result.log.len());
        // Wall time is intentionally absent from the serialized form.
        for (a, b) in records.iter().zip(&result.log) {
            assert_eq!(a.epsilon, b.epsilon);
            assert_eq!(a.wall_time_s, 0.0);
            assert!(b.wall_time_s >= 0.0);
        }
    }
}
