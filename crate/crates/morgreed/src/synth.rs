//! Seeded synthetic time-delay systems for benchmarks and tests.
//!
//! The generator places a controlled number of damped resonant pairs inside
//! the target frequency band, fills the rest of the spectrum with fast real
//! decay, and keeps every random coupling and delayed term inside a margin
//! of the smallest damping. That margin guarantees `K(s)` stays nonsingular
//! on the whole imaginary axis while the delayed terms still move the
//! transfer function at the tens-of-percent level near resonances.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::{lu_factor, ComplexMatrix, SparseTriplets};
use crate::system::{DelaySystem, FrequencyPoint, ParametricSystem, SolveCounter};
use crate::Result;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelaySpec {
    /// Sample delays uniformly from `[lo, hi]` seconds.
    Range { lo: f64, hi: f64 },
    /// Use these delays verbatim (tau_0 = 0 is prepended).
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub order: usize,
    pub num_delays: usize,
    pub delays: DelaySpec,
    /// Average number of random off-structure entries per row, per matrix.
    pub density: f64,
    pub num_inputs: usize,
    pub num_outputs: usize,
    /// Band on which nonsingularity is enforced and the response scaled.
    pub f_low: f64,
    pub f_high: f64,
    /// Resonant pairs placed (log-uniformly) inside the band.
    pub num_modes: usize,
    /// Frequency range (Hz) the resonant pairs are drawn from.
    pub mode_f_low: f64,
    pub mode_f_high: f64,
    /// Damping-ratio range for the resonant pairs.
    pub damping: (f64, f64),
    /// Fraction of the smallest damping available to couplings and delayed
    /// terms; keeping this below 1 keeps `K(s)` nonsingular on the axis.
    pub stability_margin: f64,
    /// `B` is rescaled so the probed response peaks near this value.
    pub response_scale: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Spec with the defaults used throughout the benchmarks.
    pub fn new(order: usize, num_delays: usize, num_inputs: usize, num_outputs: usize, seed: u64) -> Self {
        let f_high = 2e10;
        Self {
            order,
            num_delays,
            delays: DelaySpec::Range {
                lo: 0.05 / f_high,
                hi: 2.0 / f_high,
            },
            density: 2.0,
            num_inputs,
            num_outputs,
            f_low: 1e6,
            f_high,
            num_modes: 16.min(order / 4),
            mode_f_low: f_high / 30.0,
            mode_f_high: f_high / 1.5,
            damping: (0.1, 0.4),
            stability_margin: 0.5,
            response_scale: 100.0,
            seed,
        }
    }
}

/// Generate a delay system from the spec. Deterministic under the seed;
/// the same spec written twice produces byte-identical model files.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<DelaySystem> {
    if spec.order < 2 {
        return Err(Error::InvalidConfig("synthetic order must be >= 2".into()));
    }
    if spec.num_inputs < 1 || spec.num_outputs < 1 {
        return Err(Error::InvalidConfig("need at least one input and output".into()));
    }
    if !(spec.f_low > 0.0 && spec.f_high > spec.f_low) {
        return Err(Error::InvalidConfig("need 0 < f_low < f_high".into()));
    }
    if !(spec.stability_margin > 0.0 && spec.stability_margin < 1.0) {
        return Err(Error::InvalidConfig("stability margin must lie in (0, 1)".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.order;
    let d = spec.num_delays;
    let omega_hi = 2.0 * PI * spec.f_high;

    // Delays.
    let mut delays = vec![0.0];
    match &spec.delays {
        DelaySpec::Range { lo, hi } => {
            if !(*lo > 0.0 && hi > lo) {
                return Err(Error::InvalidConfig("delay range must satisfy 0 < lo < hi".into()));
            }
            let mut ts: Vec<f64> = (0..d).map(|_| rng.gen_range(*lo..*hi)).collect();
            ts.sort_by(f64::total_cmp);
            ts.dedup();
            while ts.len() < d {
                ts.push(rng.gen_range(*lo..*hi));
                ts.sort_by(f64::total_cmp);
                ts.dedup();
            }
            delays.extend(ts);
        }
        DelaySpec::Explicit(ts) => {
            if ts.len() != d {
                return Err(Error::InvalidConfig(format!(
                    "expected {d} explicit delays, got {}",
                    ts.len()
                )));
            }
            delays.extend(ts.iter().copied());
            if delays.iter().any(|t| !t.is_finite()) || delays.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidConfig(
                    "explicit delays must be positive, finite and increasing".into(),
                ));
            }
        }
    }

    // Spectral placement: resonant 2x2 blocks, then fast real decay.
    let num_modes = spec.num_modes.min(n / 2);
    let (xi_lo, xi_hi) = spec.damping;
    if !(xi_lo > 0.0 && xi_hi >= xi_lo && xi_hi < 1.0) {
        return Err(Error::InvalidConfig("damping range must satisfy 0 < lo <= hi < 1".into()));
    }
    let mut a0 = SparseTriplets::new(n, n);
    let mut sigma_min = f64::INFINITY;
    if !(spec.mode_f_low > 0.0 && spec.mode_f_high > spec.mode_f_low) {
        return Err(Error::InvalidConfig("mode band must satisfy 0 < lo < hi".into()));
    }
    let (w_lo, w_hi) = (2.0 * PI * spec.mode_f_low, 2.0 * PI * spec.mode_f_high);
    for m in 0..num_modes {
        let w0 = log_uniform(&mut rng, w_lo, w_hi);
        let xi = rng.gen_range(xi_lo..=xi_hi);
        let sigma = xi * w0;
        sigma_min = sigma_min.min(sigma);
        let i = 2 * m;
        a0.push(i, i, Complex64::new(-sigma, 0.0));
        a0.push(i, i + 1, Complex64::new(w0, 0.0));
        a0.push(i + 1, i, Complex64::new(-w0, 0.0));
        a0.push(i + 1, i + 1, Complex64::new(-sigma, 0.0));
    }
    // Background states decay no slower than the slowest resonance, so all
    // spectral structure stays inside the mode band.
    for i in 2 * num_modes..n {
        let decay = log_uniform(&mut rng, w_lo, omega_hi);
        sigma_min = sigma_min.min(decay);
        a0.push(i, i, Complex64::new(-decay, 0.0));
    }

    let budget = spec.stability_margin * sigma_min;
    let extra_nnz = ((spec.density * n as f64).ceil() as usize).max(1);

    // Random coupling inside A0, bounded by a share of the margin.
    let coupling = random_sparse(&mut rng, n, extra_nnz, 0.3 * budget);

    // Delayed terms: the remaining margin split evenly over the delays,
    // 60% to A_j and 40% (scaled by the top band frequency) to E_j.
    let mut e_terms = vec![SparseTriplets::identity(n)];
    let mut a_terms_delayed = Vec::new();
    if d > 0 {
        let share = 0.7 * budget / d as f64;
        for _ in 0..d {
            a_terms_delayed.push(random_sparse(&mut rng, n, extra_nnz, 0.6 * share));
            e_terms.push(random_sparse(&mut rng, n, extra_nnz, 0.4 * share / omega_hi));
        }
    }

    let b0 = ComplexMatrix::from_fn(n, spec.num_inputs, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), 0.0)
    });
    let c = ComplexMatrix::from_fn(spec.num_outputs, n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), 0.0)
    });

    // Trial factorizations at the band endpoints and midpoint; on failure
    // the delayed terms and couplings are halved and the check repeated.
    let mut shrink = 1.0;
    for attempt in 0..5 {
        let mut a0_full = a0.clone();
        let mut scaled_coupling = coupling.clone();
        scaled_coupling.scale(shrink);
        for &(r, cidx, v) in scaled_coupling.entries() {
            a0_full.push(r, cidx, v);
        }
        let mut a_terms = vec![a0_full];
        for t in &a_terms_delayed {
            let mut s = t.clone();
            s.scale(shrink);
            a_terms.push(s);
        }
        let mut e_scaled = vec![e_terms[0].clone()];
        for t in &e_terms[1..] {
            let mut s = t.clone();
            s.scale(shrink);
            e_scaled.push(s);
        }

        let sys = DelaySystem::new(delays.clone(), e_scaled, a_terms, b0.clone(), c.clone())?;
        let probe = ParametricSystem::Delay(sys);
        let f_mid = 0.5 * (spec.f_low + spec.f_high);
        let trial_ok = [spec.f_low, f_mid, spec.f_high].iter().all(|&f| {
            lu_factor(&probe.assemble(FrequencyPoint::new(f))).is_ok()
        });
        if !trial_ok {
            shrink *= 0.5;
            let _ = attempt;
            continue;
        }

        // Scale B so the probed response peaks near one.
        let mut h_max: f64 = 0.0;
        let mut counter = SolveCounter::new();
        for f in log_probes(spec.f_low, spec.f_high, 13) {
            let h = probe.transfer_function(FrequencyPoint::new(f), &mut counter)?;
            h_max = h_max.max(h.max_abs());
        }
        if h_max <= 0.0 || !h_max.is_finite() {
            shrink *= 0.5;
            continue;
        }
        let mut b = b0.clone();
        b.scale(Complex64::new(spec.response_scale / h_max, 0.0));
        let ParametricSystem::Delay(sys) = probe else { unreachable!() };
        return DelaySystem::new(
            delays,
            sys.e_terms().to_vec(),
            sys.a_terms().to_vec(),
            b,
            sys.c().clone(),
        );
    }
    Err(Error::SingularOnGrid(5))
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u = rng.gen_range(lo.ln()..hi.ln());
    u.exp()
}

fn log_probes(f_low: f64, f_high: f64, count: usize) -> Vec<f64> {
    let lo = f_low.log10();
    let hi = f_high.log10();
    (0..count)
        .map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / (count - 1) as f64))
        .collect()
}

/// Random sparse matrix with `nnz` entries rescaled to the requested
/// Frobenius norm (zero norm gives an empty matrix).
fn random_sparse(rng: &mut ChaCha8Rng, n: usize, nnz: usize, target_norm: f64) -> SparseTriplets {
    let mut t = SparseTriplets::new(n, n);
    if target_norm <= 0.0 {
        return t;
    }
    for _ in 0..nnz {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        t.push(i, j, Complex64::new(rng.gen_range(-1.0..1.0), 0.0));
    }
    let norm = t.frobenius_norm();
    if norm > 0.0 {
        t.scale(target_norm / norm);
    }
    t
}
