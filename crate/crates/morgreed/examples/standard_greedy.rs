//! The standard greedy driver: estimator sweep over one training set,
//! snapshot at the argmax, repeat until the estimate drops below `tol`.
//!
//!     cargo run --release --example standard_greedy

use morgreed::greedy::{run_standard, validate, GreedyConfig, GreedyMode};
use morgreed::synth::{generate_synthetic, SyntheticSpec};
use morgreed::system::{make_grid, GridSpacing, ParametricSystem, SolveCounter};

fn main() -> morgreed::Result<()> {
    let mut spec = SyntheticSpec::new(120, 6, 2, 2, 5);
    spec.num_modes = 8;
    spec.damping = (0.2, 0.5);
    spec.mode_f_low = spec.f_high / 8.0;
    spec.response_scale = 1.0;
    let sys = ParametricSystem::Delay(generate_synthetic(&spec)?);
    let xi = make_grid(1e6, 2e10, 20, GridSpacing::Linear)?;

    let config = GreedyConfig::new(GreedyMode::Standard, 1e-3);
    let result = run_standard(&sys, &xi, &config)?;

    println!(
        "{:>4}  {:>11}  {:>12}  {:>12}  {:>3}  {:>6}",
        "iter", "estimate", "snapshot f", "next mu*", "r", "solves"
    );
    for r in &result.log {
        println!(
            "{:>4}  {:>11.3e}  {:>12.4e}  {:>12.4e}  {:>3}  {:>6}",
            r.iteration, r.epsilon, r.snapshot_f, r.mu_star, r.basis_size, r.fom_solves
        );
    }
    println!(
        "\nconverged: {} in {} iterations, r = {}, {} full-order solves, {:.2} s",
        result.converged,
        result.log.len(),
        result.rom.order(),
        result.fom_solves,
        result.runtime_s
    );

    // Hold-out validation on a log grid the run never saw.
    let holdout = make_grid(1e6, 2e10, 200, GridSpacing::Log)?;
    let mut counter = SolveCounter::new();
    let err = validate(&sys, &result.rom, &holdout, &mut counter)?;
    println!(
        "validated max error over {} held-out points: {err:.3e} ({} solves)",
        holdout.len(),
        counter.count()
    );
    Ok(())
}
