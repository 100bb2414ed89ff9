//! Bi-fidelity greedy: the expensive estimator runs only on a small coarse
//! set; an RBF surrogate of its values sweeps a large fine set to enrich
//! the coarse set where the error seems largest (and, under `add_remove`,
//! to drop points that are already converged).
//!
//!     cargo run --release --example bifidelity_greedy

use morgreed::greedy::{
    run_bifidelity, validate, GreedyConfig, GreedyMode, SetPolicy, TrainingSets,
};
use morgreed::synth::{generate_synthetic, SyntheticSpec};
use morgreed::system::{make_grid, GridSpacing, ParametricSystem, SolveCounter};

fn main() -> morgreed::Result<()> {
    let mut spec = SyntheticSpec::new(120, 6, 2, 2, 5);
    spec.num_modes = 8;
    spec.damping = (0.2, 0.5);
    spec.mode_f_low = spec.f_high / 8.0;
    spec.response_scale = 1.0;
    let sys = ParametricSystem::Delay(generate_synthetic(&spec)?);

    let sets = TrainingSets::fidelity(
        make_grid(1e6, 2e10, 10, GridSpacing::Linear)?,
        make_grid(1e6, 2e10, 100, GridSpacing::Linear)?,
    );
    let mut config = GreedyConfig::new(GreedyMode::Bifidelity, 1e-3);
    config.set_policy = SetPolicy::AddRemove;

    let result = run_bifidelity(&sys, &sets, &config)?;

    println!(
        "{:>4}  {:>11}  {:>7}  {:>22}  {:>14}",
        "iter", "estimate", "|Xi_c|", "added f", "removed f"
    );
    for r in &result.log {
        let added = r
            .added
            .iter()
            .map(|f| format!("{f:.3e}"))
            .collect::<Vec<_>>()
            .join(" ");
        let removed = r
            .removed
            .iter()
            .map(|f| format!("{f:.3e}"))
            .collect::<Vec<_>>()
            .join(" ");
        println!(
            "{:>4}  {:>11.3e}  {:>7}  {:>22}  {:>14}",
            r.iteration, r.epsilon, r.coarse_size, added, removed
        );
    }

    let sweeps: usize = result.log.iter().map(|r| r.swept).sum();
    println!(
        "\nconverged: {}, r = {}, {} full-order solves, {} estimator evaluations",
        result.converged,
        result.rom.order(),
        result.fom_solves,
        sweeps
    );

    let holdout = make_grid(1e6, 2e10, 200, GridSpacing::Log)?;
    let mut counter = SolveCounter::new();
    let err = validate(&sys, &result.rom, &holdout, &mut counter)?;
    println!("validated max error: {err:.3e}");
    Ok(())
}
