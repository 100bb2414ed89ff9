//! Multi-fidelity greedy: identical to bi-fidelity until the estimate
//! first drops below `epsilon`; from then on the auxiliary residual basis
//! is frozen and each iteration needs a single full-order solve instead
//! of two.
//!
//!     cargo run --release --example multifidelity_greedy

use morgreed::greedy::{
    run_bifidelity, run_multifidelity, GreedyConfig, GreedyMode, SetPolicy, TrainingSets,
};
use morgreed::synth::{generate_synthetic, SyntheticSpec};
use morgreed::system::{make_grid, GridSpacing, ParametricSystem};

fn main() -> morgreed::Result<()> {
    let mut spec = SyntheticSpec::new(150, 8, 2, 2, 13);
    spec.response_scale = 1.0;
    let sys = ParametricSystem::Delay(generate_synthetic(&spec)?);

    let sets = TrainingSets::fidelity(
        make_grid(1e6, 2e10, 10, GridSpacing::Linear)?,
        make_grid(1e6, 2e10, 100, GridSpacing::Linear)?,
    );
    let mut config = GreedyConfig::new(GreedyMode::Multifidelity, 1e-4);
    config.epsilon = 0.1;
    config.set_policy = SetPolicy::AddRemove;

    let multi = run_multifidelity(&sys, &sets, &config)?;

    println!("{:>4}  {:>11}  {:>13}  {:>6}", "iter", "estimate", "solves (iter)", "frozen");
    let mut prev = 0;
    for r in &multi.log {
        println!(
            "{:>4}  {:>11.3e}  {:>13}  {:>6}",
            r.iteration,
            r.epsilon,
            r.fom_solves - prev,
            r.frozen
        );
        prev = r.fom_solves;
    }

    let mut bi_config = config.clone();
    bi_config.mode = GreedyMode::Bifidelity;
    let bi = run_bifidelity(&sys, &sets, &bi_config)?;

    println!(
        "\nmulti-fidelity: {} solves in {} iterations (latch at estimate < {})",
        multi.fom_solves,
        multi.log.len(),
        config.epsilon
    );
    println!(
        "bi-fidelity:    {} solves in {} iterations (no latch)",
        bi.fom_solves,
        bi.log.len()
    );
    println!(
        "saved {} full-order solves without touching the primary basis updates",
        bi.fom_solves.saturating_sub(multi.fom_solves)
    );
    Ok(())
}
