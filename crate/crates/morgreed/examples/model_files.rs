//! File-format tour: generate a model, write it, reload it, reduce it,
//! export the ROM, reload that and check the two evaluate identically.
//!
//!     cargo run --release --example model_files

use morgreed::greedy::{run_standard, GreedyConfig, GreedyMode};
use morgreed::rom::ReducedModel;
use morgreed::synth::{generate_synthetic, SyntheticSpec};
use morgreed::system::{make_grid, DelaySystem, FrequencyPoint, GridSpacing, ParametricSystem};

fn main() -> morgreed::Result<()> {
    let dir = std::env::temp_dir().join("morgreed_model_files_example");
    std::fs::create_dir_all(&dir)?;

    // Generate and save (morgreed-delay-v1). Same seed, same bytes.
    let mut spec = SyntheticSpec::new(60, 3, 2, 2, 41);
    spec.response_scale = 1.0;
    let model = generate_synthetic(&spec)?;
    let model_path = dir.join("model.json");
    model.save(&model_path)?;
    println!(
        "model:  {} ({} bytes)",
        model_path.display(),
        std::fs::metadata(&model_path)?.len()
    );

    // Reload and reduce.
    let sys = ParametricSystem::Delay(DelaySystem::load(&model_path)?);
    let xi = make_grid(1e6, 2e10, 14, GridSpacing::Linear)?;
    let result = run_standard(&sys, &xi, &GreedyConfig::new(GreedyMode::Standard, 1e-3))?;
    println!(
        "greedy: converged={} r={} solves={}",
        result.converged,
        result.rom.order(),
        result.fom_solves
    );

    // Export the ROM (morgreed-rom-v1), reload, compare evaluations.
    let rom_path = dir.join("rom.json");
    result.rom.save(&rom_path)?;
    println!(
        "rom:    {} ({} bytes)",
        rom_path.display(),
        std::fs::metadata(&rom_path)?.len()
    );
    let loaded = ReducedModel::load(&rom_path)?;
    let mut worst: f64 = 0.0;
    for p in make_grid(1e6, 2e10, 50, GridSpacing::Log)? {
        let a = result.rom.reduced_transfer(p)?;
        let b = loaded.reduced_transfer(p)?;
        worst = worst.max(a.sub(&b).max_abs());
    }
    println!("max |roundtrip difference| over 50 frequencies: {worst:.1e}");

    // A second snapshot of the same frequency point type.
    let p = FrequencyPoint::new(5e9);
    println!(
        "H_hat(5 GHz) first entry: {:.6e}",
        loaded.reduced_transfer(p)?.get(0, 0).norm()
    );
    Ok(())
}
