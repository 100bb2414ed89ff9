//! The full five-method comparison protocol at desk scale: standard,
//! bi-fidelity (both set policies) and multi-fidelity (both set policies)
//! on one model, each validated on a shared held-out grid.
//!
//!     cargo run --release --example compare_methods

use morgreed::bench::{compare, GridSpec, RunConfig};
use morgreed::synth::{generate_synthetic, SyntheticSpec};
use morgreed::system::GridSpacing;

fn main() -> morgreed::Result<()> {
    let dir = tempfile_dir()?;
    let mut spec = SyntheticSpec::new(120, 6, 2, 2, 29);
    spec.num_modes = 8;
    spec.damping = (0.2, 0.5);
    spec.mode_f_low = spec.f_high / 8.0;
    let model = generate_synthetic(&spec)?;
    let model_path = dir.join("model.json");
    model.save(&model_path)?;

    let mut cfg = RunConfig::for_model(&model_path);
    cfg.xi = GridSpec::new(1e6, 2e10, 24, GridSpacing::Linear);
    cfg.xi_coarse = GridSpec::new(1e6, 2e10, 10, GridSpacing::Linear);
    cfg.xi_fine = GridSpec::new(1e6, 2e10, 100, GridSpacing::Linear);
    cfg.validation = GridSpec::new(1e6, 2e10, 300, GridSpacing::Log);
    cfg.tol = 1e-3;
    cfg.epsilon = 0.1;
    cfg.output.report = Some(dir.join("report"));

    let report = compare(&cfg)?;
    println!(
        "{:<18} {:>5} {:>5} {:>7} {:>4} {:>11}",
        "method", "conv", "iter", "solves", "r", "valid_err"
    );
    for r in &report.rows {
        println!(
            "{:<18} {:>5} {:>5} {:>7} {:>4} {:>11.3e}",
            r.method, r.converged, r.iterations, r.fom_solves, r.reduced_order, r.valid_err
        );
    }
    println!(
        "\nvalidated on {} shared held-out points; report files under {}",
        report.validation_points,
        dir.display()
    );
    Ok(())
}

fn tempfile_dir() -> morgreed::Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join("morgreed_compare_example");
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
