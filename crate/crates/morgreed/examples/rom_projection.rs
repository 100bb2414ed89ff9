//! Galerkin projection in isolation: collect a few full-order snapshots,
//! orthonormalize them into a basis, project the system and compare the
//! reduced transfer function against the full one.
//!
//!     cargo run --release --example rom_projection

use morgreed::linalg::{gram_residual, orth_extend, BasisMatrix};
use morgreed::rom::{output_error, project};
use morgreed::synth::{generate_synthetic, SyntheticSpec};
use morgreed::system::{make_grid, FrequencyPoint, GridSpacing, ParametricSystem, SolveCounter};

fn main() -> morgreed::Result<()> {
    let mut spec = SyntheticSpec::new(80, 4, 2, 2, 17);
    spec.response_scale = 1.0;
    let sys = ParametricSystem::Delay(generate_synthetic(&spec)?);
    let mut counter = SolveCounter::new();

    // Snapshots at three hand-picked frequencies. Each complex snapshot
    // block contributes its real and imaginary parts to the basis.
    let mut v = BasisMatrix::empty(sys.order());
    for f in [2e9, 8e9, 1.6e10] {
        let x = sys.solve_fom(FrequencyPoint::new(f), &mut counter)?;
        v = orth_extend(&v, &x)?;
        println!("snapshot at {f:>8.1e} Hz -> r = {}", v.num_cols());
    }
    println!("orthonormality defect: {:.2e}", gram_residual(&v));

    let rom = project(&sys, &v)?;
    println!("\nreduced order r = {} (from n = {})", rom.order(), sys.order());

    // At snapshot frequencies the reduced model interpolates the full one.
    println!("\n{:>10}  {:>12}", "f [Hz]", "|H - H_hat|");
    for f in [2e9, 8e9, 1.6e10] {
        let err = output_error(&sys, &rom, FrequencyPoint::new(f), &mut counter)?;
        println!("{f:>10.2e}  {err:>12.3e}   (interpolated)");
    }
    for p in make_grid(1e9, 1.9e10, 6, GridSpacing::Linear)? {
        let err = output_error(&sys, &rom, p, &mut counter)?;
        println!("{:>10.2e}  {err:>12.3e}", p.f);
    }
    println!("\nfull-order solves spent: {}", counter.count());
    Ok(())
}
