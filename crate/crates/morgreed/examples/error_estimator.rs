//! The residual-system output-error estimator and its quality interval:
//! the true error always lies inside `[Delta - delta, Delta + delta]`,
//! where `delta` costs one extra full-order solve to evaluate.
//!
//!     cargo run --release --example error_estimator

use morgreed::estimator::ResidualEstimator;
use morgreed::linalg::{orth_extend, BasisMatrix};
use morgreed::rom::{output_error, project};
use morgreed::synth::{generate_synthetic, SyntheticSpec};
use morgreed::system::{make_grid, FrequencyPoint, GridSpacing, ParametricSystem, SolveCounter};

fn main() -> morgreed::Result<()> {
    let mut spec = SyntheticSpec::new(100, 5, 2, 2, 23);
    spec.response_scale = 1.0;
    let sys = ParametricSystem::Delay(generate_synthetic(&spec)?);
    let mut counter = SolveCounter::new();

    // Primary basis from two snapshots, auxiliary basis from one more
    // frequency (plus the primary basis, which it always carries).
    let mut v = BasisMatrix::empty(sys.order());
    for f in [3e9, 1.2e10] {
        let x = sys.solve_fom(FrequencyPoint::new(f), &mut counter)?;
        v = orth_extend(&v, &x)?;
    }
    let rom = project(&sys, &v)?;
    let est = ResidualEstimator::empty(sys.order()).update_vr(
        &sys,
        &v,
        FrequencyPoint::new(7e9),
        &mut counter,
    )?;

    println!(
        "{:>10}  {:>11}  {:>11}  {:>11}  inside band?",
        "f [Hz]", "estimate", "true error", "delta"
    );
    for p in make_grid(1e9, 1.9e10, 12, GridSpacing::Linear)? {
        let estimate = est.estimate(&sys, &rom, p)?;
        let truth = output_error(&sys, &rom, p, &mut counter)?;
        let delta = est.delta_diagnostic(&sys, &rom, p, &mut counter)?;
        let inside = estimate - delta <= truth && truth <= estimate + delta;
        println!(
            "{:>10.2e}  {estimate:>11.3e}  {truth:>11.3e}  {delta:>11.3e}  {}",
            p.f,
            if inside { "yes" } else { "NO" }
        );
    }

    // Degenerate choice: using the primary basis as the auxiliary basis
    // makes the estimate identically zero.
    let degenerate = ResidualEstimator::with_basis(&sys, v.clone())?;
    let d = degenerate.estimate(&sys, &rom, FrequencyPoint::new(5e9))?;
    println!("\nV_r = V  =>  estimate = {d:.2e} (degenerate, by construction)");

    // Full auxiliary basis solves the residual system exactly: the
    // estimate coincides with the true error.
    let exact = ResidualEstimator::with_basis(&sys, BasisMatrix::identity(sys.order()))?;
    let p = FrequencyPoint::new(5e9);
    let d = exact.estimate(&sys, &rom, p)?;
    let truth = output_error(&sys, &rom, p, &mut counter)?;
    println!("V_r = I  =>  estimate = {d:.6e}, true = {truth:.6e}");
    Ok(())
}
