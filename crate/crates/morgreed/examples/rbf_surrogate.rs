//! Inverse-multiquadric RBF interpolation of estimator values: fit on a
//! small coarse set, sweep a large fine set cheaply, pick enrichment
//! candidates.
//!
//!     cargo run --release --example rbf_surrogate

use morgreed::surrogate::{imq, rbf_fit};

fn main() -> morgreed::Result<()> {
    // Synthetic "error landscape" sampled at 8 coarse points in [0, 1]
    // (normalized frequency coordinates, as the greedy drivers use).
    let coarse: Vec<f64> = (0..8).map(|i| i as f64 / 7.0).collect();
    let landscape = |x: f64| 2.0 * (-30.0 * (x - 0.37) * (x - 0.37)).exp() + 0.1;
    let values: Vec<f64> = coarse.iter().map(|&x| landscape(x)).collect();

    let shape = 30.0;
    let sur = rbf_fit(&coarse, &values, shape)?;
    println!("fitted {} centers, regularized: {}", sur.num_centers(), sur.regularized());
    println!("kernel at r = 1/a: {:.3} (half height)\n", imq(1.0 / shape, shape));

    println!("{:>6}  {:>9}  {:>9}", "x", "truth", "surrogate");
    for k in 0..21 {
        let x = k as f64 / 20.0;
        println!("{x:>6.2}  {:>9.4}  {:>9.4}", landscape(x), sur.eval(x));
    }

    // Interpolation property at the centers.
    let worst = coarse
        .iter()
        .zip(&values)
        .map(|(&x, &v)| (sur.eval(x) - v).abs())
        .fold(0.0f64, f64::max);
    println!("\nmax interpolation defect at centers: {worst:.2e}");

    // Candidate selection on a fine grid, excluding existing centers.
    let fine: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
    let picks = sur.select_candidates(&fine, &coarse, 3);
    println!("\ntop-3 enrichment candidates (index, surrogate value):");
    for (i, v) in picks {
        println!("  fine[{i:>3}] = {:.3}  ->  {v:.4}", fine[i]);
    }
    Ok(())
}
