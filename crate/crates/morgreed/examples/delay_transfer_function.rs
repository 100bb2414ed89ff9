//! Build a small time-delay system by hand, assemble `K(s)` on a grid and
//! evaluate the transfer function `H(s) = C K^{-1}(s) B`.
//!
//!     cargo run --release --example delay_transfer_function

use morgreed::linalg::{ComplexMatrix, SparseTriplets};
use morgreed::system::{make_grid, DelaySystem, FrequencyPoint, GridSpacing, ParametricSystem, SolveCounter};
use num_complex::Complex64;

fn main() -> morgreed::Result<()> {
    // A 4-state oscillator pair with one feedback path retarded by 80 ms:
    //   K(s) = s E0 - A0 - A1 e^{-s tau}.
    let n = 4;
    let mut a0 = SparseTriplets::new(n, n);
    a0.push(0, 0, Complex64::new(-0.4, 0.0));
    a0.push(0, 1, Complex64::new(6.0, 0.0));
    a0.push(1, 0, Complex64::new(-6.0, 0.0));
    a0.push(1, 1, Complex64::new(-0.4, 0.0));
    a0.push(2, 2, Complex64::new(-1.1, 0.0));
    a0.push(2, 3, Complex64::new(17.0, 0.0));
    a0.push(3, 2, Complex64::new(-17.0, 0.0));
    a0.push(3, 3, Complex64::new(-1.1, 0.0));

    let mut a1 = SparseTriplets::new(n, n);
    a1.push(2, 0, Complex64::new(0.25, 0.0));
    a1.push(1, 3, Complex64::new(-0.15, 0.0));

    let e = vec![SparseTriplets::identity(n), SparseTriplets::new(n, n)];
    let b = ComplexMatrix::from_rows(
        4,
        1,
        &[
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 0.0),
        ],
    );
    let c = ComplexMatrix::from_rows(
        1,
        4,
        &[
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.7, 0.0),
        ],
    );

    let sys = ParametricSystem::Delay(DelaySystem::new(
        vec![0.0, 0.08],
        e,
        vec![a0, a1],
        b,
        c,
    )?);

    // K(0) equals minus the sum of the A matrices.
    let k0 = sys.assemble(FrequencyPoint::new(0.0));
    println!("K(0) top-left entry: {:.3} (= -A0[0,0])\n", k0.get(0, 0).re);

    println!("{:>8}  {:>12}  {:>12}", "f [Hz]", "|H|", "arg(H) [rad]");
    let mut counter = SolveCounter::new();
    for p in make_grid(0.2, 8.0, 16, GridSpacing::Linear)? {
        let h = sys.transfer_function(p, &mut counter)?;
        let v = h.get(0, 0);
        println!("{:>8.3}  {:>12.5e}  {:>12.5}", p.f, v.norm(), v.arg());
    }
    println!("\nfull-order solves: {}", counter.count());

    // Real system matrices: conjugating s conjugates H.
    let p = FrequencyPoint::new(1.3);
    let h = sys.transfer_function(p, &mut counter)?;
    let hc = sys.transfer_function(p.conjugate(), &mut counter)?;
    println!(
        "conjugate symmetry check: |H(s).conj - H(s.conj)| = {:.2e}",
        (h.get(0, 0).conj() - hc.get(0, 0)).norm()
    );
    Ok(())
}
