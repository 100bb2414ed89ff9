//! Greedy reduced-basis model order reduction for linear parametric and
//! time-delay systems in the frequency domain.
//!
//! The crate builds Galerkin-projected reduced-order models of systems
//! `K(s) x(s) = B`, `H(s) = C x(s)` by greedily sampling the frequency axis.
//! Three drivers are provided, differing in how the output error of the
//! current reduced model is estimated while the basis grows:
//!
//! * **standard** — a residual-system error estimator evaluated over a
//!   single training set;
//! * **bi-fidelity** — the same estimator on a small coarse set, combined
//!   with an inverse-multiquadric RBF surrogate swept over a large fine set
//!   to enrich (and optionally prune) the coarse set;
//! * **multi-fidelity** — bi-fidelity plus a one-way latch that freezes the
//!   auxiliary residual basis once the estimate falls below a threshold,
//!   halving the full-order solves of the remaining iterations.
//!
//! Start with the runnable examples (`cargo run --release --example
//! standard_greedy`, `bifidelity_greedy`, `multifidelity_greedy`,
//! `error_estimator`, ...); each demonstrates one capability end to end.
//! A thin `morgreed` binary exposes the same machinery as subcommands
//! (`generate`, `run`, `compare`, `trace`, `validate`) for scripted use.

pub mod bench;
pub mod error;
pub mod greedy;
pub mod linalg;
pub mod rom;
pub mod surrogate;
pub mod synth;
pub mod system;

pub mod estimator;

pub use error::Error;
pub use linalg::{gram_residual, orth_extend, solve_dense, BasisMatrix, ComplexMatrix, SparseTriplets};
pub use system::{make_grid, DelaySystem, FrequencyPoint, GridSpacing, ParametricSystem, SolveCounter};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
