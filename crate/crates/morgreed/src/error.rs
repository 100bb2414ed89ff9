//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An LU pivot fell below the singularity threshold.
    #[error("singular matrix: pivot {pivot:.3e} below threshold {threshold:.3e} at step {step}")]
    SingularMatrix {
        step: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("invalid frequency range: {0}")]
    InvalidRange(String),

    /// RBF fit called with coincident centers.
    #[error("duplicate RBF centers at indices {0} and {1}")]
    DuplicateCenters(usize, usize),

    /// RBF kernel system unsolvable even after regularization.
    #[error("degenerate RBF kernel system: {0}")]
    DegenerateSystem(String),

    /// `update_vr` called after the multi-fidelity latch engaged.
    #[error("residual estimator is frozen; the auxiliary basis can no longer be updated")]
    FrozenEstimator,

    /// Estimator evaluated before its auxiliary basis was built.
    #[error("residual estimator has an empty auxiliary basis")]
    EmptyBasis,

    /// Coarse training set exhausted by removals.
    #[error("coarse training set became empty")]
    EmptyCoarseSet,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Synthetic generator could not produce a grid-wide nonsingular system.
    #[error("generated system singular on the target grid after {0} rescale attempts")]
    SingularOnGrid(usize),

    #[error("run log not found or unreadable: {0}")]
    MissingLog(String),

    #[error("invalid file format: {0}")]
    InvalidFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
