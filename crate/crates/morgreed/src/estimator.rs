//! Output-error estimation through a reduced residual system.
//!
//! For the reduced model `x_hat(s) = V z(s)` the per-input residual is
//! `r_j(s) = B_j - K(s) x_hat_j(s)`. Solving `K(s) x_{r_j} = r_j` maps the
//! residual to the exact output error `|C_i x_{r_j}|`; the estimator
//! replaces that solve by a second Galerkin projection onto an auxiliary
//! basis `V_r`, giving
//! `Delta(s) = max_{i,j} |C_i V_r z_{r_j}(s)|`
//! at the cost of a reduced solve only. `V_r` is grown from full-order
//! snapshots at the frequencies where the residual system itself is worst
//! approximated, and carries the primary basis `V` alongside because the
//! exact `x_{r_j}` is a combination of `K^{-1}B_j` and the columns of `V`.

use num_complex::Complex64;

use crate::error::Error;
use crate::linalg::{lu_factor, BasisMatrix, ComplexMatrix};
use crate::rom::{project, ReducedModel};
use crate::system::{FrequencyPoint, ParametricSystem, SolveCounter};
use crate::Result;

/// Auxiliary-basis error estimator. `frozen` is the one-way multi-fidelity
/// latch: once set, the auxiliary basis and its reduced model stop
/// changing for the rest of the run.
#[derive(Debug, Clone)]
pub struct ResidualEstimator {
    v_r: BasisMatrix,
    residual_rom: Option<ReducedModel>,
    frozen: bool,
}

/// Both estimator quantities at one frequency, computed in a single pass.
#[derive(Debug, Clone, Copy)]
pub struct PointEstimate {
    /// `Delta(s)`: estimated maximum output error.
    pub delta_tilde: f64,
    /// `max_j ||r_j(s) - K(s) x_hat_{r_j}(s)||_2`: residual of the
    /// residual system, driving the selection of the next `V_r` snapshot.
    pub residual_residual: f64,
}

impl ResidualEstimator {
    /// Estimator with no auxiliary basis yet (before the first update).
    pub fn empty(dim: usize) -> Self {
        Self {
            v_r: BasisMatrix::empty(dim),
            residual_rom: None,
            frozen: false,
        }
    }

    /// Estimator with a caller-supplied auxiliary basis.
    pub fn with_basis(sys: &ParametricSystem, v_r: BasisMatrix) -> Result<Self> {
        let residual_rom = Some(project(sys, &v_r)?);
        Ok(Self {
            v_r,
            residual_rom,
            frozen: false,
        })
    }

    pub fn v_r(&self) -> &BasisMatrix {
        &self.v_r
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Engage the multi-fidelity latch. Irreversible.
    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    fn residual_rom(&self) -> Result<&ReducedModel> {
        self.residual_rom.as_ref().ok_or(Error::EmptyBasis)
    }

    /// Shared evaluation pass: assembled `K`, residual block `R`, and the
    /// lifted approximate residual solution `x_hat_r`.
    fn internals(
        &self,
        sys: &ParametricSystem,
        rom: &ReducedModel,
        p: FrequencyPoint,
    ) -> Result<(ComplexMatrix, ComplexMatrix, ComplexMatrix)> {
        let res_rom = self.residual_rom()?;
        let k = sys.assemble(p);
        let r_block = residual_block(sys, rom, p, &k)?;
        let rhs = self.v_r.vt_times(&r_block);
        let z_r = res_rom.solve_reduced_with(p, &rhs)?;
        let x_r_hat = self.v_r.lift(&z_r);
        Ok((k, r_block, x_r_hat))
    }

    /// High-fidelity output-error estimate `Delta(s)`. No full-order solve
    /// is performed.
    pub fn estimate(
        &self,
        sys: &ParametricSystem,
        rom: &ReducedModel,
        p: FrequencyPoint,
    ) -> Result<f64> {
        let (_, _, x_r_hat) = self.internals(sys, rom, p)?;
        Ok(sys.c().matmul(&x_r_hat).max_abs())
    }

    /// Residual of the residual system, `max_j ||r_j - K x_hat_{r_j}||`.
    pub fn residual_of_residual(
        &self,
        sys: &ParametricSystem,
        rom: &ReducedModel,
        p: FrequencyPoint,
    ) -> Result<f64> {
        Ok(self.evaluate(sys, rom, p)?.residual_residual)
    }

    /// Both sweep quantities in one pass; this is what the greedy drivers
    /// call per training point.
    pub fn evaluate(
        &self,
        sys: &ParametricSystem,
        rom: &ReducedModel,
        p: FrequencyPoint,
    ) -> Result<PointEstimate> {
        let (k, r_block, x_r_hat) = self.internals(sys, rom, p)?;
        let delta_tilde = sys.c().matmul(&x_r_hat).max_abs();
        let defect = r_block.sub(&k.matmul(&x_r_hat));
        let mut worst: f64 = 0.0;
        for j in 0..defect.cols() {
            worst = worst.max(defect.col_norm(j));
        }
        Ok(PointEstimate {
            delta_tilde,
            residual_residual: worst,
        })
    }

    /// Rebuild the auxiliary basis as `orth{V, V_r, x(p_r)}`, solving the
    /// full-order model at `p_r` (one counted solve), and re-project the
    /// residual-side reduced model. Fails once the latch is engaged.
    pub fn update_vr(
        &self,
        sys: &ParametricSystem,
        v: &BasisMatrix,
        p_r: FrequencyPoint,
        counter: &mut SolveCounter,
    ) -> Result<ResidualEstimator> {
        if self.frozen {
            return Err(Error::FrozenEstimator);
        }
        let snapshot = sys.solve_fom(p_r, counter)?;
        let mut v_r = v.clone();
        v_r = v_r.extended_with_real(self.v_r.columns().iter().cloned());
        v_r = crate::linalg::orth_extend(&v_r, &snapshot)?;
        let residual_rom = Some(project(sys, &v_r)?);
        Ok(ResidualEstimator {
            v_r,
            residual_rom,
            frozen: false,
        })
    }

    /// Estimator-quality diagnostic
    /// `delta(s) = max_{i,j} |C_i (x_{r_j} - x_hat_{r_j})|`, obtained by
    /// solving the residual system exactly (counts one full-order solve).
    /// The true output error lies in `[Delta - delta, Delta + delta]`.
    pub fn delta_diagnostic(
        &self,
        sys: &ParametricSystem,
        rom: &ReducedModel,
        p: FrequencyPoint,
        counter: &mut SolveCounter,
    ) -> Result<f64> {
        let (k, r_block, x_r_hat) = self.internals(sys, rom, p)?;
        let x_r = lu_factor(&k)?.solve(&r_block)?;
        counter.bump();
        Ok(sys.c().matmul(&x_r.sub(&x_r_hat)).max_abs())
    }
}

/// Residual block `R(s) = B - K(s) V z(s)` for all inputs.
fn residual_block(
    sys: &ParametricSystem,
    rom: &ReducedModel,
    p: FrequencyPoint,
    k: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let z = rom.solve_rom(p)?;
    let x_hat = rom.basis().lift(&z);
    Ok(sys.b().sub(&k.matmul(&x_hat)))
}

/// Residual of input `j` only, `r_j(s) = B_j - K(s) V z_j(s)`.
/// Matrix-vector products only; no full-order solve.
pub fn residual(
    sys: &ParametricSystem,
    rom: &ReducedModel,
    p: FrequencyPoint,
    j: usize,
) -> Result<Vec<Complex64>> {
    assert!(j < sys.num_inputs(), "input index out of range");
    let k = sys.assemble(p);
    let block = residual_block(sys, rom, p, &k)?;
    Ok(block.col(j).to_vec())
}
