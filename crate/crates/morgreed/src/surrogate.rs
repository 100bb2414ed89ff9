//! Low-fidelity error surrogate: inverse-multiquadric RBF interpolation of
//! estimator values on the coarse set, evaluated cheaply on the fine set.

use crate::error::Error;
use crate::Result;

/// Threshold on the kernel-matrix condition estimate above which the fit
/// switches to the Tikhonov-regularized branch.
const COND_LIMIT: f64 = 1e12;

/// Inverse multiquadric kernel `1 / (1 + (a r)^2)`.
#[inline]
pub fn imq(r: f64, shape: f64) -> f64 {
    let ar = shape * r;
    1.0 / (1.0 + ar * ar)
}

/// RBF interpolant `Delta_l(x) = sum_i w_i imq(|x - x_i|, a)`.
#[derive(Debug, Clone)]
pub struct RbfSurrogate {
    centers: Vec<f64>,
    weights: Vec<f64>,
    shape: f64,
    regularized: bool,
}

/// Fit interpolation weights by solving the symmetric kernel system
/// `Phi w = values`. If the condition estimate of `Phi` exceeds `1e12`
/// (or the plain solve breaks down), the system is refit with Tikhonov
/// regularization `lambda = 1e-10 trace / m` on the diagonal.
pub fn rbf_fit(centers: &[f64], values: &[f64], shape: f64) -> Result<RbfSurrogate> {
    let m = centers.len();
    assert_eq!(values.len(), m, "centers/values length mismatch");
    assert!(m >= 1, "need at least one center");
    assert!(shape > 0.0, "shape parameter must be positive");
    for i in 0..m {
        for j in i + 1..m {
            if centers[i] == centers[j] {
                return Err(Error::DuplicateCenters(i, j));
            }
        }
    }

    let mut phi = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            phi[i * m + j] = imq((centers[i] - centers[j]).abs(), shape);
        }
    }

    let mut plain = phi.clone();
    let mut w = values.to_vec();
    let solved = real_lu_solve(&mut plain, &mut w, m);
    if let Some(cond_est) = solved {
        if cond_est <= COND_LIMIT {
            return Ok(RbfSurrogate {
                centers: centers.to_vec(),
                weights: w,
                shape,
                regularized: false,
            });
        }
    }

    // Regularized branch: Phi + lambda I is positive definite for the IMQ
    // kernel on distinct centers, so Cholesky applies.
    let trace: f64 = (0..m).map(|i| phi[i * m + i]).sum();
    let lambda = 1e-10 * trace / m as f64;
    for i in 0..m {
        phi[i * m + i] += lambda;
    }
    let mut w = values.to_vec();
    if !cholesky_solve(&mut phi, &mut w, m) {
        return Err(Error::DegenerateSystem(format!(
            "kernel matrix not positive definite even with lambda = {lambda:.3e}"
        )));
    }
    Ok(RbfSurrogate {
        centers: centers.to_vec(),
        weights: w,
        shape,
        regularized: true,
    })
}

impl RbfSurrogate {
    pub fn num_centers(&self) -> usize {
        self.centers.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Whether the fit fell back to the regularized branch.
    pub fn regularized(&self) -> bool {
        self.regularized
    }

    /// Evaluate `Delta_l` at a coordinate. May be negative between centers;
    /// callers clamp for reporting only, never for selection.
    pub fn eval(&self, x: f64) -> f64 {
        self.centers
            .iter()
            .zip(&self.weights)
            .map(|(&c, &w)| w * imq((x - c).abs(), self.shape))
            .sum()
    }

    /// The `n_add` fine-set points with the largest surrogate value,
    /// descending, ties broken by lowest index. Points whose coordinate
    /// already appears in `exclude` are skipped. Returns
    /// `(fine-set index, Delta_l)` pairs; fewer than `n_add` when the fine
    /// set runs out.
    pub fn select_candidates(
        &self,
        fine_set: &[f64],
        exclude: &[f64],
        n_add: usize,
    ) -> Vec<(usize, f64)> {
        assert!(!fine_set.is_empty(), "empty fine set");
        let mut scored: Vec<(usize, f64)> = fine_set
            .iter()
            .enumerate()
            .filter(|(_, x)| !exclude.contains(x))
            .map(|(i, &x)| (i, self.eval(x)))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(n_add);
        scored
    }
}

/// In-place partial-pivot LU solve of a dense row-major system. Returns a
/// condition estimate (ratio of extreme pivot magnitudes) on success.
fn real_lu_solve(a: &mut [f64], b: &mut [f64], n: usize) -> Option<f64> {
    let mut max_piv: f64 = 0.0;
    let mut min_piv = f64::INFINITY;
    for k in 0..n {
        let mut p = k;
        let mut best = a[k * n + k].abs();
        for i in k + 1..n {
            let m = a[i * n + k].abs();
            if m > best {
                best = m;
                p = i;
            }
        }
        if best == 0.0 {
            return None;
        }
        if p != k {
            for c in 0..n {
                a.swap(k * n + c, p * n + c);
            }
            b.swap(k, p);
        }
        let pivot = a[k * n + k];
        max_piv = max_piv.max(pivot.abs());
        min_piv = min_piv.min(pivot.abs());
        for i in k + 1..n {
            let factor = a[i * n + k] / pivot;
            if factor != 0.0 {
                for c in k + 1..n {
                    a[i * n + c] -= factor * a[k * n + c];
                }
                b[i] -= factor * b[k];
            }
            a[i * n + k] = 0.0;
        }
    }
    for k in (0..n).rev() {
        let mut acc = b[k];
        for c in k + 1..n {
            acc -= a[k * n + c] * b[c];
        }
        b[k] = acc / a[k * n + k];
    }
    Some(max_piv / min_piv)
}

/// Cholesky solve of a symmetric positive definite row-major system.
/// Returns false when the factorization breaks down.
fn cholesky_solve(a: &mut [f64], b: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return false;
        }
        let djj = d.sqrt();
        a[j * n + j] = djj;
        for i in j + 1..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = v / djj;
        }
    }
    // Forward then backward substitution with L and L^T.
    for i in 0..n {
        let mut v = b[i];
        for k in 0..i {
            v -= a[i * n + k] * b[k];
        }
        b[i] = v / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut v = b[i];
        for k in i + 1..n {
            v -= a[k * n + i] * b[k];
        }
        b[i] = v / a[i * n + i];
    }
    true
}
