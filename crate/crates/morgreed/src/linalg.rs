//! Dense complex matrices, sparse triplet storage, direct solves and
//! orthonormalization.
//!
//! Everything here is deliberately dependency-free and sequential with a
//! fixed summation order, so that runs reproduce bit-identically across
//! machines. Matrices are stored column-major; basis matrices are real
//! with orthonormal columns.

use num_complex::Complex64;

use crate::error::Error;
use crate::Result;

/// Pivot threshold factor for LU: a pivot below this times the largest
/// initial column norm is treated as singular.
const PIVOT_TOL: f64 = 1e-14;

/// A candidate basis vector whose norm after projection drops below this
/// fraction of its pre-projection norm is discarded.
const DEFLATION_TOL: f64 = 1e-10;

// ---------------------------------------------------------------------------
// ComplexMatrix
// ---------------------------------------------------------------------------

/// Dense complex matrix, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be >= 1");
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                m.set(r, c, f(r, c));
            }
        }
        m
    }

    /// Build from a row-major slice of entries.
    pub fn from_rows(rows: usize, cols: usize, entries: &[Complex64]) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count mismatch");
        Self::from_fn(rows, cols, |r, c| entries[r * cols + c])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[c * self.rows + r] = v;
    }

    #[inline]
    pub fn add_to(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[c * self.rows + r] += v;
    }

    /// Contiguous view of column `c`.
    #[inline]
    pub fn col(&self, c: usize) -> &[Complex64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul dimension mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let bcol = other.col(j);
            let ocol = out.col_mut(j);
            for (k, &bkj) in bcol.iter().enumerate() {
                if bkj == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let acol = self.col(k);
                for (o, &a) in ocol.iter_mut().zip(acol) {
                    *o += a * bkj;
                }
            }
        }
        out
    }

    /// Entrywise difference `self - other`.
    pub fn sub(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        let mut out = self.clone();
        for (o, &b) in out.data.iter_mut().zip(&other.data) {
            *o -= b;
        }
        out
    }

    pub fn scale(&mut self, f: Complex64) {
        for v in &mut self.data {
            *v *= f;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry magnitude, `max_{i,j} |a_ij|`.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Euclidean norm of column `c`.
    pub fn col_norm(&self, c: usize) -> f64 {
        self.col(c).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `self * v` against a real basis (result `rows x r`).
    pub fn matmul_basis(&self, v: &BasisMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, v.dim(), "matmul_basis dimension mismatch");
        let r = v.num_cols();
        assert!(r >= 1, "empty basis");
        let mut out = ComplexMatrix::zeros(self.rows, r);
        for j in 0..r {
            let vcol = v.column(j);
            let ocol = out.col_mut(j);
            for (k, &vk) in vcol.iter().enumerate() {
                if vk == 0.0 {
                    continue;
                }
                let acol = self.col(k);
                for (o, &a) in ocol.iter_mut().zip(acol) {
                    *o += a * vk;
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// LU factorization and dense solve
// ---------------------------------------------------------------------------

/// LU factors of a square complex matrix with partial pivoting.
pub struct LuFactors {
    n: usize,
    data: Vec<Complex64>, // packed L (unit diagonal) and U, column-major
    piv: Vec<usize>,      // piv[k] = row swapped with k at step k
}

/// Factor `a` with partial pivoting. Fails with [`Error::SingularMatrix`]
/// when a pivot falls below `1e-14` times the largest initial column norm.
pub fn lu_factor(a: &ComplexMatrix) -> Result<LuFactors> {
    if a.rows != a.cols {
        return Err(Error::DimensionMismatch {
            context: "lu_factor",
            expected: "square matrix".into(),
            actual: format!("{}x{}", a.rows, a.cols),
        });
    }
    let n = a.rows;
    let mut max_col_norm: f64 = 0.0;
    for c in 0..n {
        max_col_norm = max_col_norm.max(a.col_norm(c));
    }
    let threshold = PIVOT_TOL * max_col_norm;

    let mut data = a.data.clone();
    let mut piv = vec![0usize; n];

    for k in 0..n {
        // Pivot: largest magnitude in column k at or below the diagonal.
        let col_k = &data[k * n..(k + 1) * n];
        let mut p = k;
        let mut best = col_k[k].norm_sqr();
        for (off, z) in col_k[k + 1..].iter().enumerate() {
            let m = z.norm_sqr();
            if m > best {
                best = m;
                p = k + 1 + off;
            }
        }
        let pivot_abs = best.sqrt();
        if pivot_abs < threshold || pivot_abs == 0.0 {
            return Err(Error::SingularMatrix {
                step: k,
                pivot: pivot_abs,
                threshold,
            });
        }
        piv[k] = p;
        if p != k {
            for c in 0..n {
                data.swap(c * n + k, c * n + p);
            }
        }

        let (head, tail) = data.split_at_mut((k + 1) * n);
        let col_k = &mut head[k * n..];
        let inv = Complex64::new(1.0, 0.0) / col_k[k];
        for v in col_k[k + 1..].iter_mut() {
            *v *= inv;
        }
        let lk = &col_k[k + 1..];
        // Trailing update: col_j[k+1..] -= u_kj * L[k+1.., k].
        for j in 0..(n - k - 1) {
            let col_j = &mut tail[j * n..(j + 1) * n];
            let m = col_j[k];
            if m.re == 0.0 && m.im == 0.0 {
                continue;
            }
            for (c, &l) in col_j[k + 1..].iter_mut().zip(lk) {
                *c -= m * l;
            }
        }
    }

    Ok(LuFactors { n, data, piv })
}

impl LuFactors {
    /// Solve for all columns of `b`.
    pub fn solve(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        if b.rows != self.n {
            return Err(Error::DimensionMismatch {
                context: "lu_solve",
                expected: format!("{} rows", self.n),
                actual: format!("{} rows", b.rows),
            });
        }
        let mut x = b.clone();
        for c in 0..x.cols {
            self.solve_col(x.col_mut(c));
        }
        Ok(x)
    }

    fn solve_col(&self, rhs: &mut [Complex64]) {
        let n = self.n;
        for k in 0..n {
            rhs.swap(k, self.piv[k]);
        }
        // Ly = Pb (unit lower triangular).
        for j in 0..n {
            let yj = rhs[j];
            if yj.re == 0.0 && yj.im == 0.0 {
                continue;
            }
            let col = &self.data[j * n..(j + 1) * n];
            for (r, &l) in rhs[j + 1..].iter_mut().zip(&col[j + 1..]) {
                *r -= yj * l;
            }
        }
        // Ux = y.
        for j in (0..n).rev() {
            let col = &self.data[j * n..(j + 1) * n];
            rhs[j] /= col[j];
            let xj = rhs[j];
            if xj.re == 0.0 && xj.im == 0.0 {
                continue;
            }
            for (r, &u) in rhs[..j].iter_mut().zip(&col[..j]) {
                *r -= xj * u;
            }
        }
    }
}

/// Solve `A X = B` for a square `A` by LU with partial pivoting.
pub fn solve_dense(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    lu_factor(a)?.solve(b)
}

// ---------------------------------------------------------------------------
// SparseTriplets
// ---------------------------------------------------------------------------

/// Sparse matrix in coordinate form. Duplicate `(row, col)` pairs are
/// summed whenever the triplets are assembled into a dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTriplets {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseTriplets {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::new(n, n);
        for i in 0..n {
            t.push(i, i, Complex64::new(1.0, 0.0));
        }
        t
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn push(&mut self, row: usize, col: usize, value: Complex64) {
        assert!(row < self.rows && col < self.cols, "triplet index out of range");
        self.entries.push((row, col, value));
    }

    /// Accumulate `coeff * self` into `dense`.
    pub fn add_scaled_to(&self, dense: &mut ComplexMatrix, coeff: Complex64) {
        debug_assert_eq!(dense.rows(), self.rows);
        debug_assert_eq!(dense.cols(), self.cols);
        for &(r, c, v) in &self.entries {
            dense.add_to(r, c, coeff * v);
        }
    }

    /// Dense `self * v` where `v` is a real basis (result is `rows x r`).
    pub fn times_basis(&self, v: &BasisMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, v.dim(), "times_basis dimension mismatch");
        let r = v.num_cols();
        assert!(r >= 1, "empty basis");
        let mut out = ComplexMatrix::zeros(self.rows, r);
        for j in 0..r {
            let vcol = v.column(j);
            let ocol = out.col_mut(j);
            for &(ri, ci, val) in &self.entries {
                ocol[ri] += val * vcol[ci];
            }
        }
        out
    }

    /// Dense matrix-vector-style product `self * x` for a complex block.
    pub fn times_matrix(&self, x: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, x.rows(), "times_matrix dimension mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, x.cols());
        for j in 0..x.cols() {
            let xcol = x.col(j);
            let ocol = out.col_mut(j);
            for &(ri, ci, val) in &self.entries {
                ocol[ri] += val * xcol[ci];
            }
        }
        out
    }

    /// Triplet-wise Frobenius norm (exact when no duplicates are present).
    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|(_, _, v)| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, f: f64) {
        for (_, _, v) in &mut self.entries {
            *v *= f;
        }
    }
}

// ---------------------------------------------------------------------------
// BasisMatrix and orthonormalization
// ---------------------------------------------------------------------------

/// Real matrix with orthonormal columns, grown by modified Gram-Schmidt
/// with deflation. May be empty (zero columns).
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMatrix {
    dim: usize,
    columns: Vec<Vec<f64>>,
}

impl BasisMatrix {
    pub fn empty(dim: usize) -> Self {
        assert!(dim >= 1);
        Self {
            dim,
            columns: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut columns = Vec::with_capacity(dim);
        for i in 0..dim {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            columns.push(e);
        }
        Self { dim, columns }
    }

    /// Wrap externally produced columns, verifying orthonormality.
    pub fn from_columns(dim: usize, columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.iter().any(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch {
                context: "BasisMatrix::from_columns",
                expected: format!("columns of length {dim}"),
                actual: "mixed lengths".into(),
            });
        }
        let v = Self { dim, columns };
        if !v.is_empty() && gram_residual(&v) > 1e-8 {
            return Err(Error::InvalidFormat(
                "basis columns are not orthonormal".into(),
            ));
        }
        Ok(v)
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of basis columns `r`.
    pub fn num_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// Orthonormalize `candidate` against the current columns (two MGS
    /// passes) and append it unless it deflates. Returns whether a column
    /// was added.
    pub(crate) fn push_orthonormalized(&mut self, mut candidate: Vec<f64>) -> bool {
        assert_eq!(candidate.len(), self.dim);
        let norm0 = l2(&candidate);
        if norm0 == 0.0 || !norm0.is_finite() {
            return false;
        }
        for _pass in 0..2 {
            for w in &self.columns {
                let coeff = dot(w, &candidate);
                for (c, &wv) in candidate.iter_mut().zip(w) {
                    *c -= coeff * wv;
                }
            }
        }
        let norm1 = l2(&candidate);
        if norm1 < DEFLATION_TOL * norm0 {
            return false;
        }
        let inv = 1.0 / norm1;
        for c in &mut candidate {
            *c *= inv;
        }
        self.columns.push(candidate);
        true
    }

    /// Extend with already-real candidate vectors, deflating dependent ones.
    pub fn extended_with_real(&self, candidates: impl IntoIterator<Item = Vec<f64>>) -> BasisMatrix {
        let mut out = self.clone();
        for c in candidates {
            out.push_orthonormalized(c);
        }
        out
    }

    /// `V^T m` for a complex `n x k` block (result `r x k`).
    pub fn vt_times(&self, m: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(m.rows(), self.dim, "vt_times dimension mismatch");
        let r = self.num_cols();
        assert!(r >= 1, "empty basis");
        let mut out = ComplexMatrix::zeros(r, m.cols());
        for j in 0..m.cols() {
            let mcol = m.col(j);
            let ocol = out.col_mut(j);
            for (i, w) in self.columns.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (&wi, &mi) in w.iter().zip(mcol) {
                    acc += mi * wi;
                }
                ocol[i] = acc;
            }
        }
        out
    }

    /// `V z` lifting a reduced `r x k` block to `n x k`.
    pub fn lift(&self, z: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(z.rows(), self.num_cols(), "lift dimension mismatch");
        let mut out = ComplexMatrix::zeros(self.dim, z.cols());
        for j in 0..z.cols() {
            let zcol = z.col(j);
            let ocol = out.col_mut(j);
            for (i, w) in self.columns.iter().enumerate() {
                let zi = zcol[i];
                if zi.re == 0.0 && zi.im == 0.0 {
                    continue;
                }
                for (o, &wv) in ocol.iter_mut().zip(w) {
                    *o += zi * wv;
                }
            }
        }
        out
    }

    /// `m V` for a complex `k x n` block (result `k x r`).
    pub fn times_from_left(&self, m: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(m.cols(), self.dim, "times_from_left dimension mismatch");
        let r = self.num_cols();
        assert!(r >= 1, "empty basis");
        let mut out = ComplexMatrix::zeros(m.rows(), r);
        for (j, w) in self.columns.iter().enumerate() {
            let ocol = out.col_mut(j);
            for (c, &wc) in w.iter().enumerate() {
                if wc == 0.0 {
                    continue;
                }
                let mcol = m.col(c);
                for (o, &mv) in ocol.iter_mut().zip(mcol) {
                    *o += mv * wc;
                }
            }
        }
        out
    }

    /// Galerkin projection `V^T t V` of a sparse operator.
    pub fn project_triplets(&self, t: &SparseTriplets) -> ComplexMatrix {
        let tv = t.times_basis(self);
        self.vt_times(&tv)
    }

    /// Euclidean norm of the component of `x` orthogonal to the span.
    pub fn orthogonal_residual_norm(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        let mut r = x.to_vec();
        for w in &self.columns {
            let coeff = dot(w, &r);
            for (ri, &wv) in r.iter_mut().zip(w) {
                *ri -= coeff * wv;
            }
        }
        l2(&r)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l2(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Split the columns of a complex block into real-part and imaginary-part
/// candidate vectors, per column in that order.
pub(crate) fn split_complex_columns(x: &ComplexMatrix) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * x.cols());
    for j in 0..x.cols() {
        let col = x.col(j);
        out.push(col.iter().map(|z| z.re).collect());
        out.push(col.iter().map(|z| z.im).collect());
    }
    out
}

/// Extend `v` with the real and imaginary parts of the columns of `x`,
/// orthonormalized by modified Gram-Schmidt with deflation. Columns of `v`
/// are carried over unchanged.
pub fn orth_extend(v: &BasisMatrix, x: &ComplexMatrix) -> Result<BasisMatrix> {
    if x.rows() != v.dim() {
        return Err(Error::DimensionMismatch {
            context: "orth_extend",
            expected: format!("{} rows", v.dim()),
            actual: format!("{} rows", x.rows()),
        });
    }
    Ok(v.extended_with_real(split_complex_columns(x)))
}

/// Orthonormality defect `max |V^T V - I|`.
pub fn gram_residual(v: &BasisMatrix) -> f64 {
    assert!(!v.is_empty(), "gram_residual of empty basis");
    let r = v.num_cols();
    let mut worst: f64 = 0.0;
    for i in 0..r {
        for j in 0..r {
            let g = dot(v.column(i), v.column(j));
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    worst
}
