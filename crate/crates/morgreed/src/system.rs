//! Full-order models: the time-delay frequency-domain form and a generic
//! affine-parametric form, plus frequency grids and solve accounting.

use std::f64::consts::PI;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::{lu_factor, ComplexMatrix, SparseTriplets};
use crate::Result;

pub const MODEL_FORMAT: &str = "morgreed-delay-v1";

// ---------------------------------------------------------------------------
// Frequency points and grids
// ---------------------------------------------------------------------------

/// A point on the imaginary axis: ordinary frequency `f` in Hz and the
/// Laplace variable `s = 2*pi*f*i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyPoint {
    pub f: f64,
    pub s: Complex64,
}

impl FrequencyPoint {
    pub fn new(f: f64) -> Self {
        Self {
            f,
            s: Complex64::new(0.0, 2.0 * PI * f),
        }
    }

    /// The point with conjugated Laplace variable (negative frequency).
    pub fn conjugate(&self) -> Self {
        Self::new(-self.f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpacing {
    Linear,
    Log,
}

/// Frequency grid with included endpoints, uniform in `f` or in `log10 f`.
pub fn make_grid(
    f_low: f64,
    f_high: f64,
    cardinality: usize,
    spacing: GridSpacing,
) -> Result<Vec<FrequencyPoint>> {
    if !(f_low > 0.0 && f_high > f_low) || !f_low.is_finite() || !f_high.is_finite() {
        return Err(Error::InvalidRange(format!(
            "need 0 < f_low < f_high, got [{f_low}, {f_high}]"
        )));
    }
    if cardinality < 2 {
        return Err(Error::InvalidRange(format!(
            "grid cardinality must be >= 2, got {cardinality}"
        )));
    }
    let m = cardinality;
    let mut points = Vec::with_capacity(m);
    match spacing {
        GridSpacing::Linear => {
            let step = (f_high - f_low) / (m - 1) as f64;
            for k in 0..m {
                let f = if k == m - 1 { f_high } else { f_low + step * k as f64 };
                points.push(FrequencyPoint::new(f));
            }
        }
        GridSpacing::Log => {
            let lo = f_low.log10();
            let hi = f_high.log10();
            let step = (hi - lo) / (m - 1) as f64;
            for k in 0..m {
                let f = if k == 0 {
                    f_low
                } else if k == m - 1 {
                    f_high
                } else {
                    10f64.powf(lo + step * k as f64)
                };
                points.push(FrequencyPoint::new(f));
            }
        }
    }
    Ok(points)
}

// ---------------------------------------------------------------------------
// Solve accounting
// ---------------------------------------------------------------------------

/// Counter of full-order solves. One factorization serving all right-hand
/// sides counts as a single solve; this is the cost unit all speed
/// comparisons rest on. Owned by the run, not by the system.
#[derive(Debug, Default, Clone)]
pub struct SolveCounter {
    count: u64,
}

impl SolveCounter {
    pub fn new() -> Self {
        Self { count: 0 }
    }

    pub fn bump(&mut self) {
        self.count += 1;
    }

    pub fn count(&self) -> u64 {
        self.count
    }
}

// ---------------------------------------------------------------------------
// Systems
// ---------------------------------------------------------------------------

/// Time-delay system in the frequency domain:
/// `K(s) = s * sum_j E_j e^{-s tau_j} - sum_j A_j e^{-s tau_j}`,
/// `H(s) = C K^{-1}(s) B`, with `tau_0 = 0 < tau_1 < ... < tau_d`.
#[derive(Debug, Clone)]
pub struct DelaySystem {
    delays: Vec<f64>,
    e_terms: Vec<SparseTriplets>,
    a_terms: Vec<SparseTriplets>,
    b: ComplexMatrix,
    c: ComplexMatrix,
}

impl DelaySystem {
    pub fn new(
        delays: Vec<f64>,
        e_terms: Vec<SparseTriplets>,
        a_terms: Vec<SparseTriplets>,
        b: ComplexMatrix,
        c: ComplexMatrix,
    ) -> Result<Self> {
        if delays.is_empty() || delays[0] != 0.0 {
            return Err(Error::InvalidConfig(
                "delay list must start with tau_0 = 0".into(),
            ));
        }
        if delays.iter().any(|t| !t.is_finite()) || delays.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "delays must be finite and strictly increasing".into(),
            ));
        }
        if e_terms.len() != delays.len() || a_terms.len() != delays.len() {
            return Err(Error::DimensionMismatch {
                context: "DelaySystem::new",
                expected: format!("{} E and A terms", delays.len()),
                actual: format!("{} E, {} A", e_terms.len(), a_terms.len()),
            });
        }
        let n = b.rows();
        for t in e_terms.iter().chain(&a_terms) {
            if t.rows() != n || t.cols() != n {
                return Err(Error::DimensionMismatch {
                    context: "DelaySystem::new",
                    expected: format!("{n}x{n} system matrices"),
                    actual: format!("{}x{}", t.rows(), t.cols()),
                });
            }
        }
        if c.cols() != n {
            return Err(Error::DimensionMismatch {
                context: "DelaySystem::new",
                expected: format!("C with {n} columns"),
                actual: format!("{} columns", c.cols()),
            });
        }
        Ok(Self {
            delays,
            e_terms,
            a_terms,
            b,
            c,
        })
    }

    pub fn order(&self) -> usize {
        self.b.rows()
    }

    pub fn num_delays(&self) -> usize {
        self.delays.len() - 1
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    pub fn e_terms(&self) -> &[SparseTriplets] {
        &self.e_terms
    }

    pub fn a_terms(&self) -> &[SparseTriplets] {
        &self.a_terms
    }

    pub fn b(&self) -> &ComplexMatrix {
        &self.b
    }

    pub fn c(&self) -> &ComplexMatrix {
        &self.c
    }
}

/// Coefficient tags for the generic affine form `M(mu) = sum_t phi_t(s) M_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coefficient {
    Constant,
    /// `s`
    S,
    /// `e^{-s tau}`
    ExpNeg { tau: f64 },
    /// `s e^{-s tau}`
    SExpNeg { tau: f64 },
}

impl Coefficient {
    pub fn eval(&self, s: Complex64) -> Complex64 {
        match *self {
            Coefficient::Constant => Complex64::new(1.0, 0.0),
            Coefficient::S => s,
            Coefficient::ExpNeg { tau } => (-s * tau).exp(),
            Coefficient::SExpNeg { tau } => s * (-s * tau).exp(),
        }
    }
}

/// Full-order model: either a time-delay system or a generic affine sum.
#[derive(Debug, Clone)]
pub enum ParametricSystem {
    Delay(DelaySystem),
    GenericAffine {
        terms: Vec<(Coefficient, SparseTriplets)>,
        b: ComplexMatrix,
        c: ComplexMatrix,
    },
}

impl ParametricSystem {
    pub fn generic(
        terms: Vec<(Coefficient, SparseTriplets)>,
        b: ComplexMatrix,
        c: ComplexMatrix,
    ) -> Result<Self> {
        let n = b.rows();
        if terms.is_empty() {
            return Err(Error::InvalidConfig("affine form needs at least one term".into()));
        }
        for (_, t) in &terms {
            if t.rows() != n || t.cols() != n {
                return Err(Error::DimensionMismatch {
                    context: "ParametricSystem::generic",
                    expected: format!("{n}x{n} terms"),
                    actual: format!("{}x{}", t.rows(), t.cols()),
                });
            }
        }
        if c.cols() != n {
            return Err(Error::DimensionMismatch {
                context: "ParametricSystem::generic",
                expected: format!("C with {n} columns"),
                actual: format!("{} columns", c.cols()),
            });
        }
        Ok(Self::GenericAffine { terms, b, c })
    }

    pub fn order(&self) -> usize {
        self.b().rows()
    }

    pub fn num_inputs(&self) -> usize {
        self.b().cols()
    }

    pub fn num_outputs(&self) -> usize {
        self.c().rows()
    }

    pub fn b(&self) -> &ComplexMatrix {
        match self {
            ParametricSystem::Delay(d) => &d.b,
            ParametricSystem::GenericAffine { b, .. } => b,
        }
    }

    pub fn c(&self) -> &ComplexMatrix {
        match self {
            ParametricSystem::Delay(d) => &d.c,
            ParametricSystem::GenericAffine { c, .. } => c,
        }
    }

    /// Visit every affine term as `(coefficient value at s, matrix)`.
    /// For the delay form the E terms carry `s e^{-s tau_j}` and the A
    /// terms `-e^{-s tau_j}`.
    pub fn for_each_term(&self, s: Complex64, mut visit: impl FnMut(Complex64, &SparseTriplets)) {
        match self {
            ParametricSystem::Delay(d) => {
                for (j, &tau) in d.delays.iter().enumerate() {
                    let exp = (-s * tau).exp();
                    visit(s * exp, &d.e_terms[j]);
                    visit(-exp, &d.a_terms[j]);
                }
            }
            ParametricSystem::GenericAffine { terms, .. } => {
                for (coeff, t) in terms {
                    visit(coeff.eval(s), t);
                }
            }
        }
    }

    /// Assemble the dense system matrix `K(s)` (delay form) or `M(mu)`
    /// (generic form) at the given point.
    pub fn assemble(&self, p: FrequencyPoint) -> ComplexMatrix {
        let n = self.order();
        let mut k = ComplexMatrix::zeros(n, n);
        self.for_each_term(p.s, |coeff, t| t.add_scaled_to(&mut k, coeff));
        k
    }

    /// Solve the full-order system at `p` for all inputs, returning the
    /// `n x n_I` snapshot block. One factorization serves every column and
    /// counts as a single solve.
    pub fn solve_fom(&self, p: FrequencyPoint, counter: &mut SolveCounter) -> Result<ComplexMatrix> {
        let k = self.assemble(p);
        let x = lu_factor(&k)?.solve(self.b())?;
        counter.bump();
        Ok(x)
    }

    /// Transfer function `H(s) = C K^{-1}(s) B` (`n_O x n_I`).
    pub fn transfer_function(
        &self,
        p: FrequencyPoint,
        counter: &mut SolveCounter,
    ) -> Result<ComplexMatrix> {
        let x = self.solve_fom(p, counter)?;
        Ok(self.c().matmul(&x))
    }
}

// ---------------------------------------------------------------------------
// Model file format (morgreed-delay-v1)
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct SparseFile {
    pub rows: usize,
    pub cols: usize,
    pub triplets: Vec<(usize, usize, f64, f64)>,
}

impl SparseFile {
    pub fn from_triplets(t: &SparseTriplets) -> Self {
        Self {
            rows: t.rows(),
            cols: t.cols(),
            triplets: t
                .entries()
                .iter()
                .map(|&(r, c, v)| (r, c, v.re, v.im))
                .collect(),
        }
    }

    pub fn into_triplets(self) -> Result<SparseTriplets> {
        let mut t = SparseTriplets::new(self.rows, self.cols);
        for (r, c, re, im) in self.triplets {
            if r >= self.rows || c >= self.cols {
                return Err(Error::InvalidFormat(format!(
                    "triplet index ({r},{c}) out of range for {}x{}",
                    self.rows, self.cols
                )));
            }
            t.push(r, c, Complex64::new(re, im));
        }
        Ok(t)
    }
}

/// Flat row-major list of `[re, im]` pairs.
pub(crate) fn dense_to_file(m: &ComplexMatrix) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m.rows() * m.cols());
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let z = m.get(r, c);
            out.push((z.re, z.im));
        }
    }
    out
}

pub(crate) fn dense_from_file(rows: usize, cols: usize, data: &[(f64, f64)]) -> Result<ComplexMatrix> {
    if data.len() != rows * cols {
        return Err(Error::InvalidFormat(format!(
            "dense block has {} entries, expected {}x{}",
            data.len(),
            rows,
            cols
        )));
    }
    Ok(ComplexMatrix::from_fn(rows, cols, |r, c| {
        let (re, im) = data[r * cols + c];
        Complex64::new(re, im)
    }))
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    order: usize,
    num_inputs: usize,
    num_outputs: usize,
    delays: Vec<f64>,
    #[serde(rename = "E")]
    e: Vec<SparseFile>,
    #[serde(rename = "A")]
    a: Vec<SparseFile>,
    #[serde(rename = "B")]
    b: Vec<(f64, f64)>,
    #[serde(rename = "C")]
    c: Vec<(f64, f64)>,
}

impl DelaySystem {
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            order: self.order(),
            num_inputs: self.b.cols(),
            num_outputs: self.c.rows(),
            delays: self.delays.clone(),
            e: self.e_terms.iter().map(SparseFile::from_triplets).collect(),
            a: self.a_terms.iter().map(SparseFile::from_triplets).collect(),
            b: dense_to_file(&self.b),
            c: dense_to_file(&self.c),
        };
        let out = std::fs::File::create(path)?;
        let mut w = BufWriter::new(out);
        serde_json::to_writer(&mut w, &file)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let data = std::fs::read(path)?;
        let file: ModelFile = serde_json::from_slice(&data)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::InvalidFormat(format!(
                "expected format {MODEL_FORMAT}, got {}",
                file.format
            )));
        }
        let n = file.order;
        let e = file
            .e
            .into_iter()
            .map(SparseFile::into_triplets)
            .collect::<Result<Vec<_>>>()?;
        let a = file
            .a
            .into_iter()
            .map(SparseFile::into_triplets)
            .collect::<Result<Vec<_>>>()?;
        let b = dense_from_file(n, file.num_inputs, &file.b)?;
        let c = dense_from_file(file.num_outputs, n, &file.c)?;
        DelaySystem::new(file.delays, e, a, b, c)
    }
}
