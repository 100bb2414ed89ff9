//! Galerkin-projected reduced-order models.
//!
//! `project` precomputes one reduced operator per affine term, so reduced
//! assembly at a frequency costs `O(d r^2)` and never touches the full
//! order again.

use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::{solve_dense, BasisMatrix, ComplexMatrix};
use crate::system::{
    dense_from_file, dense_to_file, Coefficient, FrequencyPoint, ParametricSystem, SolveCounter,
    SparseFile,
};
use crate::Result;

pub const ROM_FORMAT: &str = "morgreed-rom-v1";

#[derive(Debug, Clone)]
enum ReducedOps {
    Delay {
        delays: Vec<f64>,
        e_hat: Vec<ComplexMatrix>,
        a_hat: Vec<ComplexMatrix>,
    },
    Generic {
        terms: Vec<(Coefficient, ComplexMatrix)>,
    },
}

/// Reduced-order model: basis `V` plus projected operators
/// (`E_hat = V^T E V`, `A_hat = V^T A V`, `B_hat = V^T B`, `C_hat = C V`).
#[derive(Debug, Clone)]
pub struct ReducedModel {
    basis: BasisMatrix,
    ops: ReducedOps,
    b_hat: ComplexMatrix,
    c_hat: ComplexMatrix,
}

/// Project the system onto the span of `v`.
pub fn project(sys: &ParametricSystem, v: &BasisMatrix) -> Result<ReducedModel> {
    if v.is_empty() {
        return Err(Error::EmptyBasis);
    }
    if v.dim() != sys.order() {
        return Err(Error::DimensionMismatch {
            context: "project",
            expected: format!("basis with ambient dimension {}", sys.order()),
            actual: format!("{}", v.dim()),
        });
    }
    let ops = match sys {
        ParametricSystem::Delay(d) => ReducedOps::Delay {
            delays: d.delays().to_vec(),
            e_hat: d.e_terms().iter().map(|t| v.project_triplets(t)).collect(),
            a_hat: d.a_terms().iter().map(|t| v.project_triplets(t)).collect(),
        },
        ParametricSystem::GenericAffine { terms, .. } => ReducedOps::Generic {
            terms: terms
                .iter()
                .map(|(c, t)| (*c, v.project_triplets(t)))
                .collect(),
        },
    };
    Ok(ReducedModel {
        basis: v.clone(),
        ops,
        b_hat: v.vt_times(sys.b()),
        c_hat: v.times_from_left(sys.c()),
    })
}

impl ReducedModel {
    /// Reduced order `r`.
    pub fn order(&self) -> usize {
        self.basis.num_cols()
    }

    pub fn num_inputs(&self) -> usize {
        self.b_hat.cols()
    }

    pub fn num_outputs(&self) -> usize {
        self.c_hat.rows()
    }

    pub fn basis(&self) -> &BasisMatrix {
        &self.basis
    }

    pub fn b_hat(&self) -> &ComplexMatrix {
        &self.b_hat
    }

    pub fn c_hat(&self) -> &ComplexMatrix {
        &self.c_hat
    }

    /// Projected delay operators, when the source was a delay system.
    pub fn delay_ops(&self) -> Option<(&[f64], &[ComplexMatrix], &[ComplexMatrix])> {
        match &self.ops {
            ReducedOps::Delay {
                delays,
                e_hat,
                a_hat,
            } => Some((delays, e_hat, a_hat)),
            ReducedOps::Generic { .. } => None,
        }
    }

    /// Assemble the reduced system matrix `K_hat(s)` (`r x r`).
    pub fn assemble_reduced(&self, p: FrequencyPoint) -> ComplexMatrix {
        let r = self.order();
        let mut k = ComplexMatrix::zeros(r, r);
        match &self.ops {
            ReducedOps::Delay {
                delays,
                e_hat,
                a_hat,
            } => {
                for (j, &tau) in delays.iter().enumerate() {
                    let exp = (-p.s * tau).exp();
                    accumulate(&mut k, &e_hat[j], p.s * exp);
                    accumulate(&mut k, &a_hat[j], -exp);
                }
            }
            ReducedOps::Generic { terms } => {
                for (coeff, m) in terms {
                    accumulate(&mut k, m, coeff.eval(p.s));
                }
            }
        }
        k
    }

    /// Solve the reduced system for all inputs, returning `z(p)` (`r x n_I`).
    /// No full-order solve is counted.
    pub fn solve_rom(&self, p: FrequencyPoint) -> Result<ComplexMatrix> {
        self.solve_reduced_with(p, &self.b_hat)
    }

    /// Solve the reduced system against a caller-supplied reduced
    /// right-hand side (used by the residual estimator).
    pub fn solve_reduced_with(&self, p: FrequencyPoint, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        let k = self.assemble_reduced(p);
        solve_dense(&k, rhs)
    }

    /// Reduced transfer function `H_hat(s) = C_hat K_hat^{-1}(s) B_hat`.
    pub fn reduced_transfer(&self, p: FrequencyPoint) -> Result<ComplexMatrix> {
        let z = self.solve_rom(p)?;
        Ok(self.c_hat.matmul(&z))
    }
}

fn accumulate(dst: &mut ComplexMatrix, src: &ComplexMatrix, coeff: Complex64) {
    for c in 0..dst.cols() {
        let scol = src.col(c);
        let dcol = dst.col_mut(c);
        for (d, &s) in dcol.iter_mut().zip(scol) {
            *d += coeff * s;
        }
    }
}

/// Maximum entrywise output error `max_{i,j} |H_ij(s) - H_hat_ij(s)|`.
/// Counts one full-order solve; meant for validation, never for driving
/// the greedy loop.
pub fn output_error(
    sys: &ParametricSystem,
    rom: &ReducedModel,
    p: FrequencyPoint,
    counter: &mut SolveCounter,
) -> Result<f64> {
    let h = sys.transfer_function(p, counter)?;
    let h_hat = rom.reduced_transfer(p)?;
    Ok(h.sub(&h_hat).max_abs())
}

// ---------------------------------------------------------------------------
// ROM export (morgreed-rom-v1)
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct RomFile {
    format: String,
    order: usize,
    ambient_order: usize,
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
    #[serde(rename = "V")]
    v: Vec<f64>,
}

fn dense_to_sparse_file(m: &ComplexMatrix) -> SparseFile {
    let mut triplets = Vec::with_capacity(m.rows() * m.cols());
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let z = m.get(r, c);
            if z.re != 0.0 || z.im != 0.0 {
                triplets.push((r, c, z.re, z.im));
            }
        }
    }
    SparseFile {
        rows: m.rows(),
        cols: m.cols(),
        triplets,
    }
}

fn sparse_file_to_dense(f: SparseFile) -> Result<ComplexMatrix> {
    let t = f.into_triplets()?;
    let mut m = ComplexMatrix::zeros(t.rows(), t.cols());
    t.add_scaled_to(&mut m, Complex64::new(1.0, 0.0));
    Ok(m)
}

impl ReducedModel {
    /// Write the ROM to disk. Only delay-form ROMs have a file schema.
    pub fn save(&self, path: &Path) -> Result<()> {
        let (delays, e_hat, a_hat) = self.delay_ops().ok_or_else(|| {
            Error::InvalidFormat("only delay-form reduced models can be exported".into())
        })?;
        let n = self.basis.dim();
        let r = self.order();
        let mut v = Vec::with_capacity(n * r);
        for row in 0..n {
            for col in 0..r {
                v.push(self.basis.column(col)[row]);
            }
        }
        let file = RomFile {
            format: ROM_FORMAT.to_string(),
            order: r,
            ambient_order: n,
            num_inputs: self.num_inputs(),
            num_outputs: self.num_outputs(),
            delays: delays.to_vec(),
            e: e_hat.iter().map(dense_to_sparse_file).collect(),
            a: a_hat.iter().map(dense_to_sparse_file).collect(),
            b: dense_to_file(&self.b_hat),
            c: dense_to_file(&self.c_hat),
            v,
        };
        let out = std::fs::File::create(path)?;
        let mut w = BufWriter::new(out);
        serde_json::to_writer(&mut w, &file)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let data = std::fs::read(path)?;
        let file: RomFile = serde_json::from_slice(&data)?;
        if file.format != ROM_FORMAT {
            return Err(Error::InvalidFormat(format!(
                "expected format {ROM_FORMAT}, got {}",
                file.format
            )));
        }
        let r = file.order;
        let n = file.ambient_order;
        if file.v.len() != n * r {
            return Err(Error::InvalidFormat(format!(
                "basis block has {} entries, expected {}x{}",
                file.v.len(),
                n,
                r
            )));
        }
        let mut columns = vec![vec![0.0; n]; r];
        for (row, chunk) in file.v.chunks(r).enumerate() {
            for (col, &value) in chunk.iter().enumerate() {
                columns[col][row] = value;
            }
        }
        let basis = BasisMatrix::from_columns(n, columns)?;
        let e_hat = file
            .e
            .into_iter()
            .map(sparse_file_to_dense)
            .collect::<Result<Vec<_>>>()?;
        let a_hat = file
            .a
            .into_iter()
            .map(sparse_file_to_dense)
            .collect::<Result<Vec<_>>>()?;
        if e_hat.len() != file.delays.len() || a_hat.len() != file.delays.len() {
            return Err(Error::InvalidFormat("term count does not match delays".into()));
        }
        Ok(ReducedModel {
            basis,
            ops: ReducedOps::Delay {
                delays: file.delays,
                e_hat,
                a_hat,
            },
            b_hat: dense_from_file(r, file.num_inputs, &file.b)?,
            c_hat: dense_from_file(file.num_outputs, r, &file.c)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{orth_extend, SparseTriplets};
    use crate::system::DelaySystem;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_delay_system(n: usize, n_i: usize, n_o: usize, seed: u64) -> ParametricSystem {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut a0 = SparseTriplets::new(n, n);
        for i in 0..n {
            a0.push(i, i, c64(-(1.0 + rng.gen_range(0.0..2.0)), 0.0));
        }
        for _ in 0..n {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            a0.push(i, j, c64(rng.gen_range(-0.2..0.2), 0.0));
        }
        let mut a1 = SparseTriplets::new(n, n);
        for _ in 0..n / 2 {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            a1.push(i, j, c64(rng.gen_range(-0.05..0.05), 0.0));
        }
        let e = vec![SparseTriplets::identity(n), SparseTriplets::new(n, n)];
        let b = ComplexMatrix::from_fn(n, n_i, |_, _| c64(rng.gen_range(-1.0..1.0), 0.0));
        let c = ComplexMatrix::from_fn(n_o, n, |_, _| c64(rng.gen_range(-1.0..1.0), 0.0));
        ParametricSystem::Delay(DelaySystem::new(vec![0.0, 0.3], e, vec![a0, a1], b, c).unwrap())
    }

    fn random_basis(n: usize, r: usize, seed: u64) -> BasisMatrix {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut v = BasisMatrix::empty(n);
        while v.num_cols() < r {
            let x = ComplexMatrix::from_fn(n, 1, |_, _| c64(rng.gen_range(-1.0..1.0), 0.0));
            v = orth_extend(&v, &x).unwrap();
        }
        v
    }

    #[test]
    fn full_basis_reproduces_operators_and_transfer() {
        let sys = random_delay_system(8, 2, 2, 1);
        let v = BasisMatrix::identity(8);
        let rom = project(&sys, &v).unwrap();
        let p = FrequencyPoint::new(0.7);
        let k = sys.assemble(p);
        let k_hat = rom.assemble_reduced(p);
        assert!(k.sub(&k_hat).max_abs() < 1e-12);

        let mut counter = SolveCounter::new();
        let h = sys.transfer_function(p, &mut counter).unwrap();
        let h_hat = rom.reduced_transfer(p).unwrap();
        assert!(h.sub(&h_hat).max_abs() <= 1e-8);
        assert!(output_error(&sys, &rom, p, &mut counter).unwrap() <= 1e-8);
    }

    #[test]
    fn coordinate_projection_of_diagonal() {
        // A0 = diag(1, 2), V = [e1] => projected A0 term is [1].
        let n = 2;
        let mut a0 = SparseTriplets::new(n, n);
        a0.push(0, 0, c64(1.0, 0.0));
        a0.push(1, 1, c64(2.0, 0.0));
        let e = vec![SparseTriplets::identity(n)];
        let sys = ParametricSystem::Delay(
            DelaySystem::new(
                vec![0.0],
                e,
                vec![a0],
                ComplexMatrix::identity(n),
                ComplexMatrix::identity(n),
            )
            .unwrap(),
        );
        let mut v = BasisMatrix::empty(n);
        assert!(v.push_orthonormalized(vec![1.0, 0.0]));
        let rom = project(&sys, &v).unwrap();
        let (_, _, a_hat) = rom.delay_ops().unwrap();
        assert_eq!(a_hat[0].rows(), 1);
        assert!((a_hat[0].get(0, 0) - c64(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn reduced_assembly_matches_direct_projection() {
        let sys = random_delay_system(20, 2, 3, 5);
        let v = random_basis(20, 4, 9);
        let rom = project(&sys, &v).unwrap();
        for f in [0.05, 0.3, 0.9, 2.2, 7.5] {
            let p = FrequencyPoint::new(f);
            let direct = v.vt_times(&sys.assemble(p).matmul_basis(&v));
            let fast = rom.assemble_reduced(p);
            let denom = direct.max_abs().max(1e-30);
            assert!(
                direct.sub(&fast).max_abs() / denom <= 1e-10,
                "reduced assembly mismatch at f={f}"
            );
        }
    }

    #[test]
    fn galerkin_exactness_when_solution_in_span() {
        let sys = random_delay_system(12, 2, 2, 3);
        let p = FrequencyPoint::new(0.4);
        let mut counter = SolveCounter::new();
        let x = sys.solve_fom(p, &mut counter).unwrap();
        let v = orth_extend(&BasisMatrix::empty(12), &x).unwrap();
        let rom = project(&sys, &v).unwrap();
        let z = rom.solve_rom(p).unwrap();
        let lifted = v.lift(&z);
        assert!(lifted.sub(&x).max_abs() <= 1e-8 * x.max_abs().max(1.0));

        // Reduced residual is tiny relative to the reduced RHS.
        let k_hat = rom.assemble_reduced(p);
        let res = k_hat.matmul(&z).sub(rom.b_hat()).frobenius_norm();
        assert!(res <= 1e-10 * rom.b_hat().frobenius_norm().max(1e-30));

        // Output error at an interpolated point is at solver noise level
        // and costs one counted solve.
        let before = counter.count();
        let err = output_error(&sys, &rom, p, &mut counter).unwrap();
        assert_eq!(counter.count(), before + 1);
        assert!(err <= 1e-9);
    }

    #[test]
    fn scalar_rom_is_exact() {
        let sys = random_delay_system(1, 1, 1, 11);
        let v = BasisMatrix::identity(1);
        let rom = project(&sys, &v).unwrap();
        let p = FrequencyPoint::new(1.3);
        let mut counter = SolveCounter::new();
        let h = sys.transfer_function(p, &mut counter).unwrap();
        let h_hat = rom.reduced_transfer(p).unwrap();
        assert!((h.get(0, 0) - h_hat.get(0, 0)).norm() < 1e-12);
    }

    #[test]
    fn small_random_basis_has_positive_error() {
        let sys = random_delay_system(50, 2, 2, 17);
        let v = random_basis(50, 1, 23);
        let rom = project(&sys, &v).unwrap();
        let mut counter = SolveCounter::new();
        let err = output_error(&sys, &rom, FrequencyPoint::new(0.8), &mut counter).unwrap();
        assert!(err > 0.0);
    }

    #[test]
    fn rom_export_round_trip() {
        let sys = random_delay_system(10, 2, 2, 29);
        let v = random_basis(10, 3, 31);
        let rom = project(&sys, &v).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rom.json");
        rom.save(&path).unwrap();
        let loaded = ReducedModel::load(&path).unwrap();
        assert_eq!(rom.b_hat().sub(loaded.b_hat()).max_abs(), 0.0, "b_hat");
        assert_eq!(rom.c_hat().sub(loaded.c_hat()).max_abs(), 0.0, "c_hat");
        let (d0, e0, a0) = rom.delay_ops().unwrap();
        let (d1, e1, a1) = loaded.delay_ops().unwrap();
        assert_eq!(d0, d1, "delays");
        for (x, y) in e0.iter().zip(e1) {
            assert_eq!(x.sub(y).max_abs(), 0.0, "e_hat");
        }
        for (x, y) in a0.iter().zip(a1) {
            assert_eq!(x.sub(y).max_abs(), 0.0, "a_hat");
        }
        for f in [0.2, 1.1, 4.0] {
            let p = FrequencyPoint::new(f);
            let a = rom.reduced_transfer(p).unwrap();
            let b = loaded.reduced_transfer(p).unwrap();
            assert_eq!(a.sub(&b).max_abs(), 0.0, "export must be lossless");
        }
    }
}
