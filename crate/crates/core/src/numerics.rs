//! Minimal dense complex linear algebra: products, Hermitian transpose,
//! Hadamard product, log-determinant of Hermitian PSD matrices, and the
//! Moore-Penrose pseudo-inverse.
//!
//! Everything here is a deterministic pure function over immutable inputs;
//! no randomness enters this module. Matrices are small (a few dozen rows at
//! most), so the kernels favour robustness over asymptotic speed: the
//! spectral routines go through a cyclic complex Jacobi eigensolver.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Max absolute deviation from Hermitian symmetry tolerated before the
/// spectral routines refuse the input.
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Eigenvalue floor relative to the largest eigenvalue magnitude, applied
/// before taking logarithms so that analytically-PSD inputs with round-off
/// never produce -inf.
pub const EIGENVALUE_FLOOR_REL: f64 = 1e-12;

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

/// Eigendecomposition of a Hermitian matrix: `a == vectors * diag(values) * vectors^H`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Real eigenvalues, unordered.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the eigenvectors.
    pub vectors: ComplexMatrix,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
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

    pub fn from_fn<F: FnMut(usize, usize) -> Complex64>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Build from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidParameter("from_rows: empty matrix".into()));
        }
        let cols = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "from_rows: row 0 has {} entries, row {} has {}",
                    cols,
                    i,
                    r.len()
                )));
            }
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    /// Real diagonal matrix.
    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, Complex64::new(v, 0.0));
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    /// Standard matrix product; fails unless `self.cols == rhs.rows`.
    pub fn matmul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "matmul: lhs {}x{} rhs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    let v = out.get(i, j) + a * rhs.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    /// Elementwise product; dims must match exactly.
    pub fn hadamard(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.shape() != rhs.shape() {
            return Err(Error::DimensionMismatch(format!(
                "hadamard: lhs {}x{} rhs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(rhs.data.iter())
            .map(|(a, b)| a * b)
            .collect();
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn add(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.shape() != rhs.shape() {
            return Err(Error::DimensionMismatch(format!(
                "add: lhs {}x{} rhs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(rhs.data.iter())
            .map(|(a, b)| a + b)
            .collect();
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, s: f64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn scale_complex(&self, s: Complex64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Zero out every row `i` with `keep[i] == false`.
    pub fn zero_rows(&self, keep: &[bool]) -> Result<ComplexMatrix> {
        if keep.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "zero_rows: matrix has {} rows, mask has {}",
                self.rows,
                keep.len()
            )));
        }
        let mut out = self.clone();
        for (i, &k) in keep.iter().enumerate() {
            if !k {
                for j in 0..self.cols {
                    out.set(i, j, Complex64::new(0.0, 0.0));
                }
            }
        }
        Ok(out)
    }

    /// Zero out every column `j` with `keep[j] == false`.
    pub fn zero_cols(&self, keep: &[bool]) -> Result<ComplexMatrix> {
        if keep.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "zero_cols: matrix has {} cols, mask has {}",
                self.cols,
                keep.len()
            )));
        }
        let mut out = self.clone();
        for (j, &k) in keep.iter().enumerate() {
            if !k {
                for i in 0..self.rows {
                    out.set(i, j, Complex64::new(0.0, 0.0));
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    fn require_square(&self, what: &str) -> Result<()> {
        if self.rows != self.cols {
            return Err(Error::InvalidGram(format!(
                "{}: matrix is {}x{}, expected square",
                what, self.rows, self.cols
            )));
        }
        Ok(())
    }

    /// Max |a_ij - conj(a_ji)| over all entries.
    fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Eigendecomposition of a Hermitian matrix via cyclic complex Jacobi
    /// rotations. The input is symmetrized as (a + a^H)/2 first; inputs whose
    /// Hermitian defect exceeds [`HERMITIAN_TOL`] (relative to the largest
    /// entry) are rejected.
    pub fn hermitian_eigen(&self) -> Result<HermitianEigen> {
        self.require_square("hermitian_eigen")?;
        let scale = self.data.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        if self.hermitian_defect() > HERMITIAN_TOL * scale.max(1.0) {
            return Err(Error::InvalidGram(format!(
                "hermitian_eigen: Hermitian defect {:.3e} exceeds tolerance",
                self.hermitian_defect()
            )));
        }
        let n = self.rows;
        // Symmetrize to kill round-off asymmetry before factorization.
        let mut h = ComplexMatrix::from_fn(n, n, |i, j| {
            (self.get(i, j) + self.get(j, i).conj()) * 0.5
        });
        let mut v = ComplexMatrix::identity(n);

        let off_norm = |m: &ComplexMatrix| -> f64 {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        s += m.get(i, j).norm_sqr();
                    }
                }
            }
            s.sqrt()
        };

        let frob = h.frobenius_norm();
        let tol = 1e-14 * frob.max(1.0);
        for _sweep in 0..100 {
            if off_norm(&h) <= tol {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = h.get(p, q);
                    let r = apq.norm();
                    if r <= tol / (n as f64) {
                        continue;
                    }
                    let phase = apq / r; // e^{i alpha}
                    let app = h.get(p, p).re;
                    let aqq = h.get(q, q).re;
                    let tau = (aqq - app) / (2.0 * r);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    // Unitary update U: columns p,q mix via the phased rotation
                    //   U[.,p] = c*e_p - s*conj(phase)*e_q
                    //   U[.,q] = s*e_p + c*conj(phase)*e_q
                    let sp = s * phase.conj();
                    let cp = c * phase.conj();
                    // H <- U^H H U : columns first, then rows.
                    for i in 0..n {
                        let hip = h.get(i, p);
                        let hiq = h.get(i, q);
                        h.set(i, p, hip * c - hiq * sp);
                        h.set(i, q, hip * s + hiq * cp);
                    }
                    for j in 0..n {
                        let hpj = h.get(p, j);
                        let hqj = h.get(q, j);
                        h.set(p, j, hpj * c - hqj * s * phase);
                        h.set(q, j, hpj * s + hqj * c * phase);
                    }
                    for i in 0..n {
                        let vip = v.get(i, p);
                        let viq = v.get(i, q);
                        v.set(i, p, vip * c - viq * sp);
                        v.set(i, q, vip * s + viq * cp);
                    }
                }
            }
        }
        let values = (0..n).map(|i| h.get(i, i).re).collect();
        Ok(HermitianEigen { values, vectors: v })
    }

    /// log2 of the determinant of a Hermitian PSD matrix, via the Jacobi
    /// eigendecomposition of the symmetrized input. Eigenvalues are floored
    /// at [`EIGENVALUE_FLOOR_REL`] times the largest eigenvalue so that inputs
    /// that are PSD analytically never return -inf; eigenvalues negative
    /// beyond tolerance signal an invalid Gram matrix.
    pub fn log2_det_hermitian_psd(&self) -> Result<f64> {
        self.require_square("log2_det_hermitian_psd")?;
        let eig = self.hermitian_eigen()?;
        let lam_max = eig.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(lam_max > 0.0) {
            return Err(Error::InvalidGram(format!(
                "log2_det_hermitian_psd: largest eigenvalue {lam_max:.3e} is not positive"
            )));
        }
        let neg_tol = HERMITIAN_TOL * lam_max.max(1.0);
        let floor = EIGENVALUE_FLOOR_REL * lam_max;
        let mut sum = 0.0;
        for &lam in &eig.values {
            if lam < -neg_tol {
                return Err(Error::InvalidGram(format!(
                    "log2_det_hermitian_psd: eigenvalue {lam:.3e} below zero beyond tolerance"
                )));
            }
            sum += lam.max(floor).log2();
        }
        if !sum.is_finite() {
            return Err(Error::InvalidGram(
                "log2_det_hermitian_psd: non-finite result".into(),
            ));
        }
        Ok(sum)
    }

    /// Moore-Penrose pseudo-inverse of a square matrix with singular-value
    /// cutoff `tol` (relative to the largest singular value). Computed as
    /// (A^H A)^+ A^H through the Hermitian eigendecomposition of A^H A, which
    /// reduces to the exact inverse when A is well conditioned.
    pub fn pseudo_inverse(&self, tol: f64) -> Result<ComplexMatrix> {
        self.require_square("pseudo_inverse")?;
        let aha = self.hermitian().matmul(self)?;
        let eig = aha.hermitian_eigen()?;
        let lam_max = eig.values.iter().cloned().fold(0.0f64, f64::max);
        // Eigenvalues of A^H A are squared singular values.
        let cutoff = (tol * tol) * lam_max;
        let inv = eig
            .values
            .iter()
            .map(|&lam| if lam > cutoff && lam > 0.0 { 1.0 / lam } else { 0.0 })
            .collect::<Vec<_>>();
        let v = &eig.vectors;
        let vh = v.hermitian();
        let mid = v.matmul(&ComplexMatrix::diag(&inv))?.matmul(&vh)?;
        mid.matmul(&self.hermitian())
    }

    /// (A^+)^{1/2} for a Hermitian PSD matrix: eigenvalues above the cutoff
    /// map to 1/sqrt(lambda), the rest to zero. Used to evaluate a
    /// determinant of the form det(I + G A^+) as det(I + E G E) with a
    /// Hermitian PSD argument.
    pub fn psd_inverse_sqrt(&self, tol: f64) -> Result<ComplexMatrix> {
        self.require_square("psd_inverse_sqrt")?;
        let eig = self.hermitian_eigen()?;
        let lam_max = eig.values.iter().cloned().fold(0.0f64, f64::max);
        let cutoff = tol * lam_max;
        let inv_sqrt = eig
            .values
            .iter()
            .map(|&lam| if lam > cutoff && lam > 0.0 { 1.0 / lam.sqrt() } else { 0.0 })
            .collect::<Vec<_>>();
        let v = &eig.vectors;
        let vh = v.hermitian();
        v.matmul(&ComplexMatrix::diag(&inv_sqrt))?.matmul(&vh)
    }
}

impl std::fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.rows {
            for j in 0..self.cols {
                let v = self.get(i, j);
                write!(f, "{}{:.4}{:+.4}i", if j == 0 { "" } else { " " }, v.re, v.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
