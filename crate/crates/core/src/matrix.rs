//! Dense complex matrices and state vectors.
//!
//! Everything downstream works on small, exactly-checkable operators, so the
//! storage is plain row-major `Vec<Complex64>` with no sparsity. Total
//! dimension is capped at [`DIM_CAP`].

use std::fmt;
use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hard cap on total matrix dimension (rows and cols each).
pub const DIM_CAP: usize = 1 << 14;

/// Numerical tolerances used by contract checks throughout the crate.
#[derive(Debug, Clone, Copy)]
pub struct ToleranceConfig {
    pub unitarity_tol: f64,
    pub condition_tol: f64,
    pub eig_residual_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            unitarity_tol: 1e-10,
            condition_tol: 1e-10,
            eig_residual_tol: 1e-10,
        }
    }
}

impl ToleranceConfig {
    /// Uniform tolerance for all three checks. Must be strictly positive.
    pub fn uniform(tol: f64) -> Result<Self> {
        if tol <= 0.0 {
            return Err(Error::Contract(format!("tolerance must be positive, got {tol}")));
        }
        Ok(Self {
            unitarity_tol: tol,
            condition_tol: tol,
            eig_residual_tol: tol,
        })
    }
}

/// Dense complex matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            for j in 0..self.cols.min(8) {
                let z = self[(i, j)];
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        if self.rows > 8 || self.cols > 8 {
            writeln!(f, " ...")?;
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds from a row-major slice; length must equal `rows * cols`.
    pub fn from_slice(rows: usize, cols: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                entries.len()
            )));
        }
        if !entries.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Contract("matrix entries must be finite".into()));
        }
        Ok(Self {
            rows,
            cols,
            data: entries.to_vec(),
        })
    }

    /// Convenience constructor from real entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        let data: Vec<Complex64> = entries.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_slice(rows, cols, &data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Matrix power by repeated squaring.
    pub fn pow(&self, mut n: u64) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Shape("pow requires a square matrix".into()));
        }
        let mut result = Self::identity(self.rows);
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                result = result.matmul(&base)?;
            }
            n >>= 1;
            if n > 0 {
                base = base.matmul(&base)?;
            }
        }
        Ok(result)
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if self.cols != v.dim() {
            return Err(Error::Shape(format!(
                "cannot apply {}x{} to vector of dim {}",
                self.rows,
                self.cols,
                v.dim()
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..self.cols {
                acc += self[(i, j)] * v.amplitudes()[j];
            }
            out[i] = acc;
        }
        Ok(StateVector::new(out))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Hermiticity defect `max |m - m†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

/// Kronecker product: entry `(i*rows_b + k, j*cols_b + l) = a[i,j] * b[k,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.rows == 0 || a.cols == 0 || b.rows == 0 || b.cols == 0 {
        return Err(Error::Shape("kron operands must be non-empty".into()));
    }
    let rows = a.rows.checked_mul(b.rows).unwrap_or(usize::MAX);
    let cols = a.cols.checked_mul(b.cols).unwrap_or(usize::MAX);
    if rows > DIM_CAP || cols > DIM_CAP {
        return Err(Error::Capacity {
            requested: rows.max(cols),
            cap: DIM_CAP,
        });
    }
    let mut out = ComplexMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            if aij.norm_sqr() == 0.0 {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// True iff `max |a†a - I| <= tol`.
pub fn is_unitary(a: &ComplexMatrix, tol: f64) -> Result<bool> {
    Ok(unitarity_defect(a)? <= tol)
}

/// Max-entry deviation of `a†a` from the identity.
pub fn unitarity_defect(a: &ComplexMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "unitarity check requires a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let gram = a.dagger().matmul(a)?;
    Ok(gram.max_abs_diff(&ComplexMatrix::identity(a.rows)))
}

/// Largest singular value of `a - b`. Symmetric, zero iff equal.
pub fn operator_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let d = a.sub(b)?;
    spectral_norm(&d)
}

/// Largest singular value, computed from the top eigenvalue of `a†a`.
pub fn spectral_norm(a: &ComplexMatrix) -> Result<f64> {
    if a.rows == 0 || a.cols == 0 {
        return Ok(0.0);
    }
    let gram = a.dagger().matmul(a)?;
    let top = crate::eig::top_eigenvalue_psd(&gram)?;
    Ok(top.max(0.0).sqrt())
}

/// Complex state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    /// Computational basis state `|index>` of the given dimension.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n < 1e-300 {
            return Err(Error::Contract("cannot normalize the zero vector".into()));
        }
        Ok(Self {
            amplitudes: self.amplitudes.iter().map(|z| z / n).collect(),
        })
    }

    /// Checks the norm is within `tol` of one.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > tol {
            return Err(Error::Normalization(format!(
                "state norm {n} deviates from 1 by more than {tol}"
            )));
        }
        Ok(())
    }

    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::Shape("inner product dimension mismatch".into()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                out.push(a * b);
            }
        }
        Self { amplitudes: out }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|z| z * s).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Shape("subtraction dimension mismatch".into()));
        }
        Ok(Self {
            amplitudes: self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Shape("addition dimension mismatch".into()));
        }
        Ok(Self {
            amplitudes: self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Outer product `|self><other|`.
    pub fn outer(&self, other: &Self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim(), other.dim());
        for i in 0..self.dim() {
            for j in 0..other.dim() {
                m[(i, j)] = self.amplitudes[i] * other.amplitudes[j].conj();
            }
        }
        m
    }
}

/// Writes the dense-matrix text format: `rows cols` on the first line, then
/// one row per line as whitespace-separated `re im` pairs.
pub fn write_matrix<W: Write>(w: &mut W, m: &ComplexMatrix) -> std::io::Result<()> {
    writeln!(w, "{} {}", m.rows(), m.cols())?;
    for i in 0..m.rows() {
        let mut line = String::new();
        for j in 0..m.cols() {
            let z = m[(i, j)];
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{:.17e} {:.17e}", z.re, z.im));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Reads the dense-matrix text format. Lines beginning with `#` are skipped.
pub fn read_matrix<R: BufRead>(r: R) -> Result<ComplexMatrix> {
    let mut lines = r.lines().filter_map(|l| match l {
        Ok(s) => {
            let t = s.trim().to_string();
            if t.is_empty() || t.starts_with('#') {
                None
            } else {
                Some(Ok(t))
            }
        }
        Err(e) => Some(Err(e)),
    });
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty matrix file".into()))?
        .map_err(|e| Error::Format(e.to_string()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Format(format!("bad matrix header `{header}`: {e}")))?;
    if dims.len() != 2 {
        return Err(Error::Format(format!(
            "matrix header must be `rows cols`, got `{header}`"
        )));
    }
    let (rows, cols) = (dims[0], dims[1]);
    if rows > DIM_CAP || cols > DIM_CAP {
        return Err(Error::Capacity {
            requested: rows.max(cols),
            cap: DIM_CAP,
        });
    }
    let mut data = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let line = lines
            .next()
            .ok_or_else(|| Error::Format(format!("matrix file ended at row {i} of {rows}")))?
            .map_err(|e| Error::Format(e.to_string()))?;
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("bad number in matrix row {i}: {e}")))?;
        if nums.len() != 2 * cols {
            return Err(Error::Format(format!(
                "matrix row {i} has {} numbers, expected {}",
                nums.len(),
                2 * cols
            )));
        }
        for pair in nums.chunks(2) {
            data.push(Complex64::new(pair[0], pair[1]));
        }
    }
    ComplexMatrix::from_slice(rows, cols, &data)
}

/// Pauli matrices, used by constructors and tests alike.
pub mod pauli {
    use super::ComplexMatrix;
    use num_complex::Complex64;

    pub fn i2() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, 0.0),
            ],
        )
        .unwrap()
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
    }
}
