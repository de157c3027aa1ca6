//! Dense real matrices, the thin SVD and the matrix norms used throughout the crate.
//!
//! Storage is row-major. The text format is
//!
//! ```text
//! rows cols
//! a11 a12 ... a1c
//! ...
//! ar1 ar2 ... arc
//! ```
//!
//! with every entry written using 17 significant digits so that a write/read
//! round trip is lossless.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};
use std::path::Path;

use crate::error::{Error, Result};

/// Singular values below this fraction of `sigma_1` count as zero when reporting rank.
pub const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, rejecting wrong lengths and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(Error::EntryCount {
                rows,
                cols,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
                value: data[pos],
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != n_cols {
                return Err(Error::EntryCount {
                    rows: n_rows,
                    cols: n_cols,
                    got: data.len() + r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(n_rows, n_cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Outer product `u v^T`.
    pub fn outer(u: &[f64], v: &[f64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, k)]).collect()
    }

    pub fn set_column(&mut self, k: usize, values: &[f64]) {
        debug_assert_eq!(values.len(), self.rows);
        for (i, v) in values.iter().enumerate() {
            self[(i, k)] = *v;
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column_norm(&self, k: usize) -> f64 {
        (0..self.rows)
            .map(|i| self[(i, k)] * self[(i, k)])
            .sum::<f64>()
            .sqrt()
    }

    pub fn column_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.cols];
        for row in self.data.chunks_exact(self.cols) {
            for (acc, v) in sq.iter_mut().zip(row) {
                *acc += v * v;
            }
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination. Panics if the shapes differ.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.dims(), other.dims(), "zip_map on mismatched shapes");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `self + c * other`, in place.
    pub fn axpy(&mut self, c: f64, other: &Self) {
        assert_eq!(self.dims(), other.dims(), "axpy on mismatched shapes");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    /// Trace inner product `tr(self^T other)`. Panics if the shapes differ.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.dims(), other.dims(), "inner product on mismatched shapes");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "matmul",
                argument: "rhs",
                expected: (self.cols, other.cols),
                found: other.dims(),
            });
        }
        let prod = self.to_faer() * other.to_faer();
        Ok(Self::from_faer(prod.as_ref()))
    }

    /// Checks that `self` has the `expected` shape.
    pub fn expect_dims(
        &self,
        expected: (usize, usize),
        context: &'static str,
        argument: &'static str,
    ) -> Result<()> {
        if self.dims() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                context,
                argument,
                expected,
                found: self.dims(),
            })
        }
    }

    pub(crate) fn to_faer(&self) -> faer::Mat<f64> {
        faer::Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }

    pub(crate) fn from_faer(m: faer::MatRef<'_, f64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m.read(i, j))
    }

    /// Serializes to the text format described in the module docs.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.data.len() * 25 + 16);
        let _ = writeln!(out, "{} {}", self.rows, self.cols);
        for row in self.data.chunks_exact(self.cols) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::read_from(text.as_bytes())
    }

    pub fn read_from(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let (header_no, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing `rows cols` header".into(),
        })?;
        let header = header?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: header_no + 1,
                message: format!("bad header `{header}`: {e}"),
            })?;
        let &[rows, cols] = dims.as_slice() else {
            return Err(Error::Parse {
                line: header_no + 1,
                message: format!("header must hold exactly two integers, got `{header}`"),
            });
        };
        let mut data = Vec::with_capacity(rows * cols);
        let mut seen_rows = 0;
        for (no, line) in lines {
            let line = line?;
            let before = data.len();
            for tok in line.split_whitespace() {
                let v = tok.parse::<f64>().map_err(|e| Error::Parse {
                    line: no + 1,
                    message: format!("bad number `{tok}`: {e}"),
                })?;
                data.push(v);
            }
            if data.len() - before != cols {
                return Err(Error::Parse {
                    line: no + 1,
                    message: format!("expected {cols} values, found {}", data.len() - before),
                });
            }
            seen_rows += 1;
        }
        if seen_rows != rows {
            return Err(Error::Parse {
                line: header_no + 1,
                message: format!("header declares {rows} rows, found {seen_rows}"),
            });
        }
        Self::new(rows, cols, data)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(self.to_text().as_bytes())?;
        f.flush()?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &DenseMatrix {
    type Output = DenseMatrix;

    fn add(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &DenseMatrix {
    type Output = DenseMatrix;

    fn sub(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Neg for &DenseMatrix {
    type Output = DenseMatrix;

    fn neg(self) -> DenseMatrix {
        self.map(|v| -v)
    }
}

impl Mul<f64> for &DenseMatrix {
    type Output = DenseMatrix;

    fn mul(self, c: f64) -> DenseMatrix {
        self.scale(c)
    }
}

/// Thin SVD `M = U diag(sigma) V^T` with nonincreasing singular values.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    pub left: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub right: DenseMatrix,
}

impl SvdFactors {
    /// `U diag(f(sigma)) V^T`, skipping components that map to zero.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let (m, n) = (self.left.rows(), self.right.rows());
        let mut out = DenseMatrix::zeros(m, n);
        for (k, &s) in self.singular_values.iter().enumerate() {
            let w = f(s);
            if w == 0.0 {
                continue;
            }
            let u = self.left.column(k);
            let v = self.right.column(k);
            for (i, ui) in u.iter().enumerate() {
                let a = w * ui;
                if a == 0.0 {
                    continue;
                }
                let row = &mut out.as_mut_slice()[i * n..(i + 1) * n];
                for (o, vj) in row.iter_mut().zip(&v) {
                    *o += a * vj;
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.reconstruct_with(|s| s)
    }

    /// Numerical rank with the `RANK_TOLERANCE * sigma_1` cutoff.
    pub fn rank(&self) -> usize {
        let top = self.singular_values.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0;
        }
        self.singular_values
            .iter()
            .filter(|&&s| s > RANK_TOLERANCE * top)
            .count()
    }
}

pub fn svd(m: &DenseMatrix) -> Result<SvdFactors> {
    let (rows, cols) = m.dims();
    if !m.is_finite() {
        return Err(Error::SvdFailed { rows, cols });
    }
    let k = rows.min(cols);
    let dec = m.to_faer().thin_svd();
    let s = dec.s_diagonal();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s.read(b).total_cmp(&s.read(a)));

    let u = dec.u();
    let v = dec.v();
    let left = DenseMatrix::from_fn(rows, k, |i, j| u.read(i, order[j]));
    let right = DenseMatrix::from_fn(cols, k, |i, j| v.read(i, order[j]));
    let singular_values: Vec<f64> = order.iter().map(|&j| s.read(j).max(0.0)).collect();
    if !(left.is_finite() && right.is_finite() && singular_values.iter().all(|v| v.is_finite())) {
        return Err(Error::SvdFailed { rows, cols });
    }
    Ok(SvdFactors {
        left,
        singular_values,
        right,
    })
}

pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    let (rows, cols) = m.dims();
    if !m.is_finite() {
        return Err(Error::SvdFailed { rows, cols });
    }
    let mut s = m.to_faer().singular_values();
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::SvdFailed { rows, cols });
    }
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

pub fn rank(m: &DenseMatrix) -> Result<usize> {
    let s = singular_values(m)?;
    let top = s.first().copied().unwrap_or(0.0);
    Ok(if top == 0.0 {
        0
    } else {
        s.iter().filter(|&&v| v > RANK_TOLERANCE * top).count()
    })
}

/// Eigendecomposition of a symmetric matrix: eigenvalues in nondecreasing
/// order and the matching orthonormal eigenvectors as columns. Only the lower
/// triangle is read.
pub fn symmetric_eigen(m: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let (rows, cols) = m.dims();
    if rows != cols || !m.is_finite() {
        return Err(Error::SvdFailed { rows, cols });
    }
    let dec = m.to_faer().selfadjoint_eigendecomposition(faer::Side::Lower);
    let s = dec.s().column_vector();
    let u = dec.u();
    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by(|&a, &b| s.read(a).total_cmp(&s.read(b)));
    let values: Vec<f64> = order.iter().map(|&j| s.read(j)).collect();
    let vectors = DenseMatrix::from_fn(rows, rows, |i, j| u.read(i, order[j]));
    if !(vectors.is_finite() && values.iter().all(|v| v.is_finite())) {
        return Err(Error::SvdFailed { rows, cols });
    }
    Ok((values, vectors))
}

/// Orthonormal basis of the column space of a tall full-rank matrix (thin QR),
/// with signs chosen so that `R` has a nonnegative diagonal.
pub fn orthonormal_columns(m: &DenseMatrix) -> DenseMatrix {
    let (rows, cols) = m.dims();
    assert!(rows >= cols, "orthonormal_columns needs a tall matrix");
    let qr = m.to_faer().qr();
    let q = qr.compute_thin_q();
    let r = qr.compute_thin_r();
    DenseMatrix::from_fn(rows, cols, |i, j| {
        let sign = if r.read(j, j) < 0.0 { -1.0 } else { 1.0 };
        sign * q.read(i, j)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NormKind {
    Frobenius,
    Nuclear,
    Operator,
    ElementwiseL1,
    ElementwiseLinf,
    /// Sum of column l2 norms.
    Col21,
    /// Largest column l2 norm.
    Col2Inf,
}

impl NormKind {
    pub const ALL: [NormKind; 7] = [
        NormKind::Frobenius,
        NormKind::Nuclear,
        NormKind::Operator,
        NormKind::ElementwiseL1,
        NormKind::ElementwiseLinf,
        NormKind::Col21,
        NormKind::Col2Inf,
    ];
}

pub fn norm(m: &DenseMatrix, kind: NormKind) -> f64 {
    match kind {
        NormKind::Frobenius => m.frobenius_norm(),
        NormKind::Nuclear => spectral(m).iter().sum(),
        NormKind::Operator => spectral(m).first().copied().unwrap_or(0.0),
        NormKind::ElementwiseL1 => m.as_slice().iter().map(|v| v.abs()).sum(),
        NormKind::ElementwiseLinf => m.max_abs(),
        NormKind::Col21 => m.column_norms().iter().sum(),
        NormKind::Col2Inf => m.column_norms().iter().fold(0.0, |a, &b| a.max(b)),
    }
}

// Matrices reaching `norm` are finite by construction, so the SVD cannot fail
// on bad input; a genuine non-convergence is a bug worth a panic.
fn spectral(m: &DenseMatrix) -> Vec<f64> {
    singular_values(m).unwrap_or_else(|e| panic!("spectral norm: {e}"))
}

/// Squared Frobenius error summed over both components.
pub fn decomposition_error(
    theta_hat: &DenseMatrix,
    gamma_hat: &DenseMatrix,
    theta_star: &DenseMatrix,
    gamma_star: &DenseMatrix,
) -> Result<f64> {
    let dims = theta_star.dims();
    theta_hat.expect_dims(dims, "decomposition_error", "theta_hat")?;
    gamma_hat.expect_dims(dims, "decomposition_error", "gamma_hat")?;
    gamma_star.expect_dims(dims, "decomposition_error", "gamma_star")?;
    Ok((theta_hat - theta_star).frobenius_norm_sq() + (gamma_hat - gamma_star).frobenius_norm_sq())
}
