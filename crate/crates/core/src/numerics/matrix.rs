//! Row-major dense matrix of `f64` values.
//!
//! Deliberately small: the algorithms in this crate only need dense
//! products, transposed products, norms, and a handful of row/column
//! helpers, on matrices whose short side is the anchor count.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries. Rejects a size mismatch and
    /// any non-finite entry; no NaN/Inf is admitted into public operations.
    pub fn from_vec(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::shape(
                "DenseMatrix::from_vec",
                format!("{} entries", rows * cols),
                format!("{}", entries.len()),
            ));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("DenseMatrix::from_vec"));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::shape(
                "DenseMatrix::from_rows",
                format!("rows of length {c}"),
                "ragged rows".to_string(),
            ));
        }
        Self::from_vec(r, c, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = 1.0;
        }
        m
    }

    /// Constant matrix with every entry equal to `value`.
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            entries: vec![value; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.entries[j * self.rows + i] = self.entries[i * self.cols + j];
            }
        }
        out
    }

    /// `self * other`.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::shape(
                "matmul",
                format!("inner dimension {}", self.cols),
                format!("{}", other.rows),
            ));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = i * other.cols;
            for k in 0..self.cols {
                let a = self.entries[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let other_row = k * other.cols;
                for j in 0..other.cols {
                    out.entries[out_row + j] += a * other.entries[other_row + j];
                }
            }
        }
        Ok(out)
    }

    /// `self^T * other`, without materializing the transpose.
    pub fn transposed_matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows {
            return Err(Error::shape(
                "transposed_matmul",
                format!("inner dimension {}", self.rows),
                format!("{}", other.rows),
            ));
        }
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let self_row = k * self.cols;
            let other_row = k * other.cols;
            for i in 0..self.cols {
                let a = self.entries[self_row + i];
                if a == 0.0 {
                    continue;
                }
                let out_row = i * other.cols;
                for j in 0..other.cols {
                    out.entries[out_row + j] += a * other.entries[other_row + j];
                }
            }
        }
        Ok(out)
    }

    /// `self * other^T`, without materializing the transpose.
    pub fn matmul_transposed(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.cols {
            return Err(Error::shape(
                "matmul_transposed",
                format!("inner dimension {}", self.cols),
                format!("{}", other.cols),
            ));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let self_row = i * self.cols;
            for j in 0..other.rows {
                let other_row = j * other.cols;
                let mut acc = 0.0;
                for k in 0..self.cols {
                    acc += self.entries[self_row + k] * other.entries[other_row + k];
                }
                out.entries[i * other.rows + j] = acc;
            }
        }
        Ok(out)
    }

    pub fn scale(&self, factor: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &DenseMatrix,
        context: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<DenseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::shape(
                context,
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn trace(&self) -> f64 {
        let n = self.rows.min(self.cols);
        (0..n).map(|i| self.get(i, i)).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(i)) {
                *s += v;
            }
        }
        sums
    }

    /// Sum of all entries.
    pub fn total(&self) -> f64 {
        self.entries.iter().sum()
    }

    /// Reorders columns; column `j` of `self` lands at column `dest_of[j]`.
    /// `dest_of` must be a bijection on `0..cols`.
    pub fn permute_columns(&self, dest_of: &[usize]) -> Result<DenseMatrix> {
        validate_permutation(dest_of, self.cols)?;
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, &dest) in dest_of.iter().enumerate() {
                out.entries[i * self.cols + dest] = self.entries[i * self.cols + j];
            }
        }
        Ok(out)
    }

    /// Reorders rows; row `i` of `self` lands at row `dest_of[i]`.
    pub fn permute_rows(&self, dest_of: &[usize]) -> Result<DenseMatrix> {
        validate_permutation(dest_of, self.rows)?;
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for (i, &dest) in dest_of.iter().enumerate() {
            out.row_mut_internal(dest).copy_from_slice(self.row(i));
        }
        Ok(out)
    }

    fn row_mut_internal(&mut self, i: usize) -> &mut [f64] {
        &mut self.entries[i * self.cols..(i + 1) * self.cols]
    }

    /// True when all entries are finite. Constructors already enforce this;
    /// long iterative computations re-check before handing results out.
    pub fn all_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }
}

/// Checks that `perm` is a bijection on `0..len`.
pub(crate) fn validate_permutation(perm: &[usize], len: usize) -> Result<()> {
    if perm.len() != len {
        return Err(Error::shape(
            "permutation",
            format!("length {len}"),
            format!("{}", perm.len()),
        ));
    }
    let mut seen = vec![false; len];
    for &p in perm {
        if p >= len || seen[p] {
            return Err(Error::invalid(format!(
                "not a permutation of 0..{len}: {perm:?}"
            )));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Solves `A * X = B` for symmetric positive definite `A` by Cholesky
/// factorization. `B` may have several columns.
pub(crate) fn cholesky_solve(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.rows();
    if a.cols() != n || b.rows() != n {
        return Err(Error::shape(
            "cholesky_solve",
            format!("{n}x{n} and {n}xk"),
            format!("{}x{} and {}x{}", a.rows(), a.cols(), b.rows(), b.cols()),
        ));
    }
    // Lower-triangular factor, row-major.
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::invalid(
                        "cholesky_solve: matrix is not positive definite".to_string(),
                    ));
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    let k = b.cols();
    let mut x = DenseMatrix::zeros(n, k);
    for c in 0..k {
        // Forward substitution L y = b.
        let mut y = vec![0.0f64; n];
        for i in 0..n {
            let mut sum = b.get(i, c);
            for j in 0..i {
                sum -= l[i * n + j] * y[j];
            }
            y[i] = sum / l[i * n + i];
        }
        // Back substitution L^T x = y.
        for i in (0..n).rev() {
            let mut sum = y[i];
            for j in i + 1..n {
                sum -= l[j * n + i] * x.get(j, c);
            }
            x.set(i, c, sum / l[i * n + i]);
        }
    }
    Ok(x)
}

/// Extends `basis` (orthonormal rows of length `dim`) to `target` rows by
/// Gram-Schmidt over the standard basis vectors. Deterministic.
pub(crate) fn complete_orthonormal_rows(basis: &mut Vec<Vec<f64>>, dim: usize, target: usize) {
    let mut candidate = 0usize;
    while basis.len() < target && candidate < dim {
        let mut v = vec![0.0f64; dim];
        v[candidate] = 1.0;
        candidate += 1;
        for b in basis.iter() {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= dot * y;
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for x in v.iter_mut() {
                *x /= norm;
            }
            basis.push(v);
        }
    }
    assert!(
        basis.len() >= target,
        "cannot complete {} orthonormal vectors in dimension {dim}",
        target
    );
}
