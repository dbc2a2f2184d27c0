use crate::error::{Error, Result};

/// Dense real matrix stored column-major.
///
/// Column-major storage makes atom access (`col`) a contiguous slice, which
/// is the hot path for every pursuit algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from column-major entries.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        let mut cm = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                cm[j * rows + i] = data[i * cols + j];
            }
        }
        Self::from_col_major(rows, cols, cm)
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Dimension("columns have unequal lengths".into()));
        }
        Self::from_col_major(rows, cols, columns.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be at least 1x1");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        let r = self.rows;
        &mut self.data[j * r..(j + 1) * r]
    }

    /// Column-major backing slice.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.data.len());
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.push(self.get(i, j));
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// `A * x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "mul_vec: length mismatch");
        let mut out = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                axpy(xj, self.col(j), &mut out);
            }
        }
        out
    }

    /// `A^T * x`
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "tr_mul_vec: length mismatch");
        (0..self.cols).map(|j| dot(self.col(j), x)).collect()
    }

    /// `A * B`
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul: inner dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let dst = out.col_mut(j);
            for k in 0..self.cols {
                let b = other.get(k, j);
                if b != 0.0 {
                    axpy(b, &self.data[k * self.rows..(k + 1) * self.rows], dst);
                }
            }
        }
        out
    }

    /// `A^T * A`
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = dot(self.col(i), self.col(j));
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        g
    }

    pub fn select_columns(&self, idx: &[usize]) -> Self {
        assert!(!idx.is_empty(), "select_columns: empty selection");
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        Self {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    /// `[self | other]`
    pub fn hstack(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::Dimension(format!(
                "hstack: {} rows vs {} rows",
                self.rows, other.rows
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            rows: self.rows,
            cols: self.cols + other.cols,
            data,
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn column_norms(&self) -> Vec<f64> {
        (0..self.cols).map(|j| norm2(self.col(j))).collect()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_and_column_major_agree() {
        let a = DenseMatrix::from_row_major(2, 3, &[1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(a.get(0, 2), 3.0);
        assert_eq!(a.get(1, 0), 4.0);
        assert_eq!(a.col(1), &[2.0, 5.0]);
        assert_eq!(a.to_row_major(), vec![1., 2., 3., 4., 5., 6.]);
        assert_eq!(a.transpose().get(2, 1), 6.0);
    }

    #[test]
    fn rejects_bad_shapes_and_non_finite() {
        assert!(DenseMatrix::from_col_major(0, 1, vec![]).is_err());
        assert!(DenseMatrix::from_col_major(2, 2, vec![1.0; 3]).is_err());
        assert!(matches!(
            DenseMatrix::from_col_major(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn products() {
        let a = DenseMatrix::from_row_major(2, 2, &[1., 2., 3., 4.]).unwrap();
        assert_eq!(a.mul_vec(&[1., 1.]), vec![3., 7.]);
        assert_eq!(a.tr_mul_vec(&[1., 1.]), vec![4., 6.]);
        let aa = a.matmul(&a);
        assert_eq!(aa.to_row_major(), vec![7., 10., 15., 22.]);
        assert_eq!(a.gram(), a.transpose().matmul(&a));
    }
}
