//! Compressed sparse row storage and the handful of kernels the integrators
//! need. Dense operands are column-major slices, matching `nalgebra`.

use alloc::vec;
use alloc::vec::Vec;

use crate::hilbert::{CMatrix, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    /// Keeps every entry with modulus above `threshold`.
    pub fn from_dense(m: &CMatrix, threshold: f64) -> Self {
        let (n_rows, n_cols) = m.shape();
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..n_rows {
            for j in 0..n_cols {
                let v = m[(i, j)];
                if v.norm() > threshold {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Builds from unsorted triplets; duplicates are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, C64)]) -> Self {
        let mut sorted: Vec<(usize, usize, C64)> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(sorted.len());
        let mut values: Vec<C64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            debug_assert!(r < n_rows && c < n_cols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    /// Iterates `(row, col, value)` in row order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col_idx[k], self.values[k]))
        })
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.iter() {
            m[(i, j)] += v;
        }
        m
    }

    pub fn adjoint(&self) -> CsrMatrix {
        let triplets: Vec<_> = self.iter().map(|(i, j, v)| (j, i, v.conj())).collect();
        CsrMatrix::from_triplets(self.n_cols, self.n_rows, &triplets)
    }

    /// Sparse-sparse product `self * rhs`.
    pub fn matmul(&self, rhs: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.n_cols, rhs.n_rows);
        let mut triplets = Vec::new();
        for (i, k, a) in self.iter() {
            for p in rhs.row_ptr[k]..rhs.row_ptr[k + 1] {
                triplets.push((i, rhs.col_idx[p], a * rhs.values[p]));
            }
        }
        CsrMatrix::from_triplets(self.n_rows, rhs.n_cols, &triplets)
    }

    /// Largest absolute row sum, an upper bound on the spectral radius.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.n_rows)
            .map(|i| {
                self.values[self.row_ptr[i]..self.row_ptr[i + 1]]
                    .iter()
                    .map(|v| v.norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// `y = A x` for a single vector.
    #[inline]
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        for i in 0..self.n_rows {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
    }

    /// `Y = A X` where `X` and `Y` are column-major with `n_cols_x` columns.
    pub fn mul_dense(&self, x: &[C64], y: &mut [C64], n_cols_x: usize) {
        let rows_x = self.n_cols;
        for c in 0..n_cols_x {
            let xc = &x[c * rows_x..(c + 1) * rows_x];
            let yc = &mut y[c * self.n_rows..(c + 1) * self.n_rows];
            self.matvec(xc, yc);
        }
    }

    /// Returns the entries as a weighted partial permutation when every row
    /// and every column holds at most one nonzero.
    pub fn as_monomial(&self) -> Option<Vec<(usize, usize, C64)>> {
        let mut col_used = vec![false; self.n_cols];
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.n_rows {
            let span = self.row_ptr[i + 1] - self.row_ptr[i];
            if span > 1 {
                return None;
            }
            if span == 1 {
                let k = self.row_ptr[i];
                let j = self.col_idx[k];
                if col_used[j] {
                    return None;
                }
                col_used[j] = true;
                out.push((i, j, self.values[k]));
            }
        }
        Some(out)
    }

    /// Whether the matrix only has diagonal entries.
    pub fn is_diagonal(&self) -> bool {
        self.iter().all(|(i, j, _)| i == j)
    }
}
