use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use super::{CMat, C64};

/// Compressed sparse column matrix with complex entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<C64>,
}

impl CscMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            col_ptr: vec![0; ncols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, C64::new(1.0, 0.0))))
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// explicit zeros dropped.
    pub fn from_triplets<T>(nrows: usize, ncols: usize, triplets: T) -> Self
    where
        T: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut cols: Vec<Vec<(usize, C64)>> = vec![Vec::new(); ncols];
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            cols[c].push((r, v));
        }
        Self::from_columns(nrows, cols)
    }

    fn from_columns(nrows: usize, mut cols: Vec<Vec<(usize, C64)>>) -> Self {
        let ncols = cols.len();
        let mut col_ptr = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for col in cols.iter_mut() {
            col.sort_by_key(|e| e.0);
            let mut i = 0;
            while i < col.len() {
                let r = col[i].0;
                let mut v = col[i].1;
                i += 1;
                while i < col.len() && col[i].0 == r {
                    v += col[i].1;
                    i += 1;
                }
                if v != C64::new(0.0, 0.0) {
                    row_idx.push(r);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn from_dense(a: &CMat) -> Self {
        let (n, m) = a.shape();
        let trip = (0..m).flat_map(|j| (0..n).map(move |i| (i, j))).filter_map(|(i, j)| {
            let v = a[(i, j)];
            (v != C64::new(0.0, 0.0)).then_some((i, j, v))
        });
        Self::from_triplets(n, m, trip)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of column `j` as `(row, value)`.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (s, e) = (self.col_ptr[j], self.col_ptr[j + 1]);
        self.row_idx[s..e]
            .iter()
            .copied()
            .zip(self.values[s..e].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.ncols).flat_map(move |j| self.column(j).map(move |(i, v)| (i, j, v)))
    }

    pub fn to_dense(&self) -> CMat {
        let mut a = CMat::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            a[(i, j)] += v;
        }
        a
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.ncols,
            self.nrows,
            self.triplets().map(|(i, j, v)| (j, i, v.conj())),
        )
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `α A + β B`.
    pub fn add(&self, alpha: C64, other: &Self, beta: C64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        Self::from_triplets(
            self.nrows,
            self.ncols,
            self.triplets()
                .map(|(i, j, v)| (i, j, v * alpha))
                .chain(other.triplets().map(|(i, j, v)| (i, j, v * beta))),
        )
    }

    /// Sparse × sparse product.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut acc = vec![C64::new(0.0, 0.0); self.nrows];
        let mut mark = vec![usize::MAX; self.nrows];
        let mut cols = Vec::with_capacity(other.ncols);
        for j in 0..other.ncols {
            let mut touched = Vec::new();
            for (k, b) in other.column(j) {
                for (i, a) in self.column(k) {
                    if mark[i] != j {
                        mark[i] = j;
                        acc[i] = C64::new(0.0, 0.0);
                        touched.push(i);
                    }
                    acc[i] += a * b;
                }
            }
            cols.push(touched.into_iter().map(|i| (i, acc[i])).collect::<Vec<_>>());
        }
        Self::from_columns(self.nrows, cols)
    }

    /// Sparse × dense product.
    pub fn mul_dense(&self, x: &CMat) -> CMat {
        assert_eq!(self.ncols, x.nrows());
        let mut y = CMat::zeros(self.nrows, x.ncols());
        for c in 0..x.ncols() {
            for j in 0..self.ncols {
                let xj = x[(j, c)];
                if xj == C64::new(0.0, 0.0) {
                    continue;
                }
                for (i, v) in self.column(j) {
                    y[(i, c)] += v * xj;
                }
            }
        }
        y
    }

    /// `Aᴴ x` without forming the adjoint.
    pub fn adjoint_mul_dense(&self, x: &CMat) -> CMat {
        assert_eq!(self.nrows, x.nrows());
        let mut y = CMat::zeros(self.ncols, x.ncols());
        for c in 0..x.ncols() {
            for j in 0..self.ncols {
                let mut s = C64::new(0.0, 0.0);
                for (i, v) in self.column(j) {
                    s += v.conj() * x[(i, c)];
                }
                y[(j, c)] = s;
            }
        }
        y
    }

    pub fn frobenius(&self) -> f64 {
        Float::sqrt(self.values.iter().map(|v| v.norm_sqr()).sum::<f64>())
    }

    /// Largest `|i − j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        self.triplets().map(|(i, j, _)| i.abs_diff(j)).max().unwrap_or(0)
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }
}
