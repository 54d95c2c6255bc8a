use alloc::vec;
use alloc::vec::Vec;

use super::{CMat, CscMatrix, C64};
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Left-looking sparse LU with partial pivoting, `P A = L U`.
///
/// Columns are processed in natural order; fill stays inside the band for
/// banded input. `L` is stored by columns with original row indices, `U` by
/// columns with pivot-step indices.
#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    l_cols: Vec<Vec<(usize, C64)>>,
    u_cols: Vec<Vec<(usize, C64)>>,
    u_diag: Vec<C64>,
    // pinv[row] = pivot step of that row; prow[step] = row
    pinv: Vec<usize>,
    prow: Vec<usize>,
}

impl SparseLu {
    pub fn new(a: &CscMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(alloc::format!(
                "LU of a non-square {}×{} matrix",
                n,
                a.ncols()
            )));
        }
        let zero = C64::new(0.0, 0.0);
        let mut x = vec![zero; n];
        let mut mark = vec![NONE; n];
        let mut pinv = vec![NONE; n];
        let mut prow = vec![NONE; n];
        let mut l_cols: Vec<Vec<(usize, C64)>> = Vec::with_capacity(n);
        let mut u_cols: Vec<Vec<(usize, C64)>> = Vec::with_capacity(n);
        let mut u_diag = Vec::with_capacity(n);
        let mut touched: Vec<usize> = Vec::new();

        for j in 0..n {
            touched.clear();
            for (i, v) in a.column(j) {
                if mark[i] != j {
                    mark[i] = j;
                    touched.push(i);
                    x[i] = zero;
                }
                x[i] += v;
            }
            let mut ucol = Vec::new();
            for k in 0..j {
                let r = prow[k];
                if mark[r] != j {
                    continue;
                }
                let xr = x[r];
                if xr == zero {
                    continue;
                }
                ucol.push((k, xr));
                for &(i, l) in &l_cols[k] {
                    if mark[i] != j {
                        mark[i] = j;
                        touched.push(i);
                        x[i] = zero;
                    }
                    x[i] -= l * xr;
                }
            }
            let mut piv = NONE;
            let mut best = 0.0;
            for &i in &touched {
                if pinv[i] == NONE {
                    let v = x[i].norm();
                    if v > best {
                        best = v;
                        piv = i;
                    }
                }
            }
            if piv == NONE || best == 0.0 {
                return Err(Error::Singular(alloc::format!(
                    "structurally or numerically zero pivot in column {j}"
                )));
            }
            let d = x[piv];
            pinv[piv] = j;
            prow[j] = piv;
            let inv = C64::new(1.0, 0.0) / d;
            let lcol: Vec<(usize, C64)> = touched
                .iter()
                .filter(|&&i| pinv[i] == NONE && x[i] != zero)
                .map(|&i| (i, x[i] * inv))
                .collect();
            l_cols.push(lcol);
            u_cols.push(ucol);
            u_diag.push(d);
        }
        Ok(Self {
            n,
            l_cols,
            u_cols,
            u_diag,
            pinv,
            prow,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn fill(&self) -> usize {
        self.l_cols.iter().map(Vec::len).sum::<usize>() + self.u_cols.iter().map(Vec::len).sum::<usize>() + self.n
    }

    pub fn solve(&self, b: &CMat) -> CMat {
        let n = self.n;
        let mut out = CMat::zeros(n, b.ncols());
        for c in 0..b.ncols() {
            // y in pivot-step space
            let mut y: Vec<C64> = (0..n).map(|k| b[(self.prow[k], c)]).collect();
            for k in 0..n {
                let yk = y[k];
                if yk == C64::new(0.0, 0.0) {
                    continue;
                }
                for &(i, l) in &self.l_cols[k] {
                    y[self.pinv[i]] -= l * yk;
                }
            }
            for j in (0..n).rev() {
                y[j] /= self.u_diag[j];
                let yj = y[j];
                for &(k, u) in &self.u_cols[j] {
                    y[k] -= u * yj;
                }
            }
            // U x = y with x in column order: columns were not permuted
            for j in 0..n {
                out[(j, c)] = y[j];
            }
        }
        out
    }

    pub fn solve_adjoint(&self, b: &CMat) -> CMat {
        let n = self.n;
        let mut out = CMat::zeros(n, b.ncols());
        for c in 0..b.ncols() {
            let mut w: Vec<C64> = (0..n).map(|j| b[(j, c)]).collect();
            // Uᴴ w = b
            for j in 0..n {
                let mut s = w[j];
                for &(k, u) in &self.u_cols[j] {
                    s -= u.conj() * w[k];
                }
                w[j] = s / self.u_diag[j].conj();
            }
            // L̃ᴴ z = w
            for k in (0..n).rev() {
                let mut s = w[k];
                for &(i, l) in &self.l_cols[k] {
                    s -= l.conj() * w[self.pinv[i]];
                }
                w[k] = s;
            }
            for k in 0..n {
                out[(self.prow[k], c)] = w[k];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius;

    fn banded(n: usize, bw: usize) -> CscMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            for j in i.saturating_sub(bw)..(i + bw + 1).min(n) {
                let v = C64::new(((i * 5 + j * 3) % 7) as f64 - 3.0, ((i + 2 * j) % 3) as f64 - 1.0);
                t.push((i, j, v));
            }
        }
        CscMatrix::from_triplets(n, n, t)
    }

    #[test]
    fn matches_dense_solve() {
        let a = banded(40, 3);
        let lu = SparseLu::new(&a).unwrap();
        let b = CMat::from_fn(40, 2, |i, j| C64::new(i as f64, j as f64 + 1.0));
        let x = lu.solve(&b);
        let ad = a.to_dense();
        assert!(frobenius(&(&ad * &x - &b)) < 1e-9 * frobenius(&b));
        let y = lu.solve_adjoint(&b);
        assert!(frobenius(&(ad.adjoint() * &y - &b)) < 1e-9 * frobenius(&b));
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let one = C64::new(1.0, 0.0);
        let a = CscMatrix::from_triplets(2, 2, [(0, 1, one), (1, 0, -one)]);
        let lu = SparseLu::new(&a).unwrap();
        let b = CMat::from_column_slice(2, 1, &[C64::new(3.0, 0.0), C64::new(4.0, 0.0)]);
        let x = lu.solve(&b);
        assert!((x[(0, 0)] + C64::new(4.0, 0.0)).norm() < 1e-15);
        assert!((x[(1, 0)] - C64::new(3.0, 0.0)).norm() < 1e-15);
    }
}
