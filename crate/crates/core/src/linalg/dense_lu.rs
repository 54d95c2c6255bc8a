use alloc::vec::Vec;

use super::{CMat, C64};
use crate::error::{Error, Result};

/// LU factorization with partial pivoting, `P A = L U`, supporting solves
/// with both `A` and `Aᴴ` from one factorization.
#[derive(Debug, Clone)]
pub struct DenseLu {
    lu: CMat,
    // perm[k] = original row that ended up in position k
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn new(mut a: CMat) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(alloc::format!(
                "LU of a non-square {}×{} matrix",
                n,
                a.ncols()
            )));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        for k in 0..n {
            let mut p = k;
            let mut best = a[(k, k)].norm();
            for i in k + 1..n {
                let v = a[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || best <= f64::MIN_POSITIVE * scale.max(1.0) {
                return Err(Error::Singular(alloc::format!("zero pivot in column {k}")));
            }
            if p != k {
                a.swap_rows(p, k);
                perm.swap(p, k);
            }
            let pivot = a[(k, k)];
            let inv = C64::new(1.0, 0.0) / pivot;
            for i in k + 1..n {
                a[(i, k)] *= inv;
            }
            let data = a.as_mut_slice();
            let (head, tail) = data.split_at_mut((k + 1) * n);
            let col_k = &head[k * n..];
            for col_j in tail.chunks_exact_mut(n) {
                let ukj = col_j[k];
                if ukj == C64::new(0.0, 0.0) {
                    continue;
                }
                for i in k + 1..n {
                    col_j[i] -= col_k[i] * ukj;
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Solves `A X = B`.
    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &CMat) -> CMat {
        let n = self.dim();
        let mut x = CMat::zeros(n, b.ncols());
        for j in 0..b.ncols() {
            let mut y: Vec<C64> = (0..n).map(|k| b[(self.perm[k], j)]).collect();
            for k in 0..n {
                let yk = y[k];
                if yk != C64::new(0.0, 0.0) {
                    for i in k + 1..n {
                        y[i] -= self.lu[(i, k)] * yk;
                    }
                }
            }
            for k in (0..n).rev() {
                y[k] /= self.lu[(k, k)];
                let yk = y[k];
                for i in 0..k {
                    y[i] -= self.lu[(i, k)] * yk;
                }
            }
            for i in 0..n {
                x[(i, j)] = y[i];
            }
        }
        x
    }

    /// Solves `Aᴴ X = B`.
    #[allow(clippy::needless_range_loop)]
    pub fn solve_adjoint(&self, b: &CMat) -> CMat {
        let n = self.dim();
        let mut x = CMat::zeros(n, b.ncols());
        for j in 0..b.ncols() {
            let mut w: Vec<C64> = (0..n).map(|i| b[(i, j)]).collect();
            // Uᴴ w = b
            for k in 0..n {
                let mut s = w[k];
                for i in 0..k {
                    s -= self.lu[(i, k)].conj() * w[i];
                }
                w[k] = s / self.lu[(k, k)].conj();
            }
            // Lᴴ z = w
            for k in (0..n).rev() {
                let mut s = w[k];
                for i in k + 1..n {
                    s -= self.lu[(i, k)].conj() * w[i];
                }
                w[k] = s;
            }
            for k in 0..n {
                x[(self.perm[k], j)] = w[k];
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius;

    fn sample(n: usize) -> CMat {
        CMat::from_fn(n, n, |i, j| {
            C64::new(((i * 7 + j * 13) % 11) as f64 - 5.0, ((i * 3 + j * 5) % 7) as f64 - 3.0)
        })
    }

    #[test]
    fn solves_match_both_ways() {
        let a = sample(9);
        let lu = DenseLu::new(a.clone()).unwrap();
        let b = CMat::from_fn(9, 2, |i, j| C64::new(i as f64 - j as f64, 1.0));
        let x = lu.solve(&b);
        assert!(frobenius(&(&a * &x - &b)) < 1e-10 * frobenius(&b));
        let y = lu.solve_adjoint(&b);
        assert!(frobenius(&(a.adjoint() * &y - &b)) < 1e-10 * frobenius(&b));
    }

    #[test]
    fn singular_is_reported() {
        let a = CMat::zeros(3, 3);
        assert!(matches!(DenseLu::new(a), Err(Error::Singular(_))));
    }
}
