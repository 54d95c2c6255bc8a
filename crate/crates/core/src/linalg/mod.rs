//! Dense and sparse complex linear algebra used throughout the crate.

mod arnoldi;
mod dense_lu;
mod sparse;
mod sparse_lu;

pub use arnoldi::{arnoldi_ritz, ArnoldiOp};
pub use dense_lu::DenseLu;
pub use sparse::CscMatrix;
pub use sparse_lu::SparseLu;

use alloc::format;
use alloc::vec::Vec;
use num_traits::Float;

use nalgebra::linalg::Schur;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;
pub type CMat = DMatrix<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn frobenius(a: &CMat) -> f64 {
    Float::sqrt(a.iter().map(|z| z.norm_sqr()).sum::<f64>())
}

/// Largest singular value.
pub fn norm2(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0f64, |m, &s| m.max(s))
}

pub fn is_real(a: &CMat) -> bool {
    a.iter().all(|z| z.im == 0.0)
}

pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * c(0.5)
}

pub fn skew_part(a: &CMat) -> CMat {
    (a - a.adjoint()) * c(0.5)
}

/// Real matrix lifted to complex.
pub fn from_real(a: &DMatrix<f64>) -> CMat {
    a.map(c)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = hermitian_part(h).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(h: &CMat) -> Vec<f64> {
    if h.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = hermitian_part(h).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Smallest eigenvalue of a Hermitian matrix together with a unit eigenvector.
pub fn hermitian_min_eigenpair(h: &CMat) -> (f64, DVector<C64>) {
    let (vals, vecs) = hermitian_eigen(h);
    (vals[0], vecs.column(0).into_owned())
}

/// Eigenvalues of a general complex matrix via the complex Schur form.
pub fn eigenvalues(a: &CMat) -> Result<Vec<C64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(alloc::vec![a[(0, 0)]]);
    }
    if is_real(a) {
        // real Schur form is several times faster than the complex one
        let re = a.map(|z| z.re);
        let schur = Schur::try_new(re, f64::EPSILON, 100 * n)
            .ok_or_else(|| Error::NoConvergence(format!("Schur form of a {n}×{n} matrix")))?;
        return Ok(schur.complex_eigenvalues().iter().copied().collect());
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 100 * n)
        .ok_or_else(|| Error::NoConvergence(format!("Schur form of a {n}×{n} matrix")))?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// Largest and second largest singular value with the dominant singular pair
/// `G v = σ u`.
pub struct TopSingular {
    pub sigma: f64,
    pub second: f64,
    pub u: DVector<C64>,
    pub v: DVector<C64>,
}

pub fn top_singular(g: &CMat) -> TopSingular {
    let (p, m) = g.shape();
    if p == 0 || m == 0 {
        return TopSingular {
            sigma: 0.0,
            second: 0.0,
            u: DVector::zeros(p),
            v: DVector::zeros(m),
        };
    }
    let svd = g.clone().svd(true, true);
    let s = &svd.singular_values;
    let mut best = 0;
    for i in 1..s.len() {
        if s[i] > s[best] {
            best = i;
        }
    }
    let second = (0..s.len()).filter(|&i| i != best).map(|i| s[i]).fold(0.0f64, f64::max);
    let u = svd.u.as_ref().unwrap().column(best).into_owned();
    let v = svd.v_t.as_ref().unwrap().row(best).adjoint();
    TopSingular {
        sigma: s[best],
        second,
        u,
        v,
    }
}

/// Solves `H X = B` for Hermitian positive definite `H`.
pub fn hpd_solve(h: &CMat, b: &CMat) -> Option<CMat> {
    let chol = hermitian_part(h).cholesky()?;
    Some(chol.solve(b))
}

/// `‖Aᴴ A − I‖_F` — orthonormality defect of the columns of `A`.
pub fn orthonormality_defect(a: &CMat) -> f64 {
    let k = a.ncols();
    frobenius(&(a.adjoint() * a - CMat::identity(k, k)))
}

/// Columns of `a` and `b` side by side.
pub fn hstack(a: &CMat, b: &CMat) -> CMat {
    if a.ncols() == 0 {
        return b.clone();
    }
    if b.ncols() == 0 {
        return a.clone();
    }
    assert_eq!(a.nrows(), b.nrows());
    let mut out = CMat::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Replace each column by its real and imaginary parts (a real spanning set
/// for the column space together with its conjugate).
pub fn realify_columns(a: &CMat) -> CMat {
    let (n, k) = a.shape();
    let mut out = CMat::zeros(n, 2 * k);
    for j in 0..k {
        for i in 0..n {
            out[(i, 2 * j)] = c(a[(i, j)].re);
            out[(i, 2 * j + 1)] = c(a[(i, j)].im);
        }
    }
    out
}
