//! Oblique projection bases and the structure-preserving Petrov–Galerkin
//! reductions.

use crate::error::{Error, Result};
use crate::linalg::{c, hpd_solve, orthonormality_defect, CMat, DenseLu};
use crate::system::{DhModel, DhSystem};

/// Relative deflation threshold of [`expand_orthonormal`].
pub const DEFLATION_TOL: f64 = 1e-12;

/// Largest accepted `‖V^H V − I‖` for an input basis and `‖W^H V − I‖` for
/// a computed oblique pair.
pub const BASIS_TOL: f64 = 1e-8;

/// Which side carries the orthonormal basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionMode {
    /// `V` orthonormal, `W = QV(VᴴQV)⁻¹`; used for `r(R) = r(J)` and the
    /// structured radius.
    RSide,
    /// `W` orthonormal, `V = (J−R)ᴴW(Wᴴ(J−R)ᴴW)⁻¹`; used for `r(Q)`.
    QSide,
}

/// Projected DH data `J_k = WᴴJW`, `R_k = WᴴRW`, `Q_k = VᴴQV`.
///
/// `b` and `c` are `WᴴB`, `CW` in R-side mode and `VᴴB`, `CV` in Q-side mode.
#[derive(Debug, Clone)]
pub struct ReducedDh {
    pub mode: ReductionMode,
    pub j: CMat,
    pub r: CMat,
    pub q: CMat,
    pub b: CMat,
    pub c: Option<CMat>,
    pub v: CMat,
    pub w: CMat,
}

impl ReducedDh {
    pub fn k(&self) -> usize {
        self.j.nrows()
    }

    /// `(J_k − R_k) Q_k`.
    pub fn state(&self) -> CMat {
        (&self.j - &self.r) * &self.q
    }

    /// The reduced coefficients as a dense system (unrepaired).
    pub fn to_system(&self) -> Result<DhSystem> {
        DhSystem::dense(self.j.clone(), self.r.clone(), self.q.clone())
    }

    /// `‖WᴴV − I‖_F`.
    pub fn biorthogonality_defect(&self) -> f64 {
        let k = self.k();
        crate::linalg::frobenius(&(self.w.adjoint() * &self.v - CMat::identity(k, k)))
    }
}

/// `W = QV(VᴴQV)⁻¹` for orthonormal `V`, given `QV`.
pub fn oblique_from_qv(v: &CMat, qv: &CMat) -> Result<CMat> {
    let defect = orthonormality_defect(v);
    if v.ncols() == 0 || !(defect <= BASIS_TOL) {
        return Err(Error::BasisNotOrthonormal(defect));
    }
    let mut g = v.adjoint() * qv;
    g = (&g + g.adjoint()) * c(0.5);
    let x = hpd_solve(&g, &qv.adjoint()).ok_or_else(|| Error::Singular("VᴴQV is not positive definite".into()))?;
    let w = x.adjoint();
    let bi = orthonormality_pair_defect(&w, v);
    if !(bi <= BASIS_TOL) {
        return Err(Error::Singular(alloc::format!(
            "VᴴQV ill-conditioned (‖WᴴV − I‖ = {bi:e})"
        )));
    }
    Ok(w)
}

/// `W = QV(VᴴQV)⁻¹` for orthonormal `V` and Hermitian positive definite `Q`.
pub fn build_oblique_basis(v: &CMat, q: &CMat) -> Result<CMat> {
    oblique_from_qv(v, &(q * v))
}

fn orthonormality_pair_defect(w: &CMat, v: &CMat) -> f64 {
    let k = v.ncols();
    crate::linalg::frobenius(&(w.adjoint() * v - CMat::identity(k, k)))
}

#[derive(Debug, Clone)]
pub struct Expansion {
    pub basis: CMat,
    /// Number of columns kept from the block; 0 means no expansion.
    pub added: usize,
}

impl Expansion {
    pub fn no_expansion(&self) -> bool {
        self.added == 0
    }
}

/// Appends the columns of `block` to the orthonormal `v`, orthogonalizing
/// twice and dropping columns whose residual is at most `defl_tol` times
/// their incoming norm.
pub fn expand_orthonormal(v: &CMat, block: &CMat, defl_tol: f64) -> Expansion {
    let n = v.nrows().max(block.nrows());
    let k0 = v.ncols();
    let mut basis = CMat::zeros(n, k0 + block.ncols());
    if k0 > 0 {
        basis.columns_mut(0, k0).copy_from(v);
    }
    let mut k = k0;
    for col in block.column_iter() {
        let mut w = col.into_owned();
        let norm0 = w.norm();
        if norm0 == 0.0 || !norm0.is_finite() {
            continue;
        }
        for _ in 0..2 {
            if k > 0 {
                let q = basis.columns(0, k);
                let coef = q.ad_mul(&w);
                w -= q * coef;
            }
        }
        let nrm = w.norm();
        if nrm <= defl_tol * norm0 {
            continue;
        }
        basis.set_column(k, &(w / c(nrm)));
        k += 1;
    }
    Expansion {
        basis: basis.columns(0, k).into_owned(),
        added: k - k0,
    }
}

/// Reduces with both bases given.
pub fn reduce_with_bases<M: DhModel + ?Sized>(
    model: &M,
    b: &CMat,
    cmat: Option<&CMat>,
    v: CMat,
    w: CMat,
    mode: ReductionMode,
) -> Result<ReducedDh> {
    let jw = model.mul_j(&w);
    let rw = model.mul_r(&w);
    let qv = model.mul_q(&v);
    let mut jk = w.adjoint() * jw;
    jk = (&jk - jk.adjoint()) * c(0.5);
    let mut rk = w.adjoint() * rw;
    rk = (&rk + rk.adjoint()) * c(0.5);
    let mut qk = v.adjoint() * qv;
    qk = (&qk + qk.adjoint()) * c(0.5);
    let (bk, ck) = match mode {
        ReductionMode::RSide => (w.adjoint() * b, cmat.map(|cm| cm * &w)),
        ReductionMode::QSide => (v.adjoint() * b, cmat.map(|cm| cm * &v)),
    };
    Ok(ReducedDh {
        mode,
        j: jk,
        r: rk,
        q: qk,
        b: bk,
        c: ck,
        v,
        w,
    })
}

/// Structure-preserving reduction from an orthonormal basis: `V` in R-side
/// mode, `W` in Q-side mode; the other basis is computed.
pub fn reduce_dh<M: DhModel + ?Sized>(
    model: &M,
    b: &CMat,
    cmat: Option<&CMat>,
    orth: &CMat,
    mode: ReductionMode,
) -> Result<ReducedDh> {
    if orth.ncols() == 0 {
        return Err(Error::InvalidArgument("empty projection basis".into()));
    }
    if orth.nrows() != model.dim() {
        return Err(Error::Dimension(alloc::format!(
            "basis has {} rows, system has n = {}",
            orth.nrows(),
            model.dim()
        )));
    }
    match mode {
        ReductionMode::RSide => {
            let w = oblique_from_qv(orth, &model.mul_q(orth))?;
            reduce_with_bases(model, b, cmat, orth.clone(), w, mode)
        }
        ReductionMode::QSide => {
            let defect = orthonormality_defect(orth);
            if !(defect <= BASIS_TOL) {
                return Err(Error::BasisNotOrthonormal(defect));
            }
            let v = q_side_basis(model, orth)?;
            reduce_with_bases(model, b, cmat, v, orth.clone(), mode)
        }
    }
}

/// `V = (J−R)ᴴW(Wᴴ(J−R)ᴴW)⁻¹` with `(J−R)ᴴ = −(J+R)`.
fn q_side_basis<M: DhModel + ?Sized>(model: &M, w: &CMat) -> Result<CMat> {
    let breakdown = || Error::ObliqueBreakdown { iteration: 0 };
    let x = model.mul_jr_adjoint(w);
    let g = w.adjoint() * &x;
    let lu = DenseLu::new(g).map_err(|_| breakdown())?;
    let v = lu.solve_adjoint(&x.adjoint()).adjoint();
    if !(orthonormality_pair_defect(w, &v) <= BASIS_TOL) {
        return Err(breakdown());
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, hermitian_eigenvalues, C64};

    fn unit(n: usize, k: usize) -> CMat {
        let mut e = CMat::zeros(n, 1);
        e[(k, 0)] = c(1.0);
        e
    }

    #[test]
    fn identity_q_gives_w_equal_v() {
        let v = crate::linalg::hstack(&unit(3, 0), &unit(3, 2));
        let w = build_oblique_basis(&v, &CMat::identity(3, 3)).unwrap();
        assert!(frobenius(&(w - v)) < 1e-15);
    }

    #[test]
    fn single_column_closed_form() {
        let q = CMat::from_diagonal(&nalgebra::DVector::from_vec(alloc::vec![c(2.0), c(3.0)]));
        let w = build_oblique_basis(&unit(2, 0), &q).unwrap();
        assert!(frobenius(&(w - unit(2, 0))) < 1e-15);
    }

    #[test]
    fn non_orthonormal_basis_is_rejected() {
        let v = crate::linalg::hstack(&unit(3, 0), &unit(3, 0));
        assert!(matches!(
            build_oblique_basis(&v, &CMat::identity(3, 3)),
            Err(Error::BasisNotOrthonormal(_))
        ));
    }

    #[test]
    fn dependent_block_is_deflated() {
        let v = unit(3, 1);
        let block = unit(3, 1) * C64::new(0.0, 2.0);
        let e = expand_orthonormal(&v, &block, DEFLATION_TOL);
        assert!(e.no_expansion());
        assert_eq!(e.basis, v);
    }

    #[test]
    fn empty_basis_expands_to_block_span() {
        let block = CMat::from_fn(5, 2, |i, j| C64::new((i + 2 * j) as f64, (i * i * j) as f64 - 1.0));
        let e = expand_orthonormal(&CMat::zeros(5, 0), &block, DEFLATION_TOL);
        assert_eq!(e.added, 2);
        assert!(orthonormality_defect(&e.basis) < 1e-14);
        let p = &e.basis * e.basis.adjoint();
        assert!(frobenius(&(&p * &block - &block)) < 1e-12 * frobenius(&block));
    }

    #[test]
    fn full_space_reduction_is_the_system() {
        let j = CMat::from_row_slice(2, 2, &[c(0.0), c(2.0), c(-2.0), c(0.0)]);
        let r = CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        let q = CMat::from_row_slice(2, 2, &[c(2.0), c(0.5), c(0.5), c(1.0)]);
        let s = DhSystem::dense(j.clone(), r.clone(), q.clone()).unwrap();
        let b = unit(2, 0);
        let red = reduce_dh(&s, &b, Some(&b.adjoint()), &CMat::identity(2, 2), ReductionMode::RSide).unwrap();
        assert!(frobenius(&(&red.j - &j)) < 1e-14);
        assert!(frobenius(&(&red.r - &r)) < 1e-14);
        assert!(frobenius(&(&red.q - &q)) < 1e-14);
        assert!(hermitian_eigenvalues(&red.q)[0] > 0.0);
        assert!(red.biorthogonality_defect() < 1e-14);
        let empty = reduce_dh(&s, &b, None, &CMat::zeros(2, 0), ReductionMode::RSide);
        assert!(empty.is_err());
    }
}
