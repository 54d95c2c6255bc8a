//! Transfer functions whose H∞ norms give the unstructured radii.
//!
//! * `G_R(s) = CQ(sI − (J − R)Q)⁻¹B`, with `r(R; B, C) = r(J; B, C) = 1/‖G_R‖∞`;
//! * `G_Q(s) = C(sI − (J − R)Q)⁻¹(J − R)B`, with `r(Q; B, C) = 1/‖G_Q‖∞`.

use crate::error::Result;
use crate::hinf::{SigmaEval, StateSpace};
use crate::linalg::{CMat, I};
use crate::projection::ReducedDh;
use crate::shifted::{solve_with, ShiftSolve};
use crate::system::{DhModel, DhSystem, RestrictionPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransferKind {
    /// `G_R`, for perturbations of `R` or `J`.
    Rj,
    /// `G_Q`, for perturbations of `Q`.
    Q,
}

/// The input and output maps `B̃`, `C̃` such that `G(s) = C̃ D(s)⁻¹ B̃`.
pub fn io_maps<M: DhModel + ?Sized>(model: &M, kind: TransferKind, pair: &RestrictionPair) -> (CMat, CMat) {
    match kind {
        TransferKind::Rj => {
            // CQ = (Q Cᴴ)ᴴ since Q is Hermitian
            let cq = model.mul_q(&pair.c.adjoint()).adjoint();
            (pair.b.clone(), cq)
        }
        TransferKind::Q => {
            let jr = model.mul_j(&pair.b) - model.mul_r(&pair.b);
            (jr, pair.c.clone())
        }
    }
}

/// `G(iω)` through one shifted solve.
pub fn eval_transfer<M: DhModel + ?Sized>(
    model: &M,
    kind: TransferKind,
    pair: &RestrictionPair,
    omega: f64,
) -> Result<CMat> {
    pair.check_dim(model.dim())?;
    let (bt, ct) = io_maps(model, kind, pair);
    let f = model.factor_shift(omega)?;
    Ok(ct * solve_with(model, f.as_ref(), &bt, 1, false)?)
}

/// `σ_max(G(iω))` and its derivative from `G′(iω) = −i C̃ D(iω)⁻² B̃`.
pub fn sigma_max_with_derivative<M: DhModel + ?Sized>(
    model: &M,
    kind: TransferKind,
    pair: &RestrictionPair,
    omega: f64,
) -> Result<SigmaEval> {
    pair.check_dim(model.dim())?;
    let (bt, ct) = io_maps(model, kind, pair);
    let f = model.factor_shift(omega)?;
    sigma_with_factor(model, f.as_ref(), &bt, &ct)
}

pub(crate) fn sigma_with_factor<M: DhModel + ?Sized>(
    model: &M,
    factor: &dyn ShiftSolve,
    bt: &CMat,
    ct: &CMat,
) -> Result<SigmaEval> {
    let x1 = solve_with(model, factor, bt, 1, false)?;
    let x2 = solve_with(model, factor, &x1, 1, false)?;
    Ok(SigmaEval::from_parts(&(ct * x1), &((ct * x2) * (-I))))
}

/// The full-order triple `((J − R)Q, B̃, C̃)` as dense matrices.
pub fn full_state_space(system: &DhSystem, kind: TransferKind, pair: &RestrictionPair) -> Result<StateSpace> {
    pair.check_dim(system.n())?;
    let (bt, ct) = io_maps(system, kind, pair);
    StateSpace::new(system.state().to_dense(), bt, ct)
}

/// The reduced triple: `((J_k − R_k)Q_k, B_k, C_kQ_k)` for `G_R` and
/// `((J_k − R_k)Q_k, (J_k − R_k)B_k, C_k)` for `G_Q`.
pub fn reduced_state_space(red: &ReducedDh, kind: TransferKind) -> Result<StateSpace> {
    let c = red.c.clone().unwrap_or_else(|| red.b.adjoint());
    let a = red.state();
    match kind {
        TransferKind::Rj => StateSpace::new(a, red.b.clone(), c * &red.q),
        TransferKind::Q => StateSpace::new(a, (&red.j - &red.r) * &red.b, c),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius;

    fn identity_case(n: usize) -> (DhSystem, RestrictionPair) {
        let s = DhSystem::dense(CMat::zeros(n, n), CMat::identity(n, n), CMat::identity(n, n)).unwrap();
        let p = RestrictionPair::new(CMat::identity(n, n), CMat::identity(n, n)).unwrap();
        (s, p)
    }

    #[test]
    fn identity_values_at_zero() {
        let (s, p) = identity_case(2);
        let g = eval_transfer(&s, TransferKind::Rj, &p, 0.0).unwrap();
        assert!(frobenius(&(g - CMat::identity(2, 2))) < 1e-15);
        let g = eval_transfer(&s, TransferKind::Q, &p, 0.0).unwrap();
        assert!(frobenius(&(g + CMat::identity(2, 2))) < 1e-15);
    }

    #[test]
    fn scalar_derivative_closed_form() {
        let (s, p) = identity_case(1);
        let e = sigma_max_with_derivative(&s, TransferKind::Rj, &p, 1.0).unwrap();
        assert!((e.sigma - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((e.derivative + 2f64.powf(-1.5)).abs() < 1e-14);
        let e = sigma_max_with_derivative(&s, TransferKind::Q, &p, 0.0).unwrap();
        assert!((e.sigma - 1.0).abs() < 1e-15);
        assert!(e.derivative.abs() < 1e-15);
    }

    #[test]
    fn repeated_singular_value_is_flagged() {
        let (s, p) = identity_case(2);
        let e = sigma_max_with_derivative(&s, TransferKind::Rj, &p, 0.3).unwrap();
        assert!(!e.smooth);
    }
}
