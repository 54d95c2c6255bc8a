//! Solves with `D(iω) = iωI − (J − R)Q`, its square and its adjoint.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{frobenius, CMat, CscMatrix, DenseLu, SparseLu, C64, I};
use crate::system::{DhModel, Matrix};

/// Normwise backward error every solve must meet.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// A factorization of `D(iω)` for one fixed `ω`.
pub trait ShiftSolve: Send + Sync {
    fn omega(&self) -> f64;
    /// `D(iω)⁻¹ rhs`, or `D(iω)⁻ᴴ rhs` when `adjoint`; no residual check.
    fn solve_raw(&self, rhs: &CMat, adjoint: bool) -> CMat;
}

/// LU of the explicitly assembled `iωI − A`.
#[derive(Debug, Clone)]
pub enum ExplicitShift {
    Dense { omega: f64, lu: DenseLu },
    Sparse { omega: f64, lu: SparseLu },
}

impl ExplicitShift {
    pub fn new(state: &Matrix, omega: f64) -> Result<Self> {
        let n = state.nrows();
        let shift = I * omega;
        let singular = |_| Error::ShiftOnSpectrum {
            omega,
            residual: f64::INFINITY,
        };
        match state {
            Matrix::Dense(a) => {
                let mut d = -a.clone();
                for k in 0..n {
                    d[(k, k)] += shift;
                }
                Ok(Self::Dense {
                    omega,
                    lu: DenseLu::new(d).map_err(singular)?,
                })
            }
            Matrix::Sparse(a) => {
                let d = CscMatrix::identity(n).add(shift, a, C64::new(-1.0, 0.0));
                Ok(Self::Sparse {
                    omega,
                    lu: SparseLu::new(&d).map_err(singular)?,
                })
            }
        }
    }
}

impl ShiftSolve for ExplicitShift {
    fn omega(&self) -> f64 {
        match self {
            Self::Dense { omega, .. } | Self::Sparse { omega, .. } => *omega,
        }
    }

    fn solve_raw(&self, rhs: &CMat, adjoint: bool) -> CMat {
        match (self, adjoint) {
            (Self::Dense { lu, .. }, false) => lu.solve(rhs),
            (Self::Dense { lu, .. }, true) => lu.solve_adjoint(rhs),
            (Self::Sparse { lu, .. }, false) => lu.solve(rhs),
            (Self::Sparse { lu, .. }, true) => lu.solve_adjoint(rhs),
        }
    }
}

/// `D(iω) x`, or `D(iω)ᴴ x = −iωx + Q(J + R)x` when `adjoint`.
pub fn apply_shift<M: DhModel + ?Sized>(model: &M, omega: f64, x: &CMat, adjoint: bool) -> CMat {
    if adjoint {
        let jr = model.mul_j(x) + model.mul_r(x);
        model.mul_q(&jr) - x * (I * omega)
    } else {
        x * (I * omega) - model.mul_state(x)
    }
}

/// `(‖rhs − D x‖, ‖rhs‖ + |ω|‖x‖ + ‖(J − R)Qx‖)`: the residual and the
/// scale of a normwise backward error.
fn residual<M: DhModel + ?Sized>(model: &M, omega: f64, rhs: &CMat, x: &CMat, adjoint: bool) -> (f64, f64) {
    let ax = if adjoint {
        -model.mul_q(&(model.mul_j(x) + model.mul_r(x)))
    } else {
        model.mul_state(x)
    };
    let wx = x * (I * if adjoint { -omega } else { omega });
    let res = rhs - (&wx - &ax);
    (frobenius(&res), frobenius(rhs) + frobenius(&wx) + frobenius(&ax))
}

/// One solve with a backward-error check and, if needed, one refinement step.
fn checked_solve<M: DhModel + ?Sized>(model: &M, factor: &dyn ShiftSolve, rhs: &CMat, adjoint: bool) -> Result<CMat> {
    let omega = factor.omega();
    let mut x = factor.solve_raw(rhs, adjoint);
    if frobenius(rhs) == 0.0 {
        return Ok(x);
    }
    let (r, scale) = residual(model, omega, rhs, &x, adjoint);
    let mut rel = r / scale;
    if !(rel <= RESIDUAL_TOL) {
        let res = rhs - apply_shift(model, omega, &x, adjoint);
        x += factor.solve_raw(&res, adjoint);
        let (r, scale) = residual(model, omega, rhs, &x, adjoint);
        rel = r / scale;
    }
    if rel <= RESIDUAL_TOL {
        Ok(x)
    } else {
        Err(Error::ShiftOnSpectrum { omega, residual: rel })
    }
}

/// `D(iω)^{-p} rhs` (or with `D(iω)ᴴ`) for `p ∈ {1, 2}` using `factor`.
/// Power 2 is two sequential solves.
pub fn solve_with<M: DhModel + ?Sized>(
    model: &M,
    factor: &dyn ShiftSolve,
    rhs: &CMat,
    power: u8,
    adjoint: bool,
) -> Result<CMat> {
    if !(1..=2).contains(&power) {
        return Err(Error::InvalidArgument(alloc::format!(
            "power must be 1 or 2, got {power}"
        )));
    }
    let mut x = checked_solve(model, factor, rhs, adjoint)?;
    if power == 2 {
        x = checked_solve(model, factor, &x, adjoint)?;
    }
    Ok(x)
}

/// Factors `D(iω)` and solves; see [`solve_with`].
pub fn solve_shifted<M: DhModel + ?Sized>(model: &M, omega: f64, rhs: &CMat, power: u8, adjoint: bool) -> Result<CMat> {
    check_dims(model, rhs)?;
    let factor = model.factor_shift(omega)?;
    solve_with(model, factor.as_ref(), rhs, power, adjoint)
}

fn check_dims<M: DhModel + ?Sized>(model: &M, rhs: &CMat) -> Result<()> {
    if rhs.nrows() != model.dim() {
        return Err(Error::Dimension(alloc::format!(
            "right-hand side has {} rows, system has n = {}",
            rhs.nrows(),
            model.dim()
        )));
    }
    Ok(())
}

/// Factorizations of `D(iω)` keyed by `ω`. One factorization serves both
/// plain and adjoint solves. Oldest entries are evicted beyond `capacity`.
pub struct ShiftCache {
    capacity: usize,
    map: BTreeMap<u64, Arc<dyn ShiftSolve>>,
    order: VecDeque<u64>,
}

impl ShiftCache {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            map: BTreeMap::new(),
            order: VecDeque::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, omega: f64) -> Option<Arc<dyn ShiftSolve>> {
        self.map.get(&key(omega)).cloned()
    }

    pub fn factor<M: DhModel + ?Sized>(&mut self, model: &M, omega: f64) -> Result<Arc<dyn ShiftSolve>> {
        let k = key(omega);
        if let Some(f) = self.map.get(&k) {
            return Ok(f.clone());
        }
        let f = model.factor_shift(omega)?;
        if self.map.len() >= self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.map.remove(&old);
            }
        }
        self.map.insert(k, f.clone());
        self.order.push_back(k);
        Ok(f)
    }

    pub fn solve<M: DhModel + ?Sized>(
        &mut self,
        model: &M,
        omega: f64,
        rhs: &CMat,
        power: u8,
        adjoint: bool,
    ) -> Result<CMat> {
        check_dims(model, rhs)?;
        let f = self.factor(model, omega)?;
        solve_with(model, f.as_ref(), rhs, power, adjoint)
    }
}

impl Default for ShiftCache {
    fn default() -> Self {
        Self::new(64)
    }
}

fn key(omega: f64) -> u64 {
    // −0.0 and 0.0 share a factorization
    if omega == 0.0 {
        0
    } else {
        omega.to_bits()
    }
}
