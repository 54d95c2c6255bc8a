use alloc::vec::Vec;

use super::{c, eigenvalues, CMat, C64};
use crate::error::Result;

/// A linear operator `x ↦ A x` for Krylov iterations.
pub trait ArnoldiOp {
    fn dim(&self) -> usize;
    fn apply(&self, x: &CMat) -> Result<CMat>;
}

/// Ritz values from `steps` Arnoldi steps started at `start`.
///
/// Classical Gram–Schmidt with one re-orthogonalization pass; stops early on
/// an invariant subspace.
pub fn arnoldi_ritz<A: ArnoldiOp>(op: &A, start: &CMat, steps: usize) -> Result<Vec<C64>> {
    let n = op.dim();
    let steps = steps.min(n).max(1);
    let mut v = CMat::zeros(n, steps + 1);
    let mut h = CMat::zeros(steps + 1, steps);
    let nrm = start.norm();
    let mut q = if nrm > 0.0 {
        start / c(nrm)
    } else {
        let mut e = CMat::zeros(n, 1);
        e[(0, 0)] = c(1.0);
        e
    };
    v.set_column(0, &q.column(0));
    let mut m = steps;
    for j in 0..steps {
        let mut w = op.apply(&q)?;
        for _ in 0..2 {
            for i in 0..=j {
                let vi = v.column(i);
                let coef = vi.dotc(&w.column(0));
                h[(i, j)] += coef;
                let upd = vi * coef;
                w.column_mut(0).axpy(c(-1.0), &upd, c(1.0));
            }
        }
        let beta = w.norm();
        h[(j + 1, j)] = c(beta);
        let scale = h.view((0, 0), (j + 1, j + 1)).norm().max(1.0);
        if beta <= 1e-13 * scale {
            m = j + 1;
            break;
        }
        q = w / c(beta);
        v.set_column(j + 1, &q.column(0));
    }
    let hm = h.view((0, 0), (m, m)).into_owned();
    eigenvalues(&hm)
}
