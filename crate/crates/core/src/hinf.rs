//! H∞ norms of small dense state-space triples by the level-set method.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, c, frobenius, top_singular, CMat, DenseLu, I};

/// `ẋ = A x + B u`, `y = C x` (no feed-through).
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub a: CMat,
    pub b: CMat,
    pub c: CMat,
}

/// Largest singular value of a transfer function value and its frequency
/// derivative.
#[derive(Debug, Clone)]
pub struct SigmaEval {
    pub sigma: f64,
    pub derivative: f64,
    /// False when the two largest singular values nearly coincide.
    pub smooth: bool,
    pub u: nalgebra::DVector<linalg::C64>,
    pub v: nalgebra::DVector<linalg::C64>,
}

impl SigmaEval {
    /// `σ_max` of `g` with derivative `Re(uᴴ g′ v)`.
    pub fn from_parts(g: &CMat, dg: &CMat) -> Self {
        let top = top_singular(g);
        let derivative = if top.sigma > 0.0 {
            (top.u.adjoint() * dg * &top.v)[(0, 0)].re
        } else {
            0.0
        };
        let smooth = top.sigma == 0.0 || top.sigma - top.second >= 1e-12 * top.sigma;
        Self {
            sigma: top.sigma,
            derivative,
            smooth,
            u: top.u,
            v: top.v,
        }
    }
}

impl StateSpace {
    pub fn new(a: CMat, b: CMat, c: CMat) -> Result<Self> {
        let k = a.nrows();
        if a.ncols() != k || b.nrows() != k || c.ncols() != k {
            return Err(Error::Dimension(alloc::format!(
                "state-space triple A {}×{}, B {}×{}, C {}×{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        Ok(Self { a, b, c })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn is_real(&self) -> bool {
        linalg::is_real(&self.a) && linalg::is_real(&self.b) && linalg::is_real(&self.c)
    }

    fn resolvent(&self, omega: f64) -> Result<DenseLu> {
        let k = self.order();
        let mut d = -self.a.clone();
        for i in 0..k {
            d[(i, i)] += I * omega;
        }
        DenseLu::new(d).map_err(|_| Error::ShiftOnSpectrum {
            omega,
            residual: f64::INFINITY,
        })
    }

    /// `G(iω) = C (iωI − A)⁻¹ B`.
    pub fn transfer(&self, omega: f64) -> Result<CMat> {
        if self.order() == 0 {
            return Ok(CMat::zeros(self.c.nrows(), self.b.ncols()));
        }
        Ok(&self.c * self.resolvent(omega)?.solve(&self.b))
    }

    pub fn sigma_max(&self, omega: f64) -> Result<f64> {
        Ok(top_singular(&self.transfer(omega)?).sigma)
    }

    /// `σ_max(G(iω))` and its derivative, using `G′(iω) = −i C (iωI − A)⁻² B`.
    pub fn sigma_with_derivative(&self, omega: f64) -> Result<SigmaEval> {
        if self.order() == 0 {
            let z = CMat::zeros(self.c.nrows(), self.b.ncols());
            return Ok(SigmaEval::from_parts(&z, &z));
        }
        let lu = self.resolvent(omega)?;
        let x1 = lu.solve(&self.b);
        let x2 = lu.solve(&x1);
        let g = &self.c * x1;
        let dg = (&self.c * x2) * (-I);
        Ok(SigmaEval::from_parts(&g, &dg))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HinfResult {
    pub norm: f64,
    pub omega: f64,
}

const MAX_LEVELS: usize = 100;
const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// `sup_ω σ_max(C(iωI − A)⁻¹B)` and a global maximizer, to relative
/// accuracy `tol`, by the Boyd–Balakrishnan level-set iteration.
///
/// For real data the search runs on `ω ≥ 0` and the reported maximizer is
/// nonnegative.
pub fn hinf_norm_bb(sys: &StateSpace, tol: f64) -> Result<HinfResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let k = sys.order();
    if k == 0 || sys.b.ncols() == 0 || sys.c.nrows() == 0 {
        return Ok(HinfResult { norm: 0.0, omega: 0.0 });
    }
    let eig = linalg::eigenvalues(&sys.a)?;
    let alpha = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if !(alpha < 0.0) {
        return Err(Error::Unstable(alpha));
    }
    let real = sys.is_real();
    let fold = |w: f64| if real { w.abs() } else { w };

    let mut cands: Vec<f64> = alloc::vec![0.0];
    for z in &eig {
        let m = z.norm();
        cands.extend([m, z.im.abs()]);
        if !real {
            cands.extend([-m, z.im]);
        }
    }
    let (mut best, mut omega) = (f64::NEG_INFINITY, 0.0);
    for w in cands {
        let s = sys.sigma_max(w)?;
        if s > best {
            best = s;
            omega = w;
        }
    }
    if best == 0.0 {
        return Ok(HinfResult { norm: 0.0, omega: 0.0 });
    }

    let a_norm = frobenius(&sys.a).max(f64::MIN_POSITIVE);
    let bb = &sys.b * sys.b.adjoint();
    let cc = sys.c.adjoint() * &sys.c;
    let mut bracket: Option<(f64, f64)> = None;
    for _ in 0..MAX_LEVELS {
        let level = best * (1.0 + 2.0 * tol);
        let crossings = level_crossings(sys, &bb, &cc, level, a_norm)?;
        if crossings.is_empty() {
            break;
        }
        if crossings.len() % 2 == 1 {
            bracket = enclosing(&crossings, omega).or(bracket);
            break;
        }
        let mut improved = false;
        for pair in crossings.windows(2) {
            let mid = fold(0.5 * (pair[0] + pair[1]));
            let s = sys.sigma_max(mid)?;
            if s > best {
                if s > level {
                    improved = true;
                }
                best = s;
                omega = mid;
                bracket = Some((pair[0], pair[1]));
            }
        }
        if !improved {
            break;
        }
    }

    let (lo, hi) = bracket.unwrap_or_else(|| {
        let h = 1e-3 * (1.0 + omega.abs());
        (omega - h, omega + h)
    });
    let (w, s) = golden_max(
        |w| sys.sigma_max(fold(w)),
        lo,
        hi,
        omega,
        best,
        1e-12 * (1.0 + omega.abs()),
    )?;
    // gains at rounding level say nothing about where the peak is
    if s > best * (1.0 + 8.0 * f64::EPSILON) {
        best = s;
        omega = fold(w);
    }
    Ok(HinfResult { norm: best, omega })
}

/// Sorted imaginary parts of the imaginary-axis eigenvalues of the level-set
/// matrix `[[A, BBᴴ/γ], [−CᴴC/γ, −Aᴴ]]`.
fn level_crossings(sys: &StateSpace, bb: &CMat, cc: &CMat, level: f64, a_norm: f64) -> Result<Vec<f64>> {
    let k = sys.order();
    let mut h = CMat::zeros(2 * k, 2 * k);
    h.view_mut((0, 0), (k, k)).copy_from(&sys.a);
    h.view_mut((0, k), (k, k)).copy_from(&(bb / c(level)));
    h.view_mut((k, 0), (k, k)).copy_from(&(cc / c(-level)));
    h.view_mut((k, k), (k, k)).copy_from(&(-sys.a.adjoint()));
    let eig = linalg::eigenvalues(&h)?;
    let mut mu: Vec<f64> = eig
        .iter()
        .filter(|z| z.re.abs() <= 1e-8 * a_norm)
        .map(|z| z.im)
        .collect();
    mu.sort_by(f64::total_cmp);
    Ok(mu)
}

fn enclosing(crossings: &[f64], omega: f64) -> Option<(f64, f64)> {
    let below = crossings
        .iter()
        .copied()
        .filter(|&m| m <= omega)
        .fold(None, |a: Option<f64>, m| Some(a.map_or(m, |x| x.max(m))));
    let above = crossings
        .iter()
        .copied()
        .filter(|&m| m >= omega)
        .fold(None, |a: Option<f64>, m| Some(a.map_or(m, |x| x.min(m))));
    match (below, above) {
        (Some(lo), Some(hi)) if hi > lo => Some((lo, hi)),
        _ => None,
    }
}

/// Golden-section search for a local maximum of `f` on `[lo, hi]`, seeded
/// with a known point. Returns the best point seen.
pub(crate) fn golden_max<F>(mut f: F, lo: f64, hi: f64, x0: f64, f0: f64, xtol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let (mut bx, mut bf) = (x0, f0);
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..200 {
        if b - a <= xtol {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = f(x2)?;
        }
        for (x, v) in [(x1, f1), (x2, f2)] {
            if v > bf {
                bf = v;
                bx = x;
            }
        }
    }
    Ok((bx, bf))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(a: f64) -> StateSpace {
        let one = CMat::from_element(1, 1, c(1.0));
        StateSpace::new(CMat::from_element(1, 1, c(a)), one.clone(), one).unwrap()
    }

    #[test]
    fn first_order_lowpass() {
        let r = hinf_norm_bb(&scalar(-1.0), 1e-10).unwrap();
        assert!((r.norm - 1.0).abs() < 1e-12);
        assert!(r.omega.abs() < 1e-8);
    }

    #[test]
    fn two_decaying_channels() {
        let a = CMat::from_diagonal(&nalgebra::DVector::from_vec(alloc::vec![c(-1.0), c(-2.0)]));
        let sys = StateSpace::new(a, CMat::identity(2, 2), CMat::identity(2, 2)).unwrap();
        let r = hinf_norm_bb(&sys, 1e-10).unwrap();
        assert!((r.norm - 1.0).abs() < 1e-12);
        assert!(r.omega.abs() < 1e-8);
    }

    #[test]
    fn resonant_peak() {
        // lightly damped oscillator, peak near ω = √(1 − 2ζ²)
        let z = 0.05;
        let a = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(-1.0), c(-2.0 * z)]);
        let b = CMat::from_column_slice(2, 1, &[c(0.0), c(1.0)]);
        let cm = CMat::from_row_slice(1, 2, &[c(1.0), c(0.0)]);
        let r = hinf_norm_bb(&StateSpace::new(a, b, cm).unwrap(), 1e-12).unwrap();
        let exact = 1.0 / (2.0 * z * (1.0 - z * z).sqrt());
        assert!((r.norm - exact).abs() < 1e-9 * exact);
        assert!((r.omega - (1.0 - 2.0 * z * z).sqrt()).abs() < 1e-5);
    }

    #[test]
    fn unstable_is_rejected() {
        assert!(matches!(hinf_norm_bb(&scalar(0.5), 1e-8), Err(Error::Unstable(_))));
    }

    #[test]
    fn empty_system_has_zero_norm() {
        let sys = StateSpace::new(CMat::zeros(0, 0), CMat::zeros(0, 1), CMat::zeros(1, 0)).unwrap();
        assert_eq!(hinf_norm_bb(&sys, 1e-8).unwrap(), HinfResult { norm: 0.0, omega: 0.0 });
    }

    #[test]
    fn derivative_of_lowpass() {
        let e = scalar(-1.0).sigma_with_derivative(1.0).unwrap();
        assert!((e.sigma - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((e.derivative + 2f64.powf(-1.5)).abs() < 1e-15);
    }
}
