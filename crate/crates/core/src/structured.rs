//! The structured radius `r^Herm(R; B)` for Hermitian perturbations
//! `R ↦ R + BΔBᴴ`.
//!
//! With `W(iω) = (J − R)Q − iωI` and `T = BᴴQW⁻¹B`, the squared backward
//! error at `iω` is `η̃(ω) = sup_t λ_min(H0 + tH1)` where
//! `H̃0 = TᴴT = LLᴴ`, `H0 = L⁻¹L⁻ᴴ`, `H̃1 = L⁻¹TᴴL⁻ᴴ`, `H1 = i(H̃1 − H̃1ᴴ)`,
//! and `r^Herm(R; B)² = min_ω η̃(ω)`. The supremum is attained exactly when
//! `H1` is indefinite or zero; elsewhere `η̃` is reported as `+∞`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_traits::Float;

use crate::eigopt::{maximize_pq, minimize_pq_with, EigoptOptions, OptimizerOutcome};
use crate::error::{Error, Result};
use crate::framework::{interpolation_block, select_initial_points, IterationRecord, RadiusResult, TerminationReason};
use crate::linalg::{self, hermitian_eigenvalues, hermitian_min_eigenpair, norm2, CMat, I};
use crate::projection::{expand_orthonormal, reduce_dh, ReducedDh, ReductionMode, DEFLATION_TOL};
use crate::shifted::{solve_with, ShiftCache};
use crate::system::{DhModel, DhSystem, RestrictionPair};
use crate::transfer::TransferKind;

/// `H1` counts as zero when `‖H1‖₂ ≤ H1_ZERO_TOL·‖H0‖₂`.
pub const H1_ZERO_TOL: f64 = 1e-14;
/// Relative eigenvalue threshold for classifying `H1` as indefinite.
pub const INDEFINITE_TOL: f64 = 1e-12;
/// `H̃0` is degenerate when `min diag(L) ≤ DEGENERACY_TOL·‖L‖`.
pub const DEGENERACY_TOL: f64 = 1e-14;
/// The inner `t`-interval `[−s, s]` is doubled up to this bound.
pub const T_BOUND: f64 = 1e8;

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredOptions {
    /// Curvature bound for the concave inner maximization over `t`.
    pub gamma_inner: f64,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Lower bound on `η̃″` for the outer minimization;
    /// `−10⁴·scale/width²` when `None`, with `scale` the smallest finite
    /// `η̃` at the initial points.
    pub gamma_outer: Option<f64>,
    pub outer_tol: f64,
    pub outer_max_iter: usize,
    pub penalty_factor: f64,
    /// Outer search interval; derived from the spectrum when `None`.
    pub interval: Option<(f64, f64)>,
    /// Relative finite-difference step for `dη̃/dω`.
    pub fd_step: f64,
    /// Relative tolerance of the subspace termination tests.
    pub eps: f64,
    pub k_max: usize,
    pub rho: usize,
    pub ell: Option<usize>,
    pub seed: u64,
    pub initial_points: Option<Vec<f64>>,
    pub keep_reduced: bool,
}

impl Default for StructuredOptions {
    fn default() -> Self {
        Self {
            gamma_inner: 1e-6,
            inner_tol: 1e-10,
            inner_max_iter: 200,
            gamma_outer: None,
            outer_tol: 1e-8,
            outer_max_iter: 400,
            penalty_factor: 10.0,
            interval: None,
            fd_step: 1e-6,
            eps: 1e-6,
            k_max: 100,
            rho: 20,
            ell: None,
            seed: 0,
            initial_points: None,
            keep_reduced: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredPieces {
    pub h0_tilde: CMat,
    /// Cholesky factor of `H̃0` with positive real diagonal.
    pub l: CMat,
    pub h0: CMat,
    pub h1_tilde: CMat,
    pub h1: CMat,
}

/// The pieces from `T = BᴴQW(iω)⁻¹B`.
pub fn pieces_from_t(t: &CMat) -> Result<StructuredPieces> {
    let m = t.nrows();
    let h0_tilde = linalg::hermitian_part(&(t.adjoint() * t));
    let chol = h0_tilde.clone().cholesky().ok_or(Error::TangentialDegeneracy(0.0))?;
    let l = chol.l();
    let dmin = (0..m).map(|i| l[(i, i)].re).fold(f64::INFINITY, f64::min);
    let ratio = dmin / linalg::frobenius(&l);
    if !(ratio > DEGENERACY_TOL) {
        return Err(Error::TangentialDegeneracy(ratio));
    }
    let linv = l
        .solve_lower_triangular(&CMat::identity(m, m))
        .ok_or(Error::TangentialDegeneracy(ratio))?;
    let h0 = linalg::hermitian_part(&(&linv * linv.adjoint()));
    let h1_tilde = &linv * t.adjoint() * linv.adjoint();
    let h1 = linalg::hermitian_part(&((&h1_tilde - h1_tilde.adjoint()) * I));
    Ok(StructuredPieces {
        h0_tilde,
        l,
        h0,
        h1_tilde,
        h1,
    })
}

/// `T = BᴴQW(iω)⁻¹B` with one shifted solve (`W(iω) = −D(iω)`).
pub fn restricted_resolvent<M: DhModel + ?Sized>(model: &M, b: &CMat, omega: f64) -> Result<CMat> {
    check_b(model, b)?;
    let f = model.factor_shift(omega)?;
    let s = -solve_with(model, f.as_ref(), b, 1, false)?;
    Ok(model.mul_q(b).adjoint() * s)
}

pub fn assemble_h0_h1<M: DhModel + ?Sized>(model: &M, b: &CMat, omega: f64) -> Result<StructuredPieces> {
    pieces_from_t(&restricted_resolvent(model, b, omega)?)
}

fn check_b<M: DhModel + ?Sized>(model: &M, b: &CMat) -> Result<()> {
    if b.nrows() != model.dim() || b.ncols() == 0 {
        return Err(Error::Dimension(alloc::format!(
            "B is {}×{}, system has n = {}",
            b.nrows(),
            b.ncols(),
            model.dim()
        )));
    }
    Ok(())
}

/// `sup_t λ_min(H0 + tH1)` at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerMax {
    /// `+∞` when not attained.
    pub value: f64,
    pub t_star: f64,
    pub attained: bool,
    pub h1_indefinite: bool,
}

/// Whether `sup_t λ_min(H0 + tH1)` can be attained: `H1` indefinite or zero.
fn sup_attainable(p: &StructuredPieces) -> bool {
    let n1 = norm2(&p.h1);
    if n1 <= H1_ZERO_TOL * norm2(&p.h0) {
        return true;
    }
    let ev = hermitian_eigenvalues(&p.h1);
    let tol = INDEFINITE_TOL * n1;
    ev[0] < -tol && ev[ev.len() - 1] > tol
}

pub fn inner_max(p: &StructuredPieces, opts: &StructuredOptions) -> Result<InnerMax> {
    let n0 = norm2(&p.h0);
    let n1 = norm2(&p.h1);
    if n1 <= H1_ZERO_TOL * n0 {
        return Ok(InnerMax {
            value: hermitian_eigenvalues(&p.h0)[0],
            t_star: 0.0,
            attained: true,
            h1_indefinite: false,
        });
    }
    let ev = hermitian_eigenvalues(&p.h1);
    let tol = INDEFINITE_TOL * n1;
    let not_attained = InnerMax {
        value: f64::INFINITY,
        t_star: 0.0,
        attained: false,
        h1_indefinite: false,
    };
    if !(ev[0] < -tol && ev[ev.len() - 1] > tol) {
        return Ok(not_attained);
    }
    let g = |t: f64| {
        let (lam, v) = hermitian_min_eigenpair(&(&p.h0 + &p.h1 * linalg::c(t)));
        (lam, (v.adjoint() * &p.h1 * &v)[(0, 0)].re)
    };

    let mut s = 1.0;
    while !(g(-s).1 > 0.0 && g(s).1 < 0.0) {
        s *= 2.0;
        if s > T_BOUND {
            return Ok(InnerMax {
                h1_indefinite: true,
                ..not_attained
            });
        }
    }

    let mut samples: Vec<(f64, f64, f64)> = Vec::new();
    maximize_pq(
        |t| {
            let (f, df) = g(t);
            samples.push((t, f, df));
            Ok((f, df))
        },
        (-s, s),
        opts.gamma_inner,
        opts.inner_tol,
        opts.inner_max_iter,
    )?;

    // g is concave, so g′ decreases: bisect on its sign change
    let mut lo = -s;
    let mut hi = s;
    for &(t, _, df) in &samples {
        if df > 0.0 && t > lo {
            lo = t;
        } else if df < 0.0 && t < hi {
            hi = t;
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-15 * lo.abs().max(hi.abs()).max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (f, df) = g(mid);
        samples.push((mid, f, df));
        if df > 0.0 {
            lo = mid;
        } else if df < 0.0 {
            hi = mid;
        } else {
            break;
        }
    }
    let (t_star, value, _) = samples
        .iter()
        .copied()
        .fold((0.0, f64::NEG_INFINITY, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    Ok(InnerMax {
        value,
        t_star,
        attained: true,
        h1_indefinite: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaEvaluation {
    /// `η̃(ω)`, or `+∞` when the supremum is not attained.
    pub value: f64,
    /// Finite-difference `dη̃/dω`: central when both neighbours are
    /// attained, one-sided when one is, zero when neither is.
    pub derivative: f64,
    pub t_star: f64,
    pub attained: bool,
    pub h1_indefinite: bool,
}

fn inner_at<M: DhModel + ?Sized>(model: &M, b: &CMat, omega: f64, opts: &StructuredOptions) -> Result<InnerMax> {
    inner_max(&assemble_h0_h1(model, b, omega)?, opts)
}

pub fn eta_structured<M: DhModel + ?Sized>(
    model: &M,
    b: &CMat,
    omega: f64,
    opts: &StructuredOptions,
) -> Result<EtaEvaluation> {
    let center = inner_at(model, b, omega, opts)?;
    let mut out = EtaEvaluation {
        value: center.value,
        derivative: 0.0,
        t_star: center.t_star,
        attained: center.attained,
        h1_indefinite: center.h1_indefinite,
    };
    if !center.attained {
        return Ok(out);
    }
    let h = opts.fd_step * omega.abs().max(1.0);
    let side = |w: f64| -> Result<Option<f64>> {
        match inner_at(model, b, w, opts) {
            Ok(e) if e.attained => Ok(Some(e.value)),
            Ok(_) | Err(Error::TangentialDegeneracy(_)) | Err(Error::ShiftOnSpectrum { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    out.derivative = match (side(omega + h)?, side(omega - h)?) {
        (Some(p), Some(m)) => (p - m) / (2.0 * h),
        (Some(p), None) => (p - center.value) / h,
        (None, Some(m)) => (center.value - m) / h,
        (None, None) => 0.0,
    };
    Ok(out)
}

/// Reduced data for the structured radius: `J_k`, `R_k`, `Q_k`, `B_k` from
/// the R-side oblique projection onto `span(V)`.
#[derive(Debug, Clone)]
pub struct StructuredReduction {
    pub reduced: ReducedDh,
    pub system: DhSystem,
}

impl StructuredReduction {
    pub fn b(&self) -> &CMat {
        &self.reduced.b
    }

    pub fn pieces(&self, omega: f64) -> Result<StructuredPieces> {
        assemble_h0_h1(&self.system, &self.reduced.b, omega)
    }

    /// `η̃_k(ω)` with its derivative.
    pub fn eta(&self, omega: f64, opts: &StructuredOptions) -> Result<EtaEvaluation> {
        eta_structured(&self.system, &self.reduced.b, omega, opts)
    }
}

pub fn reduce_structured<M: DhModel + ?Sized>(model: &M, b: &CMat, v: &CMat) -> Result<StructuredReduction> {
    check_b(model, b)?;
    let reduced = reduce_dh(model, b, None, v, ReductionMode::RSide)?;
    let system = reduced.to_system()?;
    Ok(StructuredReduction { reduced, system })
}

fn key(w: f64) -> u64 {
    if w == 0.0 {
        0
    } else {
        w.to_bits()
    }
}

/// Imaginary parts of the eigenvalues of `(J − R)Q` inside `[a, b]`
/// (folded to `|Im λ|` for real data); empty without a dense state matrix.
fn spectral_points<M: DhModel + ?Sized>(model: &M, interval: (f64, f64), real: bool) -> Result<Vec<f64>> {
    let Some(a) = model.dense_state_matrix() else {
        return Ok(Vec::new());
    };
    let mut pts: Vec<f64> = linalg::eigenvalues(&a)?
        .iter()
        .map(|z| if real { z.im.abs() } else { z.im })
        .filter(|&w| w >= interval.0 && w <= interval.1)
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    Ok(pts)
}

struct OuterOutcome {
    opt: OptimizerOutcome,
    evaluations: Vec<(f64, f64)>,
}

fn minimize_eta<M: DhModel + ?Sized>(
    model: &M,
    b: &CMat,
    interval: (f64, f64),
    gamma_outer: Option<f64>,
    extra_initial: &[f64],
    opts: &StructuredOptions,
) -> Result<OuterOutcome> {
    let (a, bnd) = interval;
    if !(a <= bnd) || !a.is_finite() || !bnd.is_finite() {
        return Err(Error::InvalidArgument(alloc::format!("invalid interval [{a}, {bnd}]")));
    }
    let real = model.is_real() && linalg::is_real(b);
    let mut initial = alloc::vec![0.5 * (a + bnd)];
    match &opts.initial_points {
        Some(p) if !p.is_empty() => initial = p.clone(),
        _ => {
            initial.extend(extra_initial.iter().copied().filter(|&w| w >= a && w <= bnd));
            initial.extend(spectral_points(model, interval, real)?);
        }
    }

    let mut memo: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    let mut oracle = |w: f64| -> Result<(f64, f64)> {
        if let Some(&v) = memo.get(&key(w)) {
            return Ok(v);
        }
        let v = match eta_structured(model, b, w, opts) {
            Ok(e) => (e.value, e.derivative),
            Err(Error::TangentialDegeneracy(_)) => (f64::INFINITY, 0.0),
            Err(e) => return Err(e),
        };
        memo.insert(key(w), v);
        Ok(v)
    };
    let mut scale = f64::INFINITY;
    for &w in &initial {
        let (f, _) = oracle(w.clamp(a, bnd))?;
        if f.is_finite() {
            scale = scale.min(f.abs());
        }
    }
    if !(scale.is_finite() && scale > 0.0) {
        scale = 1.0;
    }
    let width = bnd - a;
    let gamma = gamma_outer.unwrap_or(if width > 0.0 {
        -1e4 * scale / (width * width)
    } else {
        -scale
    });
    let eo = EigoptOptions {
        tol: opts.outer_tol,
        max_iter: opts.outer_max_iter,
        penalty_factor: opts.penalty_factor,
        initial,
    };
    // the optimizer's gap test is relative to max(1, |f|); normalize so it
    // stays relative for small η̃
    let mut opt = minimize_pq_with(
        |w| oracle(w).map(|(f, df)| (f / scale, df / scale)),
        interval,
        gamma / scale,
        &eo,
    )?;
    opt.f *= scale;
    opt.gap *= scale;
    for h in opt.history.iter_mut() {
        h.1 *= scale;
    }
    for m in opt.model.models.iter_mut() {
        m.value *= scale;
        m.slope *= scale;
        m.curvature *= scale;
    }
    if !opt.f.is_finite() {
        return Err(Error::RadiusNotDetermined);
    }
    let mut evaluations = opt.history.clone();

    // η̃ dips sharply near weakly damped eigenvalues, far below what a
    // heuristic curvature bound resolves: refine the best few local minima
    let mut sorted = evaluations.clone();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    sorted.dedup_by(|x, y| x.0 == y.0);
    let higher = |j: Option<&(f64, f64)>, f: f64| j.is_none_or(|e| !(e.1 < f));
    let mut cands: Vec<(f64, f64)> = (0..sorted.len())
        .filter(|&i| {
            let f = sorted[i].1;
            f.is_finite() && higher(i.checked_sub(1).map(|j| &sorted[j]), f) && higher(sorted.get(i + 1), f)
        })
        .map(|i| sorted[i])
        .collect();
    // η̃ tends to fall towards the edge of a non-attained region, which the
    // optimizer's model never sees. Edges come from neighbouring samples and
    // from a scan of the (cheap) attainability test on a uniform grid.
    let attainable = |w: f64| -> Result<bool> {
        match assemble_h0_h1(model, b, w) {
            Ok(p) => Ok(sup_attainable(&p)),
            Err(Error::TangentialDegeneracy(_)) | Err(Error::ShiftOnSpectrum { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    };
    let mut brackets: Vec<(f64, f64)> = sorted
        .windows(2)
        .filter(|w| w[0].1.is_finite() != w[1].1.is_finite())
        .map(|w| {
            if w[0].1.is_finite() {
                (w[0].0, w[1].0)
            } else {
                (w[1].0, w[0].0)
            }
        })
        .collect();
    if width > 0.0 {
        let mut prev: Option<(f64, bool)> = None;
        for i in 0..=EDGE_SCAN_POINTS {
            let w = a + width * i as f64 / EDGE_SCAN_POINTS as f64;
            let ok = attainable(w)?;
            if let Some((pw, pok)) = prev {
                if pok != ok {
                    brackets.push(if ok { (w, pw) } else { (pw, w) });
                }
            }
            prev = Some((w, ok));
        }
    }
    for (mut fin, mut inf) in brackets {
        for _ in 0..60 {
            if (inf - fin).abs() <= 1e-12 * fin.abs().max(1.0) {
                break;
            }
            let mid = 0.5 * (fin + inf);
            if attainable(mid)? {
                fin = mid;
            } else {
                inf = mid;
            }
        }
        let (ff, _) = oracle(fin)?;
        evaluations.push((fin, ff));
        if ff.is_finite() {
            cands.push((fin, ff));
        }
    }
    cands.sort_by(|x, y| x.1.total_cmp(&y.1));
    for &(x0, _) in cands.iter().take(POLISH_CANDIDATES) {
        let mut lo = a;
        let mut hi = bnd;
        for &(x, _) in &sorted {
            if x < x0 && x > lo {
                lo = x;
            } else if x > x0 && x < hi {
                hi = x;
            }
        }
        let (bx, bf) = polish(&mut oracle, x0, lo, hi, &mut evaluations)?;
        if bf < opt.f {
            opt.f = bf;
            opt.x = bx;
        }
    }
    Ok(OuterOutcome { opt, evaluations })
}

const POLISH_CANDIDATES: usize = 12;
/// Grid size of the attainability scan in the outer problem.
const EDGE_SCAN_POINTS: usize = 2000;

/// Local minimization of `η̃` from `x0` inside `[lo, hi]`: steps of doubling
/// length in the descent direction until the slope changes sign, then
/// bisection on the sign of the derivative. Non-attained points act as walls.
fn polish<F>(oracle: &mut F, x0: f64, lo: f64, hi: f64, log: &mut Vec<(f64, f64)>) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let (f0, d0) = oracle(x0)?;
    if !f0.is_finite() || d0 == 0.0 {
        return Ok((x0, f0));
    }
    let dir = if d0 < 0.0 { 1.0 } else { -1.0 };
    let bound = if dir > 0.0 { hi } else { lo };
    let (mut bx, mut bf) = (x0, f0);
    // the bracket [near, far] in the descent direction
    let mut near = x0;
    let mut far = bound;
    let mut step = 1e-8 * x0.abs().max(1.0);
    loop {
        let x = x0 + dir * step;
        if (x - bound) * dir >= 0.0 {
            break;
        }
        let (f, d) = oracle(x)?;
        log.push((x, f));
        if !f.is_finite() || d * dir > 0.0 || f > bf {
            far = x;
            break;
        }
        if f < bf {
            bx = x;
            bf = f;
        }
        near = x;
        step *= 2.0;
    }
    let (mut a, mut b) = (near, far);
    for _ in 0..100 {
        if (b - a).abs() <= 1e-13 * bx.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (a + b);
        let (f, d) = oracle(mid)?;
        log.push((mid, f));
        if f.is_finite() && f < bf {
            bx = mid;
            bf = f;
        }
        if !f.is_finite() || d * dir > 0.0 || f > bf {
            b = mid;
        } else if d == 0.0 {
            break;
        } else {
            a = mid;
        }
    }
    Ok((bx, bf))
}

/// `r^Herm(R; B)` by global minimization of `η̃` over `interval` on the full
/// system.
pub fn radius_structured_small<M: DhModel + ?Sized>(
    model: &M,
    b: &CMat,
    interval: (f64, f64),
    gamma_outer: Option<f64>,
    opts: &StructuredOptions,
) -> Result<RadiusResult> {
    check_b(model, b)?;
    let out = minimize_eta(model, b, interval, gamma_outer, &[], opts)?;
    let n = model.dim();
    let opt = out.opt;
    Ok(RadiusResult {
        radius: Float::sqrt(opt.f.max(0.0)),
        f_star: opt.f,
        omega: opt.x,
        iterations: opt.iterations,
        subspace_dim: n,
        history: out
            .evaluations
            .iter()
            .map(|&(omega, f)| IterationRecord {
                omega,
                f,
                subspace_dim: n,
            })
            .collect(),
        termination: if opt.converged {
            TerminationReason::FClose
        } else {
            TerminationReason::MaxIter
        },
        initial_points: Vec::new(),
        interpolation_points: Vec::new(),
        reduced: Vec::new(),
    })
}

/// The outer interval from the imaginary spectral range, `[0, max |Im λ|]`
/// for real data, widened when degenerate.
fn default_interval(range: (f64, f64), real: bool) -> (f64, f64) {
    let (lo, hi) = range;
    if real {
        let top = lo.abs().max(hi.abs());
        (0.0, if top > 0.0 { top } else { 1.0 })
    } else if hi - lo > 1e-12 * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE) {
        (lo, hi)
    } else {
        let pad = lo.abs().max(1.0);
        (lo - pad, hi + pad)
    }
}

/// `r^Herm(R; B)` by the interpolatory subspace method: the full system is
/// touched only through shifted solves at the interpolation frequencies.
pub fn radius_structured_sf<M: DhModel + ?Sized>(
    model: &M,
    b: &CMat,
    opts: &StructuredOptions,
) -> Result<RadiusResult> {
    radius_structured_sf_observed(model, b, opts, &mut |_| {})
}

/// As [`radius_structured_sf`], calling `observer` after every iteration.
pub fn radius_structured_sf_observed<M: DhModel + ?Sized>(
    model: &M,
    b: &CMat,
    opts: &StructuredOptions,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<RadiusResult> {
    check_b(model, b)?;
    let n = model.dim();
    let real = model.is_real() && linalg::is_real(b);
    let pair = RestrictionPair::symmetric(b.clone())?;
    let mut cache = ShiftCache::default();
    let ell = opts.ell.unwrap_or((n / 4).min(10)).max(1);
    let (initial_points, range) = match &opts.initial_points {
        Some(p) if !p.is_empty() => {
            let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (p.clone(), (lo, hi))
        }
        _ => {
            let init = select_initial_points(
                model,
                TransferKind::Rj,
                &pair,
                opts.rho.max(ell),
                ell,
                opts.seed,
                &mut cache,
            )?;
            (init.points, init.imag_range)
        }
    };
    let interval = opts.interval.unwrap_or_else(|| default_interval(range, real));

    let mut basis = CMat::zeros(n, 0);
    let mut interpolation_points = Vec::new();
    for &w in &initial_points {
        let block = interpolation_block(model, &mut cache, w, b, false, real)?;
        basis = expand_orthonormal(&basis, &block, DEFLATION_TOL).basis;
        interpolation_points.push(w);
    }

    let inner_opts = StructuredOptions {
        initial_points: None,
        ..opts.clone()
    };
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut reduced = Vec::new();
    let termination;
    loop {
        let k = history.len() + 1;
        let red = reduce_structured(model, b, &basis).map_err(|e| match e {
            Error::ObliqueBreakdown { .. } => Error::ObliqueBreakdown { iteration: k },
            other => other,
        })?;
        let seeds: Vec<f64> = interpolation_points
            .iter()
            .map(|&w: &f64| if real { w.abs() } else { w })
            .collect();
        let out = minimize_eta(
            &red.system,
            &red.reduced.b,
            interval,
            opts.gamma_outer,
            &seeds,
            &inner_opts,
        )?;
        let rec = IterationRecord {
            omega: out.opt.x,
            f: out.opt.f,
            subspace_dim: basis.ncols(),
        };
        observer(&rec);
        if opts.keep_reduced {
            reduced.push(red.reduced);
        }
        let prev = history.last().copied();
        history.push(rec);
        if let Some(p) = prev {
            if (rec.omega - p.omega).abs() <= opts.eps * 0.5 * (rec.omega + p.omega).abs() {
                termination = TerminationReason::OmegaClose;
                break;
            }
            if (rec.f - p.f).abs() <= opts.eps * 0.5 * (rec.f + p.f).abs() {
                termination = TerminationReason::FClose;
                break;
            }
        }
        if k >= opts.k_max {
            termination = TerminationReason::MaxIter;
            break;
        }
        let block = interpolation_block(model, &mut cache, rec.omega, b, false, real)?;
        let e = expand_orthonormal(&basis, &block, DEFLATION_TOL);
        interpolation_points.push(rec.omega);
        if e.no_expansion() {
            termination = TerminationReason::OmegaClose;
            break;
        }
        basis = e.basis;
    }

    let last = *history.last().expect("at least one iteration");
    Ok(RadiusResult {
        radius: Float::sqrt(last.f.max(0.0)),
        f_star: last.f,
        omega: last.omega,
        iterations: history.len(),
        subspace_dim: last.subspace_dim,
        history,
        termination,
        initial_points,
        interpolation_points,
        reduced,
    })
}
