//! Structure-preserving subspace frameworks for `r(R; B, C) = r(J; B, C)`
//! and `r(Q; B, C)`.
//!
//! Each iteration reduces the DH system by an oblique projection that keeps
//! the DH structure, computes the H∞ norm of the small reduced transfer
//! function, and expands the subspaces so that the reduced transfer function
//! Hermite-interpolates the full one at the new peak frequency.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::hinf::hinf_norm_bb;
use crate::linalg::{self, arnoldi_ritz, c, realify_columns, top_singular, ArnoldiOp, CMat, C64, I};
use crate::projection::{expand_orthonormal, reduce_dh, ReducedDh, ReductionMode, DEFLATION_TOL};
use crate::shifted::{solve_with, ShiftCache, ShiftSolve};
use crate::system::{DhModel, RestrictionPair, Storage};
use crate::transfer::{io_maps, reduced_state_space, TransferKind};

#[derive(Debug, Clone, PartialEq)]
pub struct FrameworkOptions {
    /// Relative tolerance of the ω- and f-closeness tests.
    pub eps: f64,
    pub k_max: usize,
    /// Number of probes on the imaginary spectral range.
    pub rho: usize,
    /// Number of initial interpolation points; `min(10, n/4)` when `None`.
    pub ell: Option<usize>,
    pub seed: u64,
    /// Relative accuracy of the reduced H∞ computations.
    pub hinf_tol: f64,
    /// Use these initial points instead of selecting them.
    pub initial_points: Option<Vec<f64>>,
    /// Store every reduced model in the result.
    pub keep_reduced: bool,
}

impl Default for FrameworkOptions {
    fn default() -> Self {
        Self {
            eps: 1e-6,
            k_max: 100,
            rho: 20,
            ell: None,
            seed: 0,
            hinf_tol: 1e-10,
            initial_points: None,
            keep_reduced: false,
        }
    }
}

impl FrameworkOptions {
    pub fn ell_for(&self, n: usize) -> usize {
        self.ell.unwrap_or((n / 4).min(10)).max(1)
    }

    fn check(&self, n: usize) -> Result<()> {
        let ell = self.ell_for(n);
        if !(self.eps > 0.0) || self.rho == 0 || ell > self.rho.max(1) {
            return Err(Error::InvalidArgument(alloc::format!(
                "need eps > 0 and 1 ≤ ell ≤ rho (eps = {}, ell = {ell}, rho = {})",
                self.eps,
                self.rho
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    OmegaClose,
    FClose,
    MaxIter,
}

impl TerminationReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            TerminationReason::OmegaClose => "omega_close",
            TerminationReason::FClose => "f_close",
            TerminationReason::MaxIter => "max_iter",
        }
    }
}

/// One subspace iteration: the reduced optimum and the subspace size it was
/// computed on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub omega: f64,
    pub f: f64,
    pub subspace_dim: usize,
}

#[derive(Debug, Clone)]
pub struct RadiusResult {
    pub radius: f64,
    /// Optimal objective: the H∞ norm for unstructured radii, the minimal
    /// squared backward error for the structured radius.
    pub f_star: f64,
    pub omega: f64,
    pub iterations: usize,
    pub subspace_dim: usize,
    pub history: Vec<IterationRecord>,
    pub termination: TerminationReason,
    pub initial_points: Vec<f64>,
    /// Frequencies the subspaces interpolate at (initial points first).
    pub interpolation_points: Vec<f64>,
    /// Reduced models per iteration when requested.
    pub reduced: Vec<ReducedDh>,
}

/// Initial interpolation points together with the imaginary spectral range
/// they were drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialPoints {
    pub points: Vec<f64>,
    pub imag_range: (f64, f64),
    /// `σ_max(G(i·Im z_j))` for each returned point.
    pub sigmas: Vec<f64>,
}

struct StateOp<'a, M: ?Sized>(&'a M);

impl<M: DhModel + ?Sized> ArnoldiOp for StateOp<'_, M> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &CMat) -> Result<CMat> {
        Ok(self.0.mul_state(x))
    }
}

/// `x ↦ (A − iωI)⁻¹ x = −D(iω)⁻¹ x`.
struct ShiftInvertOp<'a, M: ?Sized> {
    model: &'a M,
    factor: &'a dyn ShiftSolve,
}

impl<M: DhModel + ?Sized> ArnoldiOp for ShiftInvertOp<'_, M> {
    fn dim(&self) -> usize {
        self.model.dim()
    }
    fn apply(&self, x: &CMat) -> Result<CMat> {
        Ok(-solve_with(self.model, self.factor, x, 1, false)?)
    }
}

const RANGE_KRYLOV_DIM: usize = 60;
const SHIFT_INVERT_DIM: usize = 20;

fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    CMat::from_fn(n, 1, |_, _| c(StandardNormal.sample(rng)))
}

/// Picks `ell` frequencies: `rho` probes on the imaginary range of the
/// spectrum of `(J − R)Q` (its nonnegative half for real data), the
/// eigenvalue nearest to each probe, ranked by `σ_max(G(i·Im z))`.
pub fn select_initial_points<M: DhModel + ?Sized>(
    model: &M,
    kind: TransferKind,
    pair: &RestrictionPair,
    rho: usize,
    ell: usize,
    seed: u64,
    cache: &mut ShiftCache,
) -> Result<InitialPoints> {
    pair.check_dim(model.dim())?;
    if ell == 0 || rho < ell {
        return Err(Error::InvalidArgument(alloc::format!(
            "need 1 ≤ ell ≤ rho, got ell = {ell}, rho = {rho}"
        )));
    }
    let n = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dense = match model.storage() {
        Storage::Dense => model.dense_state_matrix(),
        Storage::Sparse => None,
    };
    let ritz = match &dense {
        Some(a) => linalg::eigenvalues(a)?,
        None => arnoldi_ritz(&StateOp(model), &random_vector(n, &mut rng), RANGE_KRYLOV_DIM.min(n))?,
    };
    let lo = ritz.iter().map(|z| z.im).fold(f64::INFINITY, f64::min);
    let hi = ritz.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
    let mag = ritz.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let (bt, ct) = io_maps(model, kind, pair);
    let sigma_at = |w: f64, cache: &mut ShiftCache| -> Result<f64> {
        let f = cache.factor(model, w)?;
        let x = solve_with(model, f.as_ref(), &bt, 1, false)?;
        Ok(top_singular(&(&ct * x)).sigma)
    };

    if !(hi - lo > 1e-12 * mag.max(f64::MIN_POSITIVE)) {
        let mut points = alloc::vec![0.0];
        let extra = ell - 1;
        for i in 0..extra {
            let t = if extra == 1 {
                1.0
            } else {
                -1.0 + 2.0 * i as f64 / (extra - 1) as f64
            };
            if t != 0.0 {
                points.push(t);
            }
        }
        let sigmas = points.iter().map(|&w| sigma_at(w, cache)).collect::<Result<Vec<_>>>()?;
        return Ok(InitialPoints {
            points,
            imag_range: (lo.min(0.0), hi.max(0.0)),
            sigmas,
        });
    }

    // real data: the spectrum and σ_max are symmetric in ω, and a realified
    // block at ω also covers −ω, so probe [0, max |Im λ|] and fold
    let real = model.is_real() && linalg::is_real(&pair.b) && linalg::is_real(&pair.c);
    let (plo, phi) = if real { (0.0, lo.abs().max(hi.abs())) } else { (lo, hi) };
    let fold = |w: f64| if real { w.abs() } else { w };
    let mut nearest: Vec<f64> = Vec::with_capacity(rho);
    for i in 0..rho {
        let p = if rho == 1 {
            0.5 * (plo + phi)
        } else {
            plo + (phi - plo) * i as f64 / (rho - 1) as f64
        };
        let target = I * p;
        let z = match &dense {
            Some(_) => *ritz
                .iter()
                .min_by(|a, b| (*a - target).norm().total_cmp(&(*b - target).norm()))
                .expect("nonempty spectrum"),
            None => {
                let f = cache.factor(model, p)?;
                let op = ShiftInvertOp {
                    model,
                    factor: f.as_ref(),
                };
                let theta = arnoldi_ritz(&op, &random_vector(n, &mut rng), SHIFT_INVERT_DIM.min(n))?;
                let t = theta
                    .iter()
                    .copied()
                    .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                    .unwrap_or(C64::new(0.0, 0.0));
                if t.norm() == 0.0 {
                    target
                } else {
                    target + C64::new(1.0, 0.0) / t
                }
            }
        };
        let w = fold(z.im);
        if !nearest.iter().any(|&x| (x - w).abs() <= 1e-12 * mag) {
            nearest.push(w);
        }
    }
    let mut ranked: Vec<(f64, f64)> = Vec::with_capacity(nearest.len());
    for w in nearest {
        ranked.push((w, sigma_at(w, cache)?));
    }
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    ranked.truncate(ell);
    Ok(InitialPoints {
        points: ranked.iter().map(|r| r.0).collect(),
        imag_range: (lo, hi),
        sigmas: ranked.iter().map(|r| r.1).collect(),
    })
}

/// The Hermite interpolation block at `ω`: `[D⁻¹B̃, D⁻²B̃]` for the R-side
/// and `[D⁻ᴴC̃ᴴ, D⁻ᴴD⁻ᴴC̃ᴴ]` for the Q-side, realified for real data.
pub(crate) fn interpolation_block<M: DhModel + ?Sized>(
    model: &M,
    cache: &mut ShiftCache,
    omega: f64,
    rhs: &CMat,
    adjoint: bool,
    real: bool,
) -> Result<CMat> {
    let f = cache.factor(model, omega)?;
    let x1 = solve_with(model, f.as_ref(), rhs, 1, adjoint)?;
    let x2 = solve_with(model, f.as_ref(), &x1, 1, adjoint)?;
    let block = linalg::hstack(&x1, &x2);
    Ok(if real { realify_columns(&block) } else { block })
}

/// `r(R; B, C) = r(J; B, C)`.
pub fn radius_rj<M: DhModel + ?Sized>(
    model: &M,
    pair: &RestrictionPair,
    opts: &FrameworkOptions,
) -> Result<RadiusResult> {
    run_framework(model, pair, TransferKind::Rj, opts, &mut |_| {})
}

/// `r(Q; B, C)`.
pub fn radius_q<M: DhModel + ?Sized>(
    model: &M,
    pair: &RestrictionPair,
    opts: &FrameworkOptions,
) -> Result<RadiusResult> {
    run_framework(model, pair, TransferKind::Q, opts, &mut |_| {})
}

/// Runs the framework for `kind`, calling `observer` after every iteration.
pub fn run_framework<M: DhModel + ?Sized>(
    model: &M,
    pair: &RestrictionPair,
    kind: TransferKind,
    opts: &FrameworkOptions,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<RadiusResult> {
    let n = model.dim();
    pair.check_dim(n)?;
    opts.check(n)?;
    let real = model.is_real() && linalg::is_real(&pair.b) && linalg::is_real(&pair.c);
    let mut cache = ShiftCache::default();
    let initial_points = match &opts.initial_points {
        Some(p) if !p.is_empty() => p.clone(),
        _ => select_initial_points(model, kind, pair, opts.rho, opts.ell_for(n), opts.seed, &mut cache)?.points,
    };

    let (mode, rhs, adjoint) = match kind {
        TransferKind::Rj => (ReductionMode::RSide, pair.b.clone(), false),
        TransferKind::Q => (ReductionMode::QSide, pair.c.adjoint(), true),
    };
    let (bt, ct) = io_maps(model, kind, pair);
    let scale = linalg::frobenius(&bt) * linalg::frobenius(&ct);

    let mut basis = CMat::zeros(n, 0);
    let mut interpolation_points = Vec::new();
    let mut any_nonzero = false;
    for &w in &initial_points {
        let block = interpolation_block(model, &mut cache, w, &rhs, adjoint, real)?;
        if !any_nonzero {
            let f = cache.factor(model, w)?;
            let g = &ct * solve_with(model, f.as_ref(), &bt, 1, false)?;
            let s = top_singular(&g).sigma;
            any_nonzero = s > 1e-14 * scale;
        }
        basis = expand_orthonormal(&basis, &block, DEFLATION_TOL).basis;
        interpolation_points.push(w);
    }
    if !any_nonzero {
        return Err(Error::RadiusInfinite);
    }

    let mut history: Vec<IterationRecord> = Vec::new();
    let mut reduced = Vec::new();
    let termination;
    loop {
        let k = history.len() + 1;
        let red = reduce_dh(model, &pair.b, Some(&pair.c), &basis, mode).map_err(|e| match e {
            Error::ObliqueBreakdown { .. } => Error::ObliqueBreakdown { iteration: k },
            other => other,
        })?;
        let ss = reduced_state_space(&red, kind)?;
        let peak = hinf_norm_bb(&ss, opts.hinf_tol)?;
        let rec = IterationRecord {
            omega: peak.omega,
            f: peak.norm,
            subspace_dim: basis.ncols(),
        };
        observer(&rec);
        if opts.keep_reduced {
            reduced.push(red);
        }
        let prev = history.last().copied();
        history.push(rec);
        if peak.norm == 0.0 {
            return Err(Error::RadiusInfinite);
        }
        if let Some(p) = prev {
            if (rec.omega - p.omega).abs() <= opts.eps * 0.5 * (rec.omega + p.omega).abs() {
                termination = TerminationReason::OmegaClose;
                break;
            }
            if (rec.f - p.f).abs() <= opts.eps * 0.5 * (rec.f + p.f) {
                termination = TerminationReason::FClose;
                break;
            }
        }
        if k >= opts.k_max {
            termination = TerminationReason::MaxIter;
            break;
        }
        let block = interpolation_block(model, &mut cache, rec.omega, &rhs, adjoint, real)?;
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
        radius: 1.0 / last.f,
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::DhSystem;

    fn identity_case(n: usize) -> (DhSystem, RestrictionPair) {
        let s = DhSystem::dense(CMat::zeros(n, n), CMat::identity(n, n), CMat::identity(n, n)).unwrap();
        let p = RestrictionPair::new(CMat::identity(n, n), CMat::identity(n, n)).unwrap();
        (s, p)
    }

    #[test]
    fn identity_radii_are_one() {
        let (s, p) = identity_case(2);
        let r = radius_rj(&s, &p, &FrameworkOptions::default()).unwrap();
        assert!((r.radius - 1.0).abs() < 1e-10);
        assert!(r.omega.abs() < 1e-8);
        assert_eq!(r.iterations, 1);
        assert!((r.radius * r.f_star - 1.0).abs() < 1e-12);
        let r = radius_q(&s, &p, &FrameworkOptions::default()).unwrap();
        assert!((r.radius - 1.0).abs() < 1e-10);
        assert!(r.omega.abs() < 1e-8);
    }

    #[test]
    fn two_point_spectrum() {
        let j = CMat::from_row_slice(2, 2, &[c(0.0), c(5.0), c(-5.0), c(0.0)]);
        let s = DhSystem::dense(j, CMat::identity(2, 2), CMat::identity(2, 2)).unwrap();
        let p = RestrictionPair::new(CMat::identity(2, 2), CMat::identity(2, 2)).unwrap();
        let mut cache = ShiftCache::default();
        let init = select_initial_points(&s, TransferKind::Rj, &p, 2, 2, 0, &mut cache).unwrap();
        // real data: ±5 fold onto one point
        assert_eq!(init.points.len(), 1);
        assert!((init.points[0] - 5.0).abs() < 1e-12);

        let pc = RestrictionPair::new(CMat::identity(2, 2) * I, CMat::identity(2, 2)).unwrap();
        let init = select_initial_points(&s, TransferKind::Rj, &pc, 2, 2, 0, &mut cache).unwrap();
        let mut pts = init.points.clone();
        pts.sort_by(f64::total_cmp);
        assert!((pts[0] + 5.0).abs() < 1e-12 && (pts[1] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn real_spectrum_takes_degenerate_path() {
        let (s, p) = identity_case(3);
        let mut cache = ShiftCache::default();
        let init = select_initial_points(&s, TransferKind::Rj, &p, 4, 3, 0, &mut cache).unwrap();
        assert_eq!(init.points[0], 0.0);
        assert_eq!(init.points.len(), 3);
    }
}
