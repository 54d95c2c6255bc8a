//! A posteriori checks of computed radii by explicit perturbation.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, top_singular, CMat, C64, I};
use crate::system::{DhSystem, RestrictionPair};
use crate::transfer::{eval_transfer, TransferKind};

/// Which coefficient a restricted perturbation `BΔC` acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PerturbedTerm {
    J,
    R,
    Q,
}

impl PerturbedTerm {
    pub fn transfer_kind(self) -> TransferKind {
        match self {
            PerturbedTerm::J | PerturbedTerm::R => TransferKind::Rj,
            PerturbedTerm::Q => TransferKind::Q,
        }
    }
}

/// Residuals within this (times `1 + |ω*|`) count as a crossing.
pub const VERIFY_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verification {
    /// Distance from `iω*` to the spectrum of the best perturbed matrix.
    pub residual: f64,
    /// The phase `s ∈ {1, −1, i, −i}` that achieved it.
    pub phase: C64,
    /// `residual ≤ VERIFY_TOL·(1 + |ω*|)`.
    pub verified: bool,
}

fn perturbed_state(system: &DhSystem, term: PerturbedTerm, delta: &CMat) -> CMat {
    let j = system.j().to_dense();
    let r = system.r().to_dense();
    let q = system.q().to_dense();
    match term {
        PerturbedTerm::J => (j + delta - r) * q,
        PerturbedTerm::R => (j - (r + delta)) * q,
        PerturbedTerm::Q => (j - r) * (q + delta),
    }
}

/// Perturbs `system` by `Δ = s·radius·v uᴴ` built from the dominant singular
/// pair `G(iω*) v = σ u` and returns the smallest distance from `iω*` to the
/// perturbed spectrum over `s ∈ {1, −1, i, −i}`.
pub fn verify_unstructured(
    system: &DhSystem,
    term: PerturbedTerm,
    pair: &RestrictionPair,
    radius: f64,
    omega: f64,
) -> Result<Verification> {
    pair.check_dim(system.n())?;
    if !(radius >= 0.0) || !radius.is_finite() || !omega.is_finite() {
        return Err(Error::InvalidArgument(alloc::format!("radius {radius} at ω = {omega}")));
    }
    let g = eval_transfer(system, term.transfer_kind(), pair, omega)?;
    let top = top_singular(&g);
    let rank_one = &top.v * top.u.adjoint();
    let target = I * omega;
    let mut best = Verification {
        residual: f64::INFINITY,
        phase: C64::new(1.0, 0.0),
        verified: false,
    };
    for phase in [C64::new(1.0, 0.0), C64::new(-1.0, 0.0), I, -I] {
        let delta = &pair.b * (&rank_one * (phase * radius)) * &pair.c;
        let a = perturbed_state(system, term, &delta);
        let dist = linalg::eigenvalues(&a)?
            .iter()
            .map(|z| (z - target).norm())
            .fold(f64::INFINITY, f64::min);
        if dist < best.residual {
            best.residual = dist;
            best.phase = phase;
        }
    }
    best.verified = best.residual <= VERIFY_TOL * (1.0 + omega.abs());
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectraSample {
    /// Smallest `|Re λ|` over all sampled spectra.
    pub min_abs_real: f64,
    /// Samples with an eigenvalue on the imaginary axis or to its right.
    pub crossings: usize,
    pub count: usize,
}

/// Spectra of `(J − (R + BΔBᴴ))Q` for `count` random Hermitian `Δ` with
/// `‖Δ‖₂ = r`.
pub fn sample_structured_spectra(
    system: &DhSystem,
    b: &CMat,
    r: f64,
    count: usize,
    seed: u64,
) -> Result<SpectraSample> {
    let n = system.n();
    if b.nrows() != n {
        return Err(Error::Dimension(alloc::format!(
            "B has {} rows, system has order {n}",
            b.nrows()
        )));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(alloc::format!("perturbation norm {r}")));
    }
    let m = b.ncols();
    let j = system.j().to_dense();
    let rr = system.r().to_dense();
    let q = system.q().to_dense();
    let thresh = -1e-12 * linalg::frobenius(&system.state().to_dense());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SpectraSample {
        min_abs_real: f64::INFINITY,
        crossings: 0,
        count,
    };
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    for _ in 0..count {
        let z = CMat::from_fn(m, m, |_, _| C64::new(draw(), draw()));
        let h = linalg::hermitian_part(&z);
        let norm = linalg::norm2(&h);
        let delta = if norm > 0.0 { h * C64::new(r / norm, 0.0) } else { h };
        let a = (&j - (&rr + b * delta * b.adjoint())) * &q;
        let ev: Vec<C64> = linalg::eigenvalues(&a)?;
        let mut crossed = false;
        for z in &ev {
            out.min_abs_real = out.min_abs_real.min(z.re.abs());
            crossed |= z.re >= thresh;
        }
        if crossed {
            out.crossings += 1;
        }
    }
    Ok(out)
}
