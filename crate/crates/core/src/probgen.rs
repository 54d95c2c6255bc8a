//! Seeded random DH systems: dense, sparse banded, and second-order toys.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::brake::SecondOrderDh;
use crate::error::{Error, Result};
use crate::linalg::{self, c, from_real, CscMatrix, SparseLu, C64};
use crate::system::{DhSystem, Matrix, RestrictionPair};

/// Shift threshold for `Q` and `R_p`: blocks with `λ_min` below it are
/// shifted by `(−λ_min + u)I`, `u ∈ (0, 5)`.
const PD_THRESHOLD: f64 = 1e-4;

const MAX_STIFFNESS_RETRIES: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Dense,
    SparseBanded,
    BrakeToy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub family: Family,
    /// State dimension; for [`Family::BrakeToy`] the second-order size `q`.
    pub n: usize,
    pub seed: u64,
    pub bandwidth: usize,
    pub rank_cap: usize,
    pub m: usize,
    pub p: usize,
    /// Rotation speed `Ω` of brake toys.
    pub speed: f64,
}

impl GenSpec {
    pub fn new(family: Family, n: usize, seed: u64) -> Self {
        Self {
            family,
            n,
            seed,
            bandwidth: 10,
            rank_cap: n / 10,
            m: 2,
            p: 2,
            speed: 1.0,
        }
    }

    fn check(&self) -> Result<()> {
        let min_n = if self.family == Family::BrakeToy { 1 } else { 2 };
        if self.n < min_n {
            return Err(Error::InvalidArgument(alloc::format!(
                "n must be at least {min_n}, got {}",
                self.n
            )));
        }
        if self.bandwidth == 0 {
            return Err(Error::InvalidArgument("bandwidth must be at least 1".into()));
        }
        if self.rank_cap > self.n {
            return Err(Error::InvalidArgument(alloc::format!(
                "rank_cap {} exceeds n = {}",
                self.rank_cap,
                self.n
            )));
        }
        if self.m == 0 || self.p == 0 {
            return Err(Error::InvalidArgument("restriction sizes must be positive".into()));
        }
        Ok(())
    }
}

#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
pub enum Generated {
    System(DhSystem, RestrictionPair),
    /// A second-order model with restrictions on the `2q`-dimensional state.
    Brake(SecondOrderDh, RestrictionPair),
}

pub fn generate(spec: &GenSpec) -> Result<Generated> {
    spec.check()?;
    Ok(match spec.family {
        Family::Dense => {
            let (s, p) = gen_dense(spec.n, spec.seed, spec.rank_cap, spec.m, spec.p);
            Generated::System(s, p)
        }
        Family::SparseBanded => {
            let (s, p) = gen_sparse(spec.n, spec.seed, spec.bandwidth, spec.rank_cap, spec.m, spec.p);
            Generated::System(s, p)
        }
        Family::BrakeToy => {
            let brake = gen_brake_toy(spec.n, spec.seed, spec.speed)?;
            let pair = gen_restriction(2 * spec.n, spec.m, spec.p, spec.seed.wrapping_add(1));
            Generated::Brake(brake, pair)
        }
    })
}

fn randn(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// Uniform on `(0, 1]`.
fn unit(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

fn symmetric_min_eig(a: &DMatrix<f64>) -> f64 {
    a.clone().symmetric_eigen().eigenvalues.min()
}

/// `(A + Aᵀ)/2` shifted by `(−λ_min + u)I` when `λ_min < 10⁻⁴`.
fn random_pd(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    let a = randn(rng, k, k);
    let mut s = (&a + a.transpose()) * 0.5;
    let lmin = symmetric_min_eig(&s);
    if lmin < PD_THRESHOLD {
        let shift = -lmin + 5.0 * unit(rng);
        for i in 0..k {
            s[(i, i)] += shift;
        }
    }
    s
}

fn rank_draw(rng: &mut ChaCha8Rng, rank_cap: usize) -> usize {
    if rank_cap == 0 {
        0
    } else {
        rng.random_range(1..=rank_cap)
    }
}

/// Standard normal `B` (`n × m`) and `C` (`p × n`).
pub fn gen_restriction(n: usize, m: usize, p: usize, seed: u64) -> RestrictionPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = from_real(&randn(&mut rng, n, m));
    let cm = from_real(&randn(&mut rng, p, n));
    RestrictionPair { b, c: cm }
}

/// Dense family: skew `J`, shifted symmetric `Q`, and
/// `R = Uᵀ blockdiag(R_p, 0) U` with a random PD block `R_p` of size at most
/// `rank_cap`.
pub fn gen_dense(n: usize, seed: u64, rank_cap: usize, m: usize, p: usize) -> (DhSystem, RestrictionPair) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = randn(&mut rng, n, n);
    let j = (&a - a.transpose()) * 0.5;
    let q = random_pd(&mut rng, n);
    let k = rank_draw(&mut rng, rank_cap.min(n));
    let mut r = DMatrix::zeros(n, n);
    if k > 0 {
        let rp = random_pd(&mut rng, k);
        r.view_mut((0, 0), (k, k)).copy_from(&rp);
        let u = randn(&mut rng, n, n).qr().q();
        r = u.transpose() * r * &u;
        r = (&r + r.transpose()) * 0.5;
    }
    let b = from_real(&randn(&mut rng, n, m));
    let cm = from_real(&randn(&mut rng, p, n));
    let sys = DhSystem::dense(from_real(&j), from_real(&r), from_real(&q)).expect("square blocks of equal size");
    (sys, RestrictionPair { b, c: cm })
}

/// Real sparse matrix with standard normal entries in `|i − j| ≤ band`.
fn banded(rng: &mut ChaCha8Rng, n: usize, band: usize) -> CscMatrix {
    let mut t = Vec::new();
    for col in 0..n {
        let lo = col.saturating_sub(band);
        let hi = (col + band).min(n - 1);
        for row in lo..=hi {
            t.push((row, col, c(rng.sample(StandardNormal))));
        }
    }
    CscMatrix::from_triplets(n, n, t)
}

fn sym_part(a: &CscMatrix, sign: f64) -> CscMatrix {
    a.add(c(0.5), &a.adjoint(), c(0.5 * sign))
}

/// Estimate of `λ_min` of a real symmetric sparse matrix by block inverse
/// iteration from below the Gershgorin bound.
fn smallest_eigenvalue(a: &CscMatrix) -> f64 {
    let n = a.nrows();
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for col in 0..n {
        let mut diag = 0.0;
        let mut off = 0.0;
        for (row, v) in a.column(col) {
            if row == col {
                diag = v.re;
            } else {
                off += v.norm();
            }
        }
        lower = lower.min(diag - off);
        upper = upper.max(diag + off);
    }
    let sigma = lower - 1e-3 * (1.0 + (upper - lower).abs());
    let shifted = a.add(c(1.0), &CscMatrix::identity(n), c(-sigma));
    let lu = match SparseLu::new(&shifted) {
        Ok(lu) => lu,
        Err(_) => return sigma,
    };
    let block = 4.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = from_real(&randn(&mut rng, n, block));
    let mut est = sigma;
    for _ in 0..60 {
        x = lu.solve(&x);
        x = x.qr().q();
        let h = x.adjoint() * a.mul_dense(&x);
        let h = (&h + h.adjoint()) * c(0.5);
        let next = linalg::hermitian_eigenvalues(&h)[0];
        let done = Float::abs(next - est) <= 1e-13 * (1.0 + Float::abs(next));
        est = next;
        if done {
            break;
        }
    }
    est
}

/// Sparse family with bandwidth `bandwidth`: banded skew `J`, banded
/// symmetric `Q` from a sparse random matrix shifted to PD, and `R = XᵀDX`
/// with `X` banded (half the bandwidth) and `D` diagonal with at most
/// `rank_cap` nonzeros.
pub fn gen_sparse(
    n: usize,
    seed: u64,
    bandwidth: usize,
    rank_cap: usize,
    m: usize,
    p: usize,
) -> (DhSystem, RestrictionPair) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j = sym_part(&banded(&mut rng, n, bandwidth), -1.0);

    // sprandn(n, n, 1/n) restricted to the band
    let mut t: Vec<(usize, usize, C64)> = Vec::new();
    for _ in 0..n {
        let row = rng.random_range(0..n);
        let col = rng.random_range(0..n);
        let v: f64 = rng.sample(StandardNormal);
        if row.abs_diff(col) <= bandwidth {
            t.push((row, col, c(v)));
        }
    }
    let mut q = sym_part(&CscMatrix::from_triplets(n, n, t), 1.0);
    let lmin = smallest_eigenvalue(&q);
    if lmin < PD_THRESHOLD {
        let shift = -lmin + 5.0 * unit(&mut rng);
        q = q.add(c(1.0), &CscMatrix::identity(n), c(shift));
    }

    let k = rank_draw(&mut rng, rank_cap.min(n));
    let mut d = Vec::new();
    if k > 0 {
        let h = n as f64 / k as f64;
        for i in 1..=k {
            let idx = ((i as f64 * h) as usize).clamp(1, n) - 1;
            d.push((idx, idx, c(5.0 * unit(&mut rng))));
        }
    }
    let d = CscMatrix::from_triplets(n, n, d);
    let x = banded(&mut rng, n, (bandwidth / 2).max(1));
    let r = sym_part(&x.adjoint().matmul(&d.matmul(&x)), 1.0);

    let b = from_real(&randn(&mut rng, n, m));
    let cm = from_real(&randn(&mut rng, p, n));
    let sys =
        DhSystem::new(Matrix::Sparse(j), Matrix::Sparse(r), Matrix::Sparse(q)).expect("square blocks of equal size");
    (sys, RestrictionPair { b, c: cm })
}

fn gram(rng: &mut ChaCha8Rng, q: usize, rank: usize, scale: f64) -> DMatrix<f64> {
    let x = randn(rng, q, rank);
    &x * x.transpose() * (scale / q as f64)
}

/// Random second-order model at speed `speed`: SPD `M`, PSD `D_M`, `D_R`,
/// SPD `K_E`, symmetric `K_g` scaled down until `K(Ω) ≻ 0`, skew `D_G`.
pub fn gen_brake_toy(q: usize, seed: u64, speed: f64) -> Result<SecondOrderDh> {
    if q == 0 {
        return Err(Error::InvalidArgument("q must be at least 1".into()));
    }
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!(
            "rotation speed must be positive, got {speed}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eye = DMatrix::<f64>::identity(q, q);
    let low = (q / 4).max(1);
    let m = gram(&mut rng, q, q, 1.0) + &eye;
    let dm = gram(&mut rng, q, low, 0.2);
    let dr = gram(&mut rng, q, low, 0.1);
    let ke = gram(&mut rng, q, q, 4.0) + &eye;
    let g = randn(&mut rng, q, q);
    let kg0 = (&g + g.transpose()) * (0.5 / Float::sqrt(q as f64));
    let g = randn(&mut rng, q, q);
    let dg = (&g - g.transpose()) * (0.5 / Float::sqrt(q as f64));

    let mut scale = 0.5;
    let mut kg = &kg0 * scale;
    let mut ok = false;
    for _ in 0..MAX_STIFFNESS_RETRIES {
        kg = &kg0 * scale;
        if symmetric_min_eig(&(&ke + &kg * (speed * speed))) > 1e-8 {
            ok = true;
            break;
        }
        scale *= 0.5;
    }
    if !ok {
        return Err(Error::Singular("K(Ω) stays indefinite after rescaling K_g".into()));
    }
    SecondOrderDh::new(
        from_real(&m),
        from_real(&dm),
        from_real(&dr),
        from_real(&ke),
        from_real(&kg),
        from_real(&dg),
        None,
        speed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brake::assemble_brake_dh;
    use crate::linalg::CMat;
    use crate::system::{validate_dh, NOT_ASYMPTOTICALLY_STABLE};

    fn rank(a: &CMat) -> usize {
        let s = a.clone().singular_values();
        let top = s.max();
        s.iter().filter(|&&x| x > 1e-10 * top.max(1.0)).count()
    }

    #[test]
    fn dense_instances_are_valid() {
        for seed in 0..5 {
            let (sys, pair) = gen_dense(30, seed, 3, 2, 3);
            let rep = validate_dh(&sys, 1e-10);
            assert!(rep.ok, "seed {seed}: {rep}");
            assert!(rank(&sys.r().to_dense()) <= 3);
            assert_eq!((pair.m(), pair.p()), (2, 3));
        }
    }

    #[test]
    fn dense_is_deterministic_and_seed_sensitive() {
        let (a, _) = gen_dense(2, 7, 1, 1, 1);
        let (b, _) = gen_dense(2, 7, 1, 1, 1);
        let (c, _) = gen_dense(2, 8, 1, 1, 1);
        assert_eq!(a.j().to_dense(), b.j().to_dense());
        assert_eq!(a.q().to_dense(), b.q().to_dense());
        assert!(linalg::frobenius(&(a.j().to_dense() - c.j().to_dense())) > 0.0);
    }

    #[test]
    fn sparse_instances_respect_band() {
        for seed in 0..3 {
            let (sys, _) = gen_sparse(60, seed, 4, 6, 2, 2);
            match sys.j() {
                Matrix::Sparse(j) => assert!(j.bandwidth() <= 4),
                Matrix::Dense(_) => panic!("expected sparse storage"),
            }
            assert_structure(&sys);
        }
    }

    /// Sparse `R` may leave modes undamped to rounding level, so only the
    /// structural properties are asserted.
    fn assert_structure(sys: &DhSystem) {
        let rep = validate_dh(sys, 1e-10);
        for v in &rep.violations {
            assert_eq!(v.property, NOT_ASYMPTOTICALLY_STABLE, "{rep}");
        }
    }

    #[test]
    fn full_band_is_valid() {
        let (sys, _) = gen_sparse(20, 3, 20, 2, 1, 1);
        assert_structure(&sys);
    }

    #[test]
    fn zero_rank_cap_is_only_lyapunov_stable() {
        let (sys, _) = gen_sparse(20, 1, 3, 0, 1, 1);
        assert_eq!(sys.r().frobenius(), 0.0);
        let rep = validate_dh(&sys, 1e-10);
        assert!(rep.has(NOT_ASYMPTOTICALLY_STABLE));
    }

    #[test]
    fn smallest_eigenvalue_estimate() {
        let (sys, _) = gen_sparse(50, 4, 5, 5, 1, 1);
        let q = sys.q().to_sparse();
        let exact = linalg::hermitian_eigenvalues(&q.to_dense())[0];
        assert!(Float::abs(smallest_eigenvalue(&q) - exact) < 1e-8 * (1.0 + Float::abs(exact)));
    }

    #[test]
    fn brake_toys_validate() {
        for speed in [0.5, 1.0, 10.0] {
            let b = gen_brake_toy(10, 3, speed).unwrap();
            let rep = validate_dh(&assemble_brake_dh(&b).unwrap(), 1e-10);
            assert!(rep.ok, "Ω = {speed}: {rep}");
        }
    }

    #[test]
    fn generate_checks_spec() {
        let mut spec = GenSpec::new(Family::Dense, 1, 0);
        assert!(generate(&spec).is_err());
        spec.n = 10;
        spec.rank_cap = 11;
        assert!(generate(&spec).is_err());
        spec.rank_cap = 2;
        assert!(matches!(generate(&spec), Ok(Generated::System(..))));
    }
}
