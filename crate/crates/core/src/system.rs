//! DH system types, structure repair and validation.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CscMatrix, C64};
use crate::shifted::{ExplicitShift, ShiftSolve};

/// Relative structure defects up to this size are repaired by symmetrization.
pub const REPAIR_TOL: f64 = 1e-10;

/// Default tolerance of [`validate_dh`].
pub const DEFAULT_TOL: f64 = 1e-10;

/// Above this dimension eigenvalue-based checks are skipped for sparse input.
pub const DENSE_CHECK_LIMIT: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Storage {
    Dense,
    Sparse,
}

/// A square or rectangular complex matrix in dense or sparse storage.
#[derive(Debug, Clone, PartialEq)]
pub enum Matrix {
    Dense(CMat),
    Sparse(CscMatrix),
}

impl Matrix {
    pub fn nrows(&self) -> usize {
        match self {
            Matrix::Dense(a) => a.nrows(),
            Matrix::Sparse(a) => a.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Matrix::Dense(a) => a.ncols(),
            Matrix::Sparse(a) => a.ncols(),
        }
    }

    pub fn storage(&self) -> Storage {
        match self {
            Matrix::Dense(_) => Storage::Dense,
            Matrix::Sparse(_) => Storage::Sparse,
        }
    }

    pub fn mul(&self, x: &CMat) -> CMat {
        match self {
            Matrix::Dense(a) => a * x,
            Matrix::Sparse(a) => a.mul_dense(x),
        }
    }

    pub fn adjoint_mul(&self, x: &CMat) -> CMat {
        match self {
            Matrix::Dense(a) => a.adjoint() * x,
            Matrix::Sparse(a) => a.adjoint_mul_dense(x),
        }
    }

    pub fn to_dense(&self) -> CMat {
        match self {
            Matrix::Dense(a) => a.clone(),
            Matrix::Sparse(a) => a.to_dense(),
        }
    }

    pub fn to_sparse(&self) -> CscMatrix {
        match self {
            Matrix::Dense(a) => CscMatrix::from_dense(a),
            Matrix::Sparse(a) => a.clone(),
        }
    }

    pub fn adjoint(&self) -> Matrix {
        match self {
            Matrix::Dense(a) => Matrix::Dense(a.adjoint()),
            Matrix::Sparse(a) => Matrix::Sparse(a.adjoint()),
        }
    }

    pub fn frobenius(&self) -> f64 {
        match self {
            Matrix::Dense(a) => linalg::frobenius(a),
            Matrix::Sparse(a) => a.frobenius(),
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            Matrix::Dense(a) => linalg::is_real(a),
            Matrix::Sparse(a) => a.is_real(),
        }
    }

    /// `α A + β B`, sparse if either operand is sparse.
    pub fn combine(&self, alpha: f64, other: &Matrix, beta: f64) -> Matrix {
        match (self, other) {
            (Matrix::Dense(a), Matrix::Dense(b)) => Matrix::Dense(a * c(alpha) + b * c(beta)),
            _ => Matrix::Sparse(self.to_sparse().add(c(alpha), &other.to_sparse(), c(beta))),
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        match (self, other) {
            (Matrix::Dense(a), Matrix::Dense(b)) => Matrix::Dense(a * b),
            _ => Matrix::Sparse(self.to_sparse().matmul(&other.to_sparse())),
        }
    }

    /// `‖A − s·Aᴴ‖_F` for `s = ±1`.
    fn symmetry_defect(&self, sign: f64) -> f64 {
        self.combine(1.0, &self.adjoint(), -sign).frobenius()
    }
}

/// LU factorization matching the storage of the factored matrix.
#[derive(Debug, Clone)]
pub enum MatrixLu {
    Dense(linalg::DenseLu),
    Sparse(linalg::SparseLu),
}

impl MatrixLu {
    pub fn new(a: &Matrix) -> Result<Self> {
        Ok(match a {
            Matrix::Dense(d) => MatrixLu::Dense(linalg::DenseLu::new(d.clone())?),
            Matrix::Sparse(s) => MatrixLu::Sparse(linalg::SparseLu::new(s)?),
        })
    }

    pub fn solve(&self, b: &CMat) -> CMat {
        match self {
            MatrixLu::Dense(lu) => lu.solve(b),
            MatrixLu::Sparse(lu) => lu.solve(b),
        }
    }

    pub fn solve_adjoint(&self, b: &CMat) -> CMat {
        match self {
            MatrixLu::Dense(lu) => lu.solve_adjoint(b),
            MatrixLu::Sparse(lu) => lu.solve_adjoint(b),
        }
    }
}

impl From<CMat> for Matrix {
    fn from(a: CMat) -> Self {
        Matrix::Dense(a)
    }
}

impl From<CscMatrix> for Matrix {
    fn from(a: CscMatrix) -> Self {
        Matrix::Sparse(a)
    }
}

/// The full-order model as seen by the solvers: products with `J`, `R`,
/// `Q` and factorizations of `D(iω) = iωI − (J − R)Q`.
pub trait DhModel {
    fn dim(&self) -> usize;
    fn storage(&self) -> Storage;
    /// True when `J`, `R` and `Q` are real; enables conjugate symmetry.
    fn is_real(&self) -> bool;
    fn mul_j(&self, x: &CMat) -> CMat;
    fn mul_r(&self, x: &CMat) -> CMat;
    fn mul_q(&self, x: &CMat) -> CMat;
    fn factor_shift(&self, omega: f64) -> Result<Arc<dyn ShiftSolve>>;
    /// `(J − R) Q` when it is available without extra solves.
    fn dense_state_matrix(&self) -> Option<CMat>;

    fn mul_state(&self, x: &CMat) -> CMat {
        let qx = self.mul_q(x);
        self.mul_j(&qx) - self.mul_r(&qx)
    }

    /// `(J − R)ᴴ x = −(J + R) x`.
    fn mul_jr_adjoint(&self, x: &CMat) -> CMat {
        -(self.mul_j(x) + self.mul_r(x))
    }
}

/// `ẋ = (J − R) Q x` with explicitly stored coefficients.
#[derive(Debug, Clone)]
pub struct DhSystem {
    j: Matrix,
    r: Matrix,
    q: Matrix,
    state: Matrix,
}

impl DhSystem {
    /// Assembles a system; all three matrices must be `n × n`. Relative
    /// structure defects up to [`REPAIR_TOL`] are symmetrized away, larger
    /// ones are left for [`validate_dh`] to report. Mixed storage is
    /// promoted to sparse.
    pub fn new(j: impl Into<Matrix>, r: impl Into<Matrix>, q: impl Into<Matrix>) -> Result<Self> {
        let (mut j, mut r, mut q) = (j.into(), r.into(), q.into());
        let n = j.nrows();
        for (name, m) in [("J", &j), ("R", &r), ("Q", &q)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Dimension(format!(
                    "{name} is {}×{}, expected {n}×{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if n == 0 {
            return Err(Error::Dimension("empty system".into()));
        }
        let sparse = [&j, &r, &q].iter().any(|m| m.storage() == Storage::Sparse);
        if sparse {
            j = Matrix::Sparse(j.to_sparse());
            r = Matrix::Sparse(r.to_sparse());
            q = Matrix::Sparse(q.to_sparse());
        }
        j = repair(j, -1.0);
        r = repair(r, 1.0);
        q = repair(q, 1.0);
        let state = j.combine(1.0, &r, -1.0).matmul(&q);
        Ok(Self { j, r, q, state })
    }

    pub fn dense(j: CMat, r: CMat, q: CMat) -> Result<Self> {
        Self::new(j, r, q)
    }

    pub fn j(&self) -> &Matrix {
        &self.j
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    /// `(J − R) Q`.
    pub fn state(&self) -> &Matrix {
        &self.state
    }

    pub fn n(&self) -> usize {
        self.j.nrows()
    }

    /// Same system with dense storage.
    pub fn to_dense(&self) -> DhSystem {
        Self {
            j: Matrix::Dense(self.j.to_dense()),
            r: Matrix::Dense(self.r.to_dense()),
            q: Matrix::Dense(self.q.to_dense()),
            state: Matrix::Dense(self.state.to_dense()),
        }
    }

    /// Validates with [`DEFAULT_TOL`] and returns an error unless the system
    /// is a valid asymptotically stable DH system.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = validate_dh(self, DEFAULT_TOL);
        if report.ok {
            Ok(())
        } else {
            Err(Error::Validation(report))
        }
    }
}

fn repair(m: Matrix, sign: f64) -> Matrix {
    let scale = m.frobenius();
    if scale == 0.0 {
        return m;
    }
    let defect = m.symmetry_defect(sign);
    if defect == 0.0 || defect > REPAIR_TOL * scale {
        return m;
    }
    m.combine(0.5, &m.adjoint(), 0.5 * sign)
}

impl DhModel for DhSystem {
    fn dim(&self) -> usize {
        self.n()
    }

    fn storage(&self) -> Storage {
        self.j.storage()
    }

    fn is_real(&self) -> bool {
        self.j.is_real() && self.r.is_real() && self.q.is_real()
    }

    fn mul_j(&self, x: &CMat) -> CMat {
        self.j.mul(x)
    }

    fn mul_r(&self, x: &CMat) -> CMat {
        self.r.mul(x)
    }

    fn mul_q(&self, x: &CMat) -> CMat {
        self.q.mul(x)
    }

    fn mul_state(&self, x: &CMat) -> CMat {
        self.state.mul(x)
    }

    fn factor_shift(&self, omega: f64) -> Result<Arc<dyn ShiftSolve>> {
        Ok(Arc::new(ExplicitShift::new(&self.state, omega)?))
    }

    fn dense_state_matrix(&self) -> Option<CMat> {
        match &self.state {
            Matrix::Dense(a) => Some(a.clone()),
            Matrix::Sparse(_) => None,
        }
    }
}

/// Restriction matrices `B` (n×m, full column rank) and `C` (p×n, full row rank).
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictionPair {
    pub b: CMat,
    pub c: CMat,
}

impl RestrictionPair {
    pub fn new(b: CMat, c: CMat) -> Result<Self> {
        if b.nrows() != c.ncols() {
            return Err(Error::Dimension(format!(
                "B has {} rows but C has {} columns",
                b.nrows(),
                c.ncols()
            )));
        }
        if b.ncols() == 0 || c.nrows() == 0 || b.ncols() > b.nrows() || c.nrows() > c.ncols() {
            return Err(Error::Dimension(format!(
                "restriction sizes B {}×{}, C {}×{}",
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        if !full_rank(&b) {
            return Err(Error::InvalidArgument("B does not have full column rank".into()));
        }
        if !full_rank(&c) {
            return Err(Error::InvalidArgument("C does not have full row rank".into()));
        }
        Ok(Self { b, c })
    }

    /// `C = Bᴴ`.
    pub fn symmetric(b: CMat) -> Result<Self> {
        let c = b.adjoint();
        Self::new(b, c)
    }

    pub fn n(&self) -> usize {
        self.b.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        if self.n() != n {
            return Err(Error::Dimension(format!(
                "restriction built for n = {}, system has n = {n}",
                self.n()
            )));
        }
        Ok(())
    }
}

fn full_rank(a: &CMat) -> bool {
    let s = a.clone().svd(false, false).singular_values;
    let max = s.iter().fold(0.0f64, |m, &v| m.max(v));
    let min = s.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    max > 0.0 && min > 1e-12 * max
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub property: String,
    pub defect: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
    /// Largest real part of the spectrum of `(J − R)Q`, when computed.
    pub spectral_abscissa: Option<f64>,
    pub asymptotically_stable: Option<bool>,
}

impl ValidationReport {
    pub fn has(&self, property: &str) -> bool {
        self.violations.iter().any(|v| v.property == property)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(
                f,
                "{} (defect {:.3e}, tolerance {:.3e})",
                v.property, v.defect, v.tolerance
            )?;
        }
        Ok(())
    }
}

pub const J_NOT_SKEW: &str = "J not skew-Hermitian";
pub const R_NOT_HERMITIAN: &str = "R not Hermitian";
pub const R_NOT_PSD: &str = "R not positive semi-definite";
pub const Q_NOT_HERMITIAN: &str = "Q not Hermitian";
pub const Q_NOT_PD: &str = "Q not positive definite";
pub const NOT_ASYMPTOTICALLY_STABLE: &str = "not asymptotically stable";

/// Checks the DH structure of `system`: skewness of `J`, Hermitian-ness and
/// semi-definiteness of `R`, definiteness of `Q`, and (up to
/// [`DENSE_CHECK_LIMIT`] for sparse input) asymptotic stability of `(J − R)Q`.
pub fn validate_dh(system: &DhSystem, tol: f64) -> ValidationReport {
    let mut violations = Vec::new();
    let mut push = |property: &str, defect: f64, tolerance: f64| {
        violations.push(Violation {
            property: property.into(),
            defect,
            tolerance,
        })
    };
    let n = system.n();
    let eig_ok = system.storage() == Storage::Dense || n <= DENSE_CHECK_LIMIT;

    let jn = system.j.frobenius();
    let jd = system.j.symmetry_defect(-1.0);
    if jd > tol * jn {
        push(J_NOT_SKEW, jd, tol * jn);
    }
    let rn = system.r.frobenius();
    let rd = system.r.symmetry_defect(1.0);
    if rd > tol * rn {
        push(R_NOT_HERMITIAN, rd, tol * rn);
    }
    let qn = system.q.frobenius();
    let qd = system.q.symmetry_defect(1.0);
    if qd > tol * qn {
        push(Q_NOT_HERMITIAN, qd, tol * qn);
    }
    if eig_ok {
        let r = system.r.to_dense();
        let rmin = linalg::hermitian_eigenvalues(&r).first().copied().unwrap_or(0.0);
        let r2 = linalg::norm2(&r);
        if rmin < -tol * r2 {
            push(R_NOT_PSD, -rmin, tol * r2);
        }
        let q = system.q.to_dense();
        let qmin = linalg::hermitian_eigenvalues(&q).first().copied().unwrap_or(0.0);
        if qmin <= 0.0 {
            push(Q_NOT_PD, -qmin, 0.0);
        }
    }

    let (mut abscissa, mut stable) = (None, None);
    if eig_ok {
        let a = system.state.to_dense();
        if let Ok(ev) = linalg::eigenvalues(&a) {
            let alpha = ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
            let thresh = -1e-12 * linalg::frobenius(&a);
            let is_stable = alpha < thresh;
            if !is_stable {
                push(NOT_ASYMPTOTICALLY_STABLE, alpha, thresh);
            }
            abscissa = Some(alpha);
            stable = Some(is_stable);
        }
    }

    ValidationReport {
        ok: violations.is_empty(),
        violations,
        spectral_abscissa: abscissa,
        asymptotically_stable: stable,
    }
}

/// Spectrum of `(J − R) Q` by dense eigen-decomposition.
pub fn dense_spectrum(system: &DhSystem) -> Result<Vec<C64>> {
    linalg::eigenvalues(&system.state.to_dense())
}
