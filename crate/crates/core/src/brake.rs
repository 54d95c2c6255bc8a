//! Second-order (brake-form) models
//! `M ẍ + (D(Ω) + G(Ω)) ẋ + (K(Ω) + N) x = 0` in DH form with
//! `Q⁻¹ = blockdiag(M, K(Ω))`.
//!
//! [`BrakeModel`] never forms `Q`: products with `Q` are solves with `M` and
//! `K(Ω)`, and shifted solves eliminate the first block so only `K(Ω)` and
//! `K(Ω) + iωM̃` with `M̃ = iωM + D(Ω) + G(Ω)` are factored.

use alloc::format;
use alloc::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, CMat, C64, I};
use crate::shifted::ShiftSolve;
use crate::system::{DhModel, DhSystem, Matrix, MatrixLu, Storage, DENSE_CHECK_LIMIT};

/// Largest `q` for which [`assemble_brake_dh`] inverts `M` and `K(Ω)`.
pub const ASSEMBLY_LIMIT: usize = 2000;

#[derive(Debug, Clone)]
pub struct SecondOrderDh {
    pub m: Matrix,
    pub dm: Matrix,
    pub dr: Matrix,
    pub ke: Matrix,
    pub kg: Matrix,
    pub dg: Matrix,
    pub n: Option<Matrix>,
    /// Rotation speed `Ω > 0`.
    pub speed: f64,
}

/// `Σ αᵢ Aᵢ`, dense unless some term is sparse.
fn lin(terms: &[(C64, &Matrix)]) -> Matrix {
    let (r, c) = (terms[0].1.nrows(), terms[0].1.ncols());
    if terms.iter().all(|(_, a)| a.storage() == Storage::Dense) {
        let mut out = CMat::zeros(r, c);
        for (alpha, a) in terms {
            if let Matrix::Dense(d) = a {
                out += d * *alpha;
            }
        }
        Matrix::Dense(out)
    } else {
        let mut out = crate::linalg::CscMatrix::zeros(r, c);
        for (alpha, a) in terms {
            out = out.add(C64::new(1.0, 0.0), &a.to_sparse(), *alpha);
        }
        Matrix::Sparse(out)
    }
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

impl SecondOrderDh {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        m: impl Into<Matrix>,
        dm: impl Into<Matrix>,
        dr: impl Into<Matrix>,
        ke: impl Into<Matrix>,
        kg: impl Into<Matrix>,
        dg: impl Into<Matrix>,
        n: Option<Matrix>,
        speed: f64,
    ) -> Result<Self> {
        let s = Self {
            m: m.into(),
            dm: dm.into(),
            dr: dr.into(),
            ke: ke.into(),
            kg: kg.into(),
            dg: dg.into(),
            n,
            speed,
        };
        s.check()?;
        Ok(s)
    }

    /// Identity mass and stiffness, no damping, `Ω = 1`.
    pub fn identity(q: usize) -> Self {
        let eye = || Matrix::Dense(CMat::identity(q, q));
        let zero = || Matrix::Dense(CMat::zeros(q, q));
        Self {
            m: eye(),
            dm: zero(),
            dr: zero(),
            ke: eye(),
            kg: zero(),
            dg: zero(),
            n: None,
            speed: 1.0,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "rotation speed must be positive, got {}",
                self.speed
            )));
        }
        let q = self.m.nrows();
        if q == 0 {
            return Err(Error::Dimension("empty second-order model".into()));
        }
        let blocks = [
            ("M", Some(&self.m)),
            ("D_M", Some(&self.dm)),
            ("D_R", Some(&self.dr)),
            ("K_E", Some(&self.ke)),
            ("K_g", Some(&self.kg)),
            ("D_G", Some(&self.dg)),
            ("N", self.n.as_ref()),
        ];
        for (name, b) in blocks {
            if let Some(b) = b {
                if b.nrows() != q || b.ncols() != q {
                    return Err(Error::Dimension(format!(
                        "{name} is {}×{}, expected {q}×{q}",
                        b.nrows(),
                        b.ncols()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Same model at another rotation speed.
    pub fn with_speed(&self, speed: f64) -> Result<Self> {
        let mut s = self.clone();
        s.speed = speed;
        s.check()?;
        Ok(s)
    }

    pub fn q(&self) -> usize {
        self.m.nrows()
    }

    /// `K(Ω) = K_E + Ω² K_g`.
    pub fn stiffness(&self) -> Matrix {
        lin(&[(re(1.0), &self.ke), (re(self.speed * self.speed), &self.kg)])
    }

    /// `D(Ω) = D_M + D_R / Ω`.
    pub fn damping(&self) -> Matrix {
        lin(&[(re(1.0), &self.dm), (re(1.0 / self.speed), &self.dr)])
    }

    /// `G(Ω) = Ω D_G`.
    pub fn gyroscopic(&self) -> Matrix {
        lin(&[(re(self.speed), &self.dg)])
    }

    pub fn is_real(&self) -> bool {
        [&self.m, &self.dm, &self.dr, &self.ke, &self.kg, &self.dg]
            .iter()
            .all(|b| b.is_real())
            && self.n.as_ref().is_none_or(|n| n.is_real())
    }

    fn storage(&self) -> Storage {
        if [&self.m, &self.dm, &self.dr, &self.ke, &self.kg, &self.dg]
            .iter()
            .any(|b| b.storage() == Storage::Sparse)
        {
            Storage::Sparse
        } else {
            Storage::Dense
        }
    }
}

fn pd_check(name: &str, a: &Matrix) -> Result<()> {
    if a.nrows() > DENSE_CHECK_LIMIT && a.storage() == Storage::Sparse {
        return Ok(());
    }
    let d = a.to_dense();
    let h = (&d + d.adjoint()) * re(0.5);
    let lmin = hermitian_eigenvalues(&h)[0];
    let scale = crate::linalg::norm2(&h);
    if !(lmin > 1e-14 * scale) {
        return Err(Error::Singular(format!(
            "{name} is not positive definite (λ_min = {lmin:e})"
        )));
    }
    Ok(())
}

fn blocks2(a: &CMat, q: usize) -> (CMat, CMat) {
    (a.rows(0, q).into_owned(), a.rows(q, q).into_owned())
}

fn stack(top: &CMat, bottom: &CMat) -> CMat {
    let mut out = CMat::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.rows_mut(0, top.nrows()).copy_from(top);
    out.rows_mut(top.nrows(), bottom.nrows()).copy_from(bottom);
    out
}

/// Dense `J`, `R`, `Q = blockdiag(M, K(Ω))⁻¹`.
pub fn assemble_brake_dh(brake: &SecondOrderDh) -> Result<DhSystem> {
    brake.check()?;
    let q = brake.q();
    if q > ASSEMBLY_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "q = {q} exceeds the dense assembly limit {ASSEMBLY_LIMIT}"
        )));
    }
    let k = brake.stiffness().to_dense();
    let d = brake.damping().to_dense();
    let g = brake.gyroscopic().to_dense();
    let m = brake.m.to_dense();
    let n = brake
        .n
        .as_ref()
        .map(|n| n.to_dense())
        .unwrap_or_else(|| CMat::zeros(q, q));
    let half = re(0.5);
    let mut j = CMat::zeros(2 * q, 2 * q);
    j.view_mut((0, 0), (q, q)).copy_from(&(-&g));
    j.view_mut((0, q), (q, q)).copy_from(&(-(&k + &n * half)));
    j.view_mut((q, 0), (q, q)).copy_from(&(&k + n.transpose() * half));
    let mut r = CMat::zeros(2 * q, 2 * q);
    r.view_mut((0, 0), (q, q)).copy_from(&d);
    r.view_mut((0, q), (q, q)).copy_from(&(&n * half));
    r.view_mut((q, 0), (q, q)).copy_from(&(n.transpose() * half));
    let inv = |name: &str, a: &CMat| -> Result<CMat> {
        pd_check(name, &Matrix::Dense(a.clone()))?;
        let h = (a + a.adjoint()) * half;
        let chol = h
            .cholesky()
            .ok_or_else(|| Error::Singular(format!("{name} is not positive definite")))?;
        let x = chol.inverse();
        Ok((&x + x.adjoint()) * half)
    };
    let mut qm = CMat::zeros(2 * q, 2 * q);
    qm.view_mut((0, 0), (q, q)).copy_from(&inv("M", &m)?);
    qm.view_mut((q, q), (q, q)).copy_from(&inv("K(Ω)", &k)?);
    DhSystem::dense(j, r, qm)
}

/// DH model of a second-order system with `Q` applied through solves.
#[derive(Debug, Clone)]
pub struct BrakeModel {
    brake: SecondOrderDh,
    k: Matrix,
    d: Matrix,
    g: Matrix,
    lu_m: Arc<MatrixLu>,
    lu_k: Arc<MatrixLu>,
    real: bool,
}

impl BrakeModel {
    pub fn new(brake: SecondOrderDh) -> Result<Self> {
        brake.check()?;
        let k = brake.stiffness();
        pd_check("M", &brake.m)?;
        pd_check("K(Ω)", &k)?;
        let lu_m = MatrixLu::new(&brake.m).map_err(|_| Error::Singular("M".into()))?;
        let lu_k = MatrixLu::new(&k).map_err(|_| Error::Singular("K(Ω)".into()))?;
        Ok(Self {
            d: brake.damping(),
            g: brake.gyroscopic(),
            real: brake.is_real(),
            k,
            lu_m: Arc::new(lu_m),
            lu_k: Arc::new(lu_k),
            brake,
        })
    }

    pub fn second_order(&self) -> &SecondOrderDh {
        &self.brake
    }

    pub fn q(&self) -> usize {
        self.brake.q()
    }

    /// `blockdiag(M, K(Ω)) x = Q⁻¹ x`.
    pub fn mul_q_inv(&self, x: &CMat) -> CMat {
        let (x1, x2) = blocks2(x, self.q());
        stack(&self.brake.m.mul(&x1), &self.k.mul(&x2))
    }

    fn shift(&self, omega: f64) -> Result<BrakeShift> {
        let q = self.q();
        let iw = I * omega;
        let singular = |_| Error::ShiftOnSpectrum {
            omega,
            residual: f64::INFINITY,
        };
        // M̃ = iωM + D + G
        let mt = lin(&[(iw, &self.brake.m), (re(1.0), &self.d), (re(1.0), &self.g)]);
        let kind = match &self.brake.n {
            None => {
                let s = lin(&[(re(1.0), &self.k), (iw, &mt)]);
                ShiftKind::Eliminated {
                    s: MatrixLu::new(&s).map_err(singular)?,
                    mt,
                }
            }
            Some(n) => {
                // P = [[M̃, K + N], [−K, iωK]]
                let top_right = lin(&[(re(1.0), &self.k), (re(1.0), n)]);
                let p = block_matrix(
                    q,
                    [&mt, &top_right, &lin(&[(re(-1.0), &self.k)]), &lin(&[(iw, &self.k)])],
                );
                ShiftKind::Assembled(MatrixLu::new(&p).map_err(singular)?)
            }
        };
        Ok(BrakeShift {
            omega,
            q,
            m: self.brake.m.clone(),
            k: self.k.clone(),
            lu_k: self.lu_k.clone(),
            kind,
        })
    }

    /// `Z` with `(iωQ⁻¹ − (J − R)) Z = rhs`, or the adjoint system.
    pub fn solve_pencil(&self, omega: f64, rhs: &CMat, adjoint: bool) -> Result<CMat> {
        if rhs.nrows() != 2 * self.q() {
            return Err(Error::Dimension(format!(
                "right-hand side has {} rows, expected {}",
                rhs.nrows(),
                2 * self.q()
            )));
        }
        Ok(self.shift(omega)?.solve_pencil(rhs, adjoint))
    }
}

fn block_matrix(q: usize, parts: [&Matrix; 4]) -> Matrix {
    let offsets = [(0, 0), (0, q), (q, 0), (q, q)];
    if parts.iter().all(|p| p.storage() == Storage::Dense) {
        let mut out = CMat::zeros(2 * q, 2 * q);
        for (p, (r, c)) in parts.iter().zip(offsets) {
            out.view_mut((r, c), (q, q)).copy_from(&p.to_dense());
        }
        Matrix::Dense(out)
    } else {
        let trip = parts.iter().zip(offsets).flat_map(|(p, (r, c))| {
            p.to_sparse()
                .triplets()
                .map(move |(i, j, v)| (i + r, j + c, v))
                .collect::<alloc::vec::Vec<_>>()
        });
        Matrix::Sparse(crate::linalg::CscMatrix::from_triplets(2 * q, 2 * q, trip))
    }
}

#[derive(Debug)]
enum ShiftKind {
    /// LU of `K + iωM̃`, valid when `N = 0`.
    Eliminated { s: MatrixLu, mt: Matrix },
    /// LU of the assembled pencil.
    Assembled(MatrixLu),
}

/// Factorization of `D(iω)` for a [`BrakeModel`], using `D(iω) = P Q` with
/// `P = iωQ⁻¹ − (J − R)`.
#[derive(Debug)]
struct BrakeShift {
    omega: f64,
    q: usize,
    m: Matrix,
    k: Matrix,
    lu_k: Arc<MatrixLu>,
    kind: ShiftKind,
}

impl BrakeShift {
    fn solve_pencil(&self, w: &CMat, adjoint: bool) -> CMat {
        let iw = I * self.omega;
        let (w1, w2) = blocks2(w, self.q);
        match (&self.kind, adjoint) {
            (ShiftKind::Assembled(lu), false) => lu.solve(w),
            (ShiftKind::Assembled(lu), true) => lu.solve_adjoint(w),
            (ShiftKind::Eliminated { s, mt }, false) => {
                // (−K − iωM̃) Z₁ = W₂ − iωW₁,  K Z₂ = W₁ − M̃ Z₁
                let z1 = s.solve(&(&w1 * iw - &w2));
                let z2 = self.lu_k.solve(&(&w1 - mt.mul(&z1)));
                stack(&z1, &z2)
            }
            (ShiftKind::Eliminated { s, mt }, true) => {
                // −(K + iωM̃)ᴴ Y₂ = W₁ − M̃ᴴ K⁻¹ W₂,  Y₁ = K⁻¹ W₂ + iω Y₂
                let kw2 = self.lu_k.solve_adjoint(&w2);
                let y2 = -s.solve_adjoint(&(&w1 - mt.adjoint_mul(&kw2)));
                let y1 = kw2 + &y2 * iw;
                stack(&y1, &y2)
            }
        }
    }
}

impl ShiftSolve for BrakeShift {
    fn omega(&self) -> f64 {
        self.omega
    }

    fn solve_raw(&self, rhs: &CMat, adjoint: bool) -> CMat {
        if adjoint {
            // D⁻ᴴ = P⁻ᴴ Q⁻¹
            let (x1, x2) = blocks2(rhs, self.q);
            self.solve_pencil(&stack(&self.m.mul(&x1), &self.k.mul(&x2)), true)
        } else {
            // D⁻¹ = Q⁻¹ P⁻¹
            let z = self.solve_pencil(rhs, false);
            let (z1, z2) = blocks2(&z, self.q);
            stack(&self.m.mul(&z1), &self.k.mul(&z2))
        }
    }
}

impl DhModel for BrakeModel {
    fn dim(&self) -> usize {
        2 * self.q()
    }

    fn storage(&self) -> Storage {
        self.brake.storage()
    }

    fn is_real(&self) -> bool {
        self.real
    }

    fn mul_j(&self, x: &CMat) -> CMat {
        let (x1, x2) = blocks2(x, self.q());
        let mut top = -self.g.mul(&x1) - self.k.mul(&x2);
        let mut bottom = self.k.mul(&x1);
        if let Some(n) = &self.brake.n {
            top -= n.mul(&x2) * re(0.5);
            bottom += n.adjoint_mul(&x1) * re(0.5);
        }
        stack(&top, &bottom)
    }

    fn mul_r(&self, x: &CMat) -> CMat {
        let (x1, x2) = blocks2(x, self.q());
        let mut top = self.d.mul(&x1);
        let mut bottom = CMat::zeros(x2.nrows(), x2.ncols());
        if let Some(n) = &self.brake.n {
            top += n.mul(&x2) * re(0.5);
            bottom += n.adjoint_mul(&x1) * re(0.5);
        }
        stack(&top, &bottom)
    }

    fn mul_q(&self, x: &CMat) -> CMat {
        let (x1, x2) = blocks2(x, self.q());
        stack(&self.lu_m.solve(&x1), &self.lu_k.solve(&x2))
    }

    fn factor_shift(&self, omega: f64) -> Result<Arc<dyn ShiftSolve>> {
        Ok(Arc::new(self.shift(omega)?))
    }

    fn dense_state_matrix(&self) -> Option<CMat> {
        None
    }
}

/// `Z` with `(iωQ⁻¹ − (J − R)) Z = rhs` using only factorizations of `K(Ω)`
/// and `K(Ω) + iωM̃`.
pub fn solve_secondorder(brake: &SecondOrderDh, omega: f64, rhs: &CMat) -> Result<CMat> {
    BrakeModel::new(brake.clone())?.solve_pencil(omega, rhs, false)
}
