use alloc::string::String;

use thiserror::Error;

use crate::system::ValidationReport;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid DH system: {0}")]
    Validation(ValidationReport),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shift on spectrum: iω with ω = {omega} is (numerically) an eigenvalue, backward error {residual:e}")]
    ShiftOnSpectrum { omega: f64, residual: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("basis not orthonormal (defect {0:e})")]
    BasisNotOrthonormal(f64),

    #[error("oblique basis breakdown at iteration {iteration}")]
    ObliqueBreakdown { iteration: usize },

    #[error("tangential degeneracy: H̃0 is numerically singular (min diag(L) / ‖L‖ = {0:e})")]
    TangentialDegeneracy(f64),

    #[error("system is not asymptotically stable (max real part {0:e})")]
    Unstable(f64),

    #[error("radius infinite: transfer function vanishes at every probe frequency")]
    RadiusInfinite,

    #[error("radius not determined on interval: the inner supremum was not attained at any probe")]
    RadiusNotDetermined,

    #[error("eigenvalue iteration did not converge: {0}")]
    NoConvergence(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to invalid input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ShiftOnSpectrum { .. }
                | Error::Singular(_)
                | Error::BasisNotOrthonormal(_)
                | Error::ObliqueBreakdown { .. }
                | Error::TangentialDegeneracy(_)
                | Error::Unstable(_)
                | Error::RadiusInfinite
                | Error::RadiusNotDetermined
                | Error::NoConvergence(_)
        )
    }
}
