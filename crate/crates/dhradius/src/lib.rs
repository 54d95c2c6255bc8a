//! File formats, run configuration, reports and the `dhradius` command for
//! [`dhradius_core`].
//!
//! A run reads a directory of Matrix Market files (`J.mtx`, `R.mtx`,
//! `Q.mtx`, `B.mtx` and optionally `C.mtx`, or the brake blocks `M.mtx`,
//! `DM.mtx`, `DR.mtx`, `KE.mtx`, `Kg.mtx`, `DG.mtx` [, `N.mtx`]), dispatches
//! to the library and returns a [`ResultReport`].

pub mod config;
pub mod input;
pub mod mm;
pub mod report;
pub mod run;

pub use config::{RunConfig, Task, Term};
pub use dhradius_core;
pub use dhradius_core::verify::{
    sample_structured_spectra, verify_unstructured, PerturbedTerm, SpectraSample, Verification,
};
pub use mm::{format_matrix_market, parse_matrix_market, read_matrix_market, write_matrix_market, MmError};
pub use report::ResultReport;
pub use run::run;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    MatrixMarket(#[from] MmError),
    #[error("input is not a valid DH system: {0}")]
    Validation(String),
    #[error("{task}: {source}")]
    Core { task: String, source: dhradius_core::Error },
}

impl RunError {
    pub fn core(task: &str, source: dhradius_core::Error) -> Self {
        RunError::Core {
            task: task.into(),
            source,
        }
    }

    /// 1 for I/O, 2 for invalid input or configuration, 3 for numerical
    /// failures, 4 for non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Io(_) | RunError::MatrixMarket(MmError::Io { .. }) => 1,
            RunError::Config(_) | RunError::MatrixMarket(_) | RunError::Validation(_) => 2,
            RunError::Core { source, .. } => match source {
                dhradius_core::Error::NoConvergence(_) => 4,
                e if e.is_numerical() => 3,
                _ => 2,
            },
        }
    }
}
