//! Loading systems from a directory of Matrix Market files.

use std::path::PathBuf;

use dhradius_core::brake::{assemble_brake_dh, BrakeModel, SecondOrderDh};
use dhradius_core::hinf::StateSpace;
use dhradius_core::system::{dense_spectrum, validate_dh};
use dhradius_core::{DhModel, DhSystem, Matrix, RestrictionPair};

use crate::config::RunConfig;
use crate::mm::{read_matrix_market, write_matrix_market};
use crate::RunError;

pub const SYSTEM_FILES: [&str; 3] = ["J", "R", "Q"];
pub const BRAKE_FILES: [&str; 6] = ["M", "DM", "DR", "KE", "Kg", "DG"];

/// A loaded model: an explicit DH system, or a second-order brake model
/// used through its implicit `Q⁻¹` form.
#[allow(clippy::large_enum_variant)]
pub enum Model {
    System(DhSystem),
    Brake(BrakeModel),
}

impl Model {
    pub fn as_dyn(&self) -> &dyn DhModel {
        match self {
            Model::System(s) => s,
            Model::Brake(b) => b,
        }
    }

    /// The explicit system, assembling brake models.
    pub fn assembled(&self) -> Result<DhSystem, RunError> {
        match self {
            Model::System(s) => Ok(s.clone()),
            Model::Brake(b) => assemble_brake_dh(b.second_order()).map_err(|e| RunError::core("assemble", e)),
        }
    }

    /// `(min Im λ, max Im λ)` of the dense spectrum.
    pub fn imag_range(&self) -> Result<(f64, f64), RunError> {
        let ev = dense_spectrum(&self.assembled()?).map_err(|e| RunError::core("spectrum", e))?;
        let lo = ev.iter().map(|z| z.im).fold(f64::INFINITY, f64::min);
        let hi = ev.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
        Ok((lo, hi))
    }
}

pub struct Input {
    pub model: Model,
    pub pair: RestrictionPair,
    /// Second-order data, kept for sweeps over the rotation speed.
    pub brake: Option<SecondOrderDh>,
}

fn path_of(config: &RunConfig, name: &str) -> Option<PathBuf> {
    if let Some(p) = config.files.get(name) {
        return Some(p.clone());
    }
    let p = config.input.as_ref()?.join(format!("{name}.mtx"));
    p.exists().then_some(p)
}

fn require(config: &RunConfig, name: &str) -> Result<Matrix, RunError> {
    let path = path_of(config, name).ok_or_else(|| RunError::Config(format!("missing input matrix {name}.mtx")))?;
    Ok(read_matrix_market(path)?)
}

fn optional(config: &RunConfig, name: &str) -> Result<Option<Matrix>, RunError> {
    path_of(config, name)
        .map(read_matrix_market)
        .transpose()
        .map_err(RunError::from)
}

fn restriction(config: &RunConfig) -> Result<RestrictionPair, RunError> {
    let b = require(config, "B")?.to_dense();
    let c = optional(config, "C")?.map(|m| m.to_dense());
    match c {
        Some(c) => RestrictionPair::new(b, c),
        None => RestrictionPair::symmetric(b),
    }
    .map_err(|e| RunError::core("restriction", e))
}

pub fn is_brake_input(config: &RunConfig) -> bool {
    path_of(config, "M").is_some()
}

/// Reads the DH or brake model and the restriction `B`, `C` (`C = Bᴴ` when
/// `C.mtx` is absent).
pub fn load(config: &RunConfig) -> Result<Input, RunError> {
    let pair = restriction(config)?;
    if is_brake_input(config) {
        let [m, dm, dr, ke, kg, dg] = BRAKE_FILES.map(|name| require(config, name));
        let brake = SecondOrderDh::new(m?, dm?, dr?, ke?, kg?, dg?, optional(config, "N")?, config.speed)
            .map_err(|e| RunError::core("brake input", e))?;
        let model = BrakeModel::new(brake.clone()).map_err(|e| RunError::core("brake input", e))?;
        return Ok(Input {
            model: Model::Brake(model),
            pair,
            brake: Some(brake),
        });
    }
    let [j, r, q] = SYSTEM_FILES.map(|name| require(config, name));
    let system = DhSystem::new(j?, r?, q?).map_err(|e| RunError::core("input", e))?;
    if config.validate {
        let rep = validate_dh(&system, 1e-10);
        if !rep.ok {
            return Err(RunError::Validation(rep.to_string()));
        }
    }
    Ok(Input {
        model: Model::System(system),
        pair,
        brake: None,
    })
}

/// `A.mtx`, `B.mtx`, `C.mtx` as a state-space triple, when `A.mtx` exists.
pub fn load_state_space(config: &RunConfig) -> Result<Option<StateSpace>, RunError> {
    let Some(a) = optional(config, "A")? else {
        return Ok(None);
    };
    let b = require(config, "B")?.to_dense();
    let c = require(config, "C")?.to_dense();
    StateSpace::new(a.to_dense(), b, c)
        .map(Some)
        .map_err(|e| RunError::core("state space", e))
}

/// Writes `matrices` as `<name>.mtx` into `dir` and returns the file names.
pub fn write_all(dir: &std::path::Path, matrices: &[(&str, Matrix)]) -> Result<Vec<String>, RunError> {
    std::fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
    let mut names = Vec::new();
    for (name, m) in matrices {
        let file = format!("{name}.mtx");
        write_matrix_market(dir.join(&file), m)?;
        names.push(file);
    }
    Ok(names)
}
