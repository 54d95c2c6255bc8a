//! Run configuration: a TOML file whose keys the command-line flags mirror.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use dhradius_core::framework::FrameworkOptions;
use dhradius_core::probgen::{Family, GenSpec};
use dhradius_core::structured::StructuredOptions;
use dhradius_core::verify::PerturbedTerm;
use serde::{Deserialize, Serialize};

use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    RadiusRj,
    RadiusQ,
    RadiusStructured,
    RadiusStructuredSmall,
    Hinf,
    Gen,
    Verify,
    Sweep,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::RadiusRj => "radius-rj",
            Task::RadiusQ => "radius-q",
            Task::RadiusStructured => "radius-structured",
            Task::RadiusStructuredSmall => "radius-structured-small",
            Task::Hinf => "hinf",
            Task::Gen => "gen",
            Task::Verify => "verify",
            Task::Sweep => "sweep",
        }
    }
}

/// Perturbed coefficient for `verify`; `hermitian` samples structured
/// perturbations of `R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Term {
    J,
    R,
    Q,
    Hermitian,
}

impl Term {
    pub fn perturbed(self) -> Option<PerturbedTerm> {
        match self {
            Term::J => Some(PerturbedTerm::J),
            Term::R => Some(PerturbedTerm::R),
            Term::Q => Some(PerturbedTerm::Q),
            Term::Hermitian => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GenFamily {
    Dense,
    Sparse,
    Brake,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Option<Task>,
    /// Directory with `J.mtx`, `R.mtx`, `Q.mtx`, `B.mtx` [, `C.mtx`], or the
    /// brake blocks `M`, `DM`, `DR`, `KE`, `Kg`, `DG` [, `N`] with `B`, `C`.
    pub input: Option<PathBuf>,
    /// Per-matrix paths overriding the directory convention, keyed by name.
    pub files: BTreeMap<String, PathBuf>,
    /// Directory for the report, curves and generated matrices.
    pub output: Option<PathBuf>,
    pub emit_curve: bool,
    pub curve_points: usize,
    pub omega_range: Option<[f64; 2]>,
    /// Reject inputs that fail the DH structure check.
    pub validate: bool,

    pub eps: f64,
    pub k_max: usize,
    pub rho: usize,
    pub ell: Option<usize>,
    pub seed: u64,
    pub hinf_tol: f64,
    pub initial_points: Option<Vec<f64>>,

    pub gamma_inner: f64,
    pub gamma_outer: Option<f64>,
    pub inner_tol: f64,
    pub outer_tol: f64,
    pub penalty_factor: f64,

    /// Rotation speed for brake inputs.
    pub speed: f64,
    pub speeds: Vec<f64>,
    pub sweep_task: Task,

    pub term: Term,
    /// Radius and frequency to verify; computed when absent.
    pub radius: Option<f64>,
    pub omega: Option<f64>,
    pub samples: usize,
    pub sample_scale: f64,

    pub family: GenFamily,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub bandwidth: usize,
    pub rank_cap: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let fw = FrameworkOptions::default();
        let st = StructuredOptions::default();
        Self {
            task: None,
            input: None,
            files: BTreeMap::new(),
            output: None,
            emit_curve: false,
            curve_points: 400,
            omega_range: None,
            validate: true,
            eps: fw.eps,
            k_max: fw.k_max,
            rho: fw.rho,
            ell: fw.ell,
            seed: fw.seed,
            hinf_tol: fw.hinf_tol,
            initial_points: None,
            gamma_inner: st.gamma_inner,
            gamma_outer: st.gamma_outer,
            inner_tol: st.inner_tol,
            outer_tol: st.outer_tol,
            penalty_factor: st.penalty_factor,
            speed: 1.0,
            speeds: Vec::new(),
            sweep_task: Task::RadiusRj,
            term: Term::R,
            radius: None,
            omega: None,
            samples: 1000,
            sample_scale: 0.99,
            family: GenFamily::Dense,
            n: 40,
            m: 2,
            p: 2,
            bandwidth: 10,
            rank_cap: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))
    }

    pub fn task(&self) -> Result<Task, RunError> {
        self.task.ok_or_else(|| RunError::Config("no task given".into()))
    }

    pub fn framework_options(&self) -> FrameworkOptions {
        FrameworkOptions {
            eps: self.eps,
            k_max: self.k_max,
            rho: self.rho,
            ell: self.ell,
            seed: self.seed,
            hinf_tol: self.hinf_tol,
            initial_points: self.initial_points.clone(),
            keep_reduced: self.emit_curve,
        }
    }

    pub fn structured_options(&self) -> StructuredOptions {
        StructuredOptions {
            gamma_inner: self.gamma_inner,
            gamma_outer: self.gamma_outer,
            inner_tol: self.inner_tol,
            outer_tol: self.outer_tol,
            penalty_factor: self.penalty_factor,
            interval: self.omega_range.map(|[a, b]| (a, b)),
            eps: self.eps,
            k_max: self.k_max,
            rho: self.rho,
            ell: self.ell,
            seed: self.seed,
            initial_points: self.initial_points.clone(),
            keep_reduced: self.emit_curve,
            ..StructuredOptions::default()
        }
    }

    pub fn gen_spec(&self) -> GenSpec {
        let family = match self.family {
            GenFamily::Dense => Family::Dense,
            GenFamily::Sparse => Family::SparseBanded,
            GenFamily::Brake => Family::BrakeToy,
        };
        let mut spec = GenSpec::new(family, self.n, self.seed);
        spec.m = self.m;
        spec.p = self.p;
        spec.bandwidth = self.bandwidth;
        if let Some(r) = self.rank_cap {
            spec.rank_cap = r;
        }
        spec.speed = self.speed;
        spec
    }

    /// Checks that the chosen task has what it needs.
    pub fn check(&self) -> Result<(), RunError> {
        let task = self.task()?;
        let needs_input = !matches!(task, Task::Gen);
        if needs_input && self.input.is_none() && self.files.is_empty() {
            return Err(RunError::Config(format!(
                "task {} needs an input directory",
                task.as_str()
            )));
        }
        if task == Task::Gen && self.output.is_none() {
            return Err(RunError::Config("task gen needs an output directory".into()));
        }
        if task == Task::Sweep {
            if self.speeds.is_empty() {
                return Err(RunError::Config("task sweep needs a list of speeds".into()));
            }
            if matches!(self.sweep_task, Task::Gen | Task::Verify | Task::Sweep | Task::Hinf) {
                return Err(RunError::Config(format!(
                    "sweep cannot repeat task {}",
                    self.sweep_task.as_str()
                )));
            }
        }
        if self.emit_curve && self.output.is_none() {
            return Err(RunError::Config("emit_curve needs an output directory".into()));
        }
        if let Some([a, b]) = self.omega_range {
            if a.is_nan() || b.is_nan() || a >= b {
                return Err(RunError::Config(format!("omega_range [{a}, {b}] is empty")));
            }
        }
        if self.emit_curve && self.curve_points < 2 {
            return Err(RunError::Config("curve_points must be at least 2".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_keys_map_to_fields() {
        let c = RunConfig::from_toml(
            r#"
            task = "radius-structured"
            input = "data"
            eps = 1e-8
            ell = 3
            omega_range = [0.0, 50.0]
            [files]
            B = "other/B.mtx"
            "#,
        )
        .unwrap();
        assert_eq!(c.task, Some(Task::RadiusStructured));
        assert_eq!(c.ell, Some(3));
        assert_eq!(c.files["B"], PathBuf::from("other/B.mtx"));
        let s = c.structured_options();
        assert_eq!(s.interval, Some((0.0, 50.0)));
        assert_eq!(s.eps, 1e-8);
        c.check().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("tsk = \"hinf\"").is_err());
    }

    #[test]
    fn defaults_match_library_defaults() {
        let c = RunConfig::default();
        assert_eq!(c.framework_options(), FrameworkOptions::default());
        assert_eq!(c.structured_options(), StructuredOptions::default());
    }

    #[test]
    fn missing_inputs_fail_the_check() {
        let c = RunConfig {
            task: Some(Task::RadiusRj),
            ..Default::default()
        };
        assert!(c.check().is_err());
        let g = RunConfig {
            task: Some(Task::Sweep),
            input: Some("x".into()),
            ..Default::default()
        };
        assert!(g.check().is_err());
    }
}
