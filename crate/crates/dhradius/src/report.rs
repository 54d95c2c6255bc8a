//! Machine-readable run reports and the stdout summary.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

/// JSON has no infinities; non-finite floats are written as the strings
/// `"inf"`, `"-inf"` and `"nan"`.
pub mod real {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    fn to_repr(x: f64) -> Repr {
        if x.is_finite() {
            Repr::Num(x)
        } else if x.is_nan() {
            Repr::Text("nan".into())
        } else if x > 0.0 {
            Repr::Text("inf".into())
        } else {
            Repr::Text("-inf".into())
        }
    }

    fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => Err(E::custom(format!("not a number: `{t}`"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }

    pub mod opt {
        use super::*;

        pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            x.map(to_repr).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Option::<Repr>::deserialize(d)?.map(from_repr).transpose()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// The subspace iteration hit `k_max` or the optimizer its budget.
    MaxIter,
    /// Some sweep rows failed; see their `error` fields.
    RowErrors,
}

/// One subspace iteration (or, for `radius-structured-small`, one
/// objective evaluation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub omega: f64,
    #[serde(with = "real")]
    pub f: f64,
    pub subspace_dim: usize,
    /// Seconds since the previous row; null when not timed.
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HinfReport {
    pub norm: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub term: String,
    pub radius: f64,
    pub omega: f64,
    pub residual: f64,
    /// Real and imaginary part of the phase of the best perturbation.
    pub phase: [f64; 2],
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraReport {
    pub radius: f64,
    /// Norm of the sampled perturbations.
    pub norm: f64,
    pub count: usize,
    pub crossings: usize,
    #[serde(with = "real")]
    pub min_abs_real: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub speed: f64,
    #[serde(with = "real::opt")]
    pub radius: Option<f64>,
    pub omega: Option<f64>,
    pub iterations: Option<usize>,
    pub subspace_dim: Option<usize>,
    pub termination: Option<String>,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultReport {
    pub tool: String,
    pub version: String,
    pub task: String,
    pub status: Status,
    /// State dimension of the input.
    pub n: Option<usize>,
    #[serde(with = "real::opt")]
    pub radius: Option<f64>,
    #[serde(with = "real::opt")]
    pub f_star: Option<f64>,
    pub omega: Option<f64>,
    pub iterations: Option<usize>,
    pub subspace_dim: Option<usize>,
    pub termination: Option<String>,
    pub initial_points: Option<Vec<f64>>,
    pub interpolation_points: Option<Vec<f64>>,
    pub history: Vec<IterationRow>,
    pub hinf: Option<HinfReport>,
    pub verification: Option<VerificationReport>,
    pub spectra: Option<SpectraReport>,
    pub sweep: Option<Vec<SweepRow>>,
    /// Files written by `gen`.
    pub generated: Option<Vec<String>>,
    /// CSV files written for `emit_curve`.
    pub curves: Option<Vec<String>>,
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
    pub config: RunConfig,
}

impl ResultReport {
    pub fn new(task: &str, config: &RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            task: task.into(),
            status: Status::Ok,
            n: None,
            radius: None,
            f_star: None,
            omega: None,
            iterations: None,
            subspace_dim: None,
            termination: None,
            initial_points: None,
            interpolation_points: None,
            history: Vec::new(),
            hinf: None,
            verification: None,
            spectra: None,
            sweep: None,
            generated: None,
            curves: None,
            warnings: Vec::new(),
            wall_time_s: 0.0,
            config: config.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// 0 on success, 3 when a sweep row failed numerically, 4 on
    /// non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Ok => 0,
            Status::RowErrors => 3,
            Status::MaxIter => 4,
        }
    }

    /// Human-readable summary for standard output.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}  task {}", self.tool, self.version, self.task);
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "  {k:<14} {v}");
        };
        if let Some(n) = self.n {
            kv("n", n.to_string());
        }
        if let Some(h) = &self.hinf {
            kv("hinf norm", format!("{:.12e}", h.norm));
            kv("hinf omega", format!("{:.12e}", h.omega));
        }
        if let Some(r) = self.radius {
            kv("radius", format!("{r:.12e}"));
        }
        if let Some(w) = self.omega {
            kv("omega*", format!("{w:.12e}"));
        }
        if let Some(i) = self.iterations {
            kv("iterations", i.to_string());
        }
        if let Some(d) = self.subspace_dim {
            kv("subspace dim", d.to_string());
        }
        if let Some(t) = &self.termination {
            kv("termination", t.clone());
        }
        if let Some(v) = &self.verification {
            kv(
                "residual",
                format!(
                    "{:.3e} ({})",
                    v.residual,
                    if v.verified { "verified" } else { "not verified" }
                ),
            );
        }
        if let Some(s) = &self.spectra {
            kv("samples", format!("{} at ‖Δ‖ = {:.6e}", s.count, s.norm));
            kv("crossings", s.crossings.to_string());
            kv("min |Re λ|", format!("{:.3e}", s.min_abs_real));
        }
        if let Some(files) = &self.generated {
            kv("wrote", files.join(" "));
        }
        kv("wall time", format!("{:.3} s", self.wall_time_s));
        if !self.history.is_empty() && self.task != "radius-structured-small" {
            let _ = writeln!(
                out,
                "\n  {:>4} {:>20} {:>20} {:>6} {:>10}",
                "k", "omega_k", "f_k", "dim", "time [s]"
            );
            for (k, r) in self.history.iter().enumerate() {
                let t = r.wall_time_s.map_or("-".into(), |t| format!("{t:.4}"));
                let _ = writeln!(
                    out,
                    "  {:>4} {:>20.12e} {:>20.12e} {:>6} {:>10}",
                    k + 1,
                    r.omega,
                    r.f,
                    r.subspace_dim,
                    t
                );
            }
        }
        if let Some(rows) = &self.sweep {
            let _ = writeln!(
                out,
                "\n  {:>10} {:>20} {:>20} {:>5} {:>6}",
                "speed", "radius", "omega*", "iter", "dim"
            );
            for r in rows {
                match &r.error {
                    Some(e) => {
                        let _ = writeln!(out, "  {:>10} error: {e}", r.speed);
                    }
                    None => {
                        let _ = writeln!(
                            out,
                            "  {:>10} {:>20.12e} {:>20.12e} {:>5} {:>6}",
                            r.speed,
                            r.radius.unwrap_or(f64::NAN),
                            r.omega.unwrap_or(f64::NAN),
                            r.iterations.unwrap_or(0),
                            r.subspace_dim.unwrap_or(0)
                        );
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_keeps_every_bit() {
        let mut r = ResultReport::new("radius-structured-small", &RunConfig::default());
        r.radius = Some(0.1 + 0.2);
        r.f_star = Some(f64::INFINITY);
        r.omega = Some(-1.0 / 3.0);
        r.history.push(IterationRow {
            omega: 1e-300,
            f: f64::INFINITY,
            subspace_dim: 4,
            wall_time_s: None,
        });
        r.history.push(IterationRow {
            omega: 2.5,
            f: 5e-324,
            subspace_dim: 4,
            wall_time_s: Some(0.125),
        });
        let back = ResultReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.radius.unwrap().to_bits(), (0.1f64 + 0.2).to_bits());
    }

    #[test]
    fn missing_values_are_explicit_nulls() {
        let r = ResultReport::new("hinf", &RunConfig::default());
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        let obj = v.as_object().unwrap();
        for key in ["radius", "omega", "hinf", "sweep", "curves", "termination"] {
            assert!(obj[key].is_null(), "{key}");
        }
    }
}
