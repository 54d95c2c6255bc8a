//! Task dispatch.

use std::path::Path;
use std::time::Instant;

use dhradius_core::brake::BrakeModel;
use dhradius_core::framework::{run_framework, IterationRecord, RadiusResult};
use dhradius_core::hinf::{hinf_norm_bb, StateSpace};
use dhradius_core::linalg::{self, top_singular};
use dhradius_core::probgen::{generate, Generated};
use dhradius_core::structured::{
    eta_structured, radius_structured_sf_observed, radius_structured_small, reduce_structured,
};
use dhradius_core::transfer::{eval_transfer, full_state_space, reduced_state_space, TransferKind};
use dhradius_core::verify::{sample_structured_spectra, verify_unstructured};
use dhradius_core::{Matrix, RestrictionPair};

use crate::config::{RunConfig, Task, Term};
use crate::input::{self, Input, Model};
use crate::report::{HinfReport, IterationRow, ResultReport, SpectraReport, Status, SweepRow, VerificationReport};
use crate::RunError;

/// Runs `config` and writes its files (report, curves, generated
/// matrices) into the output directory, if one is set.
pub fn run(config: &RunConfig) -> Result<ResultReport, RunError> {
    config.check()?;
    let task = config.task()?;
    let start = Instant::now();
    let mut report = ResultReport::new(task.as_str(), config);
    match task {
        Task::Gen => run_gen(config, &mut report)?,
        Task::Hinf => run_hinf(config, &mut report)?,
        Task::Sweep => run_sweep(config, &mut report)?,
        Task::Verify => run_verify(config, &mut report)?,
        Task::RadiusRj | Task::RadiusQ | Task::RadiusStructured | Task::RadiusStructuredSmall => {
            let input = input::load(config)?;
            report.n = Some(input.model.as_dyn().dim());
            let (res, times) = radius_task(task, config, &input.model, &input.pair)?;
            fill_radius(&mut report, &res, &times);
            if config.emit_curve {
                report.curves = Some(emit_curves(config, task, &input, &res)?);
            }
        }
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    if let Some(dir) = &config.output {
        std::fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
        let path = dir.join("report.json");
        std::fs::write(&path, report.to_json()).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(report)
}

fn kind_of(task: Task) -> TransferKind {
    match task {
        Task::RadiusQ => TransferKind::Q,
        _ => TransferKind::Rj,
    }
}

/// Outer interval for the structured small-scale method: `[0, max |Im λ|]`
/// for real data, `[min Im λ, max Im λ]` otherwise.
fn structured_interval(config: &RunConfig, model: &Model, b: &linalg::CMat) -> Result<(f64, f64), RunError> {
    if let Some([a, c]) = config.omega_range {
        return Ok((a, c));
    }
    let (lo, hi) = model.imag_range()?;
    let real = model.as_dyn().is_real() && linalg::is_real(b);
    let (lo, hi) = if real { (0.0, lo.abs().max(hi.abs())) } else { (lo, hi) };
    Ok(if hi > lo { (lo, hi) } else { (lo - 1.0, hi + 1.0) })
}

/// Runs one radius task; the second value holds per-iteration wall times.
pub fn radius_task(
    task: Task,
    config: &RunConfig,
    model: &Model,
    pair: &RestrictionPair,
) -> Result<(RadiusResult, Vec<f64>), RunError> {
    let mut times = Vec::new();
    let mut last = Instant::now();
    let mut observer = |_: &IterationRecord| {
        let now = Instant::now();
        times.push((now - last).as_secs_f64());
        last = now;
    };
    let m = model.as_dyn();
    let res = match task {
        Task::RadiusRj | Task::RadiusQ => {
            run_framework(m, pair, kind_of(task), &config.framework_options(), &mut observer)
        }
        Task::RadiusStructured => {
            radius_structured_sf_observed(m, &pair.b, &config.structured_options(), &mut observer)
        }
        Task::RadiusStructuredSmall => {
            let interval = structured_interval(config, model, &pair.b)?;
            radius_structured_small(m, &pair.b, interval, config.gamma_outer, &config.structured_options())
        }
        _ => unreachable!("not a radius task"),
    }
    .map_err(|e| RunError::core(task.as_str(), e))?;
    Ok((res, times))
}

fn fill_radius(report: &mut ResultReport, res: &RadiusResult, times: &[f64]) {
    report.radius = Some(res.radius);
    report.f_star = Some(res.f_star);
    report.omega = Some(res.omega);
    report.iterations = Some(res.iterations);
    report.subspace_dim = Some(res.subspace_dim);
    report.termination = Some(res.termination.as_str().into());
    report.initial_points = Some(res.initial_points.clone());
    report.interpolation_points = Some(res.interpolation_points.clone());
    report.history = res
        .history
        .iter()
        .enumerate()
        .map(|(i, r)| IterationRow {
            omega: r.omega,
            f: r.f,
            subspace_dim: r.subspace_dim,
            wall_time_s: times.get(i).copied(),
        })
        .collect();
    if res.termination == dhradius_core::framework::TerminationReason::MaxIter {
        report.status = Status::MaxIter;
        report
            .warnings
            .push("iteration limit reached before convergence".into());
    }
}

fn run_gen(config: &RunConfig, report: &mut ResultReport) -> Result<(), RunError> {
    let dir = config.output.as_deref().expect("checked");
    let generated = generate(&config.gen_spec()).map_err(|e| RunError::core("gen", e))?;
    let mut files: Vec<(&str, Matrix)> = Vec::new();
    let pair = match generated {
        Generated::System(sys, pair) => {
            report.n = Some(sys.n());
            files.push(("J", sys.j().clone()));
            files.push(("R", sys.r().clone()));
            files.push(("Q", sys.q().clone()));
            pair
        }
        Generated::Brake(brake, pair) => {
            report.n = Some(2 * brake.q());
            for (name, m) in input::BRAKE_FILES
                .iter()
                .zip([&brake.m, &brake.dm, &brake.dr, &brake.ke, &brake.kg, &brake.dg])
            {
                files.push((name, m.clone()));
            }
            if let Some(n) = &brake.n {
                files.push(("N", n.clone()));
            }
            pair
        }
    };
    files.push(("B", Matrix::Dense(pair.b.clone())));
    files.push(("C", Matrix::Dense(pair.c.clone())));
    report.generated = Some(input::write_all(dir, &files)?);
    Ok(())
}

fn hinf_of(ss: &StateSpace, tol: f64, report: &mut ResultReport) -> Result<(), RunError> {
    let h = hinf_norm_bb(ss, tol).map_err(|e| RunError::core("hinf", e))?;
    report.n = Some(ss.order());
    report.hinf = Some(HinfReport {
        norm: h.norm,
        omega: h.omega,
    });
    report.f_star = Some(h.norm);
    report.omega = Some(h.omega);
    report.radius = Some(1.0 / h.norm);
    Ok(())
}

/// `A.mtx` with `B`, `C` when present; otherwise the full transfer function
/// of the DH input (`term = q` selects `G_Q`).
fn run_hinf(config: &RunConfig, report: &mut ResultReport) -> Result<(), RunError> {
    let ss = match input::load_state_space(config)? {
        Some(ss) => ss,
        None => {
            let input = input::load(config)?;
            let kind = if config.term == Term::Q {
                TransferKind::Q
            } else {
                TransferKind::Rj
            };
            full_state_space(&input.model.assembled()?, kind, &input.pair).map_err(|e| RunError::core("hinf", e))?
        }
    };
    hinf_of(&ss, config.hinf_tol, report)?;
    if config.emit_curve {
        let range = curve_range(config, &[report.omega.unwrap_or(0.0)], ss.is_real());
        let mut full = Vec::new();
        for w in grid(range, config.curve_points) {
            full.push((w, ss.sigma_max(w).map_err(|e| RunError::core("curve", e))?));
        }
        report.curves = Some(vec![write_curve(config, "curve_full.csv", &full)?]);
    }
    Ok(())
}

fn run_verify(config: &RunConfig, report: &mut ResultReport) -> Result<(), RunError> {
    let input = input::load(config)?;
    report.n = Some(input.model.as_dyn().dim());
    let system = input.model.assembled()?;
    match config.term.perturbed() {
        None => {
            let r = match config.radius {
                Some(r) => r,
                None => {
                    let (res, times) = radius_task(Task::RadiusStructured, config, &input.model, &input.pair)?;
                    fill_radius(report, &res, &times);
                    res.radius
                }
            };
            let norm = config.sample_scale * r;
            let s = sample_structured_spectra(&system, &input.pair.b, norm, config.samples, config.seed)
                .map_err(|e| RunError::core("verify", e))?;
            if config.sample_scale < 1.0 && s.crossings > 0 {
                report.warnings.push(format!(
                    "verification failed: {} of {} samples below the radius cross the axis",
                    s.crossings, s.count
                ));
            }
            report.spectra = Some(SpectraReport {
                radius: r,
                norm,
                count: s.count,
                crossings: s.crossings,
                min_abs_real: s.min_abs_real,
            });
        }
        Some(term) => {
            let (r, w) = match (config.radius, config.omega) {
                (Some(r), Some(w)) => (r, w),
                _ => {
                    let task = if term.transfer_kind() == TransferKind::Q {
                        Task::RadiusQ
                    } else {
                        Task::RadiusRj
                    };
                    let (res, times) = radius_task(task, config, &input.model, &input.pair)?;
                    fill_radius(report, &res, &times);
                    (res.radius, res.omega)
                }
            };
            let v = verify_unstructured(&system, term, &input.pair, r, w).map_err(|e| RunError::core("verify", e))?;
            if !v.verified {
                report
                    .warnings
                    .push(format!("verification failed: residual {:e}", v.residual));
            }
            report.verification = Some(VerificationReport {
                term: format!("{:?}", config.term).to_lowercase(),
                radius: r,
                omega: w,
                residual: v.residual,
                phase: [v.phase.re, v.phase.im],
                verified: v.verified,
            });
        }
    }
    Ok(())
}

fn sweep_row(config: &RunConfig, input: &Input, speed: f64) -> SweepRow {
    let start = Instant::now();
    let run = || -> Result<RadiusResult, RunError> {
        let brake = input
            .brake
            .as_ref()
            .expect("brake input")
            .with_speed(speed)
            .map_err(|e| RunError::core("sweep", e))?;
        let model = Model::Brake(BrakeModel::new(brake).map_err(|e| RunError::core("sweep", e))?);
        Ok(radius_task(config.sweep_task, config, &model, &input.pair)?.0)
    };
    let res = run();
    let wall_time_s = start.elapsed().as_secs_f64();
    match res {
        Ok(r) => SweepRow {
            speed,
            radius: Some(r.radius),
            omega: Some(r.omega),
            iterations: Some(r.iterations),
            subspace_dim: Some(r.subspace_dim),
            termination: Some(r.termination.as_str().into()),
            wall_time_s,
            error: None,
        },
        Err(e) => SweepRow {
            speed,
            radius: None,
            omega: None,
            iterations: None,
            subspace_dim: None,
            termination: None,
            wall_time_s,
            error: Some(e.to_string()),
        },
    }
}

/// One radius run per rotation speed; rows run concurrently on the shared,
/// read-only input.
fn run_sweep(config: &RunConfig, report: &mut ResultReport) -> Result<(), RunError> {
    if !input::is_brake_input(config) {
        return Err(RunError::Config("sweep needs brake input (M.mtx, DM.mtx, ...)".into()));
    }
    let input = input::load(config)?;
    report.n = Some(input.model.as_dyn().dim());
    let input = &input;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut rows = Vec::with_capacity(config.speeds.len());
    for chunk in config.speeds.chunks(workers) {
        std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&speed| s.spawn(move || sweep_row(config, input, speed)))
                .collect();
            rows.extend(handles.into_iter().map(|h| h.join().expect("sweep worker panicked")));
        });
    }
    if rows.iter().any(|r| r.error.is_some()) {
        report.status = Status::RowErrors;
    } else if rows.iter().any(|r| r.termination.as_deref() == Some("max_iter")) {
        report.status = Status::MaxIter;
    }
    report.sweep = Some(rows);
    Ok(())
}

fn grid((lo, hi): (f64, f64), points: usize) -> impl Iterator<Item = f64> {
    (0..points).map(move |i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
}

/// `omega_range`, or the span of `points` padded by 25% (from 0 for real
/// data).
fn curve_range(config: &RunConfig, points: &[f64], real: bool) -> (f64, f64) {
    if let Some([a, b]) = config.omega_range {
        return (a, b);
    }
    let lo = points.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = points.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if real {
        let top = lo.abs().max(hi.abs());
        (0.0, if top > 0.0 { 1.25 * top } else { 1.0 })
    } else {
        let pad = if hi > lo { 0.25 * (hi - lo) } else { 1.0 };
        (lo - pad, hi + pad)
    }
}

fn write_curve(config: &RunConfig, name: &str, samples: &[(f64, f64)]) -> Result<String, RunError> {
    let dir = config.output.as_deref().expect("checked");
    std::fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    write_csv(&path, samples).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    Ok(name.into())
}

fn write_csv(path: &Path, samples: &[(f64, f64)]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["omega", "value"])?;
    for (x, y) in samples {
        w.write_record([x.to_string(), y.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `σ_max` of the full and final reduced transfer functions, or `η̃` for
/// the structured tasks, sampled on `curve_points` frequencies.
fn emit_curves(config: &RunConfig, task: Task, input: &Input, res: &RadiusResult) -> Result<Vec<String>, RunError> {
    let m = input.model.as_dyn();
    let real = m.is_real() && linalg::is_real(&input.pair.b) && linalg::is_real(&input.pair.c);
    let mut pts: Vec<f64> = res.interpolation_points.clone();
    pts.extend(&res.initial_points);
    pts.push(res.omega);
    let range = curve_range(config, &pts, real);
    let err = |e| RunError::core("curve", e);
    let mut full = Vec::new();
    let mut reduced = Vec::new();
    match task {
        Task::RadiusRj | Task::RadiusQ => {
            let kind = kind_of(task);
            let red = match res.reduced.last() {
                Some(r) => Some(reduced_state_space(r, kind).map_err(err)?),
                None => None,
            };
            for w in grid(range, config.curve_points) {
                let g = eval_transfer(m, kind, &input.pair, w).map_err(err)?;
                full.push((w, top_singular(&g).sigma));
                if let Some(ss) = &red {
                    reduced.push((w, ss.sigma_max(w).map_err(err)?));
                }
            }
        }
        _ => {
            let opts = config.structured_options();
            let red = match res.reduced.last() {
                Some(r) => Some(reduce_structured(m, &input.pair.b, &r.v).map_err(err)?),
                None => None,
            };
            for w in grid(range, config.curve_points) {
                // η̃ is +∞ where it cannot be evaluated (degenerate or on the spectrum)
                full.push((
                    w,
                    eta_structured(m, &input.pair.b, w, &opts).map_or(f64::INFINITY, |e| e.value),
                ));
                if let Some(r) = &red {
                    reduced.push((w, r.eta(w, &opts).map_or(f64::INFINITY, |e| e.value)));
                }
            }
        }
    }
    let mut files = vec![write_curve(config, "curve_full.csv", &full)?];
    if !reduced.is_empty() {
        files.push(write_curve(config, "curve_reduced.csv", &reduced)?);
    }
    Ok(files)
}
