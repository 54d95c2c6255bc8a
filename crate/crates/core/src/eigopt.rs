//! Global univariate optimization with piecewise-quadratic support functions.
//!
//! Every evaluated point `x_j` contributes the model
//! `q_j(x) = f_j + f′_j (x − x_j) + γ/2 (x − x_j)²`. When `γ` bounds `f″`
//! from below, `Q(x) = max_j q_j(x)` underestimates `f` globally; its
//! minimizer is the next iterate and `f_best − min Q` bounds the error.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EigoptOptions {
    /// Relative gap `f_best − min Q ≤ tol·max(1, |f_best|)` at convergence.
    pub tol: f64,
    pub max_iter: usize,
    /// Non-finite oracle values are replaced by `best + (factor − 1)|best|`,
    /// capped so the penalty model stays below every finite sample.
    pub penalty_factor: f64,
    /// Starting points; the interval midpoint when empty.
    pub initial: Vec<f64>,
}

impl Default for EigoptOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            penalty_factor: 10.0,
            initial: Vec::new(),
        }
    }
}

/// One support model `f + f′ (x − center) + γ/2 (x − center)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticModel {
    pub center: f64,
    pub value: f64,
    pub slope: f64,
    pub curvature: f64,
}

impl QuadraticModel {
    pub fn eval(&self, x: f64) -> f64 {
        let d = x - self.center;
        self.value + self.slope * d + 0.5 * self.curvature * d * d
    }
}

/// The support function `Q(x) = max_j q_j(x)` (for maximization, the
/// overestimator `min_j q_j(x)`).
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseModel {
    pub models: Vec<QuadraticModel>,
    maximize: bool,
}

impl PiecewiseModel {
    pub fn eval(&self, x: f64) -> f64 {
        if self.maximize {
            self.models.iter().map(|m| m.eval(x)).fold(f64::INFINITY, f64::min)
        } else {
            self.models.iter().map(|m| m.eval(x)).fold(f64::NEG_INFINITY, f64::max)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerOutcome {
    pub x: f64,
    pub f: f64,
    /// Oracle calls after the initial points.
    pub iterations: usize,
    /// Every oracle call `(x, f)` in order; non-finite values are kept raw.
    pub history: Vec<(f64, f64)>,
    pub converged: bool,
    /// `|f_best − optimum of the model|` at exit.
    pub gap: f64,
    pub model: PiecewiseModel,
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    x: f64,
    f: f64,
    df: f64,
}

/// Minimizes `f` on `[a, b]` given `oracle(x) = (f(x), f′(x))` and a lower
/// bound `gamma` on `f″`.
pub fn minimize_pq<F>(
    oracle: F,
    interval: (f64, f64),
    gamma: f64,
    tol: f64,
    max_iter: usize,
) -> Result<OptimizerOutcome>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let opts = EigoptOptions {
        tol,
        max_iter,
        ..EigoptOptions::default()
    };
    minimize_pq_with(oracle, interval, gamma, &opts)
}

/// Maximizes `f` on `[a, b]` given an upper bound `gamma` on `f″`; for
/// concave `f` any small positive `gamma` is valid.
pub fn maximize_pq<F>(
    oracle: F,
    interval: (f64, f64),
    gamma: f64,
    tol: f64,
    max_iter: usize,
) -> Result<OptimizerOutcome>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let opts = EigoptOptions {
        tol,
        max_iter,
        ..EigoptOptions::default()
    };
    maximize_pq_with(oracle, interval, gamma, &opts)
}

pub fn maximize_pq_with<F>(
    mut oracle: F,
    interval: (f64, f64),
    gamma: f64,
    opts: &EigoptOptions,
) -> Result<OptimizerOutcome>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let mut out = minimize_pq_with(|x| oracle(x).map(|(f, df)| (-f, -df)), interval, -gamma, opts)?;
    out.f = -out.f;
    for h in out.history.iter_mut() {
        h.1 = -h.1;
    }
    for m in out.model.models.iter_mut() {
        m.value = -m.value;
        m.slope = -m.slope;
        m.curvature = -m.curvature;
    }
    out.model.maximize = true;
    Ok(out)
}

pub fn minimize_pq_with<F>(
    mut oracle: F,
    interval: (f64, f64),
    gamma: f64,
    opts: &EigoptOptions,
) -> Result<OptimizerOutcome>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let (a, b) = interval;
    if !(a <= b) || !a.is_finite() || !b.is_finite() || !gamma.is_finite() {
        return Err(Error::InvalidArgument(alloc::format!(
            "invalid interval [{a}, {b}] or curvature {gamma}"
        )));
    }
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut samples: Vec<Sample> = Vec::new();
    let mut history = Vec::new();
    let mut eval = |x: f64, samples: &mut Vec<Sample>, history: &mut Vec<(f64, f64)>| -> Result<()> {
        let (f, df) = oracle(x)?;
        history.push((x, f));
        samples.push(Sample { x, f, df });
        Ok(())
    };

    let initial: Vec<f64> = if opts.initial.is_empty() {
        alloc::vec![mid]
    } else {
        opts.initial.iter().map(|&x| x.clamp(a, b)).collect()
    };
    for x in initial {
        if !samples.iter().any(|s| s.x == x) {
            eval(x, &mut samples, &mut history)?;
        }
    }
    let n_init = samples.len();

    if half == 0.0 {
        let s = samples[0];
        return Ok(OptimizerOutcome {
            x: s.x,
            f: s.f,
            iterations: 0,
            history,
            converged: s.f.is_finite(),
            gap: 0.0,
            model: PiecewiseModel {
                models: alloc::vec![QuadraticModel {
                    center: s.x,
                    value: s.f,
                    slope: s.df,
                    curvature: gamma,
                }],
                maximize: false,
            },
        });
    }

    let g = gamma * half * half;
    let mut converged = false;
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    loop {
        let best = best_finite(&samples);
        let models = effective_models(&samples, best, gamma, opts.penalty_factor);
        let next = match best {
            None => fill_gap(&samples, a, b),
            Some(bs) => {
                let scaled: Vec<ScaledModel> = models
                    .iter()
                    .map(|m| ScaledModel {
                        u: (m.center - mid) / half,
                        f: m.value,
                        s: m.slope * half,
                    })
                    .collect();
                let (u, lower) = envelope_min(&scaled, g);
                gap = bs.f - lower;
                if gap <= opts.tol * bs.f.abs().max(1.0) {
                    converged = true;
                    None
                } else {
                    let x = (mid + half * u).clamp(a, b);
                    if samples.iter().any(|s| (s.x - x).abs() <= 1e-15 * half.max(x.abs())) {
                        converged = true;
                        None
                    } else {
                        Some(x)
                    }
                }
            }
        };
        let Some(x) = next else {
            break;
        };
        if iterations >= opts.max_iter {
            break;
        }
        eval(x, &mut samples, &mut history)?;
        iterations += 1;
    }

    let best = best_finite(&samples);
    let models = effective_models(&samples, best, gamma, opts.penalty_factor);
    let (x, f) = match best {
        Some(s) => (s.x, s.f),
        None => (samples[0].x, f64::INFINITY),
    };
    debug_assert_eq!(history.len(), iterations + n_init);
    Ok(OptimizerOutcome {
        x,
        f,
        iterations,
        history,
        converged: converged && best.is_some(),
        gap: if best.is_some() { gap.max(0.0) } else { f64::INFINITY },
        model: PiecewiseModel {
            models,
            maximize: false,
        },
    })
}

fn best_finite(samples: &[Sample]) -> Option<Sample> {
    samples
        .iter()
        .filter(|s| s.f.is_finite() && s.df.is_finite())
        .fold(None, |acc: Option<Sample>, s| match acc {
            Some(b) if b.f <= s.f => Some(b),
            _ => Some(*s),
        })
}

fn effective_models(samples: &[Sample], best: Option<Sample>, gamma: f64, factor: f64) -> Vec<QuadraticModel> {
    let Some(best) = best else {
        return Vec::new();
    };
    let scale = if best.f != 0.0 { best.f.abs() } else { 1.0 };
    let penalty = best.f + (factor - 1.0) * scale;
    let finite = |s: &Sample| s.f.is_finite() && s.df.is_finite();
    samples
        .iter()
        .map(|s| {
            if finite(s) {
                return QuadraticModel {
                    center: s.x,
                    value: s.f,
                    slope: s.df,
                    curvature: gamma,
                };
            }
            // never let a penalty model rise above known finite values
            let cap = samples
                .iter()
                .filter(|t| finite(t))
                .map(|t| t.f - 0.5 * gamma * (t.x - s.x) * (t.x - s.x))
                .fold(penalty, f64::min);
            QuadraticModel {
                center: s.x,
                value: cap,
                slope: 0.0,
                curvature: gamma,
            }
        })
        .collect()
}

/// Before any finite value: bisect the widest unexplored gap.
fn fill_gap(samples: &[Sample], a: f64, b: f64) -> Option<f64> {
    let mut xs: Vec<f64> = samples.iter().map(|s| s.x).collect();
    xs.extend([a, b]);
    xs.sort_by(f64::total_cmp);
    let mut best: Option<(f64, f64)> = None;
    for w in xs.windows(2) {
        let len = w[1] - w[0];
        if best.is_none_or(|(l, _)| len > l) {
            best = Some((len, 0.5 * (w[0] + w[1])));
        }
    }
    let (len, x) = best?;
    let tried = |p: f64| samples.iter().any(|s| s.x == p);
    if !tried(a) {
        return Some(a);
    }
    if !tried(b) {
        return Some(b);
    }
    (len > 1e-12 * (b - a)).then_some(x)
}

/// A model in the scaled variable `u ∈ [−1, 1]`.
#[derive(Debug, Clone, Copy)]
struct ScaledModel {
    u: f64,
    f: f64,
    s: f64,
}

impl ScaledModel {
    fn eval(&self, u: f64, g: f64) -> f64 {
        let d = u - self.u;
        self.f + self.s * d + 0.5 * g * d * d
    }
    // q(u) = g/2 u² + alpha + beta u
    fn alpha(&self, g: f64) -> f64 {
        self.f - self.s * self.u + 0.5 * g * self.u * self.u
    }
    fn beta(&self, g: f64) -> f64 {
        self.s - g * self.u
    }
}

fn envelope_eval(models: &[ScaledModel], u: f64, g: f64) -> f64 {
    models.iter().map(|m| m.eval(u, g)).fold(f64::NEG_INFINITY, f64::max)
}

/// Exact minimum of `max_j q_j` on `[−1, 1]`. All models share the curvature
/// `g`, so the envelope is `g/2 u²` plus the upper envelope of lines; the
/// minimum lies at an endpoint, a breakpoint or a model vertex.
fn envelope_min(models: &[ScaledModel], g: f64) -> (f64, f64) {
    let mut order: Vec<usize> = (0..models.len()).collect();
    order.sort_by(|&i, &j| {
        models[i]
            .beta(g)
            .total_cmp(&models[j].beta(g))
            .then(models[i].alpha(g).total_cmp(&models[j].alpha(g)))
    });
    // upper hull of lines by increasing slope
    let mut hull: Vec<usize> = Vec::new();
    for &i in &order {
        if let Some(&last) = hull.last() {
            if models[last].beta(g) == models[i].beta(g) {
                hull.pop();
            }
        }
        while hull.len() >= 2 {
            let (p, q) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            if crossing(&models[p], &models[i], g) <= crossing(&models[p], &models[q], g) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }

    let mut cands: Vec<f64> = alloc::vec![-1.0, 1.0];
    for w in hull.windows(2) {
        let u = crossing(&models[w[0]], &models[w[1]], g);
        if u > -1.0 && u < 1.0 {
            cands.push(u);
        }
    }
    if g > 0.0 {
        for &i in &hull {
            let m = &models[i];
            let v = m.u - m.s / g;
            if v > -1.0 && v < 1.0 {
                cands.push(v);
            }
        }
    }
    let mut best = (0.0, f64::INFINITY);
    for u in cands {
        let val = envelope_eval(models, u, g);
        if val < best.1 {
            best = (u, val);
        }
    }
    best
}

/// Where two equal-curvature models intersect; their difference is affine.
fn crossing(p: &ScaledModel, q: &ScaledModel, g: f64) -> f64 {
    let slope = p.beta(g) - q.beta(g);
    if slope == 0.0 {
        return f64::INFINITY;
    }
    let u0 = 0.5 * (p.u + q.u);
    let d0 = p.eval(u0, g) - q.eval(u0, g);
    u0 - d0 / slope
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Float;

    #[test]
    fn exact_quadratic_in_one_step() {
        let opts = EigoptOptions {
            tol: 1e-12,
            initial: alloc::vec![0.7],
            ..EigoptOptions::default()
        };
        let out = minimize_pq_with(|x| Ok((x * x, 2.0 * x)), (-1.0, 1.0), 2.0, &opts).unwrap();
        assert!(out.converged);
        assert!(out.x.abs() < 1e-14 && out.f < 1e-28);
        assert_eq!(out.iterations, 1);
        assert_eq!(out.history.len(), 2);
    }

    #[test]
    fn cosine_minimum() {
        let out = minimize_pq(
            |x| Ok((Float::cos(x), -Float::sin(x))),
            (0.0, 2.0 * core::f64::consts::PI),
            -1.0,
            1e-12,
            200,
        )
        .unwrap();
        assert!(out.converged);
        assert!((out.f + 1.0).abs() < 1e-8);
        assert!((out.x - core::f64::consts::PI).abs() < 1e-4);
    }

    #[test]
    fn concave_parabola_maximum() {
        let out = maximize_pq(
            |t| Ok((-(t - 3.0) * (t - 3.0), -2.0 * (t - 3.0))),
            (-10.0, 10.0),
            1e-6,
            1e-12,
            200,
        )
        .unwrap();
        assert!(out.converged);
        assert!((out.x - 3.0).abs() < 1e-5);
        assert!(out.f.abs() < 1e-10);
    }

    #[test]
    fn kink_maximum() {
        let f = |t: f64| {
            let (l, r) = (t + 1.0, 1.0 - t);
            Ok(if l <= r { (l, 1.0) } else { (r, -1.0) })
        };
        let out = maximize_pq(f, (-5.0, 5.0), 1e-6, 1e-12, 200).unwrap();
        assert!((out.x).abs() < 1e-8, "{}", out.x);
        assert!((out.f - 1.0).abs() < 1e-8);
    }

    #[test]
    fn envelope_min_matches_grid() {
        let models: Vec<ScaledModel> = (0..7)
            .map(|j| {
                let u = -0.9 + 0.3 * j as f64;
                ScaledModel {
                    u,
                    f: Float::sin(5.0 * u),
                    s: 5.0 * Float::cos(5.0 * u),
                }
            })
            .collect();
        for g in [-30.0, -1.0, 0.0, 4.0] {
            let (_, m) = envelope_min(&models, g);
            let grid = (0..=10_000)
                .map(|i| envelope_eval(&models, -1.0 + 2.0 * i as f64 / 10_000.0, g))
                .fold(f64::INFINITY, f64::min);
            assert!(m <= grid + 1e-10, "g = {g}: {m} vs {grid}");
            assert!(grid - m < 1e-2, "g = {g}: {m} vs {grid}");
        }
    }

    #[test]
    fn penalty_points_are_skipped() {
        let f = |x: f64| {
            Ok(if x > 0.8 {
                (f64::INFINITY, 0.0)
            } else {
                ((x - 0.2) * (x - 0.2), 2.0 * (x - 0.2))
            })
        };
        let out = minimize_pq(f, (-1.0, 1.0), -1.0, 1e-10, 200).unwrap();
        assert!(out.history.iter().any(|h| h.1.is_infinite()));
        assert!((out.x - 0.2).abs() < 1e-4, "{out:?}");
        assert!(out.f < 1e-10);
    }
}
