//! Box-constrained limited-memory BFGS.
//!
//! Projected quasi-Newton iteration: variables sitting on a bound with the
//! gradient pushing outward form the active set and are frozen; the two-loop
//! recursion runs on the remaining free variables. Steps that stay inside the
//! box use a strong-Wolfe line search capped at the largest feasible step;
//! otherwise the step is taken along the projected path with backtracking.
//! Non-finite objective values are treated as "step too long".

use std::collections::VecDeque;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("objective is not finite at the start point")]
    ObjectiveNonFinite,
    #[error("start has {got} coordinates but there are {expected} bounds")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bound {index} is empty or not finite")]
    InvalidBounds { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Infinity norm of the projected gradient fell below `grad_tol`.
    GradientTolerance,
    /// The accepted step was shorter than `step_tol`.
    StepTolerance,
    /// Relative objective decrease fell below `value_tol`.
    ValueTolerance,
    MaxIterations,
    /// No acceptable step along the steepest-descent fallback.
    LineSearchFailed,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::GradientTolerance => "gradient-tolerance",
            Termination::StepTolerance => "step-tolerance",
            Termination::ValueTolerance => "value-tolerance",
            Termination::MaxIterations => "max-iterations",
            Termination::LineSearchFailed => "line-search-failed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step_tol: f64,
    pub value_tol: f64,
    pub memory: usize,
    pub c1: f64,
    pub c2: f64,
    pub max_line_search: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            grad_tol: 1e-6,
            step_tol: 1e-10,
            value_tol: 1e-12,
            memory: 10,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub start_value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub projected_gradient_norm: f64,
    pub termination: Termination,
}

/// Minimizes `f` (returning value and gradient) over the box `bounds`.
///
/// `start` is projected into the box first. Every iterate, and the result,
/// lies inside the box, and the final value never exceeds the start value.
pub fn minimize<F>(
    mut f: F,
    start: &[f64],
    bounds: &[(f64, f64)],
    opts: &MinimizeOptions,
) -> Result<MinimizeResult, OptimizeError>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    if start.len() != bounds.len() {
        return Err(OptimizeError::DimensionMismatch { expected: bounds.len(), got: start.len() });
    }
    for (index, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo <= hi) || lo.is_nan() || hi.is_nan() {
            return Err(OptimizeError::InvalidBounds { index });
        }
    }
    let n = start.len();
    let mut x: Vec<f64> = start.iter().zip(bounds).map(|(&v, &(lo, hi))| v.clamp(lo, hi)).collect();
    let (mut fx, mut g) = f(&x);
    let mut evaluations = 1;
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(OptimizeError::ObjectiveNonFinite);
    }
    let start_value = fx;
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut iterations = 0;

    let termination = loop {
        let pg = projected_gradient_norm(&x, &g, bounds);
        if pg < opts.grad_tol {
            break Termination::GradientTolerance;
        }
        if iterations >= opts.max_iters {
            break Termination::MaxIterations;
        }
        iterations += 1;

        let free: Vec<bool> = (0..n).map(|i| is_free(x[i], g[i], bounds[i])).collect();
        let mut dir = two_loop(&g, &free, &memory);
        let mut slope = dot(&dir, &g);
        if !(slope < 0.0) {
            memory.clear();
            dir = steepest(&g, &free);
            slope = dot(&dir, &g);
        }
        let first_step = if memory.is_empty() { (1.0 / norm(&dir)).min(1.0) } else { 1.0 };

        let step = match search(&mut f, &x, fx, &g, &dir, slope, first_step, bounds, opts, &mut evaluations) {
            Some(s) => Some(s),
            None if !memory.is_empty() => {
                // quasi-Newton direction failed; retry along steepest descent
                memory.clear();
                let dir = steepest(&g, &free);
                let slope = dot(&dir, &g);
                let first = (1.0 / norm(&dir)).min(1.0);
                search(&mut f, &x, fx, &g, &dir, slope, first, bounds, opts, &mut evaluations)
            }
            None => None,
        };
        let Some((x_new, f_new, g_new)) = step else {
            break Termination::LineSearchFailed;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > f64::EPSILON * dot(&yv, &yv) && sy > 0.0 {
            if memory.len() == opts.memory {
                memory.pop_front();
            }
            memory.push_back((s.clone(), yv, 1.0 / sy));
        }
        let step_len = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let decrease = fx - f_new;
        x = x_new;
        fx = f_new;
        g = g_new;
        if step_len < opts.step_tol {
            break Termination::StepTolerance;
        }
        if decrease <= opts.value_tol * fx.abs().max(1.0) {
            break Termination::ValueTolerance;
        }
    };

    Ok(MinimizeResult {
        projected_gradient_norm: projected_gradient_norm(&x, &g, bounds),
        x,
        value: fx,
        gradient: g,
        start_value,
        iterations,
        evaluations,
        termination,
    })
}

/// `‖P(x − g) − x‖_∞`.
pub fn projected_gradient_norm(x: &[f64], g: &[f64], bounds: &[(f64, f64)]) -> f64 {
    x.iter()
        .zip(g)
        .zip(bounds)
        .map(|((&xi, &gi), &(lo, hi))| ((xi - gi).clamp(lo, hi) - xi).abs())
        .fold(0.0, f64::max)
}

fn is_free(x: f64, g: f64, (lo, hi): (f64, f64)) -> bool {
    !((x <= lo && g > 0.0) || (x >= hi && g < 0.0))
}

fn steepest(g: &[f64], free: &[bool]) -> Vec<f64> {
    g.iter().zip(free).map(|(&gi, &f)| if f { -gi } else { 0.0 }).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `−H·g` restricted to the free variables.
fn two_loop(g: &[f64], free: &[bool], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mask = |v: &[f64]| -> Vec<f64> { v.iter().zip(free).map(|(&a, &f)| if f { a } else { 0.0 }).collect() };
    let mut q = mask(g);
    let mut alphas = Vec::with_capacity(memory.len());
    let masked: Vec<(Vec<f64>, Vec<f64>)> = memory.iter().map(|(s, y, _)| (mask(s), mask(y))).collect();
    for (s, y) in masked.iter().rev() {
        let sy = dot(s, y);
        if sy <= 0.0 {
            alphas.push(0.0);
            continue;
        }
        let a = dot(s, &q) / sy;
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y)) = masked.last() {
        let yy = dot(y, y);
        let sy = dot(s, y);
        if yy > 0.0 && sy > 0.0 {
            let gamma = sy / yy;
            q.iter_mut().for_each(|v| *v *= gamma);
        }
    }
    for ((s, y), a) in masked.iter().zip(alphas.iter().rev()) {
        let sy = dot(s, y);
        if sy <= 0.0 {
            continue;
        }
        let b = dot(y, &q) / sy;
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

type Step = (Vec<f64>, f64, Vec<f64>);

#[allow(clippy::too_many_arguments)]
fn search<F>(
    f: &mut F,
    x: &[f64],
    fx: f64,
    g: &[f64],
    dir: &[f64],
    slope: f64,
    first_step: f64,
    bounds: &[(f64, f64)],
    opts: &MinimizeOptions,
    evaluations: &mut usize,
) -> Option<Step>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    if !(slope < 0.0) {
        return None;
    }
    let max_step = max_feasible_step(x, dir, bounds);
    if max_step >= first_step {
        wolfe(f, x, fx, dir, slope, first_step, max_step, bounds, opts, evaluations)
    } else {
        projected_backtrack(f, x, fx, g, dir, first_step, bounds, opts, evaluations)
    }
}

fn max_feasible_step(x: &[f64], dir: &[f64], bounds: &[(f64, f64)]) -> f64 {
    x.iter().zip(dir).zip(bounds).fold(f64::INFINITY, |m, ((&xi, &di), &(lo, hi))| {
        let t = if di > 0.0 {
            (hi - xi) / di
        } else if di < 0.0 {
            (lo - xi) / di
        } else {
            f64::INFINITY
        };
        m.min(t.max(0.0))
    })
}

fn point(x: &[f64], dir: &[f64], t: f64, bounds: &[(f64, f64)]) -> Vec<f64> {
    x.iter().zip(dir).zip(bounds).map(|((&xi, &di), &(lo, hi))| (xi + t * di).clamp(lo, hi)).collect()
}

/// Strong-Wolfe search on `[0, max_step]`.
#[allow(clippy::too_many_arguments)]
fn wolfe<F>(
    f: &mut F,
    x: &[f64],
    f0: f64,
    dir: &[f64],
    slope0: f64,
    first_step: f64,
    max_step: f64,
    bounds: &[(f64, f64)],
    opts: &MinimizeOptions,
    evaluations: &mut usize,
) -> Option<Step>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut eval = |t: f64, evaluations: &mut usize| {
        let p = point(x, dir, t, bounds);
        let (v, gr) = f(&p);
        *evaluations += 1;
        let ok = v.is_finite() && gr.iter().all(|g| g.is_finite());
        let slope = if ok { dot(&gr, dir) } else { f64::NAN };
        (p, if ok { v } else { f64::INFINITY }, gr, slope)
    };
    let armijo = |t: f64, v: f64| v <= f0 + opts.c1 * t * slope0;
    let curvature = |s: f64| s.abs() <= -opts.c2 * slope0;

    let mut t_prev = 0.0;
    let mut f_prev = f0;
    let mut s_prev = slope0;
    let mut t = first_step.min(max_step);
    let mut best: Option<Step> = None;
    for i in 0..opts.max_line_search {
        let (p, v, gr, s) = eval(t, evaluations);
        if !v.is_finite() || !armijo(t, v) || (i > 0 && v >= f_prev) {
            return zoom(&mut eval, (t_prev, f_prev, s_prev), (t, v, s), f0, slope0, opts, evaluations, best);
        }
        if curvature(s) {
            return Some((p, v, gr));
        }
        if s >= 0.0 {
            return zoom(&mut eval, (t, v, s), (t_prev, f_prev, s_prev), f0, slope0, opts, evaluations, Some((p, v, gr)));
        }
        if t >= max_step {
            // on the boundary of the box with sufficient decrease
            return Some((p, v, gr));
        }
        best = Some((p, v, gr));
        t_prev = t;
        f_prev = v;
        s_prev = s;
        t = (2.0 * t).min(max_step);
    }
    best
}

/// Zoom phase; `lo` always satisfies the sufficient-decrease condition.
#[allow(clippy::too_many_arguments)]
fn zoom<E>(
    eval: &mut E,
    mut lo: (f64, f64, f64),
    mut hi: (f64, f64, f64),
    f0: f64,
    slope0: f64,
    opts: &MinimizeOptions,
    evaluations: &mut usize,
    mut best: Option<Step>,
) -> Option<Step>
where
    E: FnMut(f64, &mut usize) -> (Vec<f64>, f64, Vec<f64>, f64),
{
    for _ in 0..opts.max_line_search {
        let (a, b) = (lo.0.min(hi.0), lo.0.max(hi.0));
        if b - a <= f64::EPSILON * b.max(1e-300) {
            break;
        }
        let t = cubic_minimizer(lo, hi)
            .filter(|t| *t >= a + 0.1 * (b - a) && *t <= b - 0.1 * (b - a))
            .unwrap_or(0.5 * (a + b));
        let (p, v, gr, s) = eval(t, evaluations);
        if !v.is_finite() || v > f0 + opts.c1 * t * slope0 || v >= lo.1 {
            hi = (t, v, s);
        } else {
            if s.abs() <= -opts.c2 * slope0 {
                return Some((p, v, gr));
            }
            if s * (hi.0 - lo.0) >= 0.0 {
                hi = lo;
            }
            lo = (t, v, s);
            best = Some((p, v, gr));
        }
    }
    // fall back to the best sufficient-decrease point seen
    best.filter(|b| b.1 < f0)
}

/// Minimizer of the cubic interpolating two (t, f, f') triples.
fn cubic_minimizer(a: (f64, f64, f64), b: (f64, f64, f64)) -> Option<f64> {
    let (t0, f0, g0) = a;
    let (t1, f1, g1) = b;
    if ![t0, f0, g0, t1, f1, g1].iter().all(|v| v.is_finite()) || t0 == t1 {
        return None;
    }
    let d1 = g0 + g1 - 3.0 * (f0 - f1) / (t0 - t1);
    let disc = d1 * d1 - g0 * g1;
    if disc < 0.0 {
        return None;
    }
    let d2 = (t1 - t0).signum() * disc.sqrt();
    let t = t1 - (t1 - t0) * (g1 + d2 - d1) / (g1 - g0 + 2.0 * d2);
    t.is_finite().then_some(t)
}

/// Backtracking along `P(x + t·d)` with the Armijo condition on the projected step.
#[allow(clippy::too_many_arguments)]
fn projected_backtrack<F>(
    f: &mut F,
    x: &[f64],
    f0: f64,
    g: &[f64],
    dir: &[f64],
    first_step: f64,
    bounds: &[(f64, f64)],
    opts: &MinimizeOptions,
    evaluations: &mut usize,
) -> Option<Step>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut t = first_step;
    for _ in 0..opts.max_line_search {
        let p = point(x, dir, t, bounds);
        let moved: Vec<f64> = p.iter().zip(x).map(|(a, b)| a - b).collect();
        let predicted = dot(g, &moved);
        if !(predicted < 0.0) {
            t *= 0.5;
            continue;
        }
        let (v, gr) = f(&p);
        *evaluations += 1;
        if v.is_finite() && gr.iter().all(|v| v.is_finite()) && v <= f0 + opts.c1 * predicted {
            return Some((p, v, gr));
        }
        t *= 0.5;
    }
    None
}
