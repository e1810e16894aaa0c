//! Limited-memory BFGS ascent with a strong-Wolfe line search.
//!
//! The search maximizes `G` by minimizing `φ = -G`. When the quasi-Newton
//! direction is not an ascent direction or its line search fails, the
//! memory is dropped and a steepest-ascent step is tried before giving up.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    #[default]
    Lbfgs,
    SteepestAscent,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchSettings {
    pub kind: OptimizerKind,
    pub max_iterations: usize,
    /// Stop once an accepted step raises `G` by less than this.
    pub tolerance: f64,
    /// Stop once `‖∇G‖` falls below this.
    pub gradient_tolerance: f64,
    pub memory: usize,
    /// Largest parameter change of the first trial step.
    pub initial_step: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Tolerance,
    Gradient,
    MaxIterations,
    LineSearch,
    NonFinite,
}

impl StopReason {
    pub fn converged(&self) -> bool {
        matches!(self, StopReason::Tolerance | StopReason::Gradient)
    }
}

/// One accepted iterate: value, auxiliary payload and gradient norm.
#[derive(Clone, Debug, PartialEq)]
pub struct Iterate<A> {
    pub value: f64,
    pub aux: A,
    pub grad_norm: f64,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome<A> {
    pub x: Vec<f64>,
    pub value: f64,
    pub aux: A,
    /// Iterate 0 is the starting point.
    pub history: Vec<Iterate<A>>,
    pub evaluations: usize,
    pub stop: StopReason,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LINE_EVALS: usize = 25;

struct Point<A> {
    x: Vec<f64>,
    phi: f64,
    grad: Vec<f64>,
    aux: A,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Maximizes `eval(x) -> (G, ∇G, aux)`. Evaluation errors are propagated.
pub fn maximize<A: Clone, E>(
    mut eval: impl FnMut(&[f64]) -> Result<(f64, Vec<f64>, A), E>,
    x0: Vec<f64>,
    settings: &SearchSettings,
) -> Result<SearchOutcome<A>, E> {
    let mut evaluations = 0;
    // φ = -G and its gradient
    let mut objective = |x: &[f64]| -> Result<(f64, Vec<f64>, A), E> {
        evaluations += 1;
        let (g, grad, aux) = eval(x)?;
        Ok((-g, grad.into_iter().map(|v| -v).collect(), aux))
    };

    let (phi, grad, aux) = objective(&x0)?;
    let mut cur = Point { x: x0, phi, grad, aux };
    let mut history = vec![Iterate { value: -cur.phi, aux: cur.aux.clone(), grad_norm: norm(&cur.grad) }];
    if !cur.phi.is_finite() || cur.grad.iter().any(|g| !g.is_finite()) {
        return Ok(finish(cur, history, evaluations, StopReason::NonFinite));
    }

    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut stop = StopReason::MaxIterations;
    for _ in 0..settings.max_iterations {
        if norm(&cur.grad) <= settings.gradient_tolerance {
            stop = StopReason::Gradient;
            break;
        }
        let mut accepted = None;
        for attempt in 0..2 {
            let steepest = settings.kind == OptimizerKind::SteepestAscent || memory.is_empty() || attempt == 1;
            if attempt == 1 {
                if memory.is_empty() {
                    break;
                }
                memory.clear();
            }
            let mut p = if steepest { cur.grad.iter().map(|g| -g).collect() } else { two_loop(&cur.grad, &memory) };
            let mut slope = dot(&cur.grad, &p);
            if !(slope < 0.0) {
                p = cur.grad.iter().map(|g| -g).collect();
                slope = dot(&cur.grad, &p);
                memory.clear();
            }
            let pmax = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let alpha0 = if steepest { (settings.initial_step / pmax).min(1e12) } else { 1.0 };
            if let Some(next) = line_search(&mut objective, &cur, &p, slope, alpha0)? {
                accepted = Some(next);
                break;
            }
        }
        let Some(next) = accepted else {
            stop = StopReason::LineSearch;
            break;
        };
        if !next.phi.is_finite() {
            stop = StopReason::NonFinite;
            break;
        }
        let s: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if memory.len() == settings.memory.max(1) {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        let gain = cur.phi - next.phi;
        cur = next;
        history.push(Iterate { value: -cur.phi, aux: cur.aux.clone(), grad_norm: norm(&cur.grad) });
        if gain.abs() < settings.tolerance {
            stop = StopReason::Tolerance;
            break;
        }
    }
    Ok(finish(cur, history, evaluations, stop))
}

fn finish<A>(cur: Point<A>, history: Vec<Iterate<A>>, evaluations: usize, stop: StopReason) -> SearchOutcome<A> {
    SearchOutcome { x: cur.x, value: -cur.phi, aux: cur.aux, history, evaluations, stop }
}

fn two_loop(grad: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Minimizer of the cubic through `(a, fa, da)` and `(b, fb, db)`, kept
/// inside the central 80 % of the bracket.
fn cubic_step(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> f64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let margin = 0.1 * (hi - lo);
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    let t = if disc >= 0.0 {
        let d2 = (b - a).signum() * disc.sqrt();
        b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2)
    } else {
        f64::NAN
    };
    if t.is_finite() {
        t.clamp(lo + margin, hi - margin)
    } else {
        0.5 * (lo + hi)
    }
}

fn line_search<A, E>(
    objective: &mut impl FnMut(&[f64]) -> Result<(f64, Vec<f64>, A), E>,
    cur: &Point<A>,
    p: &[f64],
    slope0: f64,
    alpha0: f64,
) -> Result<Option<Point<A>>, E> {
    let trial = |alpha: f64| -> Vec<f64> { cur.x.iter().zip(p).map(|(x, d)| x + alpha * d).collect() };
    let phi0 = cur.phi;
    let mut evals = 0;

    // bracketing phase
    let (mut a_prev, mut f_prev, mut d_prev) = (0.0, phi0, slope0);
    let mut prev: Option<Point<A>> = None;
    let mut alpha = alpha0;
    let mut bracket = None;
    while evals < MAX_LINE_EVALS {
        let x = trial(alpha);
        let (f, g, aux) = objective(&x)?;
        evals += 1;
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            alpha = a_prev + 0.25 * (alpha - a_prev);
            continue;
        }
        let d = dot(&g, p);
        if f > phi0 + C1 * alpha * slope0 || (a_prev > 0.0 && f >= f_prev) {
            bracket = Some(((a_prev, f_prev, d_prev, prev.take()), (alpha, f, d)));
            break;
        }
        if d.abs() <= -C2 * slope0 {
            return Ok(Some(Point { x, phi: f, grad: g, aux }));
        }
        if d >= 0.0 {
            bracket = Some(((alpha, f, d, Some(Point { x, phi: f, grad: g, aux })), (a_prev, f_prev, d_prev)));
            break;
        }
        a_prev = alpha;
        f_prev = f;
        d_prev = d;
        prev = Some(Point { x, phi: f, grad: g, aux });
        alpha *= 4.0;
    }
    // out of budget while still expanding: the last point satisfies sufficient decrease
    let Some(((mut lo, mut f_lo, mut d_lo, mut best), (mut hi, mut f_hi, mut d_hi))) = bracket else {
        return Ok(prev);
    };

    // zoom phase
    while evals < MAX_LINE_EVALS {
        let alpha = cubic_step(lo, f_lo, d_lo, hi, f_hi, d_hi);
        let x = trial(alpha);
        let (f, g, aux) = objective(&x)?;
        evals += 1;
        if !f.is_finite() {
            hi = alpha;
            f_hi = f64::INFINITY;
            d_hi = 0.0;
            continue;
        }
        let d = dot(&g, p);
        if f > phi0 + C1 * alpha * slope0 || f >= f_lo {
            hi = alpha;
            f_hi = f;
            d_hi = d;
        } else {
            if d.abs() <= -C2 * slope0 {
                return Ok(Some(Point { x, phi: f, grad: g, aux }));
            }
            if d * (hi - lo) >= 0.0 {
                hi = lo;
                f_hi = f_lo;
                d_hi = d_lo;
            }
            lo = alpha;
            f_lo = f;
            d_lo = d;
            best = Some(Point { x, phi: f, grad: g, aux });
        }
        if (hi - lo).abs() <= 1e-14 * lo.abs().max(1e-300) {
            break;
        }
    }
    // sufficient decrease holds at `lo` whenever it has been evaluated
    Ok(best)
}
