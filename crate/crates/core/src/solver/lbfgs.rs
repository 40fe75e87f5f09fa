use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop once `‖∇J‖∞` falls below this.
    pub gradient_tolerance: f64,
    /// Stop once the relative decrease over the last three iterations falls below this.
    pub relative_tolerance: f64,
    /// Sufficient-decrease constant.
    pub armijo: f64,
    /// Curvature constant of the weak Wolfe condition.
    pub wolfe: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 8,
            max_iterations: 300,
            gradient_tolerance: 1e-5,
            relative_tolerance: 1e-6,
            armijo: 1e-4,
            wolfe: 0.9,
            max_line_search: 50,
        }
    }
}

impl LbfgsOptions {
    pub fn validate(&self) -> Result<()> {
        if self.memory < 3 {
            return Err(Error::domain("L-BFGS memory must be at least 3"));
        }
        if !(self.gradient_tolerance > 0.0 && self.relative_tolerance > 0.0) {
            return Err(Error::domain("tolerances must be positive"));
        }
        if !(0.0 < self.armijo && self.armijo < self.wolfe && self.wolfe < 1.0) {
            return Err(Error::domain("line search needs 0 < armijo < wolfe < 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    RelativeDecrease,
    MaxIterations,
    /// The per-iteration callback asked to stop.
    Callback,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbfgsReport {
    pub iterations: usize,
    pub evaluations: usize,
    pub final_cost: f64,
    pub gradient_norm: f64,
    pub termination: Termination,
    /// Cost of every accepted iterate, starting with `x0`.
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Point {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

/// Minimizes `objective` from `x0`.
///
/// The objective returns the cost and gradient; errors and non-finite values
/// met during a line search are treated as an infinite cost. `callback` sees
/// every accepted iterate and returns `true` to stop.
pub fn lbfgs_minimize<F, C>(
    mut objective: F,
    x0: &[f64],
    opts: &LbfgsOptions,
    mut callback: C,
) -> Result<(Vec<f64>, LbfgsReport)>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    C: FnMut(usize, &[f64], f64) -> bool,
{
    opts.validate()?;
    let (f0, g0) = objective(x0)?;
    if !f0.is_finite() || g0.iter().any(|v| !v.is_finite()) || g0.len() != x0.len() {
        return Err(Error::Optimization(
            "objective is not finite at the initial point".into(),
        ));
    }
    let mut evaluations = 1;
    let mut cur = Point {
        x: x0.to_vec(),
        f: f0,
        g: g0,
    };
    let mut history = vec![f0];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut iterations = 0;

    let termination = loop {
        if inf_norm(&cur.g) < opts.gradient_tolerance {
            break Termination::GradientTolerance;
        }
        if iterations >= opts.max_iterations {
            break Termination::MaxIterations;
        }

        let mut dir = two_loop(&cur.g, &pairs);
        let mut slope = dot(&dir, &cur.g);
        if !(slope < 0.0) {
            pairs.clear();
            dir = cur.g.iter().map(|v| -v).collect();
            slope = dot(&dir, &cur.g);
        }
        let first_step = if pairs.is_empty() {
            (1.0 / inf_norm(&dir)).min(1.0)
        } else {
            1.0
        };

        let Some((next, evals)) = weak_wolfe(&mut objective, &cur, &dir, slope, first_step, opts)
        else {
            if pairs.is_empty() {
                break Termination::LineSearchFailed;
            }
            // retry once along steepest descent before giving up
            pairs.clear();
            continue;
        };
        evaluations += evals;
        iterations += 1;

        let s: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.g.iter().zip(&cur.g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if pairs.len() == opts.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        cur = next;
        history.push(cur.f);

        if callback(iterations, &cur.x, cur.f) {
            break Termination::Callback;
        }
        if history.len() > 3 {
            let old = history[history.len() - 4];
            if (old - cur.f).abs() <= opts.relative_tolerance * cur.f.abs().max(1.0) {
                break Termination::RelativeDecrease;
            }
        }
    };

    let report = LbfgsReport {
        iterations,
        evaluations,
        final_cost: cur.f,
        gradient_norm: inf_norm(&cur.g),
        termination,
        history,
    };
    Ok((cur.x, report))
}

fn two_loop(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alpha = vec![0.0; pairs.len()];
    for (i, (s, y, rho)) in pairs.iter().enumerate().rev() {
        alpha[i] = rho * dot(s, &q);
        q.iter_mut()
            .zip(y)
            .for_each(|(qv, yv)| *qv -= alpha[i] * yv);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for (i, (s, y, rho)) in pairs.iter().enumerate() {
        let beta = rho * dot(y, &q);
        q.iter_mut()
            .zip(s)
            .for_each(|(qv, sv)| *qv += (alpha[i] - beta) * sv);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Bisection/expansion search for a step meeting the weak Wolfe conditions.
/// Falls back to the best sufficient-decrease point if the bracket collapses.
fn weak_wolfe<F>(
    objective: &mut F,
    cur: &Point,
    dir: &[f64],
    slope: f64,
    first: f64,
    opts: &LbfgsOptions,
) -> Option<(Point, usize)>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    let mut t = first;
    let mut armijo_ok: Option<Point> = None;
    for evals in 1..=opts.max_line_search {
        let x: Vec<f64> = cur.x.iter().zip(dir).map(|(a, d)| a + t * d).collect();
        let trial = match objective(&x) {
            Ok((f, g)) if f.is_finite() && g.iter().all(|v| v.is_finite()) => {
                Some(Point { x, f, g })
            }
            _ => None,
        };
        match trial {
            Some(p) if p.f <= cur.f + opts.armijo * t * slope => {
                if dot(&p.g, dir) >= opts.wolfe * slope {
                    return Some((p, evals));
                }
                lo = t;
                if armijo_ok.as_ref().is_none_or(|b| p.f < b.f) {
                    armijo_ok = Some(p);
                }
            }
            _ => hi = t,
        }
        t = if hi.is_finite() {
            0.5 * (lo + hi)
        } else {
            2.0 * lo
        };
        if hi.is_finite() && hi - lo <= 1e-16 * hi.max(1.0) {
            break;
        }
    }
    armijo_ok
        .filter(|p| p.f < cur.f)
        .map(|p| (p, opts.max_line_search))
}
