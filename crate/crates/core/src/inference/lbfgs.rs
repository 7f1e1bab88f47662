//! Limited-memory BFGS minimizer with a backtracking Armijo line search.
//!
//! Every accepted step satisfies the sufficient-decrease condition, so the
//! returned objective is never worse than the starting one.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub max_iters: usize,
    /// Stop once the Euclidean gradient norm falls to this value.
    pub grad_tol: f64,
    /// Stop once an accepted step lowers the objective by no more than
    /// `f_tol * max(1, |f|)`.
    pub f_tol: f64,
    /// Number of secant pairs kept.
    pub memory: usize,
    /// Sufficient-decrease constant.
    pub c1: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            grad_tol: 1e-6,
            f_tol: 1e-12,
            memory: 7,
            c1: 1e-4,
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    FunctionTolerance,
    IterationLimit,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct LbfgsReport {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimizes `eval`, which returns the objective and its gradient or `None`
/// where the objective cannot be evaluated. Returns `None` only if the
/// starting point itself cannot be evaluated.
pub fn minimize<F>(x0: Vec<f64>, opts: &LbfgsOptions, mut eval: F) -> Option<LbfgsReport>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let (mut f, mut g) = eval(&x0).filter(|(f, g)| f.is_finite() && g.iter().all(|v| v.is_finite()))?;
    let mut x = x0;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut iterations = 0;

    loop {
        let grad_norm = norm(&g);
        if grad_norm <= opts.grad_tol {
            return Some(LbfgsReport { x, f, grad_norm, iterations, termination: Termination::GradientTolerance });
        }
        if iterations >= opts.max_iters {
            return Some(LbfgsReport { x, f, grad_norm, iterations, termination: Termination::IterationLimit });
        }

        let mut dir = two_loop(&g, &history);
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) || !slope.is_finite() {
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -grad_norm * grad_norm;
        }
        let mut step = if history.is_empty() {
            (1.0 / norm(&dir)).min(1.0)
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            if let Some((ft, gt)) = eval(&trial) {
                if ft.is_finite() && gt.iter().all(|v| v.is_finite()) && ft <= f + opts.c1 * step * slope {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            return Some(LbfgsReport { x, f, grad_norm, iterations, termination: Termination::LineSearchFailed });
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        let decrease = f - f_new;
        x = x_new;
        f = f_new;
        g = g_new;
        iterations += 1;
        if decrease <= opts.f_tol * f.abs().max(1.0) {
            let grad_norm = norm(&g);
            return Some(LbfgsReport { x, f, grad_norm, iterations, termination: Termination::FunctionTolerance });
        }
    }
}

fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}
