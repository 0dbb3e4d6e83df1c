//! Smooth unconstrained minimisation for the block duals.

use std::collections::VecDeque;

use log::debug;

use crate::error::Result;
use crate::solver::model::{InnerConfig, InnerMethod};
use crate::tensor::DenseTensor;

#[derive(Debug, Clone)]
pub struct InnerResult {
    /// Best accepted iterate.
    pub u: DenseTensor,
    pub value: f64,
    /// Sup-norm of the gradient at `u`.
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// True if the run ended because no step passed the line search.
    pub line_search_failed: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Two-loop recursion: returns `-H g`.
fn lbfgs_direction(g: &[f64], memory: &VecDeque<Pair>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for p in memory.iter().rev() {
        let a = p.rho * dot(&p.s, &q);
        q.iter_mut().zip(&p.y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some(last) = memory.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for (p, a) in memory.iter().zip(alphas.iter().rev()) {
        let b = p.rho * dot(&p.y, &q);
        q.iter_mut().zip(&p.s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Minimises a smooth convex `objective` from `u0`.
///
/// The objective may return an error at points outside its domain; the line
/// search treats those like an Armijo failure and halves the step. Only an
/// error at `u0` itself is returned to the caller. Otherwise the best iterate
/// comes back with `converged` set when the gradient sup-norm reached
/// `cfg.grad_tol`.
pub fn inner_minimize<F>(mut objective: F, u0: DenseTensor, cfg: &InnerConfig) -> Result<InnerResult>
where
    F: FnMut(&DenseTensor) -> Result<(f64, DenseTensor)>,
{
    let (mut f, g0) = objective(&u0)?;
    let mut u = u0;
    let mut g = g0.into_data();
    let mut evaluations = 1;
    let mut memory: VecDeque<Pair> = VecDeque::with_capacity(cfg.memory);
    let mut step = cfg.initial_step * (1.0 / sup_norm(&g)).min(1.0);
    let mut iterations = 0;
    let mut line_search_failed = false;

    while iterations < cfg.max_iters && sup_norm(&g) > cfg.grad_tol {
        let mut dir = match cfg.method {
            InnerMethod::Lbfgs => lbfgs_direction(&g, &memory),
            InnerMethod::GradientDescent => g.iter().map(|v| -v).collect(),
        };
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            memory.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut t = match cfg.method {
            // a bare gradient step moves at most `initial_step` in sup-norm
            InnerMethod::Lbfgs if memory.is_empty() => cfg.initial_step * (1.0 / sup_norm(&dir)).min(1.0),
            InnerMethod::Lbfgs => cfg.initial_step,
            InnerMethod::GradientDescent => 2.0 * step,
        };
        // values that agree to rounding are not treated as an increase
        let slack = 4.0 * f64::EPSILON * f.abs();
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let mut trial = u.clone();
            trial.data_mut().iter_mut().zip(&dir).for_each(|(x, d)| *x += t * d);
            evaluations += 1;
            if let Ok((ft, gt)) = objective(&trial) {
                if ft.is_finite() && ft <= f + cfg.armijo * t * slope + slack && gt.data().iter().all(|v| v.is_finite()) {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((u_new, f_new, g_new)) = accepted else {
            line_search_failed = true;
            debug!("line search failed after {iterations} iterations, |g| = {:e}", sup_norm(&g));
            break;
        };
        iterations += 1;
        step = t;
        let g_new = g_new.into_data();
        let s: Vec<f64> = u_new.data().iter().zip(u.data()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if cfg.method == InnerMethod::Lbfgs && sy > 1e-300 {
            if memory.len() == cfg.memory {
                memory.pop_front();
            }
            memory.push_back(Pair { s, y, rho: 1.0 / sy });
        }
        u = u_new;
        f = f_new;
        g = g_new;
    }
    let grad_norm = sup_norm(&g);
    Ok(InnerResult {
        u,
        value: f,
        grad_norm,
        iterations,
        evaluations,
        converged: grad_norm <= cfg.grad_tol,
        line_search_failed,
    })
}
