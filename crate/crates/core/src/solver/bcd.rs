//! Block coordinate descent over the factors and the core.

use std::time::Instant;

use log::{debug, info, warn};

use crate::error::{Error, Result};
use crate::ot::SinkhornWarmStart;
use crate::solver::init::initialize;
use crate::ot::Marginal;
use crate::solver::model::{Block, DualStart, ModelSpec, SolverConfig, TuckerModel};
use crate::solver::objective::{core_dual_objective, factor_dual_objective, smoothed_objective_warm, CoreDual, FactorDual};
use crate::solver::optim::{inner_minimize, InnerResult};
use crate::tensor::{DenseTensor, Matrix};

/// Runs the inner solver from `u0` (or zero), falling back to zero when a
/// warm start is unusable.
fn minimize_dual<F>(mut objective: F, shape: &[usize], u0: Option<&DenseTensor>, cfg: &SolverConfig) -> Result<InnerResult>
where
    F: FnMut(&DenseTensor) -> Result<(f64, DenseTensor)>,
{
    if let Some(start) = u0 {
        if start.shape() == shape {
            match inner_minimize(&mut objective, start.clone(), &cfg.inner) {
                Ok(r) if r.value.is_finite() => return Ok(r),
                Ok(_) | Err(Error::DomainViolation { .. }) | Err(Error::NonFinite(_)) => {
                    debug!("warm start rejected, restarting from zero")
                }
                Err(e) => return Err(e),
            }
        }
    }
    inner_minimize(objective, DenseTensor::zeros(shape)?, &cfg.inner)
}

/// Exact update of factor `k` through its dual; returns the new factor and
/// the inner-solver report (whose `u` can warm-start the next visit).
pub fn solve_factor_subproblem(
    k: usize,
    x: &DenseTensor,
    model: &TuckerModel,
    cfg: &SolverConfig,
    u0: Option<&DenseTensor>,
) -> Result<(Matrix, InnerResult)> {
    let dual = FactorDual::new(x, model, k, cfg)?;
    let inner = minimize_dual(|u| dual.evaluate(u), x.shape(), u0, cfg)?;
    Ok((dual.recover(&inner.u)?, inner))
}

/// Exact update of the core through its dual. Errors if the core is fixed.
pub fn solve_core_subproblem(
    x: &DenseTensor,
    model: &TuckerModel,
    cfg: &SolverConfig,
    u0: Option<&DenseTensor>,
) -> Result<(DenseTensor, InnerResult)> {
    if model.core_fixed {
        return Err(Error::InvalidParameter("the core of this model is fixed".into()));
    }
    let dual = CoreDual::new(x, model, cfg)?;
    let inner = minimize_dual(|u| dual.evaluate(u), x.shape(), u0, cfg)?;
    Ok((dual.recover(&inner.u)?, inner))
}

/// One block solve as recorded in the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockRecord {
    /// 1-based sweep number.
    pub sweep: usize,
    pub block: Block,
    pub inner_iterations: usize,
    pub dual_value: f64,
    pub grad_norm: f64,
    /// Smoothed objective right after this block was updated.
    pub primal_objective: f64,
    /// Seconds since the start of the run.
    pub seconds: f64,
    pub inner_converged: bool,
    pub monitor_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveTrace {
    /// Smoothed objective of the starting model.
    pub initial_objective: f64,
    pub records: Vec<BlockRecord>,
    pub sweeps: usize,
    /// True if the relative-change test fired before the sweep cap.
    pub outer_converged: bool,
}

impl SolveTrace {
    /// Smoothed objective at the end of each sweep, starting with the initial value.
    pub fn sweep_objectives(&self) -> Vec<f64> {
        let mut out = vec![self.initial_objective];
        let mut last_sweep = 0;
        for r in &self.records {
            if r.sweep != last_sweep {
                out.push(r.primal_objective);
                last_sweep = r.sweep;
            } else {
                *out.last_mut().expect("non-empty") = r.primal_objective;
            }
        }
        out
    }

    /// Whether every block solve of the last sweep reached its gradient tolerance.
    pub fn last_sweep_converged(&self) -> bool {
        self.records.iter().filter(|r| r.sweep == self.sweeps).all(|r| r.inner_converged)
    }

    /// Overall success flag: outer stop rule fired and the last sweep's inner solves converged.
    pub fn converged(&self) -> bool {
        self.outer_converged && self.last_sweep_converged()
    }
}

/// Initialises from `spec` and runs [`run_bcd`].
pub fn block_coordinate_descent(x: &DenseTensor, spec: &ModelSpec, cfg: &SolverConfig) -> Result<(TuckerModel, SolveTrace)> {
    let model = initialize(x, spec, cfg.init)?;
    run_bcd(x, model, cfg)
}

fn dual_value(x: &DenseTensor, model: &TuckerModel, block: Block, cfg: &SolverConfig, u: &DenseTensor) -> f64 {
    let value = match block {
        Block::Factor(k) => factor_dual_objective(u, k, x, model, cfg),
        Block::Core => core_dual_objective(u, x, model, cfg),
    };
    value.ok().map(|(v, _)| v).filter(|v| v.is_finite()).unwrap_or(f64::INFINITY)
}

fn dual_value_or_zero(x: &DenseTensor, model: &TuckerModel, block: Block, cfg: &SolverConfig, u: Option<&DenseTensor>) -> f64 {
    match u {
        Some(u) => dual_value(x, model, block, cfg, u),
        None => match DenseTensor::zeros(x.shape()) {
            Ok(z) => dual_value(x, model, block, cfg, &z),
            Err(_) => f64::INFINITY,
        },
    }
}

/// Start for a block's first solve, `None` meaning zero.
pub(crate) fn first_dual(x: &DenseTensor, model: &TuckerModel, cfg: &SolverConfig) -> Result<Option<DenseTensor>> {
    let lambda = match (cfg.dual_start, cfg.loss.marginal) {
        (DualStart::MassMatched, Marginal::SemiUnbalanced { lambda }) => lambda,
        _ => return Ok(None),
    };
    let mass = model.reconstruct()?.sum();
    if !(mass > 0.0) {
        return Ok(None);
    }
    Ok(Some(DenseTensor::from_elem(x.shape(), lambda * (1.0 - x.sum() / mass))?))
}

/// Cyclic exact block updates `A_1, ..., A_d, S` starting from `model`.
///
/// Stops when the smoothed objective changes by less than `outer_tol`
/// (relative) over a sweep, or after `outer_iters` sweeps, and returns the
/// best model seen.
pub fn run_bcd(x: &DenseTensor, model: TuckerModel, cfg: &SolverConfig) -> Result<(TuckerModel, SolveTrace)> {
    cfg.validate(model.order())?;
    if x.shape() != model.data_shape().as_slice() {
        return Err(Error::shape(format!(
            "data shape {:?} does not match model shape {:?}",
            x.shape(),
            model.data_shape()
        )));
    }
    if x.data().iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidParameter("data must be finite and non-negative".into()));
    }
    if !(x.sum() > 0.0) {
        return Err(Error::ZeroMass);
    }
    let start = Instant::now();
    let mut potentials = SinkhornWarmStart::default();
    let initial = smoothed_objective_warm(x, &model, cfg, &mut potentials)?;
    let mut trace = SolveTrace { initial_objective: initial.value, ..SolveTrace::default() };
    let mut best = (initial.value, model.clone());
    let mut model = model;
    let mut duals: Vec<Option<DenseTensor>> = vec![None; model.order() + 1];
    let mut previous = initial.value;

    for sweep in 1..=cfg.outer_iters {
        for block in model.sweep_order() {
            let fresh = first_dual(x, &model, cfg)?;
            let warm = match duals[block.slot()].take() {
                Some(u) if dual_value(x, &model, block, cfg, &u) <= dual_value_or_zero(x, &model, block, cfg, fresh.as_ref()) => {
                    Some(u)
                }
                // the other blocks have moved enough that a fresh start is better
                _ => fresh,
            };
            let warm = warm.as_ref();
            let inner = match block {
                Block::Factor(k) => {
                    let (a, inner) = solve_factor_subproblem(k, x, &model, cfg, warm)?;
                    model.factors[k] = a;
                    inner
                }
                Block::Core => {
                    let (s, inner) = solve_core_subproblem(x, &model, cfg, warm)?;
                    model.core = s;
                    inner
                }
            };
            if !inner.converged {
                warn!(
                    "sweep {sweep}, {block}: inner solve stopped at |grad| = {:e} after {} iterations",
                    inner.grad_norm, inner.iterations
                );
            }
            let monitored = smoothed_objective_warm(x, &model, cfg, &mut potentials)?;
            trace.records.push(BlockRecord {
                sweep,
                block,
                inner_iterations: inner.iterations,
                dual_value: inner.value,
                grad_norm: inner.grad_norm,
                primal_objective: monitored.value,
                seconds: start.elapsed().as_secs_f64(),
                inner_converged: inner.converged,
                monitor_converged: monitored.converged,
            });
            duals[block.slot()] = Some(inner.u);
        }
        trace.sweeps = sweep;
        let current = trace.records.last().map_or(previous, |r| r.primal_objective);
        if current <= best.0 || !best.0.is_finite() {
            best = (current, model.clone());
        }
        let change = (previous - current).abs() / previous.abs().max(f64::MIN_POSITIVE);
        info!("sweep {sweep}: objective {current:.10e}, relative change {change:.3e}");
        if current.is_finite() && previous.is_finite() && change < cfg.outer_tol {
            trace.outer_converged = true;
            break;
        }
        previous = current;
    }
    Ok((best.1, trace))
}
