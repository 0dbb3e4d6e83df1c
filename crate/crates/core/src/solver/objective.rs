//! Dual objectives of the block subproblems and the primal quantities used
//! to monitor them.

use crate::entropy::{entropy, entropy_conjugate, primal_recover, ConstraintSet};
use crate::error::{Error, Result};
use crate::ot::{loss_conjugate, loss_value_warm, LossMode, LossSpec, Marginal, SinkhornOptions, SinkhornWarmStart};
use crate::solver::model::{Block, SolverConfig, TuckerModel};
use crate::solver::operators::{omega_adjoint, omega_operator};
use crate::tensor::{mode_product, multi_mode_product, unfolding_gram, DenseTensor, Matrix};

/// Dual of the factor-`k` subproblem with every other block frozen.
///
/// Holds `Q = S x_{j != k} A_j`, so that `Xi(U) = U_(k) Q_(k)^T` and the
/// adjoint is `Q x_k G`.
#[derive(Debug, Clone)]
pub struct FactorDual<'a> {
    x: &'a DenseTensor,
    loss: &'a LossSpec,
    k: usize,
    design: DenseTensor,
    rho: f64,
    constraint: ConstraintSet,
}

impl<'a> FactorDual<'a> {
    /// `x` may differ from the model in mode `k` only (projection of new data).
    pub fn new(x: &'a DenseTensor, model: &TuckerModel, k: usize, cfg: &'a SolverConfig) -> Result<Self> {
        let d = model.order();
        if x.order() != d {
            return Err(Error::shape(format!("data of order {} for a model of order {d}", x.order())));
        }
        if k >= d {
            return Err(Error::ModeOutOfRange { mode: k, order: d });
        }
        for j in (0..d).filter(|&j| j != k) {
            if model.factors[j].rows() != x.shape()[j] {
                return Err(Error::shape(format!(
                    "factor {} has {} rows but data mode has {}",
                    j + 1,
                    model.factors[j].rows(),
                    x.shape()[j]
                )));
            }
        }
        cfg.loss.check_data_shape(x.shape())?;
        let others: Vec<(&Matrix, usize)> =
            (0..d).filter(|&j| j != k).map(|j| (&model.factors[j], j)).collect();
        let design = multi_mode_product(&model.core, &others)?;
        Ok(Self {
            x,
            loss: &cfg.loss,
            k,
            design,
            rho: cfg.rho_for(Block::Factor(k)),
            constraint: model.constraint(Block::Factor(k)),
        })
    }

    pub fn xi(&self, u: &DenseTensor) -> Result<Matrix> {
        unfolding_gram(u, &self.design, self.k)
    }

    fn barrier_argument(&self, u: &DenseTensor) -> Result<DenseTensor> {
        let rho = self.rho;
        Ok(self.xi(u)?.to_tensor().map(|v| -v / rho))
    }

    pub fn evaluate(&self, u: &DenseTensor) -> Result<(f64, DenseTensor)> {
        u.require_same_shape(self.x)?;
        let (phi, phi_grad) = loss_conjugate(self.x, u, self.loss)?;
        let (e, e_grad) = entropy_conjugate(&self.barrier_argument(u)?, self.constraint)?;
        let e_grad = Matrix::try_from(e_grad)?;
        let coupled = mode_product(&self.design, &e_grad, self.k)?;
        let grad = phi_grad.zip_map(&coupled, |a, b| a - b)?;
        Ok((phi + self.rho * e, grad))
    }

    /// Primal block `grad E*(-Xi(U) / rho)` attached to a dual point.
    pub fn recover(&self, u: &DenseTensor) -> Result<Matrix> {
        Matrix::try_from(primal_recover(&self.barrier_argument(u)?, self.constraint)?)
    }
}

/// Dual of the core subproblem with all factors frozen.
#[derive(Debug, Clone)]
pub struct CoreDual<'a> {
    x: &'a DenseTensor,
    loss: &'a LossSpec,
    factors: &'a [Matrix],
    rho: f64,
    constraint: ConstraintSet,
}

impl<'a> CoreDual<'a> {
    pub fn new(x: &'a DenseTensor, model: &'a TuckerModel, cfg: &'a SolverConfig) -> Result<Self> {
        if x.shape() != model.data_shape().as_slice() {
            return Err(Error::shape(format!(
                "data shape {:?} does not match model shape {:?}",
                x.shape(),
                model.data_shape()
            )));
        }
        cfg.loss.check_data_shape(x.shape())?;
        Ok(Self {
            x,
            loss: &cfg.loss,
            factors: &model.factors,
            rho: cfg.rho_for(Block::Core),
            constraint: model.constraint(Block::Core),
        })
    }

    fn barrier_argument(&self, u: &DenseTensor) -> Result<DenseTensor> {
        let rho = self.rho;
        Ok(omega_operator(u, self.factors)?.map(|v| -v / rho))
    }

    pub fn evaluate(&self, u: &DenseTensor) -> Result<(f64, DenseTensor)> {
        u.require_same_shape(self.x)?;
        let (phi, phi_grad) = loss_conjugate(self.x, u, self.loss)?;
        let (e, e_grad) = entropy_conjugate(&self.barrier_argument(u)?, self.constraint)?;
        let coupled = omega_adjoint(&e_grad, self.factors)?;
        let grad = phi_grad.zip_map(&coupled, |a, b| a - b)?;
        Ok((phi + self.rho * e, grad))
    }

    pub fn recover(&self, u: &DenseTensor) -> Result<DenseTensor> {
        primal_recover(&self.barrier_argument(u)?, self.constraint)
    }
}

/// `Phi*(X, U) + rho_k E*(-Xi^(k)(U) / rho_k)` and its gradient in `U`.
pub fn factor_dual_objective(
    u: &DenseTensor,
    k: usize,
    x: &DenseTensor,
    model: &TuckerModel,
    cfg: &SolverConfig,
) -> Result<(f64, DenseTensor)> {
    FactorDual::new(x, model, k, cfg)?.evaluate(u)
}

/// `Phi*(X, U) + rho_0 E*(-Omega(U) / rho_0)` and its gradient in `U`.
pub fn core_dual_objective(
    u: &DenseTensor,
    x: &DenseTensor,
    model: &TuckerModel,
    cfg: &SolverConfig,
) -> Result<(f64, DenseTensor)> {
    CoreDual::new(x, model, cfg)?.evaluate(u)
}

/// Monitored value of the loss, with the Sinkhorn convergence flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monitored {
    pub value: f64,
    pub converged: bool,
}

/// Relative mass gap under which a balanced loss treats `X_hat` as mass-matched.
const BALANCED_MASS_SLACK: f64 = 1e-6;

/// `Phi(X, X_hat)` by Sinkhorn.
///
/// Under a balanced loss the primal is infinite unless the masses agree; dual
/// solves only match them up to the inner tolerance, so a gap below
/// `BALANCED_MASS_SLACK` (relative) is closed by rescaling `X_hat` first.
pub fn monitored_loss(x: &DenseTensor, x_hat: &DenseTensor, loss: &LossSpec, opts: &SinkhornOptions) -> Result<Monitored> {
    monitored_loss_warm(x, x_hat, loss, opts, &mut SinkhornWarmStart::default())
}

/// [`monitored_loss`] reusing Sinkhorn potentials across calls.
pub fn monitored_loss_warm(
    x: &DenseTensor,
    x_hat: &DenseTensor,
    loss: &LossSpec,
    opts: &SinkhornOptions,
    warm: &mut SinkhornWarmStart,
) -> Result<Monitored> {
    let mut x_hat = x_hat.clone();
    if loss.marginal == Marginal::Balanced {
        let groups: Vec<(DenseTensor, DenseTensor)> = match loss.mode {
            LossMode::ProductTensor => vec![(x.clone(), x_hat.clone())],
            LossMode::SliceSum { axis } => (0..x.shape()[axis])
                .map(|i| Ok((x.slice(axis, i)?, x_hat.slice(axis, i)?)))
                .collect::<Result<_>>()?,
        };
        let mut rescaled = Vec::with_capacity(groups.len());
        for (a, b) in groups {
            let (ma, mb) = (a.sum(), b.sum());
            if (ma - mb).abs() > BALANCED_MASS_SLACK * ma.max(f64::MIN_POSITIVE) {
                return Ok(Monitored { value: f64::INFINITY, converged: true });
            }
            rescaled.push(b.scaled(ma / mb));
        }
        x_hat = match loss.mode {
            LossMode::ProductTensor => rescaled.pop().expect("one group"),
            LossMode::SliceSum { axis } => {
                let mut out = x_hat;
                for (i, s) in rescaled.iter().enumerate() {
                    out.set_slice(axis, i, s)?;
                }
                out
            }
        };
    }
    let out = loss_value_warm(x, &x_hat, loss, opts, warm)?;
    Ok(Monitored { value: out.value, converged: out.converged })
}

/// Primal objective of one block subproblem: `Phi(X, X_hat) + rho E(block)`.
pub fn primal_block_objective(x: &DenseTensor, model: &TuckerModel, block: Block, cfg: &SolverConfig) -> Result<Monitored> {
    let m = monitored_loss(x, &model.reconstruct()?, &cfg.loss, &cfg.monitor)?;
    Ok(Monitored { value: m.value + cfg.rho_for(block) * entropy(&model.block_tensor(block)), converged: m.converged })
}

/// Smoothed objective: loss plus the barrier of every free block.
pub fn smoothed_objective(x: &DenseTensor, model: &TuckerModel, cfg: &SolverConfig) -> Result<Monitored> {
    smoothed_objective_warm(x, model, cfg, &mut SinkhornWarmStart::default())
}

pub fn smoothed_objective_warm(
    x: &DenseTensor,
    model: &TuckerModel,
    cfg: &SolverConfig,
    warm: &mut SinkhornWarmStart,
) -> Result<Monitored> {
    let m = monitored_loss_warm(x, &model.reconstruct()?, &cfg.loss, &cfg.monitor, warm)?;
    let barrier: f64 = model
        .sweep_order()
        .into_iter()
        .map(|b| cfg.rho_for(b) * entropy(&model.block_tensor(b)))
        .sum();
    Ok(Monitored { value: m.value + barrier, converged: m.converged })
}
