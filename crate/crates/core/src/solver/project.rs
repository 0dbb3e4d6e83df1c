//! Coefficients of new data against a fixed, previously learned basis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ot::Marginal;
use crate::solver::bcd::{first_dual, solve_core_subproblem, solve_factor_subproblem};
use crate::solver::model::{Block, SolverConfig, TuckerModel};
use crate::solver::optim::InnerResult;
use crate::tensor::DenseTensor;

#[derive(Debug, Clone)]
pub struct Projection {
    /// The solved block; factors come back as 2-mode tensors.
    pub block: DenseTensor,
    pub inner: InnerResult,
}

/// Solves the single convex subproblem for `block` on `x_new`, all other
/// blocks of `model` held fixed.
///
/// For a factor block the new data may have any size along that mode.
pub fn project_onto_basis(
    x_new: &DenseTensor,
    model: &TuckerModel,
    block: Block,
    cfg: &SolverConfig,
    u0: Option<&DenseTensor>,
) -> Result<Projection> {
    cfg.validate(model.order())?;
    if let Some(u) = u0 {
        u.require_same_shape(x_new)?;
    }
    let start = match u0 {
        Some(_) => None,
        None => first_dual(x_new, model, cfg)?,
    };
    let u0 = u0.or(start.as_ref());
    match block {
        Block::Factor(k) => {
            let (a, inner) = solve_factor_subproblem(k, x_new, model, cfg, u0)?;
            Ok(Projection { block: a.to_tensor(), inner })
        }
        Block::Core => {
            if x_new.shape() != model.data_shape().as_slice() {
                return Err(Error::shape(format!(
                    "data shape {:?} does not match the basis {:?}",
                    x_new.shape(),
                    model.data_shape()
                )));
            }
            let mut free = model.clone();
            free.core_fixed = false;
            let (s, inner) = solve_core_subproblem(x_new, &free, cfg, u0)?;
            Ok(Projection { block: s, inner })
        }
    }
}

/// Random dual start with entries uniform in `[-scale, scale]`, kept below
/// `lambda / 2` for semi-unbalanced losses.
pub fn random_dual_start(shape: &[usize], scale: f64, seed: u64, cfg: &SolverConfig) -> Result<DenseTensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cap = match cfg.loss.marginal {
        Marginal::SemiUnbalanced { lambda } => 0.5 * lambda,
        Marginal::Balanced => f64::INFINITY,
    };
    DenseTensor::from_fn(shape, |_| rng.random_range(-scale..=scale).min(cap))
}
