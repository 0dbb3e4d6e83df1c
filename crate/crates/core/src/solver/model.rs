use std::fmt;

use crate::entropy::ConstraintSet;
use crate::error::{Error, Result};
use crate::ot::{LossSpec, SinkhornOptions};
use crate::tensor::{tucker_reconstruct, DenseTensor, FactorMatrix, Matrix};

/// One optimisation block of a Tucker model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    Core,
    /// Factor matrix for the given (zero-based) mode.
    Factor(usize),
}

impl Block {
    /// Position in the `rho` / constraint lists: 0 for the core, `k + 1` for factor `k`.
    pub fn slot(&self) -> usize {
        match self {
            Block::Core => 0,
            Block::Factor(k) => k + 1,
        }
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Block::Core => write!(f, "core"),
            Block::Factor(k) => write!(f, "factor{}", k + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Superdiagonal core of ones, never updated.
    Cp,
    Tucker,
}

/// Shape and constraints of the decomposition to fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub ranks: Vec<usize>,
    pub core_constraint: ConstraintSet,
    pub factor_constraints: Vec<ConstraintSet>,
}

impl ModelSpec {
    pub fn validate(&self, data_shape: &[usize]) -> Result<()> {
        let d = data_shape.len();
        if self.ranks.len() != d || self.factor_constraints.len() != d {
            return Err(Error::Config(format!(
                "data has {d} modes but {} ranks and {} factor constraints were given",
                self.ranks.len(),
                self.factor_constraints.len()
            )));
        }
        for (k, (&r, &n)) in self.ranks.iter().zip(data_shape).enumerate() {
            if r == 0 || r > n {
                return Err(Error::Config(format!("infeasible rank {r} for mode {} of size {n}", k + 1)));
            }
        }
        if self.kind == ModelKind::Cp && self.ranks.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::Config(format!("CP ranks must all be equal, got {:?}", self.ranks)));
        }
        if matches!(self.core_constraint, ConstraintSet::RowSimplex | ConstraintSet::ColumnSimplex) && d != 2 {
            return Err(Error::Config("row/column core constraints need a 2-mode core".into()));
        }
        Ok(())
    }
}

/// Core tensor plus factor matrices, each with its normalisation constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerModel {
    pub core: DenseTensor,
    pub factors: Vec<FactorMatrix>,
    /// Index 0 is the core, index `k + 1` is factor `k`.
    pub constraints: Vec<ConstraintSet>,
    pub core_fixed: bool,
}

impl TuckerModel {
    pub fn new(
        core: DenseTensor,
        factors: Vec<FactorMatrix>,
        constraints: Vec<ConstraintSet>,
        core_fixed: bool,
    ) -> Result<Self> {
        if factors.len() != core.order() || constraints.len() != core.order() + 1 {
            return Err(Error::shape(format!(
                "core of order {} needs {} factors and {} constraints",
                core.order(),
                core.order(),
                core.order() + 1
            )));
        }
        for (k, a) in factors.iter().enumerate() {
            if a.cols() != core.shape()[k] {
                return Err(Error::shape(format!(
                    "factor {} has {} columns, core mode has {}",
                    k + 1,
                    a.cols(),
                    core.shape()[k]
                )));
            }
        }
        Ok(Self { core, factors, constraints, core_fixed })
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.core.shape().to_vec()
    }

    pub fn data_shape(&self) -> Vec<usize> {
        self.factors.iter().map(Matrix::rows).collect()
    }

    pub fn reconstruct(&self) -> Result<DenseTensor> {
        tucker_reconstruct(&self.core, &self.factors)
    }

    pub fn constraint(&self, block: Block) -> ConstraintSet {
        self.constraints[block.slot()]
    }

    /// The block as a tensor (factors become 2-mode tensors).
    pub fn block_tensor(&self, block: Block) -> DenseTensor {
        match block {
            Block::Core => self.core.clone(),
            Block::Factor(k) => self.factors[k].to_tensor(),
        }
    }

    /// Blocks visited by one sweep: factors in mode order, then the core.
    pub fn sweep_order(&self) -> Vec<Block> {
        let mut blocks: Vec<Block> = (0..self.order()).map(Block::Factor).collect();
        if !self.core_fixed {
            blocks.push(Block::Core);
        }
        blocks
    }

    /// Largest normalisation error over the free blocks.
    pub fn max_constraint_violation(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for b in self.sweep_order() {
            worst = worst.max(self.constraint(b).violation(&self.block_tensor(b))?);
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerMethod {
    Lbfgs,
    GradientDescent,
}

/// Settings for the smooth dual minimisation of each block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerConfig {
    pub method: InnerMethod,
    /// Stop when the sup-norm of the gradient is at most this.
    pub grad_tol: f64,
    pub max_iters: usize,
    pub memory: usize,
    pub armijo: f64,
    pub initial_step: f64,
    pub max_halvings: usize,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self {
            method: InnerMethod::Lbfgs,
            grad_tol: 1e-9,
            max_iters: 1000,
            memory: 10,
            armijo: 1e-4,
            initial_step: 1.0,
            max_halvings: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Nnsvd,
    Random { seed: u64 },
}

/// Dual variable used the first time a block is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DualStart {
    #[default]
    Zero,
    /// Constant `lambda * (1 - mass(X) / mass(X_hat))`, the value at which a
    /// semi-unbalanced loss is stationary along the all-ones direction.
    /// Same as `Zero` for a balanced loss.
    MassMatched,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Barrier weights; index 0 is the core, `k + 1` is factor `k`.
    pub rho: Vec<f64>,
    pub loss: LossSpec,
    pub outer_iters: usize,
    /// Relative change of the monitored objective over one sweep.
    pub outer_tol: f64,
    pub inner: InnerConfig,
    pub init: Init,
    pub monitor: SinkhornOptions,
    pub dual_start: DualStart,
}

impl SolverConfig {
    pub fn new(rho: Vec<f64>, loss: LossSpec) -> Self {
        Self {
            rho,
            loss,
            outer_iters: 100,
            outer_tol: 1e-5,
            inner: InnerConfig::default(),
            init: Init::Nnsvd,
            monitor: SinkhornOptions::default(),
            dual_start: DualStart::Zero,
        }
    }

    pub fn rho_for(&self, block: Block) -> f64 {
        self.rho[block.slot()]
    }

    pub fn validate(&self, order: usize) -> Result<()> {
        if self.rho.len() != order + 1 {
            return Err(Error::Config(format!(
                "expected {} barrier weights (core + {order} factors), got {}",
                order + 1,
                self.rho.len()
            )));
        }
        if let Some(r) = self.rho.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
            return Err(Error::Config(format!("barrier weight rho must be positive, got {r}")));
        }
        if !(self.outer_tol > 0.0) || !(self.inner.grad_tol > 0.0) || !(self.monitor.tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.inner.memory == 0 {
            return Err(Error::Config("L-BFGS memory must be at least 1".into()));
        }
        Ok(())
    }
}
