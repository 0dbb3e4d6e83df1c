//! Dual block solvers and the block coordinate descent driver.

pub mod bcd;
pub mod init;
pub mod model;
pub mod objective;
pub mod operators;
pub mod optim;
pub mod project;

pub use bcd::{block_coordinate_descent, run_bcd, solve_core_subproblem, solve_factor_subproblem, BlockRecord, SolveTrace};
pub use init::{initialize, nndsvd_left, nnsvd_init, random_init};
pub use model::{Block, DualStart, Init, InnerConfig, InnerMethod, ModelKind, ModelSpec, SolverConfig, TuckerModel};
pub use objective::{
    core_dual_objective, factor_dual_objective, monitored_loss, monitored_loss_warm, primal_block_objective,
    smoothed_objective, smoothed_objective_warm, CoreDual, FactorDual, Monitored,
};
pub use operators::{omega_adjoint, omega_operator, xi_adjoint, xi_operator};
pub use optim::{inner_minimize, InnerResult};
pub use project::{project_onto_basis, random_dual_start, Projection};
