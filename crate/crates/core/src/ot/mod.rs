//! Transport side of the problem: costs, factored Gibbs kernels, loss
//! conjugates and Sinkhorn evaluators.

pub mod conjugate;
pub mod cost;
pub mod kernel;
pub mod sinkhorn;

pub use conjugate::{
    loss_conjugate, ot_conjugate_balanced, ot_conjugate_semiunbalanced, semiunbalanced_coupling, LossMode,
    LossSpec, Marginal,
};
pub use cost::{build_grid_cost, linspace, ModeCost};
pub use kernel::{gibbs_kernel, kernel_apply_log, kernel_apply_log_transposed, GibbsKernel};
pub use sinkhorn::{
    generalized_kl, loss_value, loss_value_warm, sinkhorn_balanced, sinkhorn_semiunbalanced, SinkhornOptions,
    SinkhornOutput, SinkhornWarmStart,
};
