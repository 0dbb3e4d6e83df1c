//! Non-negative tensor factorisation under entropic optimal-transport losses.
//!
//! The model is a Tucker (or CP) decomposition whose factors and core carry
//! entropy barriers and normalisation constraints. Each block is updated
//! exactly by minimising a smooth dual, and the primal block is recovered in
//! closed form.

pub mod config;
pub mod datagen;
pub mod entropy;
pub mod error;
pub mod eval;
pub mod io;
pub mod ot;
pub mod solver;
pub mod tensor;

pub use config::{RunConfig, Simulation};
pub use datagen::{empirical_sample, gaussian_atom, separable_mixture, shifted_slice_dataset, AtomSpec};
pub use entropy::{entropy, entropy_conjugate, primal_recover, ConstraintSet};
pub use error::{Error, Result};
pub use eval::{atom_match_score, reconstruction_metrics, AtomMatch, ReconstructionMetrics};
pub use io::{export_model, export_trace, import_model, read_tensor, write_tensor};
pub use ot::{
    build_grid_cost, gibbs_kernel, kernel_apply_log, loss_conjugate, loss_value, ot_conjugate_balanced,
    ot_conjugate_semiunbalanced, sinkhorn_balanced, sinkhorn_semiunbalanced, GibbsKernel, LossMode, LossSpec,
    Marginal, ModeCost, SinkhornOptions,
};
pub use solver::{
    block_coordinate_descent, project_onto_basis, Block, DualStart, Init, InnerConfig, InnerMethod, ModelKind, ModelSpec,
    SolveTrace, SolverConfig, TuckerModel,
};
pub use tensor::{
    cp_reconstruct, matricize, mode_product, tensorize, tucker_reconstruct, DenseTensor, FactorMatrix, Matrix,
};
