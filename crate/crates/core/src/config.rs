//! Run configuration read from TOML.
//!
//! Every section rejects unknown keys. Modes and axes are 1-based in the
//! file. A `lambda` of `"balanced"` selects balanced transport.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::{default_atoms, empirical_sample, gaussian_atom, separable_mixture, shifted_slice_dataset, AtomSpec};
use crate::entropy::ConstraintSet;
use crate::error::{Error, Result};
use crate::ot::{build_grid_cost, gibbs_kernel, LossMode, LossSpec, Marginal, SinkhornOptions};
use crate::solver::{DualStart, Init, InnerConfig, InnerMethod, ModelKind, ModelSpec, SolverConfig};
use crate::tensor::{DenseTensor, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSetting {
    Value(f64),
    Word(String),
}

impl Default for LambdaSetting {
    fn default() -> Self {
        LambdaSetting::Word("balanced".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RhoSetting {
    /// Same weight for the core and every factor.
    Scalar(f64),
    /// Core first, then one weight per factor.
    List(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossModeSetting {
    Product,
    Slices,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSection {
    pub epsilon: f64,
    #[serde(default)]
    pub lambda: LambdaSetting,
    #[serde(default = "default_mode")]
    pub mode: LossModeSetting,
    /// 1-based axis indexing the slices when `mode = "slices"`.
    #[serde(default)]
    pub slice_axis: Option<usize>,
}

fn default_mode() -> LossModeSetting {
    LossModeSetting::Product
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    #[serde(default = "default_domain")]
    pub domain: [f64; 2],
    #[serde(default = "default_exponent")]
    pub exponent: f64,
    #[serde(default)]
    pub normalize: bool,
}

fn default_domain() -> [f64; 2] {
    [0.0, 1.0]
}

fn default_exponent() -> f64 {
    2.0
}

impl Default for CostSection {
    fn default() -> Self {
        Self { domain: default_domain(), exponent: default_exponent(), normalize: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindSetting {
    Cp,
    Tucker,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: KindSetting,
    pub ranks: Vec<usize>,
    #[serde(default = "default_core_constraint")]
    pub core_constraint: String,
    /// One name per mode, or a single name for all modes.
    pub factor_constraints: Vec<String>,
}

fn default_core_constraint() -> String {
    "simplex".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSetting {
    Lbfgs,
    Gd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnerSection {
    #[serde(default = "default_method")]
    pub method: MethodSetting,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    #[serde(default = "default_inner_iters")]
    pub max_iters: usize,
    #[serde(default = "default_memory")]
    pub memory: usize,
}

fn default_method() -> MethodSetting {
    MethodSetting::Lbfgs
}
fn default_grad_tol() -> f64 {
    InnerConfig::default().grad_tol
}
fn default_inner_iters() -> usize {
    InnerConfig::default().max_iters
}
fn default_memory() -> usize {
    InnerConfig::default().memory
}

impl Default for InnerSection {
    fn default() -> Self {
        Self {
            method: default_method(),
            grad_tol: default_grad_tol(),
            max_iters: default_inner_iters(),
            memory: default_memory(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitSetting {
    Nnsvd,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub rho: RhoSetting,
    #[serde(default = "default_outer_iters")]
    pub outer_iters: usize,
    #[serde(default = "default_outer_tol")]
    pub outer_tol: f64,
    #[serde(default = "default_init")]
    pub init: InitSetting,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub inner: InnerSection,
    #[serde(default)]
    pub dual_start: DualStartSetting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualStartSetting {
    #[default]
    Zero,
    MassMatched,
}

fn default_outer_iters() -> usize {
    100
}
fn default_outer_tol() -> f64 {
    1e-5
}
fn default_init() -> InitSetting {
    InitSetting::Nnsvd
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorSection {
    #[serde(default = "default_monitor_tol")]
    pub tol: f64,
    #[serde(default = "default_monitor_iters")]
    pub max_iter: usize,
}

fn default_monitor_tol() -> f64 {
    SinkhornOptions::default().tol
}
fn default_monitor_iters() -> usize {
    SinkhornOptions::default().max_iter
}

impl Default for MonitorSection {
    fn default() -> Self {
        Self { tol: default_monitor_tol(), max_iter: default_monitor_iters() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    /// Empirical sample of a separable Gaussian mixture.
    Mixture,
    /// Slices of randomly translated 2-D mixtures.
    ShiftedSlices,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub recipe: Recipe,
    /// Grid size of every atom.
    pub n: usize,
    /// Number of modes for the mixture recipe.
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_components")]
    pub components: usize,
    /// Atom means and standard deviations in domain units; the defaults are
    /// evenly spaced means and 5% of the domain length.
    #[serde(default)]
    pub means: Option<Vec<f64>>,
    #[serde(default)]
    pub stds: Option<Vec<f64>>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    /// Draws for the empirical tensor; 0 keeps the exact mixture.
    #[serde(default)]
    pub samples: usize,
    #[serde(default = "default_slices")]
    pub n_slices: usize,
    #[serde(default = "default_shift")]
    pub shift_std: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_order() -> usize {
    3
}
fn default_components() -> usize {
    3
}
fn default_slices() -> usize {
    50
}
fn default_shift() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub loss: LossSection,
    #[serde(default)]
    pub costs: CostSection,
    pub model: Option<ModelSection>,
    pub solver: Option<SolverSection>,
    #[serde(default)]
    pub monitor: MonitorSection,
    pub simulate: Option<SimulateSection>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| config_err(format!("invalid config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(format!("cannot serialise config: {e}")))
    }

    /// Shape-independent checks.
    pub fn validate(&self) -> Result<()> {
        if !(self.loss.epsilon > 0.0) || !self.loss.epsilon.is_finite() {
            return Err(config_err(format!("epsilon must be positive, got {}", self.loss.epsilon)));
        }
        self.marginal()?;
        if self.loss.mode == LossModeSetting::Slices && self.loss.slice_axis.is_none_or(|a| a == 0) {
            return Err(config_err("slice loss needs a 1-based slice_axis"));
        }
        let [a, b] = self.costs.domain;
        if !(a < b) {
            return Err(config_err(format!("cost domain [{a}, {b}] is empty")));
        }
        if !(self.costs.exponent >= 1.0) {
            return Err(config_err(format!("cost exponent must be at least 1, got {}", self.costs.exponent)));
        }
        if let Some(m) = &self.model {
            if m.ranks.is_empty() || m.ranks.contains(&0) {
                return Err(config_err(format!("infeasible rank in {:?}: ranks must be positive", m.ranks)));
            }
            self.model_spec_for(m)?;
        }
        if let Some(s) = &self.solver {
            let rho: Vec<f64> = match &s.rho {
                RhoSetting::Scalar(r) => vec![*r],
                RhoSetting::List(v) => v.clone(),
            };
            if rho.is_empty() {
                return Err(config_err("rho needs at least one value"));
            }
            if let Some(r) = rho.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
                return Err(config_err(format!("rho must be positive, got {r}")));
            }
            if !(s.outer_tol > 0.0) || !(s.inner.grad_tol > 0.0) {
                return Err(config_err("solver tolerances must be positive"));
            }
            if s.inner.memory == 0 {
                return Err(config_err("L-BFGS memory must be at least 1"));
            }
        }
        if !(self.monitor.tol > 0.0) {
            return Err(config_err("monitor tolerance must be positive"));
        }
        if let Some(sim) = &self.simulate {
            if sim.n < 2 || sim.components == 0 || sim.order == 0 {
                return Err(config_err("simulate needs n >= 2, order >= 1 and components >= 1"));
            }
            self.atom_specs(sim)?;
        }
        Ok(())
    }

    pub fn marginal(&self) -> Result<Marginal> {
        match &self.loss.lambda {
            LambdaSetting::Word(w) if w == "balanced" => Ok(Marginal::Balanced),
            LambdaSetting::Word(w) => Err(config_err(format!("lambda must be a positive number or \"balanced\", got \"{w}\""))),
            LambdaSetting::Value(l) if *l > 0.0 && l.is_finite() => Ok(Marginal::SemiUnbalanced { lambda: *l }),
            LambdaSetting::Value(l) => Err(config_err(format!("lambda must be positive, got {l}"))),
        }
    }

    /// Loss for data of the given shape (costs are rebuilt per mode).
    pub fn loss_spec(&self, data_shape: &[usize]) -> Result<LossSpec> {
        let mode = match self.loss.mode {
            LossModeSetting::Product => LossMode::ProductTensor,
            LossModeSetting::Slices => {
                let axis = self.loss.slice_axis.expect("validated") - 1;
                if axis >= data_shape.len() {
                    return Err(config_err(format!(
                        "slice_axis {} exceeds the {} data modes",
                        axis + 1,
                        data_shape.len()
                    )));
                }
                LossMode::SliceSum { axis }
            }
        };
        let modes: Vec<usize> = match mode {
            LossMode::ProductTensor => data_shape.to_vec(),
            LossMode::SliceSum { axis } => {
                data_shape.iter().enumerate().filter(|&(m, _)| m != axis).map(|(_, &n)| n).collect()
            }
        };
        let [a, b] = self.costs.domain;
        let costs = modes
            .iter()
            .map(|&n| build_grid_cost(n, (a, b), self.costs.exponent, self.costs.normalize))
            .collect::<Result<Vec<_>>>()?;
        LossSpec::new(mode, self.marginal()?, gibbs_kernel(&costs, self.loss.epsilon)?)
    }

    fn model_spec_for(&self, m: &ModelSection) -> Result<ModelSpec> {
        let d = m.ranks.len();
        let factor_constraints = match m.factor_constraints.len() {
            1 => vec![ConstraintSet::parse(&m.factor_constraints[0])?; d],
            n if n == d => m.factor_constraints.iter().map(|s| ConstraintSet::parse(s)).collect::<Result<_>>()?,
            n => return Err(config_err(format!("{n} factor constraints for {d} ranks"))),
        };
        Ok(ModelSpec {
            kind: match m.kind {
                KindSetting::Cp => ModelKind::Cp,
                KindSetting::Tucker => ModelKind::Tucker,
            },
            ranks: m.ranks.clone(),
            core_constraint: ConstraintSet::parse(&m.core_constraint)?,
            factor_constraints,
        })
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let m = self.model.as_ref().ok_or_else(|| config_err("missing [model] section"))?;
        self.model_spec_for(m)
    }

    pub fn solver_config(&self, data_shape: &[usize]) -> Result<SolverConfig> {
        let s = self.solver.as_ref().ok_or_else(|| config_err("missing [solver] section"))?;
        let d = data_shape.len();
        let rho = match &s.rho {
            RhoSetting::Scalar(r) => vec![*r; d + 1],
            RhoSetting::List(v) if v.len() == 1 => vec![v[0]; d + 1],
            RhoSetting::List(v) if v.len() == d + 1 => v.clone(),
            RhoSetting::List(v) => {
                return Err(config_err(format!("rho has {} values, expected 1 or {} (core + factors)", v.len(), d + 1)))
            }
        };
        let mut cfg = SolverConfig::new(rho, self.loss_spec(data_shape)?);
        cfg.outer_iters = s.outer_iters;
        cfg.outer_tol = s.outer_tol;
        cfg.inner = InnerConfig {
            method: match s.inner.method {
                MethodSetting::Lbfgs => InnerMethod::Lbfgs,
                MethodSetting::Gd => InnerMethod::GradientDescent,
            },
            grad_tol: s.inner.grad_tol,
            max_iters: s.inner.max_iters,
            memory: s.inner.memory,
            ..InnerConfig::default()
        };
        cfg.init = match s.init {
            InitSetting::Nnsvd => Init::Nnsvd,
            InitSetting::Random => Init::Random { seed: s.seed },
        };
        cfg.monitor = SinkhornOptions { tol: self.monitor.tol, max_iter: self.monitor.max_iter };
        cfg.dual_start = match s.dual_start {
            DualStartSetting::Zero => DualStart::Zero,
            DualStartSetting::MassMatched => DualStart::MassMatched,
        };
        cfg.validate(d)?;
        Ok(cfg)
    }

    /// Atom specifications of the simulation recipe, one per component.
    pub fn atom_specs(&self, sim: &SimulateSection) -> Result<Vec<AtomSpec>> {
        let [a, b] = self.costs.domain;
        let mut atoms = default_atoms(sim.n, (a, b), sim.components);
        if let Some(means) = &sim.means {
            if means.len() != sim.components {
                return Err(config_err(format!("{} means for {} components", means.len(), sim.components)));
            }
            atoms.iter_mut().zip(means).for_each(|(s, &m)| s.mean = m);
        }
        if let Some(stds) = &sim.stds {
            if stds.len() != sim.components {
                return Err(config_err(format!("{} stds for {} components", stds.len(), sim.components)));
            }
            atoms.iter_mut().zip(stds).for_each(|(s, &v)| s.std = v);
        }
        for s in &atoms {
            s.validate().map_err(|e| config_err(e.to_string()))?;
        }
        if let Some(w) = &sim.weights {
            if w.len() != sim.components || w.iter().any(|v| !(*v >= 0.0)) || !(w.iter().sum::<f64>() > 0.0) {
                return Err(config_err("weights must be non-negative, positive in total, one per component"));
            }
        }
        Ok(atoms)
    }
}

/// A generated dataset with the atoms it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub data: DenseTensor,
    /// Ground-truth atoms (one column per component) for each mode, or
    /// `None` where the mode carries no atom, e.g. the slice index.
    pub truth: Vec<Option<Matrix>>,
}

impl RunConfig {
    /// Runs the `[simulate]` recipe.
    ///
    /// In the mixture recipe component `c` uses profile `(c + k) mod r` in
    /// mode `k`, so no two components share an atom in any mode. Shifted
    /// slices pair profile `c` (rows) with profile `(c + 1) mod r` (columns).
    pub fn simulate(&self) -> Result<Simulation> {
        let sim = self.simulate.as_ref().ok_or_else(|| config_err("missing [simulate] section"))?;
        let atoms = self.atom_specs(sim)?;
        let r = atoms.len();
        let profiles = atoms.iter().map(gaussian_atom).collect::<Result<Vec<_>>>()?;
        let columns = |shift: usize| Matrix::from_columns(&(0..r).map(|c| profiles[(c + shift) % r].clone()).collect::<Vec<_>>());
        match sim.recipe {
            Recipe::Mixture => {
                let comps: Vec<Vec<Vec<f64>>> =
                    (0..r).map(|c| (0..sim.order).map(|k| profiles[(c + k) % r].clone()).collect()).collect();
                let weights = sim.weights.clone().unwrap_or_else(|| vec![1.0 / r as f64; r]);
                let exact = separable_mixture(&comps, &weights)?;
                let data = if sim.samples > 0 { empirical_sample(&exact, sim.samples, sim.seed)? } else { exact };
                let truth = (0..sim.order).map(|k| columns(k).map(Some)).collect::<Result<Vec<_>>>()?;
                Ok(Simulation { data, truth })
            }
            Recipe::ShiftedSlices => {
                let base: Vec<(AtomSpec, AtomSpec)> = (0..r).map(|c| (atoms[c], atoms[(c + 1) % r])).collect();
                let data = shifted_slice_dataset(&base, sim.n_slices, sim.shift_std, sim.seed)?;
                Ok(Simulation { data, truth: vec![None, Some(columns(0)?), Some(columns(1)?)] })
            }
        }
    }
}
