//! Legendre transforms `Phi*(X, U)` of the smoothed transport loss in its
//! second argument, with closed-form gradients.
//!
//! For a dual tensor `U` the conjugate is
//! `-eps <X, log(X / (K f(U))) - 1>` where `f(u) = exp(u / eps)` for balanced
//! transport and `f(u) = (lambda / (lambda - u))^(lambda / eps)` when the
//! second marginal is only softly enforced. The gradient is the optimal
//! second marginal `beta*`.

use crate::error::{Error, Result};
use crate::ot::kernel::{kernel_apply_log, kernel_apply_log_transposed, GibbsKernel};
use crate::tensor::{DenseTensor, Matrix};

/// How the second marginal of the coupling is enforced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marginal {
    Balanced,
    /// KL penalty of strength `lambda` on the second marginal.
    SemiUnbalanced { lambda: f64 },
}

/// Whether the loss compares whole tensors or sums over slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossMode {
    /// One transport problem on the product space of all modes.
    ProductTensor,
    /// Independent transport problems between the slices along `axis`.
    SliceSum { axis: usize },
}

/// Full description of the transport loss `Phi`.
#[derive(Debug, Clone)]
pub struct LossSpec {
    pub mode: LossMode,
    pub marginal: Marginal,
    /// For [`LossMode::SliceSum`] this covers the slice modes only.
    pub kernel: GibbsKernel,
}

impl LossSpec {
    pub fn new(mode: LossMode, marginal: Marginal, kernel: GibbsKernel) -> Result<Self> {
        if let Marginal::SemiUnbalanced { lambda } = marginal {
            if !(lambda > 0.0) {
                return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
            }
        }
        Ok(Self { mode, marginal, kernel })
    }

    pub fn eps(&self) -> f64 {
        self.kernel.eps()
    }

    /// Checks that `shape` is compatible with the kernel and loss mode.
    pub fn check_data_shape(&self, shape: &[usize]) -> Result<()> {
        let sizes = self.kernel.mode_sizes();
        let expect: Vec<usize> = match self.mode {
            LossMode::ProductTensor => shape.to_vec(),
            LossMode::SliceSum { axis } => {
                if axis >= shape.len() || shape.len() < 2 {
                    return Err(Error::ModeOutOfRange { mode: axis, order: shape.len() });
                }
                shape.iter().enumerate().filter(|&(m, _)| m != axis).map(|(_, &n)| n).collect()
            }
        };
        if expect != sizes {
            return Err(Error::shape(format!(
                "data shape {shape:?} is incompatible with kernel modes {sizes:?}"
            )));
        }
        Ok(())
    }
}

pub(crate) fn log_measure(alpha: &DenseTensor) -> Result<DenseTensor> {
    let mut positive = false;
    for &a in alpha.data() {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!("measure entry {a} is not a finite non-negative real")));
        }
        positive |= a > 0.0;
    }
    if !positive {
        return Err(Error::ZeroMass);
    }
    Ok(alpha.map(|a| if a > 0.0 { a.ln() } else { f64::NEG_INFINITY }))
}

fn check_finite(u: &DenseTensor) -> Result<()> {
    if let Some(i) = u.data().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("dual entry {i} is {}", u.data()[i])));
    }
    Ok(())
}

/// Shared evaluation once `log f(U)` and the gradient prefactor are known.
fn conjugate_from_log_f(
    alpha: &DenseTensor,
    log_f: &DenseTensor,
    log_prefactor: Option<&DenseTensor>,
    kernel: &GibbsKernel,
) -> Result<(f64, DenseTensor)> {
    let eps = kernel.eps();
    let log_alpha = log_measure(alpha)?;
    let log_kf = kernel_apply_log(kernel, log_f)?;

    let mut value = 0.0;
    let mut log_ratio = log_alpha.clone();
    for ((lr, &a), &lk) in log_ratio.data_mut().iter_mut().zip(alpha.data()).zip(log_kf.data()) {
        if a > 0.0 {
            *lr -= lk;
            value += a * (*lr - 1.0);
        }
    }
    let value = -eps * value;

    let back = kernel_apply_log_transposed(kernel, &log_ratio)?;
    let mut grad = back;
    for (g, &lf) in grad.data_mut().iter_mut().zip(log_f.data()) {
        *g += lf;
    }
    if let Some(pre) = log_prefactor {
        for (g, &p) in grad.data_mut().iter_mut().zip(pre.data()) {
            *g += p;
        }
    }
    grad.data_mut().iter_mut().for_each(|g| *g = g.exp());
    Ok((value, grad))
}

/// Conjugate of `beta -> OT_eps(alpha, beta)`.
pub fn ot_conjugate_balanced(
    alpha: &DenseTensor,
    u: &DenseTensor,
    kernel: &GibbsKernel,
) -> Result<(f64, DenseTensor)> {
    alpha.require_same_shape(u)?;
    check_finite(u)?;
    let eps = kernel.eps();
    let log_f = u.map(|x| x / eps);
    conjugate_from_log_f(alpha, &log_f, None, kernel)
}

/// Conjugate of `beta -> OT_eps^lambda(alpha, beta)`; requires `u < lambda` everywhere.
pub fn ot_conjugate_semiunbalanced(
    alpha: &DenseTensor,
    u: &DenseTensor,
    kernel: &GibbsKernel,
    lambda: f64,
) -> Result<(f64, DenseTensor)> {
    alpha.require_same_shape(u)?;
    check_finite(u)?;
    if let Some(index) = u.data().iter().position(|&x| x >= lambda) {
        return Err(Error::DomainViolation { index, value: u.data()[index], lambda });
    }
    let eps = kernel.eps();
    // log(lambda / (lambda - u)) = -log1p(-u / lambda)
    let log_pre = u.map(|x| -(-x / lambda).ln_1p());
    let log_f = log_pre.scaled(lambda / eps);
    conjugate_from_log_f(alpha, &log_f, Some(&log_pre), kernel)
}

fn conjugate(alpha: &DenseTensor, u: &DenseTensor, kernel: &GibbsKernel, marginal: Marginal) -> Result<(f64, DenseTensor)> {
    match marginal {
        Marginal::Balanced => ot_conjugate_balanced(alpha, u, kernel),
        Marginal::SemiUnbalanced { lambda } => ot_conjugate_semiunbalanced(alpha, u, kernel, lambda),
    }
}

/// `Phi*(X, U)` and its gradient for either loss mode.
pub fn loss_conjugate(x: &DenseTensor, u: &DenseTensor, spec: &LossSpec) -> Result<(f64, DenseTensor)> {
    x.require_same_shape(u)?;
    spec.check_data_shape(x.shape())?;
    match spec.mode {
        LossMode::ProductTensor => conjugate(x, u, &spec.kernel, spec.marginal),
        LossMode::SliceSum { axis } => {
            let mut value = 0.0;
            let mut grad = DenseTensor::zeros(x.shape())?;
            for i in 0..x.shape()[axis] {
                let xs = x.slice(axis, i)?;
                let us = u.slice(axis, i)?;
                let (v, g) = conjugate(&xs, &us, &spec.kernel, spec.marginal).map_err(|e| match e {
                    // report the violating entry in the coordinates of the full tensor
                    Error::DomainViolation { value, lambda, .. } => {
                        let index = u.data().iter().position(|&x| x >= lambda).unwrap_or(0);
                        Error::DomainViolation { index, value, lambda }
                    }
                    other => other,
                })?;
                value += v;
                grad.set_slice(axis, i, &g)?;
            }
            Ok((value, grad))
        }
    }
}

/// Optimal coupling of the vector semi-unbalanced conjugate, for diagnostics.
///
/// `gamma_ij = alpha_i K_ij f_j / (K f)_i`. Only one-mode kernels are accepted.
pub fn semiunbalanced_coupling(
    alpha: &DenseTensor,
    u: &DenseTensor,
    kernel: &GibbsKernel,
    lambda: f64,
) -> Result<Matrix> {
    if kernel.order() != 1 || alpha.order() != 1 {
        return Err(Error::shape("the explicit coupling is only available for vectors"));
    }
    alpha.require_same_shape(u)?;
    if let Some(index) = u.data().iter().position(|&x| x >= lambda) {
        return Err(Error::DomainViolation { index, value: u.data()[index], lambda });
    }
    let eps = kernel.eps();
    let log_f = u.map(|x| -(lambda / eps) * (-x / lambda).ln_1p());
    let log_kf = kernel_apply_log(kernel, &log_f)?;
    let lk = &kernel.log_kernels()[0];
    let n = alpha.len();
    Ok(Matrix::from_fn(n, n, |i, j| {
        let a = alpha.data()[i];
        if a > 0.0 {
            (a.ln() - log_kf.data()[i] + lk.get(i, j) + log_f.data()[j]).exp()
        } else {
            0.0
        }
    }))
}
