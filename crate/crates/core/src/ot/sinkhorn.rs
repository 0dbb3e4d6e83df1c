//! Log-domain scaling iterations for the primal transport values.
//!
//! These are evaluators: they monitor objectives and serve as oracles,
//! but never drive the factorisation updates.

use crate::error::{Error, Result};
use crate::ot::conjugate::{log_measure, LossMode, LossSpec, Marginal};
use crate::ot::kernel::{kernel_apply_log, kernel_apply_log_transposed, GibbsKernel};
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornOptions {
    /// Stop once the marginal L1 error drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SinkhornOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornOutput {
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

impl SinkhornOutput {
    /// Turns an unconverged run into [`Error::NonConvergence`].
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NonConvergence { iterations: self.iterations, residual: self.residual })
        }
    }
}

fn exp_plus(a: &DenseTensor, b: &DenseTensor) -> DenseTensor {
    a.zip_map(b, |x, y| (x + y).exp()).expect("same shape")
}

/// `eps * sum gamma_ij (a_i + b_j - 1)` written through the marginals of
/// `gamma = diag(e^a) K diag(e^b)`; zero-mass entries contribute nothing.
fn entropic_cost(a: &DenseTensor, row: &DenseTensor, b: &DenseTensor, col: &DenseTensor, eps: f64) -> f64 {
    let dot = |p: &DenseTensor, m: &DenseTensor| -> f64 {
        p.data()
            .iter()
            .zip(m.data())
            .filter(|(_, &w)| w > 0.0)
            .map(|(&x, &w)| x * w)
            .sum()
    };
    eps * (dot(a, row) + dot(b, col) - row.sum())
}

fn check_inputs(alpha: &DenseTensor, beta: &DenseTensor, kernel: &GibbsKernel, opts: &SinkhornOptions) -> Result<()> {
    alpha.require_same_shape(beta)?;
    if alpha.shape() != kernel.mode_sizes().as_slice() {
        return Err(Error::shape(format!(
            "measures {:?} do not match kernel modes {:?}",
            alpha.shape(),
            kernel.mode_sizes()
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter("sinkhorn tolerance must be positive".into()));
    }
    Ok(())
}

/// `OT_eps(alpha, beta) = min <C, gamma> + eps E(gamma)` over couplings.
pub fn sinkhorn_balanced(
    alpha: &DenseTensor,
    beta: &DenseTensor,
    kernel: &GibbsKernel,
    opts: &SinkhornOptions,
) -> Result<SinkhornOutput> {
    balanced_from(alpha, beta, kernel, opts, None).map(|(out, _)| out)
}

/// Usable warm start: same shape, with infinite entries reset to zero.
fn sanitize_start(b0: Option<&DenseTensor>, shape: &[usize]) -> Option<DenseTensor> {
    b0.filter(|b| b.shape() == shape).map(|b| b.map(|v| if v.is_finite() { v } else { 0.0 }))
}

fn balanced_from(
    alpha: &DenseTensor,
    beta: &DenseTensor,
    kernel: &GibbsKernel,
    opts: &SinkhornOptions,
    b0: Option<&DenseTensor>,
) -> Result<(SinkhornOutput, DenseTensor)> {
    check_inputs(alpha, beta, kernel, opts)?;
    let (ma, mb) = (alpha.sum(), beta.sum());
    if (ma - mb).abs() > 1e-8 * ma.abs().max(1.0) {
        return Err(Error::MassMismatch(ma, mb));
    }
    let log_alpha = log_measure(alpha)?;
    let log_beta = log_measure(beta)?;
    let eps = kernel.eps();

    let mut a = match sanitize_start(b0, alpha.shape()) {
        Some(b0) => log_alpha.zip_map(&kernel_apply_log(kernel, &b0)?, |l, k| l - k)?,
        None => DenseTensor::zeros(alpha.shape())?,
    };
    let mut b;
    let mut iterations = 0;
    let mut residual: f64;
    loop {
        iterations += 1;
        let kta = kernel_apply_log_transposed(kernel, &a)?;
        b = log_beta.zip_map(&kta, |l, k| l - k)?;
        let kb = kernel_apply_log(kernel, &b)?;
        let row = exp_plus(&a, &kb);
        residual = row.data().iter().zip(alpha.data()).map(|(r, x)| (r - x).abs()).sum();
        a = log_alpha.zip_map(&kb, |l, k| l - k)?;
        if residual < opts.tol || iterations >= opts.max_iter || !residual.is_finite() {
            break;
        }
    }
    let row = exp_plus(&a, &kernel_apply_log(kernel, &b)?);
    let col = exp_plus(&b, &kernel_apply_log_transposed(kernel, &a)?);
    let value = entropic_cost(&a, &row, &b, &col, eps);
    Ok((SinkhornOutput { value, iterations, residual, converged: residual < opts.tol }, b))
}

/// `OT_eps^lambda(alpha, beta)`: the first marginal is exact, the second is
/// penalised by `lambda KL(gamma^T 1 | beta)`.
pub fn sinkhorn_semiunbalanced(
    alpha: &DenseTensor,
    beta: &DenseTensor,
    kernel: &GibbsKernel,
    lambda: f64,
    opts: &SinkhornOptions,
) -> Result<SinkhornOutput> {
    semiunbalanced_from(alpha, beta, kernel, lambda, opts, None).map(|(out, _)| out)
}

fn semiunbalanced_from(
    alpha: &DenseTensor,
    beta: &DenseTensor,
    kernel: &GibbsKernel,
    lambda: f64,
    opts: &SinkhornOptions,
    b0: Option<&DenseTensor>,
) -> Result<(SinkhornOutput, DenseTensor)> {
    check_inputs(alpha, beta, kernel, opts)?;
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    let log_alpha = log_measure(alpha)?;
    let log_beta = log_measure(beta)?;
    let eps = kernel.eps();
    let damp = lambda / (lambda + eps);
    let log_mass = alpha.sum().ln();

    let mut b = match sanitize_start(b0, alpha.shape()) {
        Some(b0) => b0,
        None => DenseTensor::zeros(alpha.shape())?,
    };
    let mut a = log_alpha.zip_map(&kernel_apply_log(kernel, &b)?, |l, k| l - k)?;
    let mut iterations = 0;
    let mut residual: f64;
    loop {
        let kta = kernel_apply_log_transposed(kernel, &a)?;
        // optimality in b: the second marginal equals beta exp(-eps b / lambda)
        residual = b
            .data()
            .iter()
            .zip(kta.data())
            .zip(log_beta.data())
            .map(|((&bj, &k), &l)| {
                let target = if l == f64::NEG_INFINITY { 0.0 } else { (l - eps * bj / lambda).exp() };
                ((bj + k).exp() - target).abs()
            })
            .sum();
        if residual < opts.tol || iterations >= opts.max_iter || !residual.is_finite() {
            break;
        }
        iterations += 1;
        b = log_beta.zip_map(&kta, |l, k| damp * (l - k))?;
        // optimal constant shift of the potentials (the transport term is
        // invariant under it); removes the slowly contracting mass direction
        let lse = log_sum_exp(
            log_beta
                .data()
                .iter()
                .zip(b.data())
                .filter(|(l, _)| **l > f64::NEG_INFINITY)
                .map(|(l, bj)| l - eps * bj / lambda),
        );
        let shift = lambda / eps * (log_mass - lse);
        if shift.is_finite() {
            b.data_mut().iter_mut().for_each(|bj| *bj -= shift);
        }
        a = log_alpha.zip_map(&kernel_apply_log(kernel, &b)?, |l, k| l - k)?;
    }
    let row = exp_plus(&a, &kernel_apply_log(kernel, &b)?);
    let col = exp_plus(&b, &kernel_apply_log_transposed(kernel, &a)?);
    let transport = entropic_cost(&a, &row, &b, &col, eps);
    let value = transport + lambda * generalized_kl(&col, beta);
    Ok((SinkhornOutput { value, iterations, residual, converged: residual < opts.tol }, b))
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// `KL(p | q) = <p, log(p / q)> - <p, 1> + <q, 1>` with `0 log 0 = 0`.
pub fn generalized_kl(p: &DenseTensor, q: &DenseTensor) -> f64 {
    let mut s = 0.0;
    for (&x, &y) in p.data().iter().zip(q.data()) {
        if x > 0.0 {
            s += x * (x / y).ln();
        }
        s += y - x;
    }
    s
}

/// Second-marginal potentials from earlier solves, reused as starting points.
///
/// One entry per transport problem (one per slice for slice losses).
#[derive(Debug, Clone, Default)]
pub struct SinkhornWarmStart {
    potentials: Vec<Option<DenseTensor>>,
}

fn transport_value(
    alpha: &DenseTensor,
    beta: &DenseTensor,
    kernel: &GibbsKernel,
    marginal: Marginal,
    opts: &SinkhornOptions,
    b0: Option<&DenseTensor>,
) -> Result<(SinkhornOutput, DenseTensor)> {
    match marginal {
        Marginal::Balanced => balanced_from(alpha, beta, kernel, opts, b0),
        Marginal::SemiUnbalanced { lambda } => semiunbalanced_from(alpha, beta, kernel, lambda, opts, b0),
    }
}

/// Primal loss `Phi(X, X_hat)` under `spec`, summed over slices when requested.
///
/// `converged` is true only if every underlying solve converged; `residual`
/// and `iterations` report the worst slice.
pub fn loss_value(
    x: &DenseTensor,
    x_hat: &DenseTensor,
    spec: &LossSpec,
    opts: &SinkhornOptions,
) -> Result<SinkhornOutput> {
    loss_value_warm(x, x_hat, spec, opts, &mut SinkhornWarmStart::default())
}

/// [`loss_value`] started from, and updating, the potentials in `warm`.
pub fn loss_value_warm(
    x: &DenseTensor,
    x_hat: &DenseTensor,
    spec: &LossSpec,
    opts: &SinkhornOptions,
    warm: &mut SinkhornWarmStart,
) -> Result<SinkhornOutput> {
    x.require_same_shape(x_hat)?;
    spec.check_data_shape(x.shape())?;
    let problems: Vec<(DenseTensor, DenseTensor)> = match spec.mode {
        LossMode::ProductTensor => vec![(x.clone(), x_hat.clone())],
        LossMode::SliceSum { axis } => (0..x.shape()[axis])
            .map(|i| Ok((x.slice(axis, i)?, x_hat.slice(axis, i)?)))
            .collect::<Result<_>>()?,
    };
    warm.potentials.resize(problems.len(), None);
    let mut total = SinkhornOutput { value: 0.0, iterations: 0, residual: 0.0, converged: true };
    for ((alpha, beta), slot) in problems.iter().zip(warm.potentials.iter_mut()) {
        let (out, b) = transport_value(alpha, beta, &spec.kernel, spec.marginal, opts, slot.as_ref())?;
        *slot = Some(b);
        total.value += out.value;
        total.iterations = total.iterations.max(out.iterations);
        total.residual = total.residual.max(out.residual);
        total.converged &= out.converged;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::cost::{build_grid_cost, ModeCost};
    use crate::ot::kernel::gibbs_kernel;
    use crate::tensor::Matrix;

    fn vec1(v: &[f64]) -> DenseTensor {
        DenseTensor::new(vec![v.len()], v.to_vec()).unwrap()
    }

    #[test]
    fn point_masses_at_same_location() {
        let c = build_grid_cost(3, (0.0, 1.0), 2.0, false).unwrap();
        let k = gibbs_kernel(&[c], 0.1).unwrap();
        let p = vec1(&[0.0, 1.0, 0.0]);
        let out = sinkhorn_balanced(&p, &p, &k, &SinkhornOptions::default()).unwrap();
        assert!(out.converged);
        // gamma is the point mass: <C, gamma> = 0 and E(gamma) = 1 * (log 1 - 1)
        assert!((out.value - (-0.1)).abs() < 1e-12);
    }

    #[test]
    fn zero_cost_closed_form() {
        let k = gibbs_kernel(&[ModeCost::new(Matrix::zeros(3, 3)).unwrap()], 0.7).unwrap();
        let a = vec1(&[0.2, 0.3, 0.5]);
        let b = vec1(&[0.6, 0.1, 0.3]);
        let out = sinkhorn_balanced(&a, &b, &k, &SinkhornOptions::default()).unwrap();
        let mut want = 0.0;
        for &x in a.data() {
            for &y in b.data() {
                let g: f64 = x * y;
                want += g * (g.ln() - 1.0);
            }
        }
        assert!((out.value - 0.7 * want).abs() < 1e-12);
    }

    #[test]
    fn mass_mismatch_rejected() {
        let k = gibbs_kernel(&[ModeCost::new(Matrix::zeros(2, 2)).unwrap()], 1.0).unwrap();
        let err = sinkhorn_balanced(&vec1(&[0.5, 0.5]), &vec1(&[0.5, 0.6]), &k, &SinkhornOptions::default());
        assert!(matches!(err, Err(Error::MassMismatch(..))));
    }

    #[test]
    fn non_convergence_is_reported() {
        let c = build_grid_cost(4, (0.0, 1.0), 2.0, false).unwrap();
        let k = gibbs_kernel(&[c], 0.01).unwrap();
        let a = vec1(&[0.7, 0.1, 0.1, 0.1]);
        let b = vec1(&[0.1, 0.1, 0.1, 0.7]);
        let out = sinkhorn_balanced(&a, &b, &k, &SinkhornOptions { tol: 1e-15, max_iter: 2 }).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 2);
        assert!(matches!(out.require_converged(), Err(Error::NonConvergence { iterations: 2, .. })));
    }

    #[test]
    fn large_lambda_matches_balanced() {
        let c = build_grid_cost(3, (0.0, 1.0), 2.0, true).unwrap();
        let k = gibbs_kernel(&[c], 0.5).unwrap();
        let a = vec1(&[0.2, 0.5, 0.3]);
        let b = vec1(&[0.4, 0.4, 0.2]);
        let opts = SinkhornOptions { tol: 1e-12, max_iter: 100_000 };
        let bal = sinkhorn_balanced(&a, &b, &k, &opts).unwrap();
        let semi = sinkhorn_semiunbalanced(&a, &b, &k, 1e6, &opts).unwrap();
        assert!((bal.value - semi.value).abs() < 1e-3, "{} vs {}", bal.value, semi.value);
    }

    #[test]
    fn kl_is_zero_on_equal_measures() {
        let p = vec1(&[0.2, 0.0, 0.8]);
        assert_eq!(generalized_kl(&p, &p), 0.0);
        assert!(generalized_kl(&p, &vec1(&[0.3, 0.1, 0.6])) > 0.0);
    }
}
