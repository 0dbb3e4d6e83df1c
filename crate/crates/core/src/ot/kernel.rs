//! Factored Gibbs kernel `K = exp(-C / eps)` for an additively separable cost.
//!
//! The 2d-mode kernel is never formed. Applying it to a tensor is a sequence
//! of mode-wise contractions, each carried out in the log domain.

use crate::error::{Error, Result};
use crate::ot::cost::ModeCost;
use crate::tensor::{DenseTensor, Matrix};

/// Below this the fast scaled-exponential sum is re-done as an exact log-sum-exp.
const UNDERFLOW_GUARD: f64 = 1e-250;

#[derive(Debug, Clone)]
pub struct GibbsKernel {
    eps: f64,
    log_kernels: Vec<Matrix>,
    /// `exp` of each log-kernel, cached for the fast path.
    kernels: Vec<Matrix>,
}

impl GibbsKernel {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn order(&self) -> usize {
        self.log_kernels.len()
    }

    /// Per-mode log-kernels `-C^(k) / eps`.
    pub fn log_kernels(&self) -> &[Matrix] {
        &self.log_kernels
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        self.log_kernels.iter().map(Matrix::rows).collect()
    }

    /// Kernel of the transposed cost, i.e. `K^T` in every mode.
    pub fn transposed(&self) -> Self {
        Self {
            eps: self.eps,
            log_kernels: self.log_kernels.iter().map(Matrix::transpose).collect(),
            kernels: self.kernels.iter().map(Matrix::transpose).collect(),
        }
    }

    /// Keeps only the listed modes, in the given order.
    pub fn select_modes(&self, modes: &[usize]) -> Result<Self> {
        let mut log_kernels = Vec::with_capacity(modes.len());
        let mut kernels = Vec::with_capacity(modes.len());
        for &m in modes {
            if m >= self.order() {
                return Err(Error::ModeOutOfRange { mode: m, order: self.order() });
            }
            log_kernels.push(self.log_kernels[m].clone());
            kernels.push(self.kernels[m].clone());
        }
        Ok(Self { eps: self.eps, log_kernels, kernels })
    }

    fn check_shape(&self, t: &DenseTensor) -> Result<()> {
        if t.shape() != self.mode_sizes().as_slice() {
            return Err(Error::shape(format!(
                "tensor {:?} does not match kernel modes {:?}",
                t.shape(),
                self.mode_sizes()
            )));
        }
        Ok(())
    }
}

pub fn gibbs_kernel(costs: &[ModeCost], eps: f64) -> Result<GibbsKernel> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
    }
    if costs.is_empty() {
        return Err(Error::InvalidParameter("kernel needs at least one mode".into()));
    }
    let log_kernels: Vec<Matrix> = costs
        .iter()
        .map(|c| {
            let m = c.matrix();
            Matrix::from_fn(m.rows(), m.cols(), |i, j| -m.get(i, j) / eps)
        })
        .collect();
    let kernels = log_kernels
        .iter()
        .map(|l| Matrix::from_fn(l.rows(), l.cols(), |i, j| l.get(i, j).exp()))
        .collect();
    Ok(GibbsKernel { eps, log_kernels, kernels })
}

/// `log(K exp(log_t))` with `K` applied along every mode.
///
/// Entries of `log_t` may be `-inf` to encode zero mass.
pub fn kernel_apply_log(kernel: &GibbsKernel, log_t: &DenseTensor) -> Result<DenseTensor> {
    kernel.check_shape(log_t)?;
    let mut cur = log_t.clone();
    for k in 0..kernel.order() {
        cur = contract_mode_log(&cur, &kernel.log_kernels[k], &kernel.kernels[k], k);
    }
    Ok(cur)
}

/// `log(K^T exp(log_t))`.
pub fn kernel_apply_log_transposed(kernel: &GibbsKernel, log_t: &DenseTensor) -> Result<DenseTensor> {
    kernel.check_shape(log_t)?;
    let mut cur = log_t.clone();
    for k in 0..kernel.order() {
        let lt = kernel.log_kernels[k].transpose();
        let kt = kernel.kernels[k].transpose();
        cur = contract_mode_log(&cur, &lt, &kt, k);
    }
    Ok(cur)
}

/// `out[l, i, r] = log sum_j exp(L[i, j] + v[l, j, r])`.
///
/// Each fibre is shifted by its own maximum and summed against the cached
/// kernel; outputs whose sum falls under [`UNDERFLOW_GUARD`] are recomputed
/// with a per-output maximum so that tiny kernels never round to `-inf`.
fn contract_mode_log(v: &DenseTensor, log_k: &Matrix, k_mat: &Matrix, k: usize) -> DenseTensor {
    let (left, n, right) = v.split_at_mode(k);
    if right == 1 {
        return contract_last_mode_log(v, log_k, k_mat, left, n);
    }
    let src = v.data();
    let mut out = vec![0.0; src.len()];
    let mut shift = vec![0.0; right];
    let mut scaled = vec![0.0; n * right];
    let mut acc = vec![0.0; right];

    for l in 0..left {
        let block = &src[l * n * right..(l + 1) * n * right];
        shift.iter_mut().for_each(|s| *s = f64::NEG_INFINITY);
        for j in 0..n {
            for (s, &x) in shift.iter_mut().zip(&block[j * right..(j + 1) * right]) {
                if x > *s {
                    *s = x;
                }
            }
        }
        for j in 0..n {
            let row = &mut scaled[j * right..(j + 1) * right];
            for ((w, &x), &s) in row.iter_mut().zip(&block[j * right..(j + 1) * right]).zip(&shift) {
                *w = if s == f64::NEG_INFINITY { 0.0 } else { (x - s).exp() };
            }
        }
        for i in 0..n {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for (j, &kij) in k_mat.row(i).iter().enumerate() {
                if kij == 0.0 {
                    continue;
                }
                for (a, &w) in acc.iter_mut().zip(&scaled[j * right..(j + 1) * right]) {
                    *a += kij * w;
                }
            }
            let dst = &mut out[(l * n + i) * right..(l * n + i + 1) * right];
            for r in 0..right {
                dst[r] = if shift[r] == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else if acc[r] >= UNDERFLOW_GUARD {
                    shift[r] + acc[r].ln()
                } else {
                    exact_lse(log_k.row(i), block, r, right)
                };
            }
        }
    }
    DenseTensor::new(v.shape().to_vec(), out).expect("shape preserved")
}

/// [`contract_mode_log`] when the contracted mode is contiguous in memory.
fn contract_last_mode_log(v: &DenseTensor, log_k: &Matrix, k_mat: &Matrix, left: usize, n: usize) -> DenseTensor {
    let src = v.data();
    let mut out = vec![0.0; src.len()];
    let mut scaled = vec![0.0; n];
    for l in 0..left {
        let fibre = &src[l * n..(l + 1) * n];
        let shift = fibre.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let dst = &mut out[l * n..(l + 1) * n];
        if shift == f64::NEG_INFINITY {
            dst.iter_mut().for_each(|o| *o = f64::NEG_INFINITY);
            continue;
        }
        for (w, &x) in scaled.iter_mut().zip(fibre) {
            *w = (x - shift).exp();
        }
        for (i, o) in dst.iter_mut().enumerate() {
            let acc: f64 = k_mat.row(i).iter().zip(&scaled).map(|(a, b)| a * b).sum();
            *o = if acc >= UNDERFLOW_GUARD { shift + acc.ln() } else { exact_lse(log_k.row(i), fibre, 0, 1) };
        }
    }
    DenseTensor::new(v.shape().to_vec(), out).expect("shape preserved")
}

fn exact_lse(log_k_row: &[f64], block: &[f64], r: usize, right: usize) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for (j, &lij) in log_k_row.iter().enumerate() {
        m = m.max(lij + block[j * right + r]);
    }
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = log_k_row
        .iter()
        .enumerate()
        .map(|(j, &lij)| (lij + block[j * right + r] - m).exp())
        .sum();
    m + s.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::cost::build_grid_cost;

    #[test]
    fn zero_cost_gives_unit_kernel() {
        let c = ModeCost::new(Matrix::zeros(3, 3)).unwrap();
        let k = gibbs_kernel(&[c], 1.0).unwrap();
        assert!(k.log_kernels()[0].data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_point_kernel_entries() {
        let c = build_grid_cost(2, (0.0, 1.0), 2.0, false).unwrap();
        let k = gibbs_kernel(&[c.clone()], 1.0).unwrap();
        let e: Vec<f64> = k.log_kernels()[0].data().iter().map(|v| v.exp()).collect();
        let inv_e = (-1.0f64).exp();
        assert_eq!(e, vec![1.0, inv_e, inv_e, 1.0]);
        let half = gibbs_kernel(&[c], 0.5).unwrap();
        assert_eq!(half.log_kernels()[0].data(), &[0.0, -2.0, -2.0, 0.0]);
    }

    #[test]
    fn rejects_nonpositive_eps() {
        let c = ModeCost::new(Matrix::zeros(2, 2)).unwrap();
        assert!(gibbs_kernel(&[c.clone()], 0.0).is_err());
        assert!(gibbs_kernel(&[c], -1.0).is_err());
    }

    #[test]
    fn unit_kernel_sums_probability_mass() {
        let c = ModeCost::new(Matrix::zeros(2, 2)).unwrap();
        let k = gibbs_kernel(&[c.clone(), c], 1.0).unwrap();
        let p = DenseTensor::new(vec![2, 2], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let out = kernel_apply_log(&k, &p.map(f64::ln)).unwrap();
        assert!(out.data().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn handles_zero_mass_and_tiny_kernels() {
        // eps small enough that exp(-C/eps) underflows between the two points
        let c = build_grid_cost(2, (0.0, 1.0), 2.0, false).unwrap();
        let k = gibbs_kernel(&[c], 1e-3).unwrap();
        let log_t = DenseTensor::new(vec![2], vec![0.0, f64::NEG_INFINITY]).unwrap();
        let out = kernel_apply_log(&k, &log_t).unwrap();
        assert!((out.data()[0] - 0.0).abs() < 1e-15);
        assert!((out.data()[1] - (-1000.0)).abs() < 1e-9);
        let none = DenseTensor::from_elem(&[2], f64::NEG_INFINITY).unwrap();
        assert!(kernel_apply_log(&k, &none).unwrap().data().iter().all(|v| *v == f64::NEG_INFINITY));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let c = ModeCost::new(Matrix::zeros(2, 2)).unwrap();
        let k = gibbs_kernel(&[c], 1.0).unwrap();
        assert!(kernel_apply_log(&k, &DenseTensor::zeros(&[3]).unwrap()).is_err());
    }
}
