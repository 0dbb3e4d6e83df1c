#![allow(dead_code)]

use otfactor::ot::ModeCost;
use otfactor::{gibbs_kernel, DenseTensor, GibbsKernel, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn tensor(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> DenseTensor {
    DenseTensor::from_fn(shape, |_| rng.random_range(lo..hi)).unwrap()
}

pub fn matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

/// Positive measure with total mass one.
pub fn measure(rng: &mut ChaCha8Rng, shape: &[usize]) -> DenseTensor {
    let t = tensor(rng, shape, 0.1, 1.0);
    t.scaled(1.0 / t.sum())
}

/// Non-negative cost with a zero diagonal, not necessarily symmetric.
pub fn random_cost(rng: &mut ChaCha8Rng, n: usize) -> ModeCost {
    ModeCost::new(Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { rng.random_range(0.0..1.0) })).unwrap()
}

pub fn random_kernel(rng: &mut ChaCha8Rng, shape: &[usize], eps: f64) -> GibbsKernel {
    let costs: Vec<ModeCost> = shape.iter().map(|&n| random_cost(rng, n)).collect();
    gibbs_kernel(&costs, eps).unwrap()
}

/// Central differences of `f` at `u`.
pub fn fd_gradient(mut f: impl FnMut(&DenseTensor) -> f64, u: &DenseTensor, h: f64) -> DenseTensor {
    let mut g = DenseTensor::zeros(u.shape()).unwrap();
    for i in 0..u.len() {
        let mut up = u.clone();
        up.data_mut()[i] += h;
        let mut down = u.clone();
        down.data_mut()[i] -= h;
        g.data_mut()[i] = (f(&up) - f(&down)) / (2.0 * h);
    }
    g
}

/// `||a - b|| / ||b||` in the Frobenius norm.
pub fn rel_err(a: &DenseTensor, b: &DenseTensor) -> f64 {
    let diff = a.zip_map(b, |x, y| x - y).unwrap();
    diff.frobenius_norm() / b.frobenius_norm().max(f64::MIN_POSITIVE)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn dot(a: &DenseTensor, b: &DenseTensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}
