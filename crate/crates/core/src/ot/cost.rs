use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Ground cost between the points of one tensor mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCost(Matrix);

impl ModeCost {
    pub fn new(cost: Matrix) -> Result<Self> {
        if cost.rows() != cost.cols() {
            return Err(Error::shape(format!(
                "cost matrix must be square, got {}x{}",
                cost.rows(),
                cost.cols()
            )));
        }
        if let Some(bad) = cost.data().iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::InvalidParameter(format!("cost entry {bad} is not a finite non-negative real")));
        }
        Ok(Self(cost))
    }

    pub fn size(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }
}

/// Evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `C_ij = |x_i - x_j|^p` on `linspace(a, b, n)`, optionally rescaled to unit mean.
pub fn build_grid_cost(n: usize, domain: (f64, f64), p: f64, normalize_unit_mean: bool) -> Result<ModeCost> {
    if n == 0 {
        return Err(Error::InvalidParameter("grid size must be at least 1".into()));
    }
    let (a, b) = domain;
    if !(a < b) {
        return Err(Error::InvalidParameter(format!("grid domain [{a}, {b}] is empty")));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("cost exponent {p} must be at least 1")));
    }
    let x = linspace(a, b, n);
    let mut c = Matrix::from_fn(n, n, |i, j| (x[i] - x[j]).abs().powf(p));
    if normalize_unit_mean {
        let mean = c.data().iter().sum::<f64>() / (n * n) as f64;
        // a single point has an all-zero cost; leave it alone
        if mean > 0.0 {
            c.data_mut().iter_mut().for_each(|v| *v /= mean);
        }
    }
    ModeCost::new(c)
}
