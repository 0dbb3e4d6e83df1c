//! Linear maps that couple the dual tensor `U` to one model block, and their adjoints.
//!
//! `Xi^(k)(U) = [U x_{j>k} A_j^T]_(k) [S x_{j<k} A_j]_(k)^T` satisfies
//! `<A_k, Xi^(k)(U)> = <U, S x_1 A_1 ... x_d A_d>`, and
//! `Omega(U) = U x_j A_j^T` satisfies `<S, Omega(U)> = <U, S x_1 A_1 ... x_d A_d>`.

use crate::error::{Error, Result};
use crate::tensor::{multi_mode_product, tucker_reconstruct, unfolding_gram, DenseTensor, Matrix};

fn check_factor_shapes(u_shape: &[usize], core: &DenseTensor, factors: &[Matrix], skip: Option<usize>) -> Result<()> {
    let d = core.order();
    if factors.len() != d || u_shape.len() != d {
        return Err(Error::shape(format!(
            "dual of order {} with core of order {d} and {} factors",
            u_shape.len(),
            factors.len()
        )));
    }
    for j in (0..d).filter(|&j| Some(j) != skip) {
        let a = &factors[j];
        if a.rows() != u_shape[j] || a.cols() != core.shape()[j] {
            return Err(Error::shape(format!(
                "factor {} is {}x{}, expected {}x{}",
                j + 1,
                a.rows(),
                a.cols(),
                u_shape[j],
                core.shape()[j]
            )));
        }
    }
    Ok(())
}

/// `Xi^(k)(U)`, an `n_k x r_k` matrix. `factors[k]` is not read.
pub fn xi_operator(u: &DenseTensor, k: usize, core: &DenseTensor, factors: &[Matrix]) -> Result<Matrix> {
    u.check_mode(k)?;
    check_factor_shapes(u.shape(), core, factors, Some(k))?;
    let trailing: Vec<Matrix> = factors[k + 1..].iter().map(Matrix::transpose).collect();
    let trailing: Vec<(&Matrix, usize)> = trailing.iter().enumerate().map(|(i, a)| (a, k + 1 + i)).collect();
    let leading: Vec<(&Matrix, usize)> = factors[..k].iter().enumerate().map(|(j, a)| (a, j)).collect();
    let projected = multi_mode_product(u, &trailing)?;
    let partial = multi_mode_product(core, &leading)?;
    unfolding_gram(&projected, &partial, k)
}

/// Adjoint of [`xi_operator`]: `S x_{j != k} A_j x_k G`.
pub fn xi_adjoint(g: &Matrix, k: usize, core: &DenseTensor, factors: &[Matrix]) -> Result<DenseTensor> {
    if k >= core.order() {
        return Err(Error::ModeOutOfRange { mode: k, order: core.order() });
    }
    if g.cols() != core.shape()[k] {
        return Err(Error::shape(format!("G has {} columns, rank is {}", g.cols(), core.shape()[k])));
    }
    let mut with_g = factors.to_vec();
    with_g[k] = g.clone();
    tucker_reconstruct(core, &with_g)
}

/// `Omega(U) = U x_1 A_1^T ... x_d A_d^T`.
pub fn omega_operator(u: &DenseTensor, factors: &[Matrix]) -> Result<DenseTensor> {
    if factors.len() != u.order() {
        return Err(Error::shape(format!("{} factors for a dual of order {}", factors.len(), u.order())));
    }
    let transposed: Vec<Matrix> = factors.iter().map(Matrix::transpose).collect();
    let products: Vec<(&Matrix, usize)> = transposed.iter().enumerate().map(|(j, a)| (a, j)).collect();
    multi_mode_product(u, &products)
}

/// Adjoint of [`omega_operator`], i.e. the Tucker reconstruction of `G`.
pub fn omega_adjoint(g: &DenseTensor, factors: &[Matrix]) -> Result<DenseTensor> {
    tucker_reconstruct(g, factors)
}
