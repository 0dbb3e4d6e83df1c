//! Dense d-mode tensors stored in row-major order, plus the handful of
//! multilinear operations the factorisation needs: unfoldings, mode-k
//! products and Tucker/CP reconstruction.
//!
//! Modes are indexed from zero throughout the API.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

/// Row-major real matrix. Factor matrices, unfoldings and per-mode costs use it.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Factor matrix `A^(k)` of size `n_k x r_k`.
pub type FactorMatrix = Matrix;

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::shape("tensor must have at least one mode"));
    }
    if let Some(pos) = shape.iter().position(|&n| n == 0) {
        return Err(Error::shape(format!("mode {pos} has size zero")));
    }
    Ok(shape.iter().product())
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = check_shape(&shape)?;
        if data.len() != len {
            return Err(Error::shape(format!(
                "shape {shape:?} needs {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn from_elem(shape: &[usize], value: f64) -> Result<Self> {
        let len = check_shape(shape)?;
        Ok(Self { shape: shape.to_vec(), data: vec![value; len] })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Self::from_elem(shape, 0.0)
    }

    pub fn ones(shape: &[usize]) -> Result<Self> {
        Self::from_elem(shape, 1.0)
    }

    /// Builds a tensor by evaluating `f` at every multi-index, in row-major order.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = check_shape(shape)?;
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..len {
            data.push(f(&idx));
            increment(&mut idx, shape);
        }
        Ok(Self { shape: shape.to_vec(), data })
    }

    /// Tensor of order `order` with every mode of size `r`, holding `value` on
    /// the superdiagonal `(i, i, ..., i)` and zero elsewhere.
    pub fn superdiagonal(order: usize, r: usize, value: f64) -> Result<Self> {
        let shape = vec![r; order];
        let mut t = Self::zeros(&shape)?;
        let step: usize = (0..order).map(|m| r.pow(m as u32)).sum();
        for i in 0..r {
            t.data[i * step] = value;
        }
        Ok(t)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn strides(&self) -> Vec<usize> {
        row_major_strides(&self.shape)
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        idx.iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &n)| {
                debug_assert!(i < n);
                acc * n + i
            })
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let o = self.offset(idx);
        self.data[o] = value;
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.require_same_shape(other)?;
        Ok(Self {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|x| c * x)
    }

    pub fn require_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::shape(format!("{:?} vs {:?}", self.shape, other.shape)));
        }
        Ok(())
    }

    pub fn check_mode(&self, k: usize) -> Result<()> {
        if k >= self.order() {
            return Err(Error::ModeOutOfRange { mode: k, order: self.order() });
        }
        Ok(())
    }

    /// Sizes `(left, n_k, right)` so that the tensor is a row-major
    /// `left x n_k x right` array with respect to mode `k`.
    pub(crate) fn split_at_mode(&self, k: usize) -> (usize, usize, usize) {
        let left = self.shape[..k].iter().product();
        let right = self.shape[k + 1..].iter().product();
        (left, self.shape[k], right)
    }

    /// The `(order - 1)`-mode sub-tensor with index `i` fixed along `axis`.
    pub fn slice(&self, axis: usize, i: usize) -> Result<Self> {
        self.check_mode(axis)?;
        if self.order() < 2 {
            return Err(Error::shape("cannot slice a tensor of order 1"));
        }
        let (left, n, right) = self.split_at_mode(axis);
        if i >= n {
            return Err(Error::shape(format!("slice index {i} out of range for mode of size {n}")));
        }
        let mut data = Vec::with_capacity(left * right);
        for l in 0..left {
            let start = (l * n + i) * right;
            data.extend_from_slice(&self.data[start..start + right]);
        }
        let mut shape = self.shape.clone();
        shape.remove(axis);
        Ok(Self { shape, data })
    }

    /// Overwrites the slice at index `i` along `axis`.
    pub fn set_slice(&mut self, axis: usize, i: usize, slice: &Self) -> Result<()> {
        self.check_mode(axis)?;
        let mut expect = self.shape.clone();
        expect.remove(axis);
        if slice.shape != expect || i >= self.shape[axis] {
            return Err(Error::shape(format!(
                "slice {:?} at {i} does not fit tensor {:?} along mode {axis}",
                slice.shape, self.shape
            )));
        }
        let (left, n, right) = self.split_at_mode(axis);
        for l in 0..left {
            let start = (l * n + i) * right;
            self.data[start..start + right].copy_from_slice(&slice.data[l * right..(l + 1) * right]);
        }
        Ok(())
    }

    /// Stacks equally shaped tensors along a new leading mode.
    pub fn stack(slices: &[Self]) -> Result<Self> {
        let first = slices.first().ok_or_else(|| Error::shape("nothing to stack"))?;
        let mut shape = vec![slices.len()];
        shape.extend_from_slice(&first.shape);
        let mut data = Vec::with_capacity(slices.len() * first.len());
        for s in slices {
            first.require_same_shape(s)?;
            data.extend_from_slice(&s.data);
        }
        Ok(Self { shape, data })
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape(format!("matrix dimensions {rows}x{cols} must be positive")));
        }
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::shape("columns have differing lengths"));
        }
        let m = Self::from_fn(rows, cols, |i, j| columns[j][i]);
        Self::new(rows, cols, m.data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (p, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(p)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn to_tensor(&self) -> DenseTensor {
        DenseTensor { shape: vec![self.rows, self.cols], data: self.data.clone() }
    }
}

impl From<Matrix> for DenseTensor {
    fn from(m: Matrix) -> Self {
        DenseTensor { shape: vec![m.rows, m.cols], data: m.data }
    }
}

impl TryFrom<DenseTensor> for Matrix {
    type Error = Error;

    fn try_from(t: DenseTensor) -> Result<Self> {
        if t.order() != 2 {
            return Err(Error::shape(format!("expected a matrix, got shape {:?}", t.shape)));
        }
        Ok(Matrix { rows: t.shape[0], cols: t.shape[1], data: t.data })
    }
}

pub(crate) fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; shape.len()];
    for m in (0..shape.len().saturating_sub(1)).rev() {
        strides[m] = strides[m + 1] * shape[m + 1];
    }
    strides
}

fn increment(idx: &mut [usize], shape: &[usize]) {
    for m in (0..shape.len()).rev() {
        idx[m] += 1;
        if idx[m] < shape[m] {
            return;
        }
        idx[m] = 0;
    }
}

/// Column strides of the mode-k unfolding: the remaining indices are
/// ordered with the lowest mode varying fastest.
fn unfolding_strides(shape: &[usize], k: usize) -> Vec<usize> {
    let mut strides = vec![0usize; shape.len()];
    let mut acc = 1;
    for (m, &n) in shape.iter().enumerate() {
        if m != k {
            strides[m] = acc;
            acc *= n;
        }
    }
    strides
}

/// Mode-k unfolding `T_(k)` of size `n_k x prod_{i != k} n_i`.
pub fn matricize(t: &DenseTensor, k: usize) -> Result<Matrix> {
    t.check_mode(k)?;
    let rows = t.shape[k];
    let cols = t.len() / rows;
    let col_strides = unfolding_strides(&t.shape, k);
    let mut out = vec![0.0; t.len()];
    let mut idx = vec![0usize; t.order()];
    for &v in &t.data {
        let col: usize = idx.iter().zip(&col_strides).map(|(i, s)| i * s).sum();
        out[idx[k] * cols + col] = v;
        increment(&mut idx, &t.shape);
    }
    Matrix::new(rows, cols, out)
}

/// Inverse of [`matricize`]: folds an unfolding back into a tensor of `shape`.
pub fn tensorize(m: &Matrix, k: usize, shape: &[usize]) -> Result<DenseTensor> {
    let len = check_shape(shape)?;
    if k >= shape.len() {
        return Err(Error::ModeOutOfRange { mode: k, order: shape.len() });
    }
    if m.rows != shape[k] || m.rows * m.cols != len {
        return Err(Error::shape(format!(
            "{}x{} unfolding does not match shape {shape:?} along mode {k}",
            m.rows, m.cols
        )));
    }
    let col_strides = unfolding_strides(shape, k);
    let mut data = Vec::with_capacity(len);
    let mut idx = vec![0usize; shape.len()];
    for _ in 0..len {
        let col: usize = idx.iter().zip(&col_strides).map(|(i, s)| i * s).sum();
        data.push(m.data[idx[k] * m.cols + col]);
        increment(&mut idx, shape);
    }
    DenseTensor::new(shape.to_vec(), data)
}

/// Mode-k product `T x_k B` with `B` of size `m x n_k`.
pub fn mode_product(t: &DenseTensor, b: &Matrix, k: usize) -> Result<DenseTensor> {
    t.check_mode(k)?;
    let (left, n, right) = t.split_at_mode(k);
    if b.cols != n {
        return Err(Error::shape(format!(
            "mode-{k} product needs {n} matrix columns, got {}x{}",
            b.rows, b.cols
        )));
    }
    let m = b.rows;
    let mut out = vec![0.0; left * m * right];
    for l in 0..left {
        let src = &t.data[l * n * right..(l + 1) * n * right];
        for j in 0..m {
            let dst = &mut out[(l * m + j) * right..(l * m + j + 1) * right];
            for (i, &bji) in b.row(j).iter().enumerate() {
                if bji == 0.0 {
                    continue;
                }
                for (o, &x) in dst.iter_mut().zip(&src[i * right..(i + 1) * right]) {
                    *o += bji * x;
                }
            }
        }
    }
    let mut shape = t.shape.clone();
    shape[k] = m;
    Ok(DenseTensor { shape, data: out })
}

/// Applies several mode products on distinct modes, in ascending mode order.
pub fn multi_mode_product(t: &DenseTensor, products: &[(&Matrix, usize)]) -> Result<DenseTensor> {
    let mut ordered: Vec<(&Matrix, usize)> = products.to_vec();
    ordered.sort_by_key(|&(_, k)| k);
    for w in ordered.windows(2) {
        if w[0].1 == w[1].1 {
            return Err(Error::RepeatedMode(w[0].1));
        }
    }
    let mut out = t.clone();
    for (b, k) in ordered {
        out = mode_product(&out, b, k)?;
    }
    Ok(out)
}

/// `S x_1 A^(1) x_2 ... x_d A^(d)`.
pub fn tucker_reconstruct(core: &DenseTensor, factors: &[Matrix]) -> Result<DenseTensor> {
    if factors.len() != core.order() {
        return Err(Error::shape(format!(
            "core of order {} needs {} factors, got {}",
            core.order(),
            core.order(),
            factors.len()
        )));
    }
    for (k, a) in factors.iter().enumerate() {
        if a.cols != core.shape[k] {
            return Err(Error::shape(format!(
                "factor {k} has {} columns but core mode has size {}",
                a.cols, core.shape[k]
            )));
        }
    }
    let products: Vec<(&Matrix, usize)> = factors.iter().enumerate().map(|(k, a)| (a, k)).collect();
    multi_mode_product(core, &products)
}

/// Sum of `r` rank-one terms built from matching columns of the factors.
pub fn cp_reconstruct(factors: &[Matrix]) -> Result<DenseTensor> {
    let r = factors.first().ok_or_else(|| Error::shape("no factor matrices"))?.cols;
    if let Some(a) = factors.iter().find(|a| a.cols != r) {
        return Err(Error::shape(format!("factor ranks differ: {r} vs {}", a.cols)));
    }
    let core = DenseTensor::superdiagonal(factors.len(), r, 1.0)?;
    tucker_reconstruct(&core, factors)
}

pub fn inner_product(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    a.require_same_shape(b)?;
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum())
}

/// `P_(k) Q_(k)^T` for tensors that agree in every mode except `k`.
///
/// Equivalent to `matricize(p, k).matmul(&matricize(q, k).transpose())`
/// without forming either unfolding.
pub fn unfolding_gram(p: &DenseTensor, q: &DenseTensor, k: usize) -> Result<Matrix> {
    p.check_mode(k)?;
    q.check_mode(k)?;
    let compatible = p.order() == q.order()
        && p.shape.iter().zip(&q.shape).enumerate().all(|(m, (a, b))| m == k || a == b);
    if !compatible {
        return Err(Error::shape(format!(
            "{:?} and {:?} must agree outside mode {k}",
            p.shape, q.shape
        )));
    }
    let (left, np, right) = p.split_at_mode(k);
    let nq = q.shape[k];
    let mut out = Matrix::zeros(np, nq);
    for l in 0..left {
        for i in 0..np {
            let prow = &p.data[(l * np + i) * right..(l * np + i + 1) * right];
            for a in 0..nq {
                let qrow = &q.data[(l * nq + a) * right..(l * nq + a + 1) * right];
                let dot: f64 = prow.iter().zip(qrow).map(|(x, y)| x * y).sum();
                out.data[i * nq + a] += dot;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counting(shape: &[usize]) -> DenseTensor {
        let mut c = 0.0;
        DenseTensor::from_fn(shape, |_| {
            c += 1.0;
            c
        })
        .unwrap()
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(DenseTensor::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert!(DenseTensor::zeros(&[]).is_err());
        assert!(DenseTensor::zeros(&[2, 0]).is_err());
    }

    #[test]
    fn matricize_matrix_mode0_is_identity() {
        let t = DenseTensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let m = matricize(&t, 0).unwrap();
        assert_eq!(m.data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn matricize_shapes() {
        let t = counting(&[2, 3, 4]);
        let m = matricize(&t, 1).unwrap();
        assert_eq!((m.rows(), m.cols()), (3, 8));
        let back = tensorize(&m, 1, &[2, 3, 4]).unwrap();
        assert_eq!(back, t);
        assert!(matricize(&t, 3).is_err());
    }

    #[test]
    fn matricize_column_order_matches_index_loop() {
        let shape = [2, 3, 4];
        let t = DenseTensor::from_fn(&shape, |ix| (100 * ix[0] + 10 * ix[1] + ix[2]) as f64).unwrap();
        let m = matricize(&t, 2).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                for l in 0..4 {
                    // lowest remaining mode varies fastest
                    let col = i + 2 * j;
                    assert_eq!(m.get(l, col), (100 * i + 10 * j + l) as f64);
                }
            }
        }
    }

    #[test]
    fn tensorize_rejects_mismatch() {
        let m = Matrix::zeros(3, 7);
        assert!(tensorize(&m, 1, &[2, 3, 4]).is_err());
        let single = DenseTensor::new(vec![1], vec![5.0]).unwrap();
        let back = tensorize(&matricize(&single, 0).unwrap(), 0, &[1]).unwrap();
        assert_eq!(back, single);
    }

    #[test]
    fn mode_product_examples() {
        let t = counting(&[2, 3]);
        assert_eq!(mode_product(&t, &Matrix::identity(3), 1).unwrap(), t);

        let ones = DenseTensor::ones(&[2, 2]).unwrap();
        let b = Matrix::new(1, 2, vec![1.0, 1.0]).unwrap();
        let out = mode_product(&ones, &b, 0).unwrap();
        assert_eq!(out.shape(), &[1, 2]);
        assert_eq!(out.data(), &[2.0, 2.0]);

        assert!(mode_product(&ones, &Matrix::zeros(2, 3), 0).is_err());
    }

    #[test]
    fn mode_product_equals_unfolding_route() {
        let t = counting(&[3, 4, 5]);
        let b = Matrix::from_fn(2, 4, |i, j| (i as f64 + 1.0) * 0.5 - j as f64);
        let direct = mode_product(&t, &b, 1).unwrap();
        let via = tensorize(&b.matmul(&matricize(&t, 1).unwrap()).unwrap(), 1, &[3, 2, 5]).unwrap();
        for (x, y) in direct.data().iter().zip(via.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn multi_mode_product_rejects_repeats_and_handles_empty() {
        let t = counting(&[2, 2]);
        assert_eq!(multi_mode_product(&t, &[]).unwrap(), t);
        let i2 = Matrix::identity(2);
        assert!(matches!(
            multi_mode_product(&t, &[(&i2, 0), (&i2, 0)]),
            Err(Error::RepeatedMode(0))
        ));
        assert_eq!(multi_mode_product(&t, &[(&i2, 1), (&i2, 0)]).unwrap(), t);
    }

    #[test]
    fn tucker_rank_one_indicator() {
        let core = DenseTensor::ones(&[1, 1, 1]).unwrap();
        let e1 = Matrix::new(3, 1, vec![1.0, 0.0, 0.0]).unwrap();
        let x = tucker_reconstruct(&core, &[e1.clone(), e1.clone(), e1]).unwrap();
        assert_eq!(x.get(&[0, 0, 0]), 1.0);
        assert_eq!(x.sum(), 1.0);
    }

    #[test]
    fn tucker_identity_factors_returns_core() {
        let core = counting(&[2, 3, 2]);
        let f = vec![Matrix::identity(2), Matrix::identity(3), Matrix::identity(2)];
        assert_eq!(tucker_reconstruct(&core, &f).unwrap(), core);
        assert!(tucker_reconstruct(&core, &f[..2]).is_err());
    }

    #[test]
    fn cp_matrix_case_is_uv_transpose() {
        let u = Matrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64);
        let v = Matrix::from_fn(4, 2, |i, j| (3 * i + j) as f64 * 0.1);
        let x = cp_reconstruct(&[u.clone(), v.clone()]).unwrap();
        let uvt = u.matmul(&v.transpose()).unwrap();
        for (a, b) in x.data().iter().zip(uvt.data()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(cp_reconstruct(&[u, Matrix::zeros(4, 3)]).is_err());
    }

    #[test]
    fn inner_product_examples() {
        let t = counting(&[2, 2]);
        assert_eq!(inner_product(&t, &DenseTensor::zeros(&[2, 2]).unwrap()).unwrap(), 0.0);
        let o = DenseTensor::ones(&[2, 2]).unwrap();
        assert_eq!(inner_product(&o, &o).unwrap(), 4.0);
        assert!(inner_product(&o, &DenseTensor::ones(&[4]).unwrap()).is_err());
    }

    #[test]
    fn slices_round_trip() {
        let t = counting(&[3, 2, 4]);
        let mut u = DenseTensor::zeros(&[3, 2, 4]).unwrap();
        for i in 0..2 {
            let s = t.slice(1, i).unwrap();
            assert_eq!(s.shape(), &[3, 4]);
            u.set_slice(1, i, &s).unwrap();
        }
        assert_eq!(u, t);
    }

    #[test]
    fn unfolding_gram_matches_matmul() {
        let p = counting(&[2, 5, 3]);
        let q = counting(&[2, 4, 3]).map(|x| x.sin());
        let g = unfolding_gram(&p, &q, 1).unwrap();
        let want = matricize(&p, 1)
            .unwrap()
            .matmul(&matricize(&q, 1).unwrap().transpose())
            .unwrap();
        for (a, b) in g.data().iter().zip(want.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn superdiagonal_entries() {
        let s = DenseTensor::superdiagonal(3, 2, 1.0).unwrap();
        assert_eq!(s.get(&[0, 0, 0]), 1.0);
        assert_eq!(s.get(&[1, 1, 1]), 1.0);
        assert_eq!(s.sum(), 2.0);
    }
}
