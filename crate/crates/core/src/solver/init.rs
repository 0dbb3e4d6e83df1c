//! Starting points for block coordinate descent.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::entropy::ConstraintSet;
use crate::error::{Error, Result};
use crate::solver::model::{Init, ModelKind, ModelSpec, TuckerModel};
use crate::tensor::{matricize, multi_mode_product, tucker_reconstruct, DenseTensor, Matrix};

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Left NNDSVD factor (`rows x rank`) of a matrix.
///
/// The leading singular pair is taken in absolute value; for the others the
/// dominant of the positive and negative sign patterns is kept.
pub fn nndsvd_left(m: &Matrix, rank: usize) -> Result<Matrix> {
    if rank == 0 || rank > m.rows().min(m.cols()) {
        return Err(Error::Config(format!(
            "infeasible rank {rank} for a {}x{} unfolding",
            m.rows(),
            m.cols()
        )));
    }
    let dm = DMatrix::from_row_slice(m.rows(), m.cols(), m.data());
    let svd = dm.svd(true, true);
    let (u, vt) = (svd.u.expect("requested u"), svd.v_t.expect("requested v_t"));
    // nalgebra does not promise an ordering
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut w = Matrix::zeros(m.rows(), rank);
    for (j, &idx) in order.iter().take(rank).enumerate() {
        let sigma = svd.singular_values[idx];
        let x: Vec<f64> = u.column(idx).iter().copied().collect();
        let y: Vec<f64> = vt.row(idx).iter().copied().collect();
        let col: Vec<f64> = if j == 0 {
            x.iter().map(|v| sigma.sqrt() * v.abs()).collect()
        } else {
            let pos = |v: &[f64]| v.iter().map(|a| a.max(0.0)).collect::<Vec<_>>();
            let neg = |v: &[f64]| v.iter().map(|a| (-a).max(0.0)).collect::<Vec<_>>();
            let (xp, xn, yp, yn) = (pos(&x), neg(&x), pos(&y), neg(&y));
            let mp = norm(&xp) * norm(&yp);
            let mn = norm(&xn) * norm(&yn);
            let (side, side_norm, weight) = if mp >= mn {
                (xp.clone(), norm(&xp), mp)
            } else {
                (xn.clone(), norm(&xn), mn)
            };
            if side_norm > 0.0 {
                side.iter().map(|v| (sigma * weight).sqrt() * v / side_norm).collect()
            } else {
                vec![0.0; x.len()]
            }
        };
        for (i, v) in col.into_iter().enumerate() {
            w.set(i, j, v);
        }
    }
    Ok(w)
}

fn positive_floor(x: &DenseTensor) -> Result<f64> {
    let mean = x.sum() / x.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::ZeroMass);
    }
    Ok(mean / 100.0)
}

fn check_data(x: &DenseTensor) -> Result<()> {
    if let Some(i) = x.data().iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidParameter(format!("data entry {i} is {}, must be finite and non-negative", x.data()[i])));
    }
    Ok(())
}

fn finish_model(x: &DenseTensor, spec: &ModelSpec, factors: Vec<Matrix>) -> Result<TuckerModel> {
    let mut factors = factors;
    for (a, set) in factors.iter_mut().zip(&spec.factor_constraints) {
        *a = Matrix::try_from(set.project(&a.to_tensor())?)?;
    }
    let d = spec.ranks.len();
    let mut constraints = vec![spec.core_constraint];
    constraints.extend(spec.factor_constraints.iter().copied());
    let (core, fixed) = match spec.kind {
        ModelKind::Cp => (DenseTensor::superdiagonal(d, spec.ranks[0], 1.0)?, true),
        ModelKind::Tucker => {
            // the data seen through the initial factors; a constant core would
            // give every factor identical columns after its first update, and
            // the sweeps never leave that rank-one set
            let transposed: Vec<Matrix> = factors.iter().map(Matrix::transpose).collect();
            let pairs: Vec<(&Matrix, usize)> = transposed.iter().zip(0..).collect();
            let seen = multi_mode_product(x, &pairs)?;
            let core = if spec.core_constraint == ConstraintSet::Unconstrained {
                let mass = tucker_reconstruct(&seen, &factors)?.sum();
                seen.scaled(x.sum() / mass)
            } else {
                spec.core_constraint.project(&seen)?
            };
            (core, false)
        }
    };
    TuckerModel::new(core, factors, constraints, fixed)
}

/// Deterministic NNDSVD start: one SVD per unfolding.
pub fn nnsvd_init(x: &DenseTensor, spec: &ModelSpec) -> Result<TuckerModel> {
    spec.validate(x.shape())?;
    check_data(x)?;
    let floor = positive_floor(x)?;
    let mut factors = Vec::with_capacity(x.order());
    for (k, &r) in spec.ranks.iter().enumerate() {
        let unfolding = matricize(x, k)?;
        if r > unfolding.cols() {
            return Err(Error::Config(format!(
                "infeasible rank {r} for mode {}: unfolding has only {} columns",
                k + 1,
                unfolding.cols()
            )));
        }
        let mut w = nndsvd_left(&unfolding, r)?;
        w.data_mut().iter_mut().filter(|v| **v <= 0.0).for_each(|v| *v = floor);
        factors.push(w);
    }
    finish_model(x, spec, factors)
}

/// Factors with entries uniform in `[0.1, 1)` from a ChaCha8 stream.
pub fn random_init(x: &DenseTensor, spec: &ModelSpec, seed: u64) -> Result<TuckerModel> {
    spec.validate(x.shape())?;
    check_data(x)?;
    positive_floor(x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factors = x
        .shape()
        .iter()
        .zip(&spec.ranks)
        .map(|(&n, &r)| Matrix::from_fn(n, r, |_, _| rng.random_range(0.1..1.0)))
        .collect();
    finish_model(x, spec, factors)
}

pub fn initialize(x: &DenseTensor, spec: &ModelSpec, init: Init) -> Result<TuckerModel> {
    match init {
        Init::Nnsvd => nnsvd_init(x, spec),
        Init::Random { seed } => random_init(x, spec, seed),
    }
}
