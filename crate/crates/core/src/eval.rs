//! Scores for recovered atoms and reconstructions.

use itertools::Itertools;
use log::warn;

use crate::error::{Error, Result};
use crate::ot::{LossSpec, SinkhornOptions};
use crate::solver::{monitored_loss, TuckerModel};
use crate::tensor::{DenseTensor, Matrix};

/// Largest atom count matched by exhaustive search.
pub const EXHAUSTIVE_LIMIT: usize = 6;

/// Total variation distance `0.5 * sum |p - q|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomMatch {
    /// `assignment[t]` is the learned atom paired with truth atom `t`.
    pub assignment: Vec<usize>,
    /// TV distance of each pair, indexed by truth atom.
    pub distances: Vec<f64>,
    /// False when the greedy fallback was used.
    pub exhaustive: bool,
}

impl AtomMatch {
    pub fn worst(&self) -> f64 {
        self.distances.iter().copied().fold(0.0, f64::max)
    }
}

/// One-to-one pairing of atom columns minimising the total TV distance.
pub fn atom_match_score(learned: &Matrix, truth: &Matrix) -> Result<AtomMatch> {
    if learned.cols() != truth.cols() || learned.rows() != truth.rows() {
        return Err(Error::shape(format!(
            "learned atoms are {}x{}, truth atoms are {}x{}",
            learned.rows(),
            learned.cols(),
            truth.rows(),
            truth.cols()
        )));
    }
    let r = truth.cols();
    let cost: Vec<Vec<f64>> = (0..r)
        .map(|t| (0..r).map(|l| tv_distance(&truth.column(t), &learned.column(l))).collect())
        .collect();
    let (assignment, exhaustive) = if r <= EXHAUSTIVE_LIMIT {
        let best = (0..r)
            .permutations(r)
            .map(|p| (p.iter().enumerate().map(|(t, &l)| cost[t][l]).sum::<f64>(), p))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, p)| p)
            .unwrap_or_default();
        (best, true)
    } else {
        warn!("matching {r} atoms greedily; the pairing may not be optimal");
        let mut pairs: Vec<(usize, usize)> = (0..r).cartesian_product(0..r).collect();
        pairs.sort_by(|a, b| cost[a.0][a.1].total_cmp(&cost[b.0][b.1]));
        let mut assignment = vec![usize::MAX; r];
        let mut used = vec![false; r];
        for (t, l) in pairs {
            if assignment[t] == usize::MAX && !used[l] {
                assignment[t] = l;
                used[l] = true;
            }
        }
        (assignment, false)
    };
    let distances = assignment.iter().enumerate().map(|(t, &l)| cost[t][l]).collect();
    Ok(AtomMatch { assignment, distances, exhaustive })
}

/// Rescales each column to sum one (columns with no mass are left as is).
pub fn normalize_columns(m: &Matrix) -> Matrix {
    let sums: Vec<f64> = (0..m.cols()).map(|j| m.column(j).iter().sum()).collect();
    Matrix::from_fn(m.rows(), m.cols(), |i, j| if sums[j] > 0.0 { m.get(i, j) / sums[j] } else { m.get(i, j) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionMetrics {
    /// `||X - X_hat||_F / ||X||_F`.
    pub frobenius_rel_error: f64,
    /// Transport loss between `X` and the reconstruction; infinite when the
    /// reconstruction carries no mass.
    pub monitored_loss: f64,
}

pub fn relative_frobenius(x: &DenseTensor, x_hat: &DenseTensor) -> Result<f64> {
    let diff = x.zip_map(x_hat, |a, b| a - b)?;
    Ok(diff.frobenius_norm() / x.frobenius_norm())
}

pub fn reconstruction_metrics(
    x: &DenseTensor,
    model: &TuckerModel,
    loss: &LossSpec,
    opts: &SinkhornOptions,
) -> Result<ReconstructionMetrics> {
    let x_hat = model.reconstruct()?;
    let frobenius_rel_error = relative_frobenius(x, &x_hat)?;
    let monitored_loss = match monitored_loss(x, &x_hat, loss, opts) {
        Ok(m) => m.value,
        Err(Error::ZeroMass) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    Ok(ReconstructionMetrics { frobenius_rel_error, monitored_loss })
}
