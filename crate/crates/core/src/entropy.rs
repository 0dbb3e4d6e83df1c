//! Entropy barriers restricted to normalisation constraints, their Legendre
//! transforms, and the maps that recover a primal block from a dual argument.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// Normalisation constraint attached to a model block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintSet {
    Unconstrained,
    /// All entries sum to one (matrices or tensors).
    FullSimplex,
    /// Every row sums to one (matrices only).
    RowSimplex,
    /// Every column sums to one (matrices only).
    ColumnSimplex,
}

impl ConstraintSet {
    pub fn name(&self) -> &'static str {
        match self {
            ConstraintSet::Unconstrained => "none",
            ConstraintSet::FullSimplex => "simplex",
            ConstraintSet::RowSimplex => "row",
            ConstraintSet::ColumnSimplex => "column",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "none" | "unconstrained" => Ok(ConstraintSet::Unconstrained),
            "simplex" | "full" => Ok(ConstraintSet::FullSimplex),
            "row" => Ok(ConstraintSet::RowSimplex),
            "column" | "col" => Ok(ConstraintSet::ColumnSimplex),
            other => Err(Error::Config(format!("unknown constraint name '{other}'"))),
        }
    }

    fn check_applicable(&self, t: &DenseTensor) -> Result<()> {
        if matches!(self, ConstraintSet::RowSimplex | ConstraintSet::ColumnSimplex) && t.order() != 2 {
            return Err(Error::shape(format!(
                "{} normalisation needs a matrix, got shape {:?}",
                self.name(),
                t.shape()
            )));
        }
        Ok(())
    }

    /// Groups of flat indices that must each sum to one.
    fn groups(&self, shape: &[usize]) -> Vec<Vec<usize>> {
        match self {
            ConstraintSet::Unconstrained => Vec::new(),
            ConstraintSet::FullSimplex => vec![(0..shape.iter().product()).collect()],
            ConstraintSet::RowSimplex => {
                let (r, c) = (shape[0], shape[1]);
                (0..r).map(|i| (0..c).map(|j| i * c + j).collect()).collect()
            }
            ConstraintSet::ColumnSimplex => {
                let (r, c) = (shape[0], shape[1]);
                (0..c).map(|j| (0..r).map(|i| i * c + j).collect()).collect()
            }
        }
    }

    /// Largest deviation of a normalisation sum from one (zero when unconstrained).
    pub fn violation(&self, t: &DenseTensor) -> Result<f64> {
        self.check_applicable(t)?;
        Ok(self
            .groups(t.shape())
            .iter()
            .map(|g| (g.iter().map(|&i| t.data()[i]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max))
    }

    /// Rescales `t` onto the constraint set. Entries must be positive.
    pub fn project(&self, t: &DenseTensor) -> Result<DenseTensor> {
        self.check_applicable(t)?;
        let mut out = t.clone();
        for g in self.groups(t.shape()) {
            let s: f64 = g.iter().map(|&i| t.data()[i]).sum();
            if !(s > 0.0) {
                return Err(Error::ZeroMass);
            }
            for i in g {
                out.data_mut()[i] /= s;
            }
        }
        Ok(out)
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn check_finite(v: &DenseTensor) -> Result<()> {
    if let Some(i) = v.data().iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("entropy argument entry {i} is {}", v.data()[i])));
    }
    Ok(())
}

/// Legendre transform of the constrained entropy, and its gradient.
pub fn entropy_conjugate(v: &DenseTensor, set: ConstraintSet) -> Result<(f64, DenseTensor)> {
    check_finite(v)?;
    set.check_applicable(v)?;
    let value = match set {
        ConstraintSet::Unconstrained => v.data().iter().map(|x| x.exp()).sum(),
        _ => set
            .groups(v.shape())
            .iter()
            .map(|g| log_sum_exp(g.iter().map(|&i| v.data()[i])))
            .sum(),
    };
    Ok((value, primal_recover(v, set)?))
}

/// Maximiser of `<A, V> - E_Sigma(A)`: `exp(V)` normalised onto the constraint.
pub fn primal_recover(v: &DenseTensor, set: ConstraintSet) -> Result<DenseTensor> {
    check_finite(v)?;
    set.check_applicable(v)?;
    // entries that underflow are held at the smallest normal float so that
    // recovered blocks stay strictly positive
    if set == ConstraintSet::Unconstrained {
        return Ok(v.map(|x| x.exp().max(f64::MIN_POSITIVE)));
    }
    let mut out = v.clone();
    for g in set.groups(v.shape()) {
        let m = g.iter().map(|&i| v.data()[i]).fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for &i in &g {
            let e = (v.data()[i] - m).exp();
            out.data_mut()[i] = e;
            s += e;
        }
        for &i in &g {
            out.data_mut()[i] = (out.data()[i] / s).max(f64::MIN_POSITIVE);
        }
    }
    Ok(out)
}

/// `E(A) = <A, log A - 1>` with `0 log 0 = 0`.
pub fn entropy(a: &DenseTensor) -> f64 {
    a.data()
        .iter()
        .map(|&x| if x > 0.0 { x * (x.ln() - 1.0) } else { 0.0 })
        .sum()
}
