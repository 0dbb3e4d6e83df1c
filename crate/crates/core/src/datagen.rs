//! Synthetic datasets: separable Gaussian mixtures, empirical samples of
//! them, and stacks of randomly translated 2-D mixtures.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(seed)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::ot::linspace;
use crate::tensor::{cp_reconstruct, DenseTensor, Matrix};

/// A discretised Gaussian bump on a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomSpec {
    pub n: usize,
    pub domain: (f64, f64),
    pub mean: f64,
    pub std: f64,
}

impl AtomSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("atom grid needs at least 2 points, got {}", self.n)));
        }
        if !(self.std > 0.0) || !self.std.is_finite() {
            return Err(Error::InvalidParameter(format!("atom std must be positive, got {}", self.std)));
        }
        if !(self.domain.0 < self.domain.1) || !self.mean.is_finite() {
            return Err(Error::InvalidParameter(format!("bad atom domain {:?} or mean {}", self.domain, self.mean)));
        }
        Ok(())
    }
}

/// Implementation defaults for `r` atoms on `domain`: means evenly spaced at
/// `(i + 1) / (r + 1)` of the domain (25/50/75% for three atoms) and a
/// standard deviation of 5% of the domain length.
pub fn default_atoms(n: usize, domain: (f64, f64), r: usize) -> Vec<AtomSpec> {
    let len = domain.1 - domain.0;
    (0..r)
        .map(|i| AtomSpec { n, domain, mean: domain.0 + len * (i + 1) as f64 / (r + 1) as f64, std: 0.05 * len })
        .collect()
}

/// Gaussian density evaluated on the grid and normalised to sum one.
pub fn gaussian_atom(spec: &AtomSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let grid = linspace(spec.domain.0, spec.domain.1, spec.n);
    let mut w: Vec<f64> = grid.iter().map(|x| (-0.5 * ((x - spec.mean) / spec.std).powi(2)).exp()).collect();
    let s: f64 = w.iter().sum();
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "atom with mean {} and std {} has no mass on the grid",
            spec.mean, spec.std
        )));
    }
    w.iter_mut().for_each(|v| *v /= s);
    Ok(w)
}

/// `sum_i w_i a_i^(1) o ... o a_i^(d)` where `atoms[i]` lists the `d` vectors
/// of component `i`.
pub fn separable_mixture(atoms: &[Vec<Vec<f64>>], weights: &[f64]) -> Result<DenseTensor> {
    if atoms.is_empty() || atoms.len() != weights.len() {
        return Err(Error::shape(format!("{} components but {} weights", atoms.len(), weights.len())));
    }
    let d = atoms[0].len();
    if d == 0 {
        return Err(Error::shape("components need at least one mode"));
    }
    let sizes: Vec<usize> = atoms[0].iter().map(Vec::len).collect();
    for comp in atoms {
        if comp.iter().map(Vec::len).collect::<Vec<_>>() != sizes {
            return Err(Error::shape(format!("components have inconsistent mode sizes, expected {sizes:?}")));
        }
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::InvalidParameter(format!("mixture weight {w} is negative")));
    }
    let r = atoms.len();
    let factors: Vec<Matrix> = (0..d)
        .map(|k| {
            Matrix::from_fn(sizes[k], r, |i, c| {
                let v = atoms[c][k][i];
                if k == 0 {
                    v * weights[c]
                } else {
                    v
                }
            })
        })
        .collect();
    cp_reconstruct(&factors)
}

/// Histogram of `samples` i.i.d. cell draws from `x_true`, divided by `samples`.
pub fn empirical_sample(x_true: &DenseTensor, samples: usize, seed: u64) -> Result<DenseTensor> {
    if samples == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let dist = WeightedIndex::new(x_true.data())
        .map_err(|e| Error::InvalidParameter(format!("cannot sample from tensor: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; x_true.len()];
    for _ in 0..samples {
        counts[dist.sample(&mut rng)] += 1;
    }
    let n = samples as f64;
    DenseTensor::new(x_true.shape().to_vec(), counts.into_iter().map(|c| c as f64 / n).collect())
}

/// Stack of `n_slices` normalised 2-D mixtures.
///
/// `base_atoms[c]` holds the row and column atom of component `c`. For every
/// slice, component and axis an independent `Normal(0, shift_std)`
/// translation (in domain units) is added to the atom mean.
pub fn shifted_slice_dataset(
    base_atoms: &[(AtomSpec, AtomSpec)],
    n_slices: usize,
    shift_std: f64,
    seed: u64,
) -> Result<DenseTensor> {
    if base_atoms.is_empty() || n_slices == 0 {
        return Err(Error::InvalidParameter("need at least one atom pair and one slice".into()));
    }
    let normal = Normal::new(0.0, shift_std)
        .map_err(|e| Error::InvalidParameter(format!("shift std {shift_std}: {e}")))?;
    let (n1, n2) = (base_atoms[0].0.n, base_atoms[0].1.n);
    if base_atoms.iter().any(|(a, b)| a.n != n1 || b.n != n2) {
        return Err(Error::shape("all atom pairs must share grid sizes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slices = Vec::with_capacity(n_slices);
    for _ in 0..n_slices {
        let mut comps = Vec::with_capacity(base_atoms.len());
        for (a, b) in base_atoms {
            let sa = AtomSpec { mean: a.mean + normal.sample(&mut rng), ..*a };
            let sb = AtomSpec { mean: b.mean + normal.sample(&mut rng), ..*b };
            comps.push(vec![gaussian_atom(&sa)?, gaussian_atom(&sb)?]);
        }
        let slice = separable_mixture(&comps, &vec![1.0; comps.len()])?;
        let z = slice.sum();
        slices.push(slice.scaled(1.0 / z));
    }
    DenseTensor::stack(&slices)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centred_atom_is_symmetric_and_normalised() {
        let a = gaussian_atom(&AtomSpec { n: 11, domain: (0.0, 1.0), mean: 0.5, std: 0.1 }).unwrap();
        for i in 0..11 {
            assert!((a[i] - a[10 - i]).abs() < 1e-15);
        }
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_evaluated_profile() {
        let a = gaussian_atom(&AtomSpec { n: 5, domain: (-1.0, 1.0), mean: 0.0, std: 1.0 }).unwrap();
        let raw: Vec<f64> = [-1.0, -0.5, 0.0, 0.5, 1.0].iter().map(|x: &f64| (-x * x / 2.0).exp()).collect();
        let s: f64 = raw.iter().sum();
        for (p, q) in a.iter().zip(&raw) {
            assert!((p - q / s).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(gaussian_atom(&AtomSpec { n: 1, domain: (0.0, 1.0), mean: 0.5, std: 0.1 }).is_err());
        assert!(gaussian_atom(&AtomSpec { n: 4, domain: (0.0, 1.0), mean: 0.5, std: 0.0 }).is_err());
    }

    #[test]
    fn rank_one_mixture_and_mass() {
        let t = separable_mixture(&[vec![vec![0.5, 0.5], vec![0.25, 0.75]]], &[1.0]).unwrap();
        assert_eq!(t.data(), &[0.125, 0.375, 0.125, 0.375]);
        let atoms = default_atoms(8, (0.0, 1.0), 3);
        let comps: Vec<Vec<Vec<f64>>> =
            atoms.iter().map(|a| vec![gaussian_atom(a).unwrap(); 3]).collect();
        let t = separable_mixture(&comps, &[0.2, 0.3, 0.1]).unwrap();
        assert!((t.sum() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn mismatched_mixture_rejected() {
        assert!(separable_mixture(&[vec![vec![1.0]], vec![vec![0.5, 0.5]]], &[1.0, 1.0]).is_err());
        assert!(separable_mixture(&[vec![vec![1.0]]], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn sample_sums_to_one_and_is_deterministic() {
        let x = DenseTensor::new(vec![2, 2], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let a = empirical_sample(&x, 1000, 5).unwrap();
        assert!((a.sum() - 1.0).abs() < 1e-12);
        assert_eq!(a, empirical_sample(&x, 1000, 5).unwrap());
        assert!(empirical_sample(&x, 0, 5).is_err());
    }

    #[test]
    fn zero_shift_gives_identical_slices() {
        let atoms = default_atoms(10, (0.0, 1.0), 2);
        let pairs: Vec<_> = atoms.iter().map(|a| (*a, *a)).collect();
        let t = shifted_slice_dataset(&pairs, 4, 0.0, 1).unwrap();
        assert_eq!(t.shape(), &[4, 10, 10]);
        for i in 0..4 {
            assert_eq!(t.slice(0, i).unwrap(), t.slice(0, 0).unwrap());
            assert!((t.slice(0, i).unwrap().sum() - 1.0).abs() < 1e-12);
        }
    }
}
