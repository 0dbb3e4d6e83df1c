mod common;

use common::{fd_gradient, rel_err, rng, tensor};
use otfactor::{entropy_conjugate, primal_recover, ConstraintSet};
use proptest::prelude::*;

const ALL: [ConstraintSet; 4] =
    [ConstraintSet::Unconstrained, ConstraintSet::FullSimplex, ConstraintSet::RowSimplex, ConstraintSet::ColumnSimplex];

fn matrix_shape() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=5, 2)
}

/// Number of normalisation groups, i.e. how much a constant shift moves the value.
fn groups(set: ConstraintSet, shape: &[usize]) -> f64 {
    match set {
        ConstraintSet::Unconstrained => f64::NAN,
        ConstraintSet::FullSimplex => 1.0,
        ConstraintSet::RowSimplex => shape[0] as f64,
        ConstraintSet::ColumnSimplex => shape[1] as f64,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_is_the_recovered_block(shape in matrix_shape(), seed in any::<u64>()) {
        let v = tensor(&mut rng(seed), &shape, -3.0, 3.0);
        for set in ALL {
            let (_, g) = entropy_conjugate(&v, set).unwrap();
            let p = primal_recover(&v, set).unwrap();
            prop_assert!(common::max_abs_diff(g.data(), p.data()) < 1e-12);
        }
    }

    #[test]
    fn conjugate_is_convex(shape in matrix_shape(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let v1 = tensor(&mut r, &shape, -3.0, 3.0);
        let v2 = tensor(&mut r, &shape, -3.0, 3.0);
        let mid = v1.zip_map(&v2, |a, b| 0.5 * (a + b)).unwrap();
        for set in ALL {
            let f = |v| entropy_conjugate(v, set).unwrap().0;
            prop_assert!(f(&mid) <= 0.5 * (f(&v1) + f(&v2)) + 1e-10);
        }
    }

    #[test]
    fn constant_shift_is_analytic(shape in matrix_shape(), c in -5.0f64..5.0, seed in any::<u64>()) {
        let v = tensor(&mut rng(seed), &shape, -3.0, 3.0);
        for set in [ConstraintSet::FullSimplex, ConstraintSet::RowSimplex, ConstraintSet::ColumnSimplex] {
            let base = entropy_conjugate(&v, set).unwrap().0;
            let shifted = entropy_conjugate(&v.map(|x| x + c), set).unwrap().0;
            prop_assert!((shifted - base - c * groups(set, &shape)).abs() < 1e-10 * (1.0 + base.abs()));
        }
    }

    #[test]
    fn recovered_blocks_are_feasible_and_positive(shape in matrix_shape(), scale in 0.1f64..60.0, seed in any::<u64>()) {
        let v = tensor(&mut rng(seed), &shape, -scale, scale);
        for set in ALL {
            let p = primal_recover(&v, set).unwrap();
            prop_assert!(set.violation(&p).unwrap() <= 1e-12);
            prop_assert!(p.data().iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn gradients_match_finite_differences(shape in matrix_shape(), seed in any::<u64>()) {
        let v = tensor(&mut rng(seed), &shape, -2.0, 2.0);
        for set in ALL {
            let (_, g) = entropy_conjugate(&v, set).unwrap();
            let fd = fd_gradient(|w| entropy_conjugate(w, set).unwrap().0, &v, 1e-6);
            prop_assert!(rel_err(&fd, &g) < 1e-5, "{:?}: {}", set, rel_err(&fd, &g));
        }
    }

    #[test]
    fn full_simplex_on_higher_order_tensors(shape in prop::collection::vec(1usize..=3, 3), seed in any::<u64>()) {
        let v = tensor(&mut rng(seed), &shape, -2.0, 2.0);
        let p = primal_recover(&v, ConstraintSet::FullSimplex).unwrap();
        prop_assert!((p.sum() - 1.0).abs() < 1e-12);
        prop_assert!(primal_recover(&v, ConstraintSet::RowSimplex).is_err());
    }
}
