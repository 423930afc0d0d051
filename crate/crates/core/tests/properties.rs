use proptest::prelude::*;

use unishift::dynamics::{make_periodic_point, period_defect, Pick};
use unishift::eigenfields::{residual, EigenField};
use unishift::spectrum::{build_sequence, sample_k_many, verify_constraints};
use unishift::transference::{check_intertwine, BanachTarget};
use unishift::{Complex64, Error, Grid, OperatorSpec, SequenceMode, WeightFamily};

fn weights(depth: usize, base: f64, spread: f64) -> WeightFamily {
    let g = Grid::new(depth + 2, 1 << (depth + 1)).unwrap();
    WeightFamily::from_fn(g, |i, n| base * (1.0 + spread * (((i * 7 + n * 3) % 5) as f64 / 5.0))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constructions_satisfy_every_constraint(depth in 2usize..6, base in 0.3f64..4.0, spread in 0.0f64..1.0, seed in 0u64..1000) {
        let w = weights(depth, base, spread);
        for mode in [SequenceMode::Generic, SequenceMode::RootsOfUnity] {
            // tiny weights shrink the admissible steps below f64 resolution
            let seq = match build_sequence(&w, depth, mode, seed) {
                Ok(s) => s,
                Err(Error::NumericRange(_)) if base < 1.0 => continue,
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            };
            let r = verify_constraints(&seq, &w);
            prop_assert!(r.all_passed(), "{:?}", r.failures().collect::<Vec<_>>());
            prop_assert!(r.find("step_inequality").all(|c| c.margin >= 2.0));
        }
    }

    #[test]
    fn residual_is_the_dropped_term(depth in 3usize..6, base in 1.0f64..3.0, seed in 0u64..1000) {
        let w = weights(depth, base, 0.5);
        let seq = build_sequence(&w, depth, SequenceMode::Generic, seed).unwrap();
        let levels = 1 << depth;
        let op = OperatorSpec::new(Grid::new(2, levels).unwrap(), &seq, &w).unwrap();
        for lam in sample_k_many(&seq, depth, 5, seed).unwrap() {
            for i in 0..2 {
                let f = EigenField::for_operator(&op, i).unwrap();
                let closed = f.residual_closed_form(lam);
                let measured = residual(&op, &f, lam).unwrap();
                prop_assert!((measured - closed).abs() <= 1e-12 * closed);
            }
        }
        for level in 0..levels - 1 {
            let f = EigenField::for_operator(&op, 1).unwrap();
            prop_assert_eq!(residual(&op, &f, seq.mu[level]).unwrap(), 0.0);
        }
    }

    #[test]
    fn roots_of_unity_eigenvectors_are_periodic(level in 0usize..6, seed in 0u64..200, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let w = weights(3, 3.0, 0.0);
        let seq = build_sequence(&w, 3, SequenceMode::RootsOfUnity, seed).unwrap();
        let op = OperatorSpec::new(Grid::new(1, 8).unwrap(), &seq, &w).unwrap();
        let (x, m) = make_periodic_point(&op, &seq, &[Pick { mode: 0, level, coefficient: Complex64::new(re, im) }]).unwrap();
        prop_assert_eq!(m, seq.order(level).unwrap());
        prop_assume!(m <= 4096);
        prop_assert!(period_defect(&op, &x, m).unwrap() <= 1e-9);
    }

    #[test]
    fn intertwining_for_any_positive_scales(p in 1.0f64..4.0, a in 0.1f64..2.0, seed in 0u64..1000) {
        let w = weights(3, 1.0, 0.5);
        let seq = build_sequence(&w, 3, SequenceMode::Generic, seed).unwrap();
        let op = OperatorSpec::new(Grid::new(3, 8).unwrap(), &seq, &w).unwrap();
        let t = BanachTarget::from_fn(p, op.grid(), |i, n| a / (1.0 + (i + 2 * n) as f64)).unwrap();
        let r = check_intertwine(&t, &op, 10, seed).unwrap();
        prop_assert!(r.random_max_relative < 1e-10);
    }
}
