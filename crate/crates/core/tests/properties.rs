use proptest::prelude::*;

use rkbayes::equal_tailed_interval;
use rkbayes::model::{make_linear_null, make_van_der_pol, ThetaBox};
use rkbayes::numerics::{minimize_box, OptimOptions};
use rkbayes::{solve, Error};
use rkbayes::spline::SplineBasis;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn basis_is_a_partition_of_unity(m in 2usize..8, kn in 1usize..10, t in 0.0f64..=1.0) {
        let basis = SplineBasis::new(m, kn).unwrap();
        let v = basis.eval(t, 0).unwrap();
        prop_assert_eq!(v.len(), kn + m - 1);
        prop_assert!(v.iter().all(|b| *b >= -1e-15));
        prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // derivatives of a partition of unity sum to zero
        if m >= 3 {
            let d: f64 = basis.eval(t, 1).unwrap().iter().sum();
            prop_assert!(d.abs() < 1e-9 * (kn as f64).powi(2).max(1.0));
        }
    }

    #[test]
    fn null_model_is_exact(c0 in -5.0f64..5.0, c1 in -5.0f64..5.0, c2 in -5.0f64..5.0, r_n in 2usize..200) {
        let sys = make_linear_null(3, vec![c0, c1, c2]).unwrap();
        let sol = solve(&sys, &[1.0], r_n).unwrap();
        for (k, &t) in sol.grid_points().iter().enumerate() {
            let exact = c0 + c1 * t + c2 * t * t / 2.0;
            prop_assert!((sol.value(k) - exact).abs() < 1e-12 * (1.0 + exact.abs()));
        }
    }

    #[test]
    fn solutions_are_deterministic_and_start_at_init(theta in 0.1f64..10.0, r_n in 2usize..300) {
        let sys = make_van_der_pol();
        // stiff theta on a coarse grid may legitimately diverge
        match (solve(&sys, &[theta], r_n), solve(&sys, &[theta], r_n)) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.state(0), &[2.0, 0.0][..]);
                prop_assert_eq!(&a, &b);
            }
            (Err(Error::Diverged { .. }), Err(Error::Diverged { .. })) => {}
            (a, b) => prop_assert!(false, "inconsistent results: {:?} vs {:?}", a.err(), b.err()),
        }
    }

    #[test]
    fn intervals_are_ordered_and_inside_the_range(
        draws in prop::collection::vec(-1e3f64..1e3, 2..300),
        level in 0.01f64..0.99,
    ) {
        let (lo, hi) = equal_tailed_interval(&draws, level).unwrap();
        let min = draws.iter().copied().fold(f64::INFINITY, f64::min);
        let max = draws.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(min <= lo && lo <= hi && hi <= max);
        let mut shuffled = draws.clone();
        shuffled.reverse();
        prop_assert_eq!(equal_tailed_interval(&shuffled, level).unwrap(), (lo, hi));
    }

    #[test]
    fn optimizer_stays_in_box_and_finds_parabola_vertex(c in -3.0f64..3.0, lo in -2.0f64..0.0, width in 0.5f64..4.0) {
        let bounds = ThetaBox::new(vec![lo], vec![lo + width]).unwrap();
        let min = minimize_box(|x| (x[0] - c).powi(2), &bounds, &OptimOptions::default()).unwrap();
        prop_assert!(bounds.contains(&min.theta));
        let want = c.clamp(lo, lo + width);
        prop_assert!((min.theta[0] - want).abs() < 1e-6);
    }
}
