use fuzzy_fopid::fracops::{bode_point, discretize, DiscreteOperator, OustaloupBand, OustaloupFilter};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn band() -> OustaloupBand {
    OustaloupBand::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn inner_band_follows_ideal_operator(gamma in -0.75f64..=0.75, log_w in -1.0f64..1.0) {
        let f = band().synthesize(gamma).unwrap();
        let w = 10f64.powf(log_w);
        let (mag, phase) = bode_point(f.frequency_response(w).unwrap());
        prop_assert!((mag - 20.0 * gamma * log_w).abs() <= 2.0, "mag {mag}");
        prop_assert!((phase - 90.0 * gamma).abs() <= 5.0, "phase {phase}");
    }

    #[test]
    fn opposite_orders_swap_zeros_and_poles(gamma in -0.99f64..0.99, n in 1usize..5) {
        let a = OustaloupFilter::synthesize(gamma, 0.01, 100.0, n).unwrap();
        let b = OustaloupFilter::synthesize(-gamma, 0.01, 100.0, n).unwrap();
        for (z, p) in a.zeros.iter().zip(&b.poles) {
            prop_assert!((z - p).abs() <= 1e-12 * z.abs());
        }
        for (p, z) in a.poles.iter().zip(&b.zeros) {
            prop_assert!((z - p).abs() <= 1e-12 * z.abs());
        }
        prop_assert!((a.gain * b.gain - 1.0).abs() < 1e-12);
    }

    #[test]
    fn corner_frequencies_inside_band(gamma in -0.99f64..0.99) {
        let f = band().synthesize(gamma).unwrap();
        for &w in f.zeros.iter().chain(&f.poles) {
            prop_assert!(w > 0.01 && w < 100.0);
        }
    }

    #[test]
    fn discretization_is_stable(gamma in -0.99f64..0.99, log_h in -4.0f64..-1.0) {
        let f = band().synthesize(gamma).unwrap();
        let d = discretize(&f, 10f64.powf(log_h)).unwrap();
        let rows = d.state_matrix();
        let n = rows.len();
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let radius = m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(radius < 1.0);
        prop_assert!((radius - d.spectral_radius()).abs() < 1e-9);
    }

    #[test]
    fn operator_is_linear(
        order in -1.99f64..1.99,
        xs in prop::collection::vec(-1.0f64..1.0, 40),
        ys in prop::collection::vec(-1.0f64..1.0, 40),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let h = 0.01;
        let mut ox = DiscreteOperator::with_order(order, &band(), h).unwrap();
        let mut oy = ox.clone();
        let mut oz = ox.clone();
        for (x, y) in xs.iter().zip(&ys) {
            let (u, v) = (ox.step(*x), oy.step(*y));
            let w = oz.step(a * x + b * y);
            let expect = a * u + b * v;
            prop_assert!((w - expect).abs() <= 1e-8 * (1.0 + expect.abs()), "{w} vs {expect}");
        }
    }

    #[test]
    fn operator_is_time_invariant_after_reset(order in -1.99f64..1.99, xs in prop::collection::vec(-1.0f64..1.0, 30)) {
        let mut op = DiscreteOperator::with_order(order, &band(), 0.01).unwrap();
        let first: Vec<f64> = xs.iter().map(|&x| op.step(x)).collect();
        op.reset();
        let second: Vec<f64> = xs.iter().map(|&x| op.step(x)).collect();
        prop_assert_eq!(first, second);
    }
}
