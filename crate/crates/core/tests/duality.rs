//! Duality properties of the conditional log-MGF: conjugacy inequalities,
//! inverse round trips, monotonicity, and derivative identities.

use proptest::prelude::*;
use remlab_core::field::{sample_field, FieldSample, FieldSpec, SpinBias};
use remlab_core::legendre::{coupled_solve, invert_rate, solve_tilt};
use remlab_core::mgf::mgf_n;

fn instance(n: usize, m: f64, seed: u64) -> FieldSample {
    let bias = SpinBias::new(m, 0.1).unwrap();
    sample_field(&FieldSpec::Uniform { lo: 0.5, hi: 1.5 }, bias, n, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Young's inequality `t a <= M^*(a) + M(t)` for every tilt and level,
    /// with equality exactly at the dual tilt.
    #[test]
    fn fenchel_young_inequality(
        tilt in 0.0f64..5.0,
        frac in 0.01f64..0.99,
        seed in 0u64..32,
    ) {
        let h = instance(12, 0.3, seed);
        let a = frac * h.sigma();
        let dual = solve_tilt(&h, a).unwrap();
        let lhs = tilt * a;
        let rhs = dual.rate + mgf_n(&h, tilt).value;
        prop_assert!(lhs <= rhs + 1e-9, "Young violated: {lhs} > {rhs}");
        // Equality at the dual tilt.
        let at_dual = dual.tilt * a - (dual.rate + mgf_n(&h, dual.tilt).value);
        prop_assert!(at_dual.abs() < 1e-9);
    }

    /// Round trips: the conjugate value of the level returned by the rate
    /// inverse reproduces the requested rate.
    #[test]
    fn rate_inverse_round_trip(
        frac in 0.01f64..0.99,
        seed in 0u64..32,
    ) {
        let h = instance(10, -0.5, seed);
        let c = frac * h.gamma();
        let dual = invert_rate(&h, c).unwrap();
        prop_assert!((dual.rate - c).abs() < 1e-10 * c.max(1.0));
        // And the tilt solve at the returned level reproduces the tilt.
        let again = solve_tilt(&h, dual.a).unwrap();
        prop_assert!((again.tilt - dual.tilt).abs() < 1e-8 * dual.tilt.max(1.0));
    }
}

#[test]
fn tilt_rate_and_level_are_strictly_increasing() {
    let h = instance(14, 0.3, 5);
    let mut prev_tilt = 0.0;
    let mut prev_rate = 0.0;
    for i in 1..40 {
        let a = i as f64 / 40.0 * h.sigma();
        let dual = solve_tilt(&h, a).unwrap();
        assert!(dual.tilt > prev_tilt, "tilt not increasing at a = {a}");
        assert!(dual.rate > prev_rate, "rate not increasing at a = {a}");
        prev_tilt = dual.tilt;
        prev_rate = dual.rate;
    }
    let mut prev_a = 0.0;
    for i in 1..40 {
        let c = i as f64 / 40.0 * h.gamma();
        let dual = invert_rate(&h, c).unwrap();
        assert!(dual.a > prev_a, "level not increasing at c = {c}");
        prev_a = dual.a;
    }
}

/// The conjugate's slope in the level is the tilt, and its second derivative
/// is the reciprocal curvature of the log-MGF at the tilt.
#[test]
fn conjugate_derivative_identities() {
    let h = instance(12, 0.3, 9);
    let rate_at = |a: f64| solve_tilt(&h, a).unwrap().rate;
    for frac in [0.2, 0.4, 0.6, 0.8] {
        let a = frac * h.sigma();
        let step = 1e-5 * h.sigma();
        let dual = solve_tilt(&h, a).unwrap();
        let d1 = (rate_at(a + step) - rate_at(a - step)) / (2.0 * step);
        let rel = (d1 - dual.tilt).abs() / dual.tilt.max(1e-12);
        assert!(rel < 1e-5, "slope: {d1} vs tilt {}", dual.tilt);

        let d2 = (rate_at(a + step) - 2.0 * dual.rate + rate_at(a - step)) / (step * step);
        let expected = 1.0 / dual.curvature;
        let rel2 = (d2 - expected).abs() / expected;
        assert!(rel2 < 1e-4, "curvature: {d2} vs {expected}");
    }
}

/// The duality suite of the verification harness, at reduced size: every
/// contract on mixed-sign gaussian instances as well.
#[test]
fn duality_contracts_on_gaussian_instances() {
    for (k, &m) in [-0.5, 0.0, 0.3, 0.6].iter().enumerate() {
        let bias = SpinBias::new(m, 0.1).unwrap();
        let h = sample_field(
            &FieldSpec::Gaussian {
                mean: 0.0,
                stddev: 1.0,
            },
            bias,
            16,
            100 + k as u64,
        )
        .unwrap();
        let a = 0.4 * h.sigma();
        let dual = solve_tilt(&h, a).unwrap();
        assert!((mgf_n(&h, dual.tilt).d1 - a).abs() < 1e-11 * a.max(1.0));
        let c = 0.35 * h.gamma();
        let inv = invert_rate(&h, c).unwrap();
        assert!((inv.rate - c).abs() < 1e-10 * c.max(1.0));
        let sol = coupled_solve(&h, 0.3 * h.gamma(), 0.25).unwrap();
        for r in sol.residuals {
            assert!(r.abs() < 1e-9);
        }
        assert!(sol.a_tilde >= sol.bracket.a_minus && sol.a_tilde <= sol.bracket.a_plus);
    }
}
