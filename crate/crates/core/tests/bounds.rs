//! Inequality suite for the single-spin log-MGF and the conditional family:
//! envelope bounds, curvature floor, Lipschitz curvature, and the
//! region-restricted second-derivative sandwich.

use remlab_core::field::{sample_field, FieldSample, FieldSpec, SpinBias};
use remlab_core::mgf::{g_eval, limit_mgf, mgf_n, random_tilt_bias_pairs};
use remlab_core::rng::StreamKey;

const PROBES: usize = 10_000;

#[test]
fn g_envelope_bounds_on_probe_sweep() {
    for (lambda, bias) in random_tilt_bias_pairs(PROBES, 2024) {
        let g = g_eval(lambda, bias);
        let m = bias.m();
        assert!(g.value >= 0.0, "g < 0 at ({lambda}, {m})");
        assert!(g.value <= 2.0 * lambda.abs() + 1e-12);
        let signed = lambda.signum() * g.d1;
        assert!((-1e-12..=2.0).contains(&signed), "signed slope {signed}");
        assert!(
            g.d2 > 0.0 && g.d2 < 1.0,
            "curvature {} at ({lambda}, {m})",
            g.d2
        );
        let floor = (1.0 - m * m) * (-2.0 * lambda.abs()).exp();
        assert!(
            g.d2 >= floor * (1.0 - 1e-12),
            "curvature {} under floor {floor}",
            g.d2
        );
    }
}

#[test]
fn g_curvature_is_lipschitz() {
    let pairs = random_tilt_bias_pairs(PROBES, 77);
    for chunk in pairs.chunks(2) {
        if let [(l1, bias), (l2, _)] = chunk {
            let a = g_eval(*l1, *bias);
            let b = g_eval(*l2, *bias);
            assert!(
                (a.d2 - b.d2).abs() <= 2.0 * (l1 - l2).abs() + 1e-12,
                "Lipschitz violated at ({l1}, {l2}, {})",
                bias.m()
            );
        }
    }
}

#[test]
fn g_scaled_upper_bound_with_field() {
    let mut stream = StreamKey::new(31, "g-upper-probes").stream();
    for (lambda, bias) in random_tilt_bias_pairs(PROBES, 55) {
        let lambda = lambda.abs().max(1e-3);
        let h1 = 4.0 * (stream.next_uniform() - 0.5);
        if h1 == 0.0 {
            continue;
        }
        let m = bias.m();
        let s = h1.signum();
        let g = g_eval(lambda * h1, bias).value;
        let bound = ((1.0 + s * m) / 2.0).ln()
            + (1.0 - s * m) / (1.0 + s * m) * (-2.0 * lambda * h1.abs()).exp()
            + lambda * (h1.abs() - m * h1);
        assert!(
            g <= bound + 1e-10,
            "upper bound violated: g = {g}, bound = {bound} at ({lambda}, {h1}, {m})"
        );
    }
}

#[test]
fn conditional_mgf_shape_invariants() {
    let bias = SpinBias::new(0.3, 0.1).unwrap();
    let h = sample_field(
        &FieldSpec::Gaussian {
            mean: 0.0,
            stddev: 1.0,
        },
        bias,
        24,
        3,
    )
    .unwrap();
    let mut stream = StreamKey::new(8, "mgf-shape").stream();
    for _ in 0..2000 {
        let lambda = 20.0 * (stream.next_uniform() - 0.5);
        let e = mgf_n(&h, lambda);
        assert!(e.d2 > 0.0);
        assert!(lambda.signum() * e.d1 >= -1e-12);
        if lambda >= 0.0 {
            assert!(e.d1 < h.sigma());
        }
    }
}

#[test]
fn conditional_slope_saturates_at_sigma() {
    let bias = SpinBias::new(0.3, 0.1).unwrap();
    // Components bounded away from zero, so the slope saturates fast.
    let h = sample_field(&FieldSpec::Uniform { lo: 0.5, hi: 1.5 }, bias, 20, 11).unwrap();
    let mut prev = 0.0;
    for i in 1..=20 {
        let d1 = mgf_n(&h, i as f64 * 0.5).d1;
        assert!(d1 > prev);
        prev = d1;
    }
    let at_large = mgf_n(&h, 1e3).d1;
    assert!((at_large - h.sigma()).abs() <= 1e-6 * h.sigma());
}

#[test]
fn conditional_derivatives_match_finite_differences() {
    let bias = SpinBias::new(-0.4, 0.2).unwrap();
    let h = sample_field(&FieldSpec::Uniform { lo: 0.5, hi: 1.5 }, bias, 16, 13).unwrap();
    let step = 1e-5;
    for lambda in [-1.8, -0.6, 0.2, 0.9, 2.0] {
        let plus = mgf_n(&h, lambda + step).value;
        let minus = mgf_n(&h, lambda - step).value;
        let e = mgf_n(&h, lambda);
        let d1 = (plus - minus) / (2.0 * step);
        assert!((d1 - e.d1).abs() / e.d1.abs().max(1.0) < 1e-5);
        let d2 = (plus - 2.0 * e.value + minus) / (step * step);
        assert!((d2 - e.d2).abs() / e.d2 < 1e-4);
    }
}

/// Build a member of the technical region: components near a constant level
/// chosen so all three predicates hold.
fn region_member(n: usize, m: f64, eps: f64, seed: u64) -> FieldSample {
    let bias = SpinBias::new(m, eps).unwrap();
    let mut stream = StreamKey::new(seed, "region-member").stream();
    let values: Vec<f64> = (0..n).map(|_| 0.7 + 0.2 * stream.next_uniform()).collect();
    let h = FieldSample::new(values, bias);
    assert!(
        h.region_membership().in_region,
        "fixture failed region membership: {:?}",
        h.region_membership()
    );
    h
}

#[test]
fn curvature_sandwich_on_region_members() {
    // On region members: (4/(n^6 eps^4)) (gamma_n + M - t M')^2
    //   <= 2 pi M'' <= n^{3/2}, for t > 0.
    let n = 64;
    let eps = 0.2;
    let h = region_member(n, 0.3, eps, 17);
    let nf = n as f64;
    let mut stream = StreamKey::new(23, "sandwich-tilts").stream();
    for _ in 0..2000 {
        let tilt = 6.0 * stream.next_uniform() + 1e-6;
        let e = mgf_n(&h, tilt);
        let two_pi_m2 = 2.0 * std::f64::consts::PI * e.d2;
        assert!(two_pi_m2 <= nf.powf(1.5) + 1e-9);
        let defect = h.gamma() + e.value - tilt * e.d1;
        let lower = 4.0 / (nf.powi(6) * eps.powi(4)) * defect * defect;
        assert!(
            lower <= two_pi_m2 * (1.0 + 1e-12),
            "lower bound {lower} exceeds {two_pi_m2} at tilt {tilt}"
        );
    }
}

#[test]
fn annealed_mgf_bounds() {
    let spec = FieldSpec::Uniform { lo: 0.5, hi: 1.5 };
    let bias = SpinBias::new(0.3, 0.1).unwrap();
    let psi3 = 1.0;
    for lambda in [0.0, 0.2, 1.0, 3.0, 10.0] {
        let e = limit_mgf(&spec, bias, lambda, None).unwrap();
        assert!(e.value >= -1e-12 && e.value <= 2.0 * lambda * psi3 + 1e-9);
        assert!(e.d1 >= -1e-12 && e.d1 <= 2.0 * psi3 + 1e-9);
        assert!(e.d2 > 0.0);
    }
}

/// Strong-law diagnostic: the per-spin average of the conditional log-MGF
/// approaches the annealed value within four standard errors.
#[test]
fn conditional_average_approaches_annealed_value() {
    let spec = FieldSpec::Gaussian {
        mean: 0.0,
        stddev: 1.0,
    };
    let bias = SpinBias::new(0.3, 0.1).unwrap();
    let n = 100_000;
    let lambda = 0.8;
    let h = sample_field(&spec, bias, n, 271).unwrap();
    let avg = mgf_n(&h, lambda).value / n as f64;
    let annealed = limit_mgf(&spec, bias, lambda, None).unwrap().value;
    let values: Vec<f64> = h
        .values()
        .iter()
        .map(|&v| g_eval(lambda * v, bias).value)
        .collect();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd =
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
    let tol = 4.0 * sd / (n as f64).sqrt();
    assert!(
        (avg - annealed).abs() < tol,
        "|{avg} - {annealed}| >= {tol}"
    );
}
