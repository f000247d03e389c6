//! Log-moment-generating functions.
//!
//! Single-spin level: for bias `m`,
//!
//! ```text
//! g(x) = log( (1+m)/2 e^{x(1-m)} + (1-m)/2 e^{-x(1+m)} ),
//! ```
//!
//! evaluated through a factored form that never exponentiates a positive
//! argument, so `|x|` up to and beyond 700 is safe. Conditional level:
//! `M_n(h, t) = sum_i g(t h_i)` with derivatives `sum_i h_i g'(t h_i)` and
//! `sum_i h_i^2 g''(t h_i)`. Annealed level: `G(t) = E[g(t h_1)]` by
//! quadrature against the field law.

use crate::error::{Error, Result};
use crate::field::{FieldSample, FieldSpec, SpinBias};
use crate::rng::StreamKey;

/// Value and first two derivatives of the single-spin log-MGF.
#[derive(Debug, Clone, Copy)]
pub struct GEval {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Value and first two derivatives of the conditional log-MGF `M_n(h, .)`.
#[derive(Debug, Clone, Copy)]
pub struct MgfEval {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Value and first two derivatives of the annealed log-MGF `G`, plus the
/// auxiliary expectation `E[h g'(h lambda_star)]` when requested.
#[derive(Debug, Clone, Copy)]
pub struct LimitMgfEval {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub varsigma_star: Option<f64>,
}

/// Evaluate `g` and its first two derivatives at tilt `x`.
///
/// Identities used: with `p = (1+m)/2`, `q = (1-m)/2` and `u = e^{-2|x|}`,
///
/// ```text
/// g'(x) + m = (p - q u) / (p + q u)           (x >= 0)
/// g''(x)    = (1 - m^2) u / (p + q u)^2       (x >= 0)
/// ```
///
/// and mirrored for `x < 0`. The second form makes the strict positivity of
/// `g''` explicit instead of computing `1 - (g' + m)^2` with cancellation.
pub fn g_eval(x: f64, bias: SpinBias) -> GEval {
    let m = bias.m();
    if x == 0.0 {
        return GEval {
            value: 0.0,
            d1: 0.0,
            d2: 1.0 - m * m,
        };
    }
    let p = 0.5 * (1.0 + m);
    let q = 0.5 * (1.0 - m);
    let (value, mean_spin, d2) = if x >= 0.0 {
        let u = (-2.0 * x).exp();
        let den = p + q * u;
        (
            x * (1.0 - m) + den.ln(),
            (p - q * u) / den,
            (1.0 - m * m) * u / (den * den),
        )
    } else {
        let u = (2.0 * x).exp();
        let den = p * u + q;
        (
            -x * (1.0 + m) + den.ln(),
            (p * u - q) / den,
            (1.0 - m * m) * u / (den * den),
        )
    };
    GEval {
        value: value.max(0.0),
        d1: mean_spin - m,
        d2,
    }
}

/// Evaluate the conditional log-MGF `M_n(h, lambda)` with derivatives.
pub fn mgf_n(h: &FieldSample, lambda: f64) -> MgfEval {
    let bias = h.bias();
    let mut value = 0.0;
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for &hi in h.values() {
        let g = g_eval(lambda * hi, bias);
        value += g.value;
        d1 += hi * g.d1;
        d2 += hi * hi * g.d2;
    }
    MgfEval { value, d1, d2 }
}

/// Absolute tolerance used for the annealed quadratures.
pub const LIMIT_MGF_TOL: f64 = 1e-9;

/// Evaluate the annealed log-MGF `G(lambda) = E[g(lambda h)]` with
/// derivatives by quadrature against the field law, to absolute tolerance
/// [`LIMIT_MGF_TOL`]. Accepts the test-fixture variants without validation.
pub fn limit_mgf(
    spec: &FieldSpec,
    bias: SpinBias,
    lambda: f64,
    lambda_star: Option<f64>,
) -> Result<LimitMgfEval> {
    if !lambda.is_finite() {
        return Err(Error::out_of_range(
            "lambda",
            lambda,
            f64::NEG_INFINITY,
            f64::INFINITY,
        ));
    }
    let value = spec.expectation(|h| g_eval(lambda * h, bias).value, LIMIT_MGF_TOL)?;
    let d1 = spec.expectation(|h| h * g_eval(lambda * h, bias).d1, LIMIT_MGF_TOL)?;
    let d2 = spec.expectation(|h| h * h * g_eval(lambda * h, bias).d2, LIMIT_MGF_TOL)?;
    let varsigma_star = match lambda_star {
        Some(ls) => Some(spec.expectation(|h| h * g_eval(ls * h, bias).d1, LIMIT_MGF_TOL)?),
        None => None,
    };
    Ok(LimitMgfEval {
        value,
        d1,
        d2,
        varsigma_star,
    })
}

/// Monte Carlo fallback for [`limit_mgf`], for laws whose quadrature stalls.
/// Returns the estimate together with the standard error of the `value`
/// component. Deterministic given the seed.
pub fn limit_mgf_mc(
    spec: &FieldSpec,
    bias: SpinBias,
    lambda: f64,
    lambda_star: Option<f64>,
    draws: usize,
    seed: u64,
) -> Result<(LimitMgfEval, f64)> {
    if draws == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let sample = crate::field::sample_field(spec, bias, draws, seed)?;
    let mut sums = [0.0f64; 4];
    let mut value_sq = 0.0;
    for &h in sample.values() {
        let g = g_eval(lambda * h, bias);
        sums[0] += g.value;
        sums[1] += h * g.d1;
        sums[2] += h * h * g.d2;
        value_sq += g.value * g.value;
        if let Some(ls) = lambda_star {
            sums[3] += h * g_eval(ls * h, bias).d1;
        }
    }
    let n = draws as f64;
    let mean = sums[0] / n;
    let var = (value_sq / n - mean * mean).max(0.0);
    Ok((
        LimitMgfEval {
            value: mean,
            d1: sums[1] / n,
            d2: sums[2] / n,
            varsigma_star: lambda_star.map(|_| sums[3] / n),
        },
        (var / n).sqrt(),
    ))
}

/// Draw a function of `lambda` over a uniform grid; used by the CLI.
pub fn limit_mgf_grid(
    spec: &FieldSpec,
    bias: SpinBias,
    lo: f64,
    hi: f64,
    steps: usize,
) -> Result<Vec<(f64, LimitMgfEval)>> {
    if steps < 2 || hi <= lo {
        return Err(Error::Incompatible {
            reason: "lambda grid needs at least 2 steps and hi > lo".into(),
        });
    }
    let mut out = Vec::with_capacity(steps);
    for i in 0..steps {
        let lambda = lo + (hi - lo) * i as f64 / (steps - 1) as f64;
        out.push((lambda, limit_mgf(spec, bias, lambda, None)?));
    }
    Ok(out)
}

/// Deterministic probe stream over `(lambda, m)` pairs, shared by the bound
/// suites in tests and the verification harness.
pub fn random_tilt_bias_pairs(count: usize, seed: u64) -> Vec<(f64, SpinBias)> {
    let mut stream = StreamKey::new(seed, "tilt-bias-probes").stream();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let lambda = -30.0 + 60.0 * stream.next_uniform();
        let eps = 0.05 + 0.2 * stream.next_uniform();
        let span = 1.0 - 2.0 * eps;
        let m = span * (2.0 * stream.next_uniform() - 1.0);
        out.push((lambda, SpinBias::new(m, eps).expect("generated in range")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::sample_field;
    use approx::assert_relative_eq;

    fn bias(m: f64) -> SpinBias {
        SpinBias::new(m, 0.1).unwrap()
    }

    /// Direct, unstabilized evaluation; the oracle for moderate tilts.
    fn g_naive(x: f64, m: f64) -> f64 {
        (0.5 * (1.0 + m) * (x * (1.0 - m)).exp() + 0.5 * (1.0 - m) * (-x * (1.0 + m)).exp()).ln()
    }

    #[test]
    fn g_at_zero() {
        let g = g_eval(0.0, bias(0.4));
        assert_eq!(g.value, 0.0);
        assert_eq!(g.d1, 0.0);
        assert_relative_eq!(g.d2, 0.84, epsilon = 1e-15);
    }

    #[test]
    fn g_unbiased_is_log_cosh() {
        for x in [-3.0, -0.7, 0.0, 0.2, 1.9, 8.0] {
            let g = g_eval(x, bias(0.0));
            assert_relative_eq!(g.value, x.cosh().ln(), epsilon = 1e-13);
            assert_relative_eq!(g.d1, x.tanh(), epsilon = 1e-13);
            assert_relative_eq!(g.d2, 1.0 / (x.cosh() * x.cosh()), epsilon = 1e-12);
        }
    }

    #[test]
    fn g_matches_direct_substitution() {
        // Frozen from the direct formula: log(0.75 e^{0.5} + 0.25 e^{-1.5}).
        let expected = 0.256441755647254;
        let b = SpinBias::new(0.5, 0.1).unwrap();
        assert_relative_eq!(g_eval(1.0, b).value, expected, epsilon = 1e-12);
        assert_relative_eq!(g_eval(1.0, b).value, g_naive(1.0, 0.5), epsilon = 1e-13);
    }

    #[test]
    fn g_stable_form_agrees_with_naive_at_moderate_tilt() {
        for (lambda, m) in random_tilt_bias_pairs(2000, 41) {
            let x = lambda / 50.0 * 30.0; // keep the naive form in range
            let g = g_eval(x, m);
            assert_relative_eq!(g.value, g_naive(x, m.m()), max_relative = 1e-11);
        }
    }

    #[test]
    fn g_survives_extreme_tilts() {
        for &x in &[-750.0, -700.0, 700.0, 750.0] {
            let g = g_eval(x, bias(0.3));
            assert!(g.value.is_finite());
            assert!(g.value >= 0.0 && g.value <= 2.0 * x.abs());
            assert!(g.d1.is_finite() && g.d1.abs() <= 2.0);
            assert!(g.d2 >= 0.0 && g.d2.is_finite());
        }
    }

    #[test]
    fn g_derivatives_match_finite_differences() {
        // Second differences lose ~1e-16 * |g| / step^2 to cancellation, so
        // keep the probe tilts moderate.
        let step = 1e-5;
        for (x, m) in random_tilt_bias_pairs(500, 17) {
            let x = x / 12.0;
            let gp = g_eval(x + step, m).value;
            let gm = g_eval(x - step, m).value;
            let g = g_eval(x, m);
            assert_relative_eq!(
                (gp - gm) / (2.0 * step),
                g.d1,
                max_relative = 1e-5,
                epsilon = 1e-8
            );
            assert_relative_eq!(
                (gp - 2.0 * g.value + gm) / (step * step),
                g.d2,
                max_relative = 1e-4,
                epsilon = 1e-5
            );
        }
    }

    #[test]
    fn mgf_identical_components_closed_form() {
        let b = bias(0.0);
        let h = FieldSample::new(vec![1.0, 1.0, 1.0], b);
        for lambda in [-2.0, -0.3, 0.1, 1.7] {
            let e = mgf_n(&h, lambda);
            let lc: f64 = lambda;
            assert_relative_eq!(e.value, 3.0 * lc.cosh().ln(), epsilon = 1e-12);
            assert_relative_eq!(e.d1, 3.0 * lc.tanh(), epsilon = 1e-12);
            assert_relative_eq!(e.d2, 3.0 / (lc.cosh() * lc.cosh()), epsilon = 1e-12);
        }
    }

    #[test]
    fn mgf_at_zero_has_variance_slope() {
        let spec = FieldSpec::Gaussian {
            mean: 0.0,
            stddev: 1.0,
        };
        let h = sample_field(&spec, bias(0.3), 40, 5).unwrap();
        let e = mgf_n(&h, 0.0);
        assert_eq!(e.value, 0.0);
        assert_eq!(e.d1, 0.0);
        let sum_sq: f64 = h.values().iter().map(|v| v * v).sum();
        assert_relative_eq!(e.d2, sum_sq * (1.0 - 0.09), epsilon = 1e-12);
    }

    #[test]
    fn mgf_derivative_matches_finite_difference_example() {
        let spec = FieldSpec::Uniform { lo: 0.5, hi: 1.5 };
        let h = sample_field(&spec, bias(0.3), 8, 3).unwrap();
        let step = 1e-5;
        let d1_fd = (mgf_n(&h, 0.7 + step).value - mgf_n(&h, 0.7 - step).value) / (2.0 * step);
        assert!((d1_fd - mgf_n(&h, 0.7).d1).abs() < 1e-6);
    }

    #[test]
    fn limit_mgf_at_zero() {
        let spec = FieldSpec::Uniform { lo: 0.5, hi: 1.5 };
        let e = limit_mgf(&spec, bias(0.3), 0.0, None).unwrap();
        assert!(e.value.abs() < 1e-12);
        assert!(e.d1.abs() < 1e-12);
        assert!(e.d2 > 0.0);
    }

    #[test]
    fn limit_mgf_degenerate_is_log_cosh() {
        let spec = FieldSpec::Degenerate { value: 1.0 };
        for lambda in [0.3, 1.0, 2.5] {
            let e = limit_mgf(&spec, bias(0.0), lambda, None).unwrap();
            let lc: f64 = lambda;
            assert_relative_eq!(e.value, lc.cosh().ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn limit_mgf_slope_saturates_at_varsigma() {
        let spec = FieldSpec::Uniform { lo: 0.5, hi: 1.5 };
        let e = limit_mgf(&spec, bias(0.3), 50.0, None).unwrap();
        assert!((e.d1 - 0.7).abs() < 1e-3);
    }

    #[test]
    fn limit_mgf_varsigma_star_present_when_requested() {
        let spec = FieldSpec::Uniform { lo: 0.5, hi: 1.5 };
        let e = limit_mgf(&spec, bias(0.3), 1.0, Some(2.0)).unwrap();
        let vs = e.varsigma_star.unwrap();
        assert!(vs > 0.0 && vs < 2.0 * 1.0); // 0 < varsigma* < 2 psi3
    }

    #[test]
    fn limit_mgf_mc_agrees_with_quadrature() {
        let spec = FieldSpec::Gaussian {
            mean: 0.0,
            stddev: 1.0,
        };
        let b = bias(0.3);
        let exact = limit_mgf(&spec, b, 0.8, None).unwrap();
        let (mc, se) = limit_mgf_mc(&spec, b, 0.8, None, 200_000, 9).unwrap();
        assert!((mc.value - exact.value).abs() < 5.0 * se.max(1e-6));
    }
}
