//! Small statistical helpers: sample moments and the one-sample
//! Kolmogorov-Smirnov test.

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct MeanErr {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

pub fn mean_stderr(xs: &[f64]) -> MeanErr {
    let n = xs.len();
    if n == 0 {
        return MeanErr {
            mean: f64::NAN,
            stderr: f64::NAN,
            n,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return MeanErr {
            mean,
            stderr: f64::NAN,
            n,
        };
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
    MeanErr {
        mean,
        stderr: (var / n as f64).sqrt(),
        n,
    }
}

/// Sample variance (unbiased).
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0)
}

/// One-sample Kolmogorov-Smirnov result.
#[derive(Debug, Clone, Copy)]
pub struct KsResult {
    pub stat: f64,
    pub p_value: f64,
    pub n: usize,
}

/// KS statistic of a sample against a CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs());
        d = d.max((f - i as f64 / n).abs());
    }
    d
}

/// Kolmogorov survival function `Q(t) = 2 sum_{k>=1} (-1)^{k-1} e^{-2 k^2 t^2}`.
fn kolmogorov_q(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * t * t).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test against a CDF, with the standard finite-n adjusted
/// asymptotic p-value.
pub fn ks_test<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> KsResult {
    let n = xs.len();
    let stat = ks_statistic(xs, cdf);
    let sqrt_n = (n as f64).sqrt();
    let p_value = kolmogorov_q((sqrt_n + 0.12 + 0.11 / sqrt_n) * stat);
    KsResult { stat, p_value, n }
}
