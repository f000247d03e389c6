//! Ranked Gibbs weights over retained configurations and the
//! Poisson-Dirichlet reference sampler.
//!
//! Given the thinning retention of [`crate::process`], the Gibbs weight of a
//! retained configuration at inverse temperature `beta` is
//! `w(s) = e^{beta E(s)} / sum_retained e^{beta E}`; any common shift of the
//! energies cancels in the ratio. Ranked in non-increasing order, the weight
//! sequence is compared against PD(alpha, 0) samples produced from the
//! arrival-time representation of a stable subordinator:
//! `xi_k = T_k^{-1/alpha}` for the arrival times `T_k` of a unit-rate
//! Poisson process, normalized by their sum.

use crate::enumerate::enum_reduce;
use crate::error::{Error, Result};
use crate::field::FieldSample;
use crate::process::ThinningSpec;
use crate::rng::StreamKey;
use crate::stats::{mean_stderr, MeanErr};

/// Provenance of a ranked weight sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightSource {
    Gibbs,
    PdSample,
}

/// A non-increasing weight sequence summing to one (or empty, when no
/// configuration was retained).
#[derive(Debug, Clone)]
pub struct RankedWeights {
    weights: Vec<f64>,
    pub source: WeightSource,
}

impl RankedWeights {
    /// Normalize, sort non-increasing, and wrap. Empty input stays empty.
    fn from_unnormalized(mut raw: Vec<f64>, source: WeightSource) -> Self {
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            for w in &mut raw {
                *w /= total;
            }
        }
        raw.sort_by(|a, b| b.total_cmp(a));
        RankedWeights {
            weights: raw,
            source,
        }
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Largest weight, or zero for the empty sequence.
    pub fn top(&self) -> f64 {
        self.weights.first().copied().unwrap_or(0.0)
    }

    /// `sum w_k^p`.
    pub fn power_sum(&self, p: i32) -> f64 {
        self.weights.iter().map(|w| w.powi(p)).sum()
    }
}

/// Gibbs weights of the retained configurations for one `(h, U)` draw.
///
/// Retention reuses the same rank-keyed uniforms as
/// [`crate::process::realize_process`] (purpose string `"thinning-u"`), so a
/// shared seed yields the weights of exactly the realized process. Energies
/// are max-shifted before exponentiation. An empty retained set yields the
/// empty sequence.
pub fn gibbs_weights(
    h: &FieldSample,
    spec: &ThinningSpec,
    beta: f64,
    seed: u64,
) -> Result<RankedWeights> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::out_of_range("beta", beta, 0.0, f64::INFINITY));
    }
    if spec.n != h.len() || spec.m() != h.bias().m() {
        return Err(Error::Incompatible {
            reason: "thinning spec does not match the sample".into(),
        });
    }
    let key = StreamKey::new(seed, "thinning-u");
    let scale = spec.scale;
    let energies = enum_reduce(
        h,
        Vec::new,
        |acc: &mut Vec<f64>, cfg| {
            if key.uniform_at(cfg.rank) < scale * cfg.weight {
                acc.push(cfg.energy);
            }
        },
        |mut a, mut b| {
            a.append(&mut b);
            a
        },
    )?;
    Ok(ranked_from_energies(&energies, beta))
}

/// Ranked weights `w_i ∝ e^{beta E_i}` from an explicit energy list.
/// Shift-invariant: adding a constant to all energies leaves the result
/// unchanged.
pub fn ranked_from_energies(energies: &[f64], beta: f64) -> RankedWeights {
    if energies.is_empty() {
        return RankedWeights {
            weights: Vec::new(),
            source: WeightSource::Gibbs,
        };
    }
    let max = energies.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let raw: Vec<f64> = energies.iter().map(|&e| (beta * (e - max)).exp()).collect();
    RankedWeights::from_unnormalized(raw, WeightSource::Gibbs)
}

/// Parameters of the Poisson-Dirichlet limit: `alpha = lambda / beta` for
/// the asymptotic tilt `lambda` and inverse temperature `beta > lambda`.
#[derive(Debug, Clone, Copy)]
pub struct PdParams {
    pub alpha: f64,
    pub beta: f64,
}

impl PdParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::out_of_range("alpha", alpha, 0.0, 1.0));
        }
        if beta.is_nan() || beta <= 0.0 {
            return Err(Error::out_of_range("beta", beta, 0.0, f64::INFINITY));
        }
        Ok(PdParams { alpha, beta })
    }

    /// Derive `alpha = lambda / beta`, requiring `beta > lambda > 0`.
    pub fn from_temperature(lambda: f64, beta: f64) -> Result<Self> {
        if lambda.is_nan() || lambda <= 0.0 {
            return Err(Error::out_of_range("lambda", lambda, 0.0, f64::INFINITY));
        }
        if beta.is_nan() || beta <= lambda {
            return Err(Error::out_of_range("beta", beta, lambda, f64::INFINITY));
        }
        PdParams::new(lambda / beta, beta)
    }
}

/// Minimum atom count for [`pd_sample`].
pub const PD_MIN_TRUNCATION: usize = 1_000;

/// Sample PD(alpha, 0) by truncating the subordinator representation at
/// `truncation` atoms: `xi_k = T_k^{-1/alpha}` for Poisson arrival times
/// `T_k`, normalized by their sum.
///
/// The discarded tail has expected unnormalized mass at most about
/// `alpha/(1-alpha) K^{1-1/alpha}` (see [`pd_truncation_bias_bound`]), which
/// at the required `K >= 1000` is far below the Monte Carlo resolution used
/// here.
pub fn pd_sample(params: &PdParams, truncation: usize, seed: u64) -> Result<RankedWeights> {
    if truncation < PD_MIN_TRUNCATION {
        return Err(Error::InsufficientData {
            needed: PD_MIN_TRUNCATION,
            got: truncation,
        });
    }
    let mut stream = StreamKey::new(seed, "pd-subordinator").stream();
    let inv_alpha = 1.0 / params.alpha;
    let mut arrival = 0.0f64;
    let mut raw = Vec::with_capacity(truncation);
    for _ in 0..truncation {
        arrival += stream.next_exp();
        raw.push(arrival.powf(-inv_alpha));
    }
    let mut rw = RankedWeights::from_unnormalized(raw, WeightSource::PdSample);
    rw.source = WeightSource::PdSample;
    Ok(rw)
}

/// Deterministic bound on the expected unnormalized mass beyond `truncation`
/// atoms: `sum_{k>K} E[T_k^{-1/alpha}] <~ alpha/(1-alpha) * K^{1-1/alpha}`.
pub fn pd_truncation_bias_bound(alpha: f64, truncation: usize) -> f64 {
    let k = truncation as f64;
    alpha / (1.0 - alpha) * k.powf(1.0 - 1.0 / alpha)
}

/// Monte Carlo summary of a batch of ranked weight sequences.
#[derive(Debug, Clone)]
pub struct WeightSummary {
    /// Mean and stderr of `sum w^2` over non-empty sequences.
    pub sum_sq: MeanErr,
    /// Mean and stderr of `sum w^3`.
    pub sum_cube: MeanErr,
    /// Mean and stderr of the top weight.
    pub top: MeanErr,
    /// Empirical CDF of the top weight on [`TOP_CDF_GRID`].
    pub top_cdf: Vec<(f64, f64)>,
    /// Fraction of empty sequences; empties are excluded from the moments.
    pub empty_fraction: f64,
    pub n: usize,
}

/// Fixed evaluation grid for the top-weight CDF.
pub const TOP_CDF_GRID: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// Minimum non-empty sequences for [`weight_stats`].
pub const MIN_WEIGHT_SAMPLES: usize = 100;

/// Summarize a batch of ranked weight sequences. Empty sequences are counted
/// separately rather than averaged into the moments.
pub fn weight_stats(samples: &[RankedWeights]) -> Result<WeightSummary> {
    let nonempty: Vec<&RankedWeights> = samples.iter().filter(|s| !s.is_empty()).collect();
    if nonempty.len() < MIN_WEIGHT_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_WEIGHT_SAMPLES,
            got: nonempty.len(),
        });
    }
    let sum_sq: Vec<f64> = nonempty.iter().map(|s| s.power_sum(2)).collect();
    let sum_cube: Vec<f64> = nonempty.iter().map(|s| s.power_sum(3)).collect();
    let tops: Vec<f64> = nonempty.iter().map(|s| s.top()).collect();
    let top_cdf = TOP_CDF_GRID
        .iter()
        .map(|&x| {
            let frac = tops.iter().filter(|&&t| t <= x).count() as f64 / tops.len() as f64;
            (x, frac)
        })
        .collect();
    Ok(WeightSummary {
        sum_sq: mean_stderr(&sum_sq),
        sum_cube: mean_stderr(&sum_cube),
        top: mean_stderr(&tops),
        top_cdf,
        empty_fraction: 1.0 - nonempty.len() as f64 / samples.len() as f64,
        n: samples.len(),
    })
}
