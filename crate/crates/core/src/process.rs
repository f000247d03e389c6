//! Thinned energy point processes and the exponential-intensity Poisson
//! reference.
//!
//! Each of the `2^n` configurations is retained independently with
//! probability `Q(tau) = e^{n rho (log 2 - log(1+|m|))} P(tau)`; the retained
//! centered energies form a point process whose law approaches a Poisson
//! point process with intensity `e^{-t x} dx` for the asymptotic tilt `t`.
//! Retention uniforms are addressed by configuration rank through a
//! counter-based stream, so realizations are independent of enumeration
//! order and thread count.

use crate::enumerate::enum_reduce;
use crate::error::{Error, Result};
use crate::field::{FieldSample, SpinBias};
use crate::legendre::coupled_solve;
use crate::rng::StreamKey;
use crate::stats::{ks_test, mean_stderr, variance, KsResult};
use crate::tail::exact_tail;

/// Thinning parameters, precomputed for a given `(rho, m, n)`.
#[derive(Debug, Clone, Copy)]
pub struct ThinningSpec {
    pub rho: f64,
    /// Per-spin retention exponent `c = rho (log 2 - log(1+|m|))`; the total
    /// rate level is `n c`.
    pub c: f64,
    /// Uniform retention bound exponent: every retention probability is at
    /// most `e^{-n delta}` with `delta = (1-rho)(log 2 - log(1+|m|))`.
    pub delta: f64,
    /// Expected number of retained configurations, `e^{n c}`.
    pub scale: f64,
    pub n: usize,
    m: f64,
}

impl ThinningSpec {
    pub fn new(rho: f64, bias: SpinBias, n: usize) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::out_of_range("rho", rho, 0.0, 1.0));
        }
        if n == 0 {
            return Err(Error::out_of_range("n", 0.0, 1.0, f64::INFINITY));
        }
        let gap = 2f64.ln() - (1.0 + bias.m().abs()).ln();
        Ok(ThinningSpec {
            rho,
            c: rho * gap,
            delta: (1.0 - rho) * gap,
            scale: (n as f64 * rho * gap).exp(),
            n,
            m: bias.m(),
        })
    }

    #[inline]
    pub fn m(&self) -> f64 {
        self.m
    }

    /// Total rate level `n c` used for the centering solve.
    #[inline]
    pub fn level(&self) -> f64 {
        self.n as f64 * self.c
    }
}

/// Retention probability of the configuration with the given rank (bit `i`
/// set means spin `i` is `+1`), computed in log space.
pub fn thinning_prob(spec: &ThinningSpec, rank: u64) -> f64 {
    let n = spec.n;
    let m = spec.m;
    let plus = (rank & ((1u64 << n) - 1)).count_ones() as f64;
    let minus = n as f64 - plus;
    let log_p = plus * (0.5 * (1.0 + m)).ln() + minus * (0.5 * (1.0 - m)).ln();
    (n as f64 * spec.c + log_p).exp()
}

/// Observation window for centered energies.
#[derive(Debug, Clone, Copy)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Incompatible {
                reason: format!("window [{lo}, {hi}] is not a bounded interval"),
            });
        }
        Ok(Window { lo, hi })
    }

    /// Default window for intensity `lambda`: `[-2/lambda, 6/lambda]`,
    /// covering roughly `e^2` of mass on the left and leaving a negligible
    /// right tail.
    pub fn default_for(lambda: f64) -> Self {
        Window {
            lo: -2.0 / lambda,
            hi: 6.0 / lambda,
        }
    }

    /// Mass of the exponential intensity `e^{-lambda x}` over the window.
    pub fn exp_mass(&self, lambda: f64) -> f64 {
        ((-lambda * self.lo).exp() - (-lambda * self.hi).exp()) / lambda
    }
}

/// One realization of the thinned, centered point process.
#[derive(Debug, Clone)]
pub struct RealizedProcess {
    /// Centered energies inside the window, sorted ascending.
    pub points: Vec<f64>,
    /// Centering level subtracted from the energies.
    pub centering: f64,
    /// Number of retained configurations, window-independent.
    pub retained_total: u64,
}

/// Realize the thinned point process for one disorder sample.
///
/// The centering is the coupled-system solution at rate level `n c`; the
/// per-configuration retention uniform is `U(rank) = key.uniform_at(rank)`
/// for the key derived from `(seed, "thinning-u")`.
pub fn realize_process(
    h: &FieldSample,
    spec: &ThinningSpec,
    window: Window,
    seed: u64,
) -> Result<RealizedProcess> {
    let centering = coupled_solve(h, spec.level(), 0.0)?.a_tilde;
    realize_with_centering(h, spec, window, seed, centering)
}

/// [`realize_process`] with an explicitly supplied centering level.
///
/// Useful for retention-count diagnostics in regimes where the coupled system
/// has no admissible root (very small `rho` drives the rate level below the
/// curvature correction, where no positive-tilt centering exists); the
/// retained count does not depend on the centering at all.
pub fn realize_with_centering(
    h: &FieldSample,
    spec: &ThinningSpec,
    window: Window,
    seed: u64,
    centering: f64,
) -> Result<RealizedProcess> {
    check_spec(h, spec)?;
    let key = StreamKey::new(seed, "thinning-u");
    let scale = spec.scale;
    let (mut points, retained_total) = enum_reduce(
        h,
        || (Vec::new(), 0u64),
        |acc, cfg| {
            let q = scale * cfg.weight;
            if key.uniform_at(cfg.rank) < q {
                acc.1 += 1;
                let x = cfg.energy - centering;
                if x >= window.lo && x <= window.hi {
                    acc.0.push(x);
                }
            }
        },
        |mut a, mut b| {
            a.0.append(&mut b.0);
            a.1 += b.1;
            (a.0, a.1)
        },
    )?;
    points.sort_by(|a, b| a.total_cmp(b));
    Ok(RealizedProcess {
        points,
        centering,
        retained_total,
    })
}

fn check_spec(h: &FieldSample, spec: &ThinningSpec) -> Result<()> {
    if spec.n != h.len() || spec.m != h.bias().m() {
        return Err(Error::Incompatible {
            reason: format!(
                "thinning spec built for (n = {}, m = {}) but sample has (n = {}, m = {})",
                spec.n,
                spec.m,
                h.len(),
                h.bias().m()
            ),
        });
    }
    Ok(())
}

/// Scaled conditional tail `e^{C} P(E - A >= x | h)` with the centering `A`
/// solved from the coupled system at rate level `C`. Exact enumeration;
/// requires `n <= 26`.
pub fn kernel_eval(h: &FieldSample, level: f64, x: f64) -> Result<f64> {
    let centering = coupled_solve(h, level, 0.0)?.a_tilde;
    let tail = exact_tail(h, centering + x)?;
    Ok(level.exp() * tail.value)
}

/// Sample a Poisson point process with intensity `e^{-lambda x} dx` on the
/// window: the count is Poisson with the window mass, the points i.i.d. by
/// inverse CDF. Deterministic given the seed.
pub fn ppp_reference(lambda: f64, window: Window, seed: u64) -> Result<RealizedProcess> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::out_of_range("lambda", lambda, 0.0, f64::INFINITY));
    }
    let mass = window.exp_mass(lambda);
    let mut stream = StreamKey::new(seed, "ppp-reference").stream();
    let count = stream.next_poisson(mass);
    let e_lo = (-lambda * window.lo).exp();
    let e_hi = (-lambda * window.hi).exp();
    let mut points = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let u = stream.next_uniform_open();
        // Inverse of the normalized intensity CDF on the window.
        let x = -(e_lo - u * (e_lo - e_hi)).ln() / lambda;
        points.push(x);
    }
    points.sort_by(|a, b| a.total_cmp(b));
    Ok(RealizedProcess {
        points,
        centering: 0.0,
        retained_total: count,
    })
}

/// Per-bin comparison of realized counts against the exponential intensity.
#[derive(Debug, Clone, Copy)]
pub struct BinStat {
    pub lo: f64,
    pub hi: f64,
    /// Mean count per realization.
    pub mean_count: f64,
    /// Standard error of the mean count.
    pub stderr: f64,
    /// Predicted mean `int_bin e^{-lambda x} dx`.
    pub predicted: f64,
    /// Variance-to-mean ratio of the counts; `None` when the mean vanishes.
    pub dispersion: Option<f64>,
}

/// Laplace functional comparison at one `theta`.
#[derive(Debug, Clone, Copy)]
pub struct LaplacePoint {
    pub theta: f64,
    /// Empirical mean of `exp(-theta N(window))`.
    pub empirical: f64,
    pub stderr: f64,
    /// `exp(-(1 - e^{-theta}) mass)`.
    pub predicted: f64,
}

/// Goodness-of-fit summary of a batch of realizations against the
/// exponential-intensity Poisson reference.
#[derive(Debug, Clone)]
pub struct ProcessStats {
    pub bins: Vec<BinStat>,
    /// KS test of the CDF-transformed pooled points against uniform;
    /// `None` when fewer than 30 points pooled.
    pub ks: Option<KsResult>,
    pub laplace: Vec<LaplacePoint>,
    pub replicates: usize,
    /// Total pooled point count.
    pub pooled: usize,
}

/// Minimum realizations for [`compare_stats`].
pub const MIN_REALIZATIONS: usize = 100;
/// Minimum pooled points for the KS test to be reported.
pub const MIN_KS_POINTS: usize = 30;

/// Compare realized processes against the Poisson reference with intensity
/// `e^{-lambda x}` on the window: per-bin mean counts and dispersion, a KS
/// test of the pooled CDF-transformed points, and the Laplace functional on
/// indicator test functions `theta * 1_window`.
pub fn compare_stats(
    realizations: &[RealizedProcess],
    lambda: f64,
    window: Window,
    bins: usize,
    theta_grid: &[f64],
) -> Result<ProcessStats> {
    if realizations.len() < MIN_REALIZATIONS {
        return Err(Error::InsufficientData {
            needed: MIN_REALIZATIONS,
            got: realizations.len(),
        });
    }
    if bins == 0 {
        return Err(Error::Incompatible {
            reason: "bins must be positive".into(),
        });
    }
    let r = realizations.len();
    let width = (window.hi - window.lo) / bins as f64;

    // Per-replicate bin counts.
    let mut counts = vec![vec![0.0f64; r]; bins];
    let mut pooled: Vec<f64> = Vec::new();
    for (j, real) in realizations.iter().enumerate() {
        for &x in &real.points {
            if x < window.lo || x > window.hi {
                continue;
            }
            let b = (((x - window.lo) / width) as usize).min(bins - 1);
            counts[b][j] += 1.0;
            pooled.push(x);
        }
    }

    let bins_out: Vec<BinStat> = (0..bins)
        .map(|b| {
            let lo = window.lo + b as f64 * width;
            let hi = lo + width;
            let me = mean_stderr(&counts[b]);
            let predicted = ((-lambda * lo).exp() - (-lambda * hi).exp()) / lambda;
            let dispersion = if me.mean > 0.0 {
                Some(variance(&counts[b]) / me.mean)
            } else {
                None
            };
            BinStat {
                lo,
                hi,
                mean_count: me.mean,
                stderr: me.stderr,
                predicted,
                dispersion,
            }
        })
        .collect();

    let ks = if pooled.len() >= MIN_KS_POINTS {
        let e_lo = (-lambda * window.lo).exp();
        let e_hi = (-lambda * window.hi).exp();
        let transformed: Vec<f64> = pooled
            .iter()
            .map(|&x| (e_lo - (-lambda * x).exp()) / (e_lo - e_hi))
            .collect();
        Some(ks_test(&transformed, |u| u.clamp(0.0, 1.0)))
    } else {
        None
    };

    let mass = window.exp_mass(lambda);
    let laplace = theta_grid
        .iter()
        .map(|&theta| {
            let vals: Vec<f64> = realizations
                .iter()
                .map(|real| {
                    let n_w = real
                        .points
                        .iter()
                        .filter(|&&x| x >= window.lo && x <= window.hi)
                        .count();
                    (-theta * n_w as f64).exp()
                })
                .collect();
            let me = mean_stderr(&vals);
            LaplacePoint {
                theta,
                empirical: me.mean,
                stderr: me.stderr,
                predicted: (-(1.0 - (-theta).exp()) * mass).exp(),
            }
        })
        .collect();

    Ok(ProcessStats {
        bins: bins_out,
        ks,
        laplace,
        replicates: r,
        pooled: pooled.len(),
    })
}
