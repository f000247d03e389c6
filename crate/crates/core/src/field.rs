//! Disorder distributions and realized disorder vectors.
//!
//! A [`FieldSpec`] describes the law of a single disorder component `h_1`;
//! [`validate_field_spec`] checks the distributional assumptions (small-ball
//! bound `P(|h| < t) <= p1 t` near zero, a density floor on some interval,
//! finite first three absolute moments) and returns the moment summary. A
//! [`FieldSample`] is a realized vector together with its two summary
//! functionals
//!
//! ```text
//! sigma_n(h) = -m sum h_i + sum |h_i|,
//! gamma_n(h) = -sum log(1 + sign(h_i) m) + n log 2.
//! ```

use crate::error::{Error, Result};
use crate::quad;
use crate::rng::StreamKey;

/// Quadrature tolerance for moment integrals.
const MOMENT_TOL: f64 = 1e-10;
/// Gaussian integrals are truncated at this many standard deviations.
const GAUSS_RANGE: f64 = 16.0;

/// Spin bias `m` together with the margin parameter `epsilon`.
///
/// The margin couples the bias to the technical regions: `epsilon` must lie
/// in `(0, 1/2)` with `|m| <= 1 - 2 epsilon`. It is surfaced as an explicit
/// parameter rather than chosen internally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinBias {
    m: f64,
    epsilon: f64,
}

impl SpinBias {
    pub fn new(m: f64, epsilon: f64) -> Result<Self> {
        if !m.is_finite() || m.abs() >= 1.0 {
            return Err(Error::out_of_range("spin bias m", m, -1.0, 1.0));
        }
        if !epsilon.is_finite() || epsilon <= 0.0 || epsilon >= 0.5 {
            return Err(Error::out_of_range("epsilon margin", epsilon, 0.0, 0.5));
        }
        if m.abs() > 1.0 - 2.0 * epsilon {
            return Err(Error::Incompatible {
                reason: format!(
                    "|m| = {} exceeds 1 - 2 epsilon = {}",
                    m.abs(),
                    1.0 - 2.0 * epsilon
                ),
            });
        }
        Ok(SpinBias { m, epsilon })
    }

    #[inline]
    pub fn m(&self) -> f64 {
        self.m
    }

    #[inline]
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Law of a single disorder component.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    /// Uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// Normal with the given mean and standard deviation.
    Gaussian { mean: f64, stddev: f64 },
    /// `|h|` uniform on `[lo, hi]` with `0 < lo < hi`; sign flipped to `-1`
    /// with probability `neg_prob`.
    TwoSidedUniform { lo: f64, hi: f64, neg_prob: f64 },
    /// Uniform on `[lo, hi]` mixed with a point mass at zero of weight
    /// `atom`. Never passes validation when `atom > 0`; exists so the
    /// validator's rejection path is exercisable.
    UniformWithAtom { lo: f64, hi: f64, atom: f64 },
    /// Point mass at `value`. Never passes validation (no absolutely
    /// continuous part); accepted by the annealed-MGF and asymptotic solvers
    /// as a closed-form test fixture.
    Degenerate { value: f64 },
}

/// Constants witnessing the distributional assumptions, recorded with the
/// validated spec.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionConstants {
    /// Small-ball constant: `P(|h| < t) <= p1 t` for `t in [0, eps0)`.
    pub p1: f64,
    pub eps0: f64,
    /// Density floor: density `>= p2` on `[floor_lo, floor_hi]`.
    pub p2: f64,
    pub floor_lo: f64,
    pub floor_hi: f64,
}

/// Moment summary of a disorder law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    /// `E[h]`
    pub psi1: f64,
    /// `E[h^2]`
    pub psi2: f64,
    /// `E[|h|]`
    pub psi3: f64,
    /// `E[|h|^3]`
    pub psi4: f64,
    /// `P(h < 0)`
    pub p_neg: f64,
    /// Witnesses for the distributional assumptions.
    pub assumption: AssumptionConstants,
}

impl MomentSet {
    /// `varsigma = -m psi1 + psi3`, the almost-sure limit of `sigma_n / n`.
    pub fn varsigma(&self, bias: SpinBias) -> f64 {
        -bias.m() * self.psi1 + self.psi3
    }

    /// `gamma = log 2 - E[log(1 + sign(h) m)]`, the almost-sure limit of
    /// `gamma_n / n`.
    pub fn gamma(&self, bias: SpinBias) -> f64 {
        let m = bias.m();
        let p_pos = 1.0 - self.p_neg;
        2f64.ln() - (p_pos * (1.0 + m).ln() + self.p_neg * (1.0 - m).ln())
    }
}

impl FieldSpec {
    fn check_well_formed(&self) -> Result<()> {
        let finite = |v: f64, what: &str| -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::out_of_range(
                    what,
                    v,
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                ))
            }
        };
        match *self {
            FieldSpec::Uniform { lo, hi } => {
                finite(lo, "uniform lo")?;
                finite(hi, "uniform hi")?;
                if hi <= lo {
                    return Err(Error::SpecViolation {
                        reason: format!("uniform support [{lo}, {hi}] is empty"),
                    });
                }
            }
            FieldSpec::Gaussian { mean, stddev } => {
                finite(mean, "gaussian mean")?;
                finite(stddev, "gaussian stddev")?;
                if stddev <= 0.0 {
                    return Err(Error::SpecViolation {
                        reason: "gaussian stddev must be positive".into(),
                    });
                }
            }
            FieldSpec::TwoSidedUniform { lo, hi, neg_prob } => {
                finite(lo, "two-sided lo")?;
                finite(hi, "two-sided hi")?;
                finite(neg_prob, "two-sided neg_prob")?;
                if !(0.0 < lo && lo < hi) {
                    return Err(Error::SpecViolation {
                        reason: "two-sided-uniform requires 0 < lo < hi".into(),
                    });
                }
                if !(0.0..=1.0).contains(&neg_prob) {
                    return Err(Error::out_of_range("neg_prob", neg_prob, 0.0, 1.0));
                }
            }
            FieldSpec::UniformWithAtom { lo, hi, atom } => {
                finite(lo, "atom-uniform lo")?;
                finite(hi, "atom-uniform hi")?;
                finite(atom, "atom weight")?;
                if hi <= lo {
                    return Err(Error::SpecViolation {
                        reason: format!("uniform support [{lo}, {hi}] is empty"),
                    });
                }
                if !(0.0..=1.0).contains(&atom) {
                    return Err(Error::out_of_range("atom weight", atom, 0.0, 1.0));
                }
            }
            FieldSpec::Degenerate { value } => {
                finite(value, "degenerate value")?;
            }
        }
        Ok(())
    }

    /// Expectation `E[f(h)]` against this law, to the given absolute
    /// tolerance. Works for every variant, including the test-fixture ones.
    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F, abs_tol: f64) -> Result<f64> {
        self.check_well_formed()?;
        match *self {
            FieldSpec::Uniform { lo, hi } => {
                let w = hi - lo;
                Ok(quad::integrate(|x| f(x) / w, lo, hi, abs_tol)?.value)
            }
            FieldSpec::Gaussian { mean, stddev } => {
                let norm = 1.0 / (stddev * (2.0 * std::f64::consts::PI).sqrt());
                let dens = move |x: f64| {
                    let z = (x - mean) / stddev;
                    norm * (-0.5 * z * z).exp()
                };
                let lo = mean - GAUSS_RANGE * stddev;
                let hi = mean + GAUSS_RANGE * stddev;
                Ok(quad::integrate(|x| f(x) * dens(x), lo, hi, abs_tol)?.value)
            }
            FieldSpec::TwoSidedUniform { lo, hi, neg_prob } => {
                let w = hi - lo;
                let pos = quad::integrate(|x| f(x) / w, lo, hi, abs_tol / 2.0)?.value;
                let neg = quad::integrate(|x| f(-x) / w, lo, hi, abs_tol / 2.0)?.value;
                Ok((1.0 - neg_prob) * pos + neg_prob * neg)
            }
            FieldSpec::UniformWithAtom { lo, hi, atom } => {
                let w = hi - lo;
                let cont = quad::integrate(|x| f(x) / w, lo, hi, abs_tol)?.value;
                Ok((1.0 - atom) * cont + atom * f(0.0))
            }
            FieldSpec::Degenerate { value } => Ok(f(value)),
        }
    }

    /// Moment summary without the assumption checks. Exists so the
    /// closed-form fixtures (`Degenerate`) can feed the annealed solvers.
    pub fn moments(&self) -> Result<MomentSet> {
        self.check_well_formed()?;
        let ms = match *self {
            FieldSpec::Uniform { lo, hi } => {
                let w = hi - lo;
                let psi1 = 0.5 * (lo + hi);
                let psi2 = (hi * hi * hi - lo * lo * lo) / (3.0 * w);
                let (psi3, psi4, p_neg) = if lo >= 0.0 {
                    (psi1, (hi.powi(4) - lo.powi(4)) / (4.0 * w), 0.0)
                } else if hi <= 0.0 {
                    (-psi1, (lo.powi(4) - hi.powi(4)) / (4.0 * w), 1.0)
                } else {
                    (
                        (hi * hi + lo * lo) / (2.0 * w),
                        (hi.powi(4) + lo.powi(4)) / (4.0 * w),
                        -lo / w,
                    )
                };
                MomentSet {
                    psi1,
                    psi2,
                    psi3,
                    psi4,
                    p_neg,
                    assumption: uniform_constants(lo, hi),
                }
            }
            FieldSpec::Gaussian { mean, stddev } => {
                let psi3 = self.expectation(|x| x.abs(), MOMENT_TOL)?;
                let psi4 = self.expectation(|x| x.abs().powi(3), MOMENT_TOL)?;
                let p_neg = self.expectation(|x| if x < 0.0 { 1.0 } else { 0.0 }, MOMENT_TOL)?;
                MomentSet {
                    psi1: mean,
                    psi2: mean * mean + stddev * stddev,
                    psi3,
                    psi4,
                    p_neg,
                    assumption: AssumptionConstants {
                        p1: (2.0 / std::f64::consts::PI).sqrt() / stddev,
                        eps0: f64::INFINITY,
                        p2: (-0.5f64).exp() / (stddev * (2.0 * std::f64::consts::PI).sqrt()),
                        floor_lo: mean - stddev,
                        floor_hi: mean + stddev,
                    },
                }
            }
            FieldSpec::TwoSidedUniform { lo, hi, neg_prob } => {
                let w = hi - lo;
                let abs_mean = 0.5 * (lo + hi);
                MomentSet {
                    psi1: (1.0 - 2.0 * neg_prob) * abs_mean,
                    psi2: (hi * hi * hi - lo * lo * lo) / (3.0 * w),
                    psi3: abs_mean,
                    psi4: (hi.powi(4) - lo.powi(4)) / (4.0 * w),
                    p_neg: neg_prob,
                    assumption: AssumptionConstants {
                        p1: 1.0 / w,
                        eps0: lo,
                        p2: neg_prob.max(1.0 - neg_prob) / w,
                        floor_lo: if neg_prob > 0.5 { -hi } else { lo },
                        floor_hi: if neg_prob > 0.5 { -lo } else { hi },
                    },
                }
            }
            FieldSpec::UniformWithAtom { lo, hi, atom } => {
                let base = FieldSpec::Uniform { lo, hi }.moments()?;
                MomentSet {
                    psi1: (1.0 - atom) * base.psi1,
                    psi2: (1.0 - atom) * base.psi2,
                    psi3: (1.0 - atom) * base.psi3,
                    psi4: (1.0 - atom) * base.psi4,
                    p_neg: (1.0 - atom) * base.p_neg,
                    assumption: base.assumption,
                }
            }
            FieldSpec::Degenerate { value } => MomentSet {
                psi1: value,
                psi2: value * value,
                psi3: value.abs(),
                psi4: value.abs().powi(3),
                p_neg: if value < 0.0 { 1.0 } else { 0.0 },
                assumption: AssumptionConstants {
                    p1: f64::NAN,
                    eps0: 0.0,
                    p2: 0.0,
                    floor_lo: value,
                    floor_hi: value,
                },
            },
        };
        for v in [ms.psi1, ms.psi2, ms.psi3, ms.psi4] {
            if !v.is_finite() {
                return Err(Error::NonFiniteMoment);
            }
        }
        Ok(ms)
    }
}

fn uniform_constants(lo: f64, hi: f64) -> AssumptionConstants {
    let w = hi - lo;
    let (p1, eps0) = if lo >= 0.0 || hi <= 0.0 {
        // Support bounded away from zero (or touching it at one endpoint):
        // P(|h| < t) grows at most like t / w once t passes the gap.
        (
            1.0 / w,
            lo.abs()
                .max(f64::MIN_POSITIVE)
                .min(hi.abs().max(f64::MIN_POSITIVE)),
        )
    } else {
        // Zero interior to the support: both sides contribute.
        (2.0 / w, hi.min(-lo))
    };
    AssumptionConstants {
        p1,
        eps0: if lo < 0.0 && hi > 0.0 {
            eps0
        } else {
            f64::INFINITY
        },
        p2: 1.0 / w,
        floor_lo: lo,
        floor_hi: hi,
    }
}

/// Validate a [`FieldSpec`] against the distributional assumptions and
/// return its moment summary.
///
/// Validation is per-family analytic: each variant carries a documented
/// predicate rather than a generic sampled density test.
pub fn validate_field_spec(spec: &FieldSpec) -> Result<MomentSet> {
    spec.check_well_formed()?;
    match *spec {
        FieldSpec::UniformWithAtom { atom, .. } if atom > 0.0 => {
            return Err(Error::SpecViolation {
                reason: format!(
                    "point mass {atom} at zero: P(|h| < t) >= {atom} for every t > 0, no finite small-ball constant exists"
                ),
            });
        }
        FieldSpec::Degenerate { .. } => {
            return Err(Error::SpecViolation {
                reason: "point mass has no absolutely continuous part".into(),
            });
        }
        _ => {}
    }
    spec.moments()
}

/// Report on membership in the technical region used by the second-derivative
/// bounds, with per-predicate slack.
#[derive(Debug, Clone, Copy)]
pub struct PredicateCheck {
    pub name: &'static str,
    pub satisfied: bool,
    /// Non-negative exactly when the predicate holds; distance to the
    /// boundary in the predicate's own units.
    pub slack: f64,
}

/// Conjunction of the three region predicates.
#[derive(Debug, Clone, Copy)]
pub struct RegionReport {
    pub in_region: bool,
    pub checks: [PredicateCheck; 3],
}

/// A realized disorder vector with its summary functionals.
///
/// The spin bias is bound at construction time: `sigma_n` and `gamma_n`
/// depend on `m`, so every downstream operation reads the bias from the
/// sample instead of taking it separately.
#[derive(Debug, Clone)]
pub struct FieldSample {
    values: Vec<f64>,
    bias: SpinBias,
    sigma: f64,
    gamma: f64,
}

impl FieldSample {
    /// Build a sample from explicit values, computing the functionals.
    pub fn new(values: Vec<f64>, bias: SpinBias) -> Self {
        let m = bias.m();
        let mut sum = 0.0;
        let mut abs_sum = 0.0;
        let mut log_sum = 0.0;
        for &v in &values {
            sum += v;
            abs_sum += v.abs();
            // sign(0) = 0 by convention, so a zero entry contributes log(1) = 0.
            if v != 0.0 {
                log_sum += (1.0 + v.signum() * m).ln();
            }
        }
        let n = values.len() as f64;
        FieldSample {
            values,
            bias,
            sigma: -m * sum + abs_sum,
            gamma: -log_sum + n * 2f64.ln(),
        }
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn bias(&self) -> SpinBias {
        self.bias
    }

    /// `sigma_n(h) = -m sum h_i + sum |h_i|`; the supremum of the mean-energy
    /// range.
    #[inline]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `gamma_n(h) = -sum log(1 + sign(h_i) m) + n log 2`; the supremum of the
    /// rate range.
    #[inline]
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Evaluate the three region predicates exactly as written:
    /// `2 pi sum h_i^2 <= n^{3/2}`, `2 pi min h_i^2 >= 16 / (n^5 eps^8)`,
    /// and `sigma_n in (n^{4/5}, n^{3/2})`.
    ///
    /// Diagnostic only: no operation refuses to run outside the region.
    pub fn region_membership(&self) -> RegionReport {
        let n = self.len() as f64;
        let eps = self.bias.epsilon();
        let sum_sq: f64 = self.values.iter().map(|v| v * v).sum();
        let min_sq = self
            .values
            .iter()
            .map(|v| v * v)
            .fold(f64::INFINITY, f64::min);
        let two_pi = 2.0 * std::f64::consts::PI;

        let c1 = PredicateCheck {
            name: "energy-scale",
            satisfied: two_pi * sum_sq <= n.powf(1.5),
            slack: n.powf(1.5) - two_pi * sum_sq,
        };
        let floor = 16.0 / (n.powi(5) * eps.powi(8));
        let c2 = PredicateCheck {
            name: "min-component",
            satisfied: two_pi * min_sq >= floor,
            slack: two_pi * min_sq - floor,
        };
        let (lo, hi) = (n.powf(0.8), n.powf(1.5));
        let c3 = PredicateCheck {
            name: "sigma-window",
            satisfied: self.sigma > lo && self.sigma < hi,
            slack: (self.sigma - lo).min(hi - self.sigma),
        };
        RegionReport {
            in_region: c1.satisfied && c2.satisfied && c3.satisfied,
            checks: [c1, c2, c3],
        }
    }

    /// CSV export with header `index,h`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,h\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i, crate::fmt_f64(*v)));
        }
        out
    }

    /// Parse the `index,h` CSV format produced by [`FieldSample::to_csv`].
    pub fn from_csv(text: &str, bias: SpinBias) -> Result<Self> {
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with("index")) {
                continue;
            }
            let field = line.split(',').nth(1).ok_or_else(|| Error::Incompatible {
                reason: format!("h-file line {} is not index,h", lineno + 1),
            })?;
            let v: f64 = field.trim().parse().map_err(|_| Error::Incompatible {
                reason: format!("h-file line {}: cannot parse '{}'", lineno + 1, field),
            })?;
            values.push(v);
        }
        if values.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        Ok(FieldSample::new(values, bias))
    }
}

/// Draw `n` i.i.d. components from a validated spec. Deterministic given
/// `(spec, n, seed)`; the bias enters only the summary functionals.
pub fn sample_field(spec: &FieldSpec, bias: SpinBias, n: usize, seed: u64) -> Result<FieldSample> {
    if n == 0 {
        return Err(Error::out_of_range(
            "sample size n",
            0.0,
            1.0,
            f64::INFINITY,
        ));
    }
    validate_field_spec(spec)?;
    let mut stream = StreamKey::new(seed, "field-sample").stream();
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let v = match *spec {
            FieldSpec::Uniform { lo, hi } => lo + stream.next_uniform() * (hi - lo),
            FieldSpec::Gaussian { mean, stddev } => mean + stddev * stream.next_gaussian(),
            FieldSpec::TwoSidedUniform { lo, hi, neg_prob } => {
                let mag = lo + stream.next_uniform() * (hi - lo);
                if stream.next_uniform() < neg_prob {
                    -mag
                } else {
                    mag
                }
            }
            // Unreachable in practice: these variants fail validation above.
            FieldSpec::UniformWithAtom { lo, hi, atom } => {
                if stream.next_uniform() < atom {
                    0.0
                } else {
                    lo + stream.next_uniform() * (hi - lo)
                }
            }
            FieldSpec::Degenerate { value } => value,
        };
        values.push(v);
    }
    Ok(FieldSample::new(values, bias))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bias(m: f64) -> SpinBias {
        SpinBias::new(m, 0.1).unwrap()
    }

    #[test]
    fn spin_bias_rejects_bad_parameters() {
        assert!(SpinBias::new(1.0, 0.1).is_err());
        assert!(SpinBias::new(0.0, 0.5).is_err());
        assert!(SpinBias::new(0.9, 0.1).is_err()); // |m| > 1 - 2 eps
        assert!(SpinBias::new(0.8, 0.1).is_ok());
    }

    #[test]
    fn uniform_moments_closed_form() {
        let ms = validate_field_spec(&FieldSpec::Uniform { lo: 0.5, hi: 1.5 }).unwrap();
        assert_relative_eq!(ms.psi1, 1.0, epsilon = 1e-14);
        assert_relative_eq!(ms.psi2, 13.0 / 12.0, epsilon = 1e-14);
        assert_relative_eq!(ms.psi3, 1.0, epsilon = 1e-14);
        assert_relative_eq!(ms.psi4, 5.0 / 4.0, epsilon = 1e-14);
        assert_eq!(ms.p_neg, 0.0);
    }

    #[test]
    fn gaussian_absolute_moments_match_quadrature_oracle() {
        // Oracle: Simpson integration of the standard normal density,
        // independent of the Gauss-Kronrod path used by the implementation.
        let simpson = |f: &dyn Fn(f64) -> f64| {
            let (a, b, k) = (-14.0f64, 14.0f64, 40_000usize);
            let h = (b - a) / k as f64;
            let mut s = f(a) + f(b);
            for i in 1..k {
                let x = a + i as f64 * h;
                s += f(x) * if i % 2 == 0 { 2.0 } else { 4.0 };
            }
            s * h / 3.0
        };
        let dens = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let psi3_oracle = simpson(&|x| x.abs() * dens(x));
        let psi4_oracle = simpson(&|x| x.abs().powi(3) * dens(x));
        assert_relative_eq!(
            psi3_oracle,
            (2.0 / std::f64::consts::PI).sqrt(),
            epsilon = 1e-10
        );
        assert_relative_eq!(
            psi4_oracle,
            2.0 * (2.0 / std::f64::consts::PI).sqrt(),
            epsilon = 1e-9
        );

        let ms = validate_field_spec(&FieldSpec::Gaussian {
            mean: 0.0,
            stddev: 1.0,
        })
        .unwrap();
        assert_relative_eq!(ms.psi1, 0.0, epsilon = 1e-14);
        assert_relative_eq!(ms.psi2, 1.0, epsilon = 1e-14);
        assert_relative_eq!(ms.psi3, psi3_oracle, epsilon = 1e-9);
        assert_relative_eq!(ms.psi4, psi4_oracle, epsilon = 1e-8);
        assert_relative_eq!(ms.p_neg, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn atom_at_zero_is_rejected() {
        let err = validate_field_spec(&FieldSpec::UniformWithAtom {
            lo: -0.5,
            hi: 0.5,
            atom: 0.05,
        });
        assert!(matches!(err, Err(Error::SpecViolation { .. })));
    }

    #[test]
    fn degenerate_fails_validation_but_has_moments() {
        let spec = FieldSpec::Degenerate { value: 1.0 };
        assert!(matches!(
            validate_field_spec(&spec),
            Err(Error::SpecViolation { .. })
        ));
        let ms = spec.moments().unwrap();
        assert_eq!(ms.psi3, 1.0);
    }

    #[test]
    fn two_sided_moments() {
        let ms = validate_field_spec(&FieldSpec::TwoSidedUniform {
            lo: 0.5,
            hi: 1.5,
            neg_prob: 0.25,
        })
        .unwrap();
        assert_relative_eq!(ms.psi1, 0.5, epsilon = 1e-14);
        assert_relative_eq!(ms.psi3, 1.0, epsilon = 1e-14);
        assert_eq!(ms.p_neg, 0.25);
    }

    #[test]
    fn varsigma_and_gamma_formulas() {
        let ms = validate_field_spec(&FieldSpec::Uniform { lo: 0.5, hi: 1.5 }).unwrap();
        let b = bias(0.3);
        assert_relative_eq!(ms.varsigma(b), 0.7, epsilon = 1e-14);
        assert_relative_eq!(ms.gamma(b), 2f64.ln() - 1.3f64.ln(), epsilon = 1e-14);

        // Symmetric law: gamma = log 2 - (1/2) log(1 - m^2).
        let g = validate_field_spec(&FieldSpec::Gaussian {
            mean: 0.0,
            stddev: 1.0,
        })
        .unwrap();
        assert_relative_eq!(
            g.gamma(b),
            2f64.ln() - 0.5 * (1.0 - 0.09f64).ln(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = FieldSpec::Uniform { lo: 0.5, hi: 1.5 };
        let a = sample_field(&spec, bias(0.3), 4, 7).unwrap();
        let b = sample_field(&spec, bias(0.3), 4, 7).unwrap();
        assert_eq!(a.values(), b.values());
        assert_eq!(a.sigma(), b.sigma());
        assert_eq!(a.gamma(), b.gamma());
        let c = sample_field(&spec, bias(0.3), 4, 8).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn law_of_large_numbers_for_functionals() {
        let spec = FieldSpec::Uniform { lo: 0.5, hi: 1.5 };
        let h = sample_field(&spec, bias(0.3), 10_000, 1).unwrap();
        assert!((h.sigma() / 10_000.0 - 0.7).abs() < 0.05);

        let g = FieldSpec::Gaussian {
            mean: 0.0,
            stddev: 1.0,
        };
        let hg = sample_field(&g, bias(0.3), 10_000, 2).unwrap();
        let gamma_limit = 2f64.ln() - 0.5 * (1.0 - 0.09f64).ln();
        assert!((hg.gamma() / 10_000.0 - gamma_limit).abs() < 0.05);
    }

    #[test]
    fn functionals_recomputable_from_values() {
        let spec = FieldSpec::Gaussian {
            mean: 0.0,
            stddev: 1.0,
        };
        let h = sample_field(&spec, bias(0.3), 257, 11).unwrap();
        let m = h.bias().m();
        let sigma: f64 = h.values().iter().map(|v| v.abs() - m * v).sum();
        let gamma: f64 = 257.0 * 2f64.ln()
            - h.values()
                .iter()
                .map(|v| (1.0 + v.signum() * m).ln())
                .sum::<f64>();
        assert_relative_eq!(h.sigma(), sigma, max_relative = 1e-12);
        assert_relative_eq!(h.gamma(), gamma, max_relative = 1e-12);
    }

    #[test]
    fn gamma_bounds_hold() {
        // n eps <= gamma_n <= -n log eps, for |m| <= 1 - 2 eps.
        for (m, eps) in [(0.3, 0.1), (-0.5, 0.2), (0.0, 0.25)] {
            let b = SpinBias::new(m, eps).unwrap();
            let spec = FieldSpec::Gaussian {
                mean: 0.5,
                stddev: 2.0,
            };
            let h = sample_field(&spec, b, 500, 13).unwrap();
            let n = 500.0;
            assert!(h.gamma() >= n * eps - 1e-9, "gamma lower bound");
            assert!(h.gamma() <= -n * eps.ln() + 1e-9, "gamma upper bound");
            assert!(h.sigma() >= 0.0);
        }
    }

    #[test]
    fn region_first_predicate_fails_on_all_ones() {
        let b = SpinBias::new(0.0, 0.25).unwrap();
        let h = FieldSample::new(vec![1.0; 4], b);
        let report = h.region_membership();
        assert!(!report.checks[0].satisfied); // 8 pi > 4^{3/2} = 8
        assert!(!report.in_region);
    }

    #[test]
    fn region_second_predicate_fails_on_zero_entry() {
        let b = SpinBias::new(0.0, 0.25).unwrap();
        let h = FieldSample::new(vec![1.0, 0.0, 1.0, 1.0], b);
        assert!(!h.region_membership().checks[1].satisfied);
    }

    #[test]
    fn region_report_is_pure_and_slacks_populated() {
        let spec = FieldSpec::Uniform { lo: 0.5, hi: 1.5 };
        let h = sample_field(&spec, bias(0.3), 100, 3).unwrap();
        let r1 = h.region_membership();
        let r2 = h.region_membership();
        for (a, b) in r1.checks.iter().zip(r2.checks.iter()) {
            assert_eq!(a.satisfied, b.satisfied);
            assert_eq!(a.slack, b.slack);
            assert!(a.slack.is_finite());
            assert_eq!(a.satisfied, a.slack >= 0.0);
        }
    }

    #[test]
    fn sigma_vanishes_only_on_the_zero_vector() {
        let b = bias(0.3);
        assert_eq!(FieldSample::new(vec![0.0; 5], b).sigma(), 0.0);
        let h = FieldSample::new(vec![0.0, 1e-9, 0.0], b);
        assert!(h.sigma() > 0.0);
        let hn = FieldSample::new(vec![-2.0, 0.5], b);
        assert!(hn.sigma() > 0.0);
    }

    #[test]
    fn empirical_functional_means_converge_over_seeds() {
        // 100 seeds at n = 10^4: the seed-mean of sigma_n/n sits within 4
        // sample standard errors of its limit.
        let spec = FieldSpec::Uniform { lo: 0.5, hi: 1.5 };
        let b = bias(0.3);
        let n = 10_000usize;
        let vals: Vec<f64> = (0..100u64)
            .map(|s| sample_field(&spec, b, n, s).unwrap().sigma() / n as f64)
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let sd = (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (vals.len() as f64 - 1.0))
            .sqrt();
        let stderr = sd / (vals.len() as f64).sqrt();
        assert!(
            (mean - 0.7).abs() < 4.0 * stderr,
            "{mean} vs 0.7 (se {stderr})"
        );
    }

    #[test]
    fn csv_round_trip() {
        let spec = FieldSpec::Gaussian {
            mean: 0.0,
            stddev: 1.0,
        };
        let h = sample_field(&spec, bias(0.3), 17, 5).unwrap();
        let text = h.to_csv();
        assert!(text.starts_with("index,h\n"));
        let back = FieldSample::from_csv(&text, bias(0.3)).unwrap();
        assert_eq!(h.values(), back.values());
    }
}
