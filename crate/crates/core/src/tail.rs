//! Tail probabilities of the conditional energy: two independent oracles and
//! the sharp approximation.
//!
//! For level `a in (0, sigma_n(h))` the upper tail `P(E >= a | h)` is
//! computed three ways:
//!
//! * [`exact_tail`] — exact enumeration of all `2^n` configurations;
//! * [`tilted_tail`] — importance sampling under the product measure tilted
//!   by the dual tilt `T(a)`, the variance-optimal exponential change of
//!   measure;
//! * [`sharp_tail`] — the prefactor-corrected approximation
//!   `J(a) = e^{-M^*(a)} / (sqrt(2 pi M''(T(a))) T(a))`.
//!
//! [`envelope_bounds`] evaluates the two-sided envelope around the coupled
//! centering, and [`validity_range`] the admissible offset interval.

use crate::enumerate::{enum_reduce, ENUM_LIMIT};
use crate::error::{Error, Result};
use crate::field::{FieldSample, FieldSpec};
use crate::legendre::{bracket, coupled_solve, solve_tilt, CoupledSolution};
use crate::mgf::{limit_mgf, mgf_n};
use crate::rng::StreamKey;
use rayon::prelude::*;

/// How a tail estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailMethod {
    ExactEnum,
    TiltedMc,
    SharpApprox,
}

impl TailMethod {
    pub fn name(&self) -> &'static str {
        match self {
            TailMethod::ExactEnum => "exact-enum",
            TailMethod::TiltedMc => "tilted-mc",
            TailMethod::SharpApprox => "sharp-J",
        }
    }
}

/// A tail probability estimate with its provenance.
#[derive(Debug, Clone, Copy)]
pub struct TailEstimate {
    pub method: TailMethod,
    pub value: f64,
    /// Standard error; zero for the exact and sharp methods.
    pub stderr: f64,
    /// Enumeration size or sample count.
    pub meta: u64,
}

/// Exact tail by full enumeration. Deterministic; requires `n <= 26`.
pub fn exact_tail(h: &FieldSample, a: f64) -> Result<TailEstimate> {
    let value = enum_reduce(
        h,
        || 0.0f64,
        |acc, cfg| {
            if cfg.energy >= a {
                *acc += cfg.weight;
            }
        },
        |x, y| x + y,
    )?;
    Ok(TailEstimate {
        method: TailMethod::ExactEnum,
        value: value.min(1.0),
        stderr: 0.0,
        meta: 1u64 << h.len(),
    })
}

const MC_BLOCK: usize = 4096;

/// Tail estimate by exponentially tilted importance sampling.
///
/// Spins are drawn from the product measure tilted by `T(a)`, under which the
/// mean energy is exactly `a`; each draw contributes
/// `e^{-T E + M(T)} 1{E >= a}`. Deterministic given the seed: samples are
/// organized in fixed blocks with per-block substreams and merged in block
/// order, so the estimate does not depend on thread count.
pub fn tilted_tail(h: &FieldSample, a: f64, samples: usize, seed: u64) -> Result<TailEstimate> {
    if samples == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let dual = solve_tilt(h, a)?;
    let tilt = dual.tilt;
    let log_mgf = mgf_n(h, tilt).value;
    let m = h.bias().m();
    // P(spin_i = +1) under the tilted measure, via a stable logistic form.
    let log_odds0 = ((1.0 + m) / (1.0 - m)).ln();
    let p_plus: Vec<f64> = h
        .values()
        .iter()
        .map(|&hi| {
            let t = 2.0 * tilt * hi + log_odds0;
            1.0 / (1.0 + (-t).exp())
        })
        .collect();

    let key = StreamKey::new(seed, "tilted-tail");
    let blocks = samples.div_ceil(MC_BLOCK);
    let partials: Vec<(f64, f64, u64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut stream = key.child(b as u64).stream();
            let count = MC_BLOCK.min(samples - b * MC_BLOCK);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..count {
                let mut energy = 0.0;
                for (i, &hi) in h.values().iter().enumerate() {
                    let s = if stream.next_uniform() < p_plus[i] {
                        1.0
                    } else {
                        -1.0
                    };
                    energy += hi * (s - m);
                }
                if energy >= a {
                    let w = (-tilt * energy + log_mgf).exp();
                    sum += w;
                    sum_sq += w * w;
                }
            }
            (sum, sum_sq, count as u64)
        })
        .collect();

    let (sum, sum_sq, n) = partials
        .into_iter()
        .fold((0.0, 0.0, 0u64), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum_sq / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
    Ok(TailEstimate {
        method: TailMethod::TiltedMc,
        value: mean,
        stderr: (var / nf).sqrt(),
        meta: n,
    })
}

/// Sharp tail approximation `J(a)`.
pub fn sharp_tail(h: &FieldSample, a: f64) -> Result<TailEstimate> {
    let dual = solve_tilt(h, a)?;
    let value =
        (-dual.rate).exp() / ((2.0 * std::f64::consts::PI * dual.curvature).sqrt() * dual.tilt);
    Ok(TailEstimate {
        method: TailMethod::SharpApprox,
        value,
        stderr: 0.0,
        meta: 0,
    })
}

/// Two-sided envelope around the coupled centering, without the vanishing
/// correction factors.
#[derive(Debug, Clone)]
pub struct EnvelopeBounds {
    pub lower: f64,
    pub upper: f64,
    pub x: f64,
    pub solution: CoupledSolution,
}

/// Evaluate the envelope at offset `x` from the centering solved at rate
/// level `C`. For `x >= 0` the ordering `lower <= upper` is guaranteed by
/// tilt monotonicity; for `x < 0` both values are reported without an
/// ordering guarantee.
pub fn envelope_bounds(h: &FieldSample, level: f64, x: f64) -> Result<EnvelopeBounds> {
    let solution = coupled_solve(h, level, x)?;
    let m2_center = mgf_n(h, solution.tilt_tilde).d2;
    let m2_shift = mgf_n(h, solution.tilt_x).d2;
    let prefactor = (m2_center / m2_shift).sqrt() / solution.tilt_x;
    let upper = prefactor * (-level - solution.tilt_tilde * x).exp();
    let lower = prefactor * (-level - solution.tilt_x * x).exp();
    Ok(EnvelopeBounds {
        lower,
        upper,
        x,
        solution,
    })
}

/// Admissible offset interval `(lo, hi)` for the envelope, together with the
/// auxiliary slope bound used for its right endpoint.
#[derive(Debug, Clone, Copy)]
pub struct ValidityRange {
    pub lo: f64,
    pub hi: f64,
    pub lambda_star: f64,
    /// `E[h g'(h lambda_star)]`.
    pub varsigma_star: f64,
}

impl ValidityRange {
    /// The interval is open; emptiness is reported, not an error.
    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }
}

/// Compute the admissible offset range at rate level `C`.
///
/// The slope bound `varsigma_star` is an expectation against the field law,
/// so the spec is required alongside the realized sample.
pub fn validity_range(
    spec: &FieldSpec,
    h: &FieldSample,
    level: f64,
    lambda_star: f64,
) -> Result<ValidityRange> {
    if lambda_star.is_nan() || lambda_star <= 1.0 {
        return Err(Error::out_of_range(
            "lambda_star",
            lambda_star,
            1.0,
            f64::INFINITY,
        ));
    }
    let br = bracket(h, level)?;
    let varsigma_star = limit_mgf(spec, h.bias(), 0.0, Some(lambda_star))?
        .varsigma_star
        .expect("requested");
    let n = h.len() as f64;
    let hi = (n * varsigma_star).min(h.sigma()) - br.a_plus;
    Ok(ValidityRange {
        lo: -br.a_minus,
        hi,
        lambda_star,
        varsigma_star,
    })
}

/// Enumeration limit re-exported for callers sizing their requests.
pub const MAX_ENUM_N: usize = ENUM_LIMIT;
