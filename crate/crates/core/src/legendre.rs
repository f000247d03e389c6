//! Duality solvers for the conditional log-MGF.
//!
//! `M_n'(h, .)` is strictly increasing from 0 to `sigma_n(h)`, so the tilt at
//! energy level `a` is the root of `M_n'(h, t) = a`. The convex conjugate
//! `M_n^*(h, a) = t a - M_n(h, t)` at that tilt is strictly increasing in `a`
//! onto `(0, gamma_n(h))`, which gives the inverse `A_n(h, c)`. On top of the
//! two inverses sits the coupled centering system
//!
//! ```text
//! M_n^*(h, A) + (1/2) log(2 pi M_n''(h, T)) = C,    M_n'(h, T) = A,
//! M_n'(h, T_x) = A + x,
//! ```
//!
//! solved for the smallest admissible `A` inside a clamped bracket, and its
//! asymptotic counterpart in which `M_n/n` is replaced by the annealed `G`.
//!
//! All root solves are safeguarded Newton iterations: a bisection bracket is
//! maintained and any Newton step that leaves it is replaced by the midpoint.

use crate::error::{Error, Result};
use crate::field::{FieldSample, FieldSpec, SpinBias};
use crate::mgf::{limit_mgf, mgf_n};

/// Iteration cap shared by every root solve.
const MAX_ITER: usize = 500;
/// Grid resolution for the coupled-system scan.
const SCAN_POINTS: usize = 1024;

/// A point on the duality curve: energy level, tilt, conjugate value, and the
/// curvature of the log-MGF at the tilt.
#[derive(Debug, Clone, Copy)]
pub struct DualPoint {
    /// Energy level `a`.
    pub a: f64,
    /// Tilt with `M_n'(h, tilt) = a`.
    pub tilt: f64,
    /// Conjugate value `tilt * a - M_n(h, tilt)`.
    pub rate: f64,
    /// `M_n''(h, tilt)`.
    pub curvature: f64,
}

/// Clamped search bracket for the coupled system.
#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    /// Lower rate level `C - (3/4) log n`, clamped into `(0, gamma_n)`.
    pub c_minus: f64,
    /// Upper rate level `C + 2 log n`, clamped into `(0, gamma_n)`.
    pub c_plus: f64,
    /// Energy level at `c_minus`.
    pub a_minus: f64,
    /// Energy level at `c_plus`.
    pub a_plus: f64,
    /// Whether either clamp was active.
    pub clamped: bool,
    /// Whether `n` exceeds the size threshold `-log(eps)/eps^5 + 100` above
    /// which the unclamped bracket is guaranteed to be admissible. Reported,
    /// never gated on.
    pub asymptotic_n: bool,
}

/// Solution of the coupled centering system.
#[derive(Debug, Clone, Copy)]
pub struct CoupledSolution {
    /// Centering level `A` (smallest root in the bracket).
    pub a_tilde: f64,
    /// Tilt at the centering level.
    pub tilt_tilde: f64,
    /// Tilt at the shifted level `A + x`.
    pub tilt_x: f64,
    /// Residuals of the three equations, in order.
    pub residuals: [f64; 3],
    pub bracket: Bracket,
}

/// Solution of the asymptotic (annealed) system `G^*(a) = c`, `G'(t) = a`.
#[derive(Debug, Clone, Copy)]
pub struct AsymptoticSolution {
    pub a_hat: f64,
    pub lambda_hat: f64,
    pub target_c: f64,
}

/// Safeguarded Newton on a strictly increasing residual function.
///
/// `eval` returns `(f(x), f'(x))`; the caller guarantees `f(lo) <= 0 <= f(hi)`.
fn solve_increasing(
    op: &'static str,
    eval: impl Fn(f64) -> (f64, f64),
    mut lo: f64,
    mut hi: f64,
    start: f64,
    accept: impl Fn(f64) -> bool,
) -> Result<f64> {
    let mut x = if start.is_finite() && start > lo && start < hi {
        start
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..MAX_ITER {
        let (r, d) = eval(x);
        if accept(r.abs()) {
            return Ok(x);
        }
        if r > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let newton = x - r / d;
        x = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if !(x > lo && x < hi) {
            // Bracket collapsed to adjacent floats; take the better endpoint.
            let (rl, _) = eval(lo);
            let (rh, _) = eval(hi);
            let best = if rl.abs() <= rh.abs() { lo } else { hi };
            let (rb, _) = eval(best);
            if accept(rb.abs()) {
                return Ok(best);
            }
            return Err(Error::NoConvergence {
                op,
                iterations: MAX_ITER,
            });
        }
    }
    Err(Error::NoConvergence {
        op,
        iterations: MAX_ITER,
    })
}

/// Double `hi` until `f(hi) >= 0`.
fn grow_upper(op: &'static str, f: impl Fn(f64) -> f64, start: f64) -> Result<f64> {
    let mut hi = start.max(1e-6);
    for _ in 0..1100 {
        if f(hi) >= 0.0 {
            return Ok(hi);
        }
        hi *= 2.0;
        if !hi.is_finite() {
            break;
        }
    }
    Err(Error::NoConvergence {
        op,
        iterations: 1100,
    })
}

fn dual_point_at_tilt(h: &FieldSample, tilt: f64) -> DualPoint {
    let e = mgf_n(h, tilt);
    DualPoint {
        a: e.d1,
        tilt,
        rate: tilt * e.d1 - e.value,
        curvature: e.d2,
    }
}

fn solve_tilt_from(h: &FieldSample, a: f64, warm: f64) -> Result<DualPoint> {
    let sigma = h.sigma();
    if !(a > 0.0 && a < sigma) {
        return Err(Error::out_of_range("energy level a", a, 0.0, sigma));
    }
    let hi = grow_upper("tilt bracket growth", |t| mgf_n(h, t).d1 - a, 1.0)?;
    // M'(t) ~ M''(0) t near zero: a crude but effective first guess.
    let start = if warm.is_finite() && warm > 0.0 {
        warm
    } else {
        a / mgf_n(h, 0.0).d2.max(f64::MIN_POSITIVE)
    };
    let tol = 1e-11 * a.abs().max(1.0);
    let tilt = solve_increasing(
        "tilt solve",
        |t| {
            let e = mgf_n(h, t);
            (e.d1 - a, e.d2)
        },
        0.0,
        hi,
        start,
        |r| r < tol,
    )?;
    Ok(dual_point_at_tilt(h, tilt))
}

/// Invert `M_n'(h, .)` at energy level `a in (0, sigma_n(h))`.
///
/// Residual guarantee: `|M_n'(h, tilt) - a| < 1e-11 max(1, a)`.
pub fn solve_tilt(h: &FieldSample, a: f64) -> Result<DualPoint> {
    solve_tilt_from(h, a, f64::NAN)
}

/// Invert the conjugate `M_n^*(h, .)` at rate level `c in (0, gamma_n(h))`.
///
/// Solves `t M_n'(h, t) - M_n(h, t) = c` for the tilt directly — the same
/// curve as the two-stage inversion, parametrized where it is smooth — and
/// reads the energy level off `M_n'`. Residual guarantee:
/// `|M_n^*(h, a) - c| < 1e-10 max(1, c)`.
pub fn invert_rate(h: &FieldSample, c: f64) -> Result<DualPoint> {
    let gamma = h.gamma();
    if !(c > 0.0 && c < gamma) {
        return Err(Error::out_of_range("rate level c", c, 0.0, gamma));
    }
    let conj = |t: f64| {
        let e = mgf_n(h, t);
        t * e.d1 - e.value
    };
    let hi = grow_upper("rate bracket growth", |t| conj(t) - c, 1.0)?;
    let tol = 1e-10 * c.abs().max(1.0);
    let tilt = solve_increasing(
        "rate solve",
        |t| {
            let e = mgf_n(h, t);
            (t * e.d1 - e.value - c, t * e.d2)
        },
        0.0,
        hi,
        f64::NAN,
        |r| r < tol,
    )?;
    Ok(dual_point_at_tilt(h, tilt))
}

/// Clamp margins used for the coupled-system bracket: rate levels are kept
/// inside `[1e-6 gamma_n, (1 - 1e-6) gamma_n]`.
const CLAMP_FRACTION: f64 = 1e-6;

/// Build the clamped bracket around rate level `C`.
pub fn bracket(h: &FieldSample, level: f64) -> Result<Bracket> {
    let gamma = h.gamma();
    if !(level > 0.0 && level < gamma) {
        return Err(Error::out_of_range("rate level C", level, 0.0, gamma));
    }
    let n = h.len() as f64;
    let ln_n = n.ln();
    let raw_minus = level - 0.75 * ln_n;
    let raw_plus = level + 2.0 * ln_n;
    let c_minus = raw_minus.max(CLAMP_FRACTION * gamma);
    let c_plus = raw_plus.min((1.0 - CLAMP_FRACTION) * gamma);
    if c_minus >= c_plus {
        return Err(Error::Incompatible {
            reason: format!(
                "clamped bracket is empty: c_minus = {c_minus}, c_plus = {c_plus} (C = {level}, gamma_n = {gamma})"
            ),
        });
    }
    let a_minus = invert_rate(h, c_minus)?.a;
    let a_plus = invert_rate(h, c_plus)?.a;
    let eps = h.bias().epsilon();
    let threshold = -eps.ln() / eps.powi(5) + 100.0;
    Ok(Bracket {
        c_minus,
        c_plus,
        a_minus,
        a_plus,
        clamped: c_minus != raw_minus || c_plus != raw_plus,
        asymptotic_n: n > threshold,
    })
}

/// Solve the coupled centering system at rate level `C` and offset `x`.
///
/// The scan objective `F(a) = M_n^*(h, a) + (1/2) log(2 pi M_n''(h, T(a)))`
/// is evaluated on a 1024-point grid over `[a_minus, a_plus]`; the first sign
/// change of `F - C` is refined by bisection, which matches the smallest-root
/// tie-breaking rule. `F` is not monotone in general, so the scan — not a
/// blind root solve — locates the crossing.
pub fn coupled_solve(h: &FieldSample, level: f64, x: f64) -> Result<CoupledSolution> {
    let mut br = bracket(h, level)?;
    let sigma = h.sigma();

    // F expressed through the tilt; a and t are in strictly increasing
    // correspondence, so the first crossing in a is the first crossing in t.
    let f_of_tilt = |t: f64| {
        let e = mgf_n(h, t);
        t * e.d1 - e.value + 0.5 * (2.0 * std::f64::consts::PI * e.d2).ln() - level
    };

    // The bracket endpoints only straddle the root for n past the size
    // threshold; at desk scale the crossing can sit left of a_minus. Extend
    // the clamp downward until the lower end is admissible (or the clamp
    // floor is reached, in which case no root exists at this level).
    {
        let floor = CLAMP_FRACTION * h.gamma();
        while f_of_tilt(solve_tilt(h, br.a_minus)?.tilt) > 0.0 && br.c_minus > floor {
            br.c_minus = (0.5 * br.c_minus).max(floor);
            br.a_minus = invert_rate(h, br.c_minus)?.a;
            br.clamped = true;
        }
    }

    let mut warm = f64::NAN;
    let mut prev_tilt = f64::NAN;
    let mut prev_f = f64::NAN;
    let mut found: Option<(f64, f64)> = None; // tilt interval bracketing the root
    let mut first_f = f64::NAN;
    let mut last_f = f64::NAN;
    for i in 0..SCAN_POINTS {
        let frac = i as f64 / (SCAN_POINTS - 1) as f64;
        let a = br.a_minus + frac * (br.a_plus - br.a_minus);
        let dp = solve_tilt_from(h, a, warm)?;
        warm = dp.tilt;
        let f = f_of_tilt(dp.tilt);
        if i == 0 {
            first_f = f;
        }
        last_f = f;
        if f == 0.0 {
            found = Some((dp.tilt, dp.tilt));
            break;
        }
        if i > 0 && (prev_f < 0.0) != (f < 0.0) {
            found = Some((prev_tilt, dp.tilt));
            break;
        }
        prev_tilt = dp.tilt;
        prev_f = f;
    }
    let (mut t_lo, mut t_hi) = found.ok_or(Error::NoRootInBracket {
        f_lo: first_f,
        f_hi: last_f,
    })?;

    // Bisection refinement on the tilt.
    let mut tilt = 0.5 * (t_lo + t_hi);
    if t_lo == t_hi {
        tilt = t_lo;
    } else {
        let f_lo = f_of_tilt(t_lo);
        let mut refined = false;
        for _ in 0..200 {
            tilt = 0.5 * (t_lo + t_hi);
            let f_mid = f_of_tilt(tilt);
            if f_mid.abs() <= 1e-10 {
                refined = true;
                break;
            }
            if (f_mid < 0.0) == (f_lo < 0.0) {
                t_lo = tilt;
            } else {
                t_hi = tilt;
            }
            if t_hi - t_lo <= f64::EPSILON * tilt.abs() {
                refined = f_of_tilt(tilt).abs() <= 1e-9;
                break;
            }
        }
        if !refined && f_of_tilt(tilt).abs() > 1e-9 {
            return Err(Error::NoConvergence {
                op: "coupled refine",
                iterations: 200,
            });
        }
    }

    let center = dual_point_at_tilt(h, tilt);
    let a_tilde = center.a;
    let res1 = f_of_tilt(tilt);
    let res2 = 0.0; // a_tilde is defined as M'(tilt), so the second equation is exact

    let (tilt_x, res3) = if x == 0.0 {
        (tilt, 0.0)
    } else {
        let shifted = a_tilde + x;
        if !(shifted > 0.0 && shifted < sigma) {
            return Err(Error::out_of_range(
                "shifted level a_tilde + x",
                shifted,
                0.0,
                sigma,
            ));
        }
        let dp = solve_tilt_from(h, shifted, tilt)?;
        (dp.tilt, dp.a - shifted)
    };

    Ok(CoupledSolution {
        a_tilde,
        tilt_tilde: tilt,
        tilt_x,
        residuals: [res1, res2, res3],
        bracket: br,
    })
}

/// Solve the asymptotic system `G^*(a) = c`, `G'(t) = a` for a validated (or
/// fixture) field law. `c` must lie in `(0, gamma)`.
pub fn asymptotic_solve(spec: &FieldSpec, bias: SpinBias, c: f64) -> Result<AsymptoticSolution> {
    let moments = spec.moments()?;
    let gamma = moments.gamma(bias);
    if !(c > 0.0 && c < gamma) {
        return Err(Error::out_of_range("rate level c", c, 0.0, gamma));
    }
    // Same parametrization as invert_rate: solve t G'(t) - G(t) = c.
    let conj = |t: f64| -> Result<(f64, f64)> {
        let e = limit_mgf(spec, bias, t, None)?;
        Ok((t * e.d1 - e.value - c, t * e.d2))
    };
    let hi = grow_upper(
        "asymptotic bracket growth",
        |t| conj(t).map(|(r, _)| r).unwrap_or(f64::NAN),
        1.0,
    )?;
    let tol = 1e-10 * c.abs().max(1.0);
    let lambda_hat = solve_increasing(
        "asymptotic solve",
        |t| conj(t).unwrap_or((f64::NAN, f64::NAN)),
        0.0,
        hi,
        f64::NAN,
        |r| r < tol,
    )?;
    let a_hat = limit_mgf(spec, bias, lambda_hat, None)?.d1;
    Ok(AsymptoticSolution {
        a_hat,
        lambda_hat,
        target_c: c,
    })
}
