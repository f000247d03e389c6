//! Gray-code enumeration over spin configurations with incremental updates.
//!
//! Configurations of `n` spins are identified with `u64` ranks: bit `i` set
//! means spin `i` is `+1`. Enumeration walks the binary-reflected Gray code,
//! so each step flips one spin and the energy and product weight update in
//! O(1). The walk is split into fixed-size segments that are processed in
//! parallel and merged in segment order, which keeps results independent of
//! thread count; each segment re-derives its starting energy and weight from
//! scratch, which also bounds incremental rounding drift.

use crate::error::{Error, Result};
use crate::field::FieldSample;
use rayon::prelude::*;

/// Hard enumeration budget: `2^26` configurations.
pub(crate) const ENUM_LIMIT: usize = 26;

const SEGMENT_BITS: usize = 12;

#[inline]
fn gray(k: u64) -> u64 {
    k ^ (k >> 1)
}

/// State of one configuration during the walk.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Config {
    /// Rank: bit `i` set means spin `i` is `+1`. Independent of walk order.
    pub rank: u64,
    /// Energy `sum_i h_i (s_i - m)`.
    pub energy: f64,
    /// Probability weight `prod_i (1 + m s_i) / 2`.
    pub weight: f64,
}

fn config_from_rank(h: &FieldSample, rank: u64) -> Config {
    let m = h.bias().m();
    let mut energy = 0.0;
    let mut plus = 0u32;
    for (i, &hi) in h.values().iter().enumerate() {
        if rank >> i & 1 == 1 {
            energy += hi * (1.0 - m);
            plus += 1;
        } else {
            energy += hi * (-1.0 - m);
        }
    }
    let n = h.len() as i32;
    let weight = (0.5 * (1.0 + m)).powi(plus as i32) * (0.5 * (1.0 - m)).powi(n - plus as i32);
    Config {
        rank,
        energy,
        weight,
    }
}

/// Visit all `2^n` configurations, folding each segment into an accumulator
/// and merging accumulators in fixed segment order.
pub(crate) fn enum_reduce<A, I, V, M>(h: &FieldSample, init: I, visit: V, merge: M) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    V: Fn(&mut A, &Config) + Sync,
    M: Fn(A, A) -> A,
{
    let n = h.len();
    if n > ENUM_LIMIT {
        return Err(Error::TooLarge { n, max: ENUM_LIMIT });
    }
    let total: u64 = 1u64 << n;
    let seg_len: u64 = 1u64 << SEGMENT_BITS.min(n);
    let segments = total / seg_len;
    let m = h.bias().m();
    // Flip ratios: multiplying by ratio_up corresponds to a spin going -1 -> +1.
    let ratio_up = (1.0 + m) / (1.0 - m);
    let ratio_down = (1.0 - m) / (1.0 + m);
    let values = h.values();

    let partials: Vec<A> = (0..segments)
        .into_par_iter()
        .map(|s| {
            let start = s * seg_len;
            let mut acc = init();
            let mut cfg = config_from_rank(h, gray(start));
            visit(&mut acc, &cfg);
            for k in start + 1..start + seg_len {
                let bit = k.trailing_zeros() as usize;
                let hi = values[bit];
                if cfg.rank >> bit & 1 == 0 {
                    cfg.rank |= 1 << bit;
                    cfg.energy += 2.0 * hi;
                    cfg.weight *= ratio_up;
                } else {
                    cfg.rank &= !(1 << bit);
                    cfg.energy -= 2.0 * hi;
                    cfg.weight *= ratio_down;
                }
                visit(&mut acc, &cfg);
            }
            acc
        })
        .collect();

    Ok(partials
        .into_iter()
        .reduce(merge)
        .expect("at least one segment"))
}
