//! Counter-based, keyed random number streams.
//!
//! Every random quantity in the crate is derived from a root seed through an
//! explicit key: `StreamKey::new(seed, purpose)` folds a purpose string into
//! the seed, `child(index)` derives independent substreams, and `u64_at`
//! evaluates the stream at an arbitrary counter in O(1). The counter-based
//! form is what makes enumeration-order and thread-count independence
//! possible: the uniform attached to configuration rank `r` is
//! `key.uniform_at(r)`, no matter which worker visits `r` first.
//!
//! The generator is the splitmix64 sequence (Weyl increment + 64-bit
//! finalizer), evaluated at `state + counter * GOLDEN`.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// splitmix64 finalizer.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over a byte string, used to fold purpose labels into keys.
#[inline]
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h = (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// A keyed, counter-addressable random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    state: u64,
}

impl StreamKey {
    /// Derive a key from a root seed and a purpose label.
    pub fn new(seed: u64, purpose: &str) -> Self {
        StreamKey {
            state: mix(seed ^ mix(fnv1a(purpose.as_bytes()))),
        }
    }

    /// Derive an independent substream (block index, replicate index, ...).
    #[must_use]
    pub fn child(self, index: u64) -> Self {
        StreamKey {
            state: mix(self.state ^ mix(index.wrapping_mul(GOLDEN).wrapping_add(1))),
        }
    }

    /// The raw 64-bit output at a given counter.
    #[inline]
    pub fn u64_at(self, counter: u64) -> u64 {
        mix(self.state.wrapping_add(counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in `[0, 1)` at a given counter (53-bit mantissa).
    #[inline]
    pub fn uniform_at(self, counter: u64) -> f64 {
        (self.u64_at(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Sequential view of this stream starting at counter 0.
    pub fn stream(self) -> Stream {
        Stream {
            key: self,
            counter: 0,
            gauss_spare: None,
        }
    }
}

/// Sequential sampler over a [`StreamKey`].
#[derive(Debug, Clone)]
pub struct Stream {
    key: StreamKey,
    counter: u64,
    gauss_spare: Option<f64>,
}

impl Stream {
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = self.key.u64_at(self.counter);
        self.counter += 1;
        v
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in the open interval `(0, 1)`; safe to take logarithms of.
    #[inline]
    pub fn next_uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller (pairs cached).
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.gauss_spare.take() {
            return z;
        }
        let u1 = self.next_uniform_open();
        let u2 = self.next_uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let t = 2.0 * std::f64::consts::PI * u2;
        self.gauss_spare = Some(r * t.sin());
        r * t.cos()
    }

    /// Exponential with unit rate.
    #[inline]
    pub fn next_exp(&mut self) -> f64 {
        -self.next_uniform_open().ln()
    }

    /// Poisson count with the given mean (product-of-uniforms method;
    /// intended for the desk-scale means used here).
    pub fn next_poisson(&mut self, mean: f64) -> u64 {
        assert!(mean >= 0.0 && mean.is_finite());
        // For larger means, split into chunks so the running product stays
        // away from the underflow threshold.
        let mut remaining = mean;
        let mut total = 0u64;
        while remaining > 0.0 {
            let chunk = remaining.min(500.0);
            remaining -= chunk;
            let limit = (-chunk).exp();
            let mut prod = 1.0f64;
            loop {
                prod *= self.next_uniform_open();
                if prod < limit {
                    break;
                }
                total += 1;
            }
        }
        total
    }
}
