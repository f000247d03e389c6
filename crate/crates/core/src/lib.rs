//! Desk-scale numerical laboratory for the energy statistics of the tilted
//! spin-field Hamiltonian `E(h, s) = sum_i h_i (s_i - m)` with i.i.d. disorder
//! `h` and independent biased spins `s_i in {-1, 1}`.
//!
//! The crate is organized around the pipeline
//!
//! 1. [`field`] — disorder distributions, sampling, and the summary
//!    functionals of a realized disorder vector;
//! 2. [`mgf`] — the single-spin log-MGF `g`, the conditional log-MGF family
//!    `M_n(h, .)`, and the annealed family `G`;
//! 3. [`legendre`] — tilt/rate inversion of `M_n'` and `M_n^*`, the coupled
//!    finite-n centering system, and its asymptotic counterpart;
//! 4. [`tail`] — sharp tail approximation with exact-enumeration and
//!    tilted-Monte-Carlo oracles, plus envelope bounds;
//! 5. [`process`] — thinned energy point processes and exponential-intensity
//!    Poisson reference statistics;
//! 6. [`gibbs`] — ranked Gibbs weights of retained configurations and
//!    Poisson-Dirichlet reference samples.
//!
//! Everything is deterministic given explicit seeds: all randomness flows
//! through the counter-based streams in [`rng`], so results are independent
//! of thread count and evaluation order.

mod enumerate;
pub mod error;
pub mod field;
pub mod gibbs;
pub mod legendre;
pub mod mgf;
pub mod process;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod tail;

pub use error::{Error, Result};

/// Shortest decimal representation of `x` that parses back to the same bits.
/// All CSV output goes through this so that byte-identical files mean
/// identical numbers.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}
