//! The seeded random stream used by every run.
//!
//! Streams are xoshiro256++ generators seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64`). Uniforms take the top 53 bits of
//! each output and are shifted by half a step so that they lie in the open
//! interval (0, 1). Normal variates are produced by inverse-CDF transform,
//! one uniform per variate, so the stream position is a pure function of
//! the number of draws.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::normal;

pub type Stream = Xoshiro256PlusPlus;

pub fn stream(seed: u64) -> Stream {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Seed for Monte-Carlo run `run` of an experiment with base seed `base`.
pub fn run_seed(base: u64, run: u64) -> u64 {
    base.wrapping_add(run)
}

pub fn uniform_open<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    ((rng.next_u64() >> 11) as f64 + 0.5) * SCALE
}

pub fn uniform<R: RngCore + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform_open(rng)
}

pub fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    normal::inverse_cdf(uniform_open(rng))
}
