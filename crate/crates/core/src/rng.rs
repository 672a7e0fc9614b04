//! SplitMix64 stream and Box-Muller normal deviates.
//!
//! Both are specified bit-for-bit so noise fields can be regenerated in any
//! language from `(seed, sigma)` alone:
//!
//! * `next_u64` is the reference SplitMix64 step (golden-gamma increment, two
//!   xor-shift-multiply rounds).
//! * uniforms are `((x >> 11) + 1) * 2^-53`, i.e. in `(0, 1]`, so `ln` never sees zero.
//! * each pair of uniforms `(u1, u2)` yields `r*cos(2*pi*u2)` then `r*sin(2*pi*u2)`
//!   with `r = sqrt(-2 ln u1)`.

use std::f64::consts::TAU;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform deviate in `(0, 1]`.
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Standard normal deviates from a SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct Gaussian {
    rng: SplitMix64,
    spare: Option<f64>,
}

impl Gaussian {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: SplitMix64::new(seed),
            spare: None,
        }
    }

    pub fn next_standard(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.rng.next_open01();
        let u2 = self.rng.next_open01();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Derives an independent stream seed from a base seed and a path of indices.
///
/// Each index is folded in with one SplitMix64 step so that neighbouring cells
/// (trial 3 vs trial 4) land on unrelated streams.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    let mut acc = SplitMix64::new(base).next_u64();
    for &i in path {
        acc = SplitMix64::new(acc ^ i.wrapping_mul(0xD6E8_FEB8_6659_FD93)).next_u64();
    }
    acc
}
