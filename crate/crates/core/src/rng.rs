//! Seeded, counter-based randomness.
//!
//! The generator is SplitMix64 read as a counter-mode function: the `k`-th
//! output of a stream keyed by `seed` is `mix(seed + (k + 1) * GAMMA)`. Uniforms
//! take the top 53 bits. Complex standard Gaussians come from one Box–Muller
//! draw in polar form, `z = sqrt(-ln u1) * exp(2πi u2)`, so `E|z|² = 1`.
//!
//! The whole pipeline is identified by [`GENERATOR_ID`]; any implementation
//! that follows the description above reproduces the same streams.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::CMatrix;

pub const GENERATOR_ID: &str = "splitmix64-ctr/box-muller-polar/v1";

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent stream key from a parent seed and a tag.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    mix64(seed ^ mix64(tag.wrapping_add(GAMMA)))
}

#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { key: seed, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Complex Gaussian with `E|z|² = 1`.
    pub fn complex_gaussian(&mut self) -> Complex64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        Complex64::from_polar((-u1.ln()).sqrt(), TAU * u2)
    }

    /// Real standard normal (the real part of `√2 · z`).
    pub fn gaussian(&mut self) -> f64 {
        self.complex_gaussian().re * std::f64::consts::SQRT_2
    }

    pub fn complex_gaussian_vec(&mut self, n: usize) -> Vec<Complex64> {
        (0..n).map(|_| self.complex_gaussian()).collect()
    }

    /// `rows × cols` Ginibre matrix, filled column-major.
    pub fn ginibre(&mut self, rows: usize, cols: usize) -> CMatrix {
        let data = self.complex_gaussian_vec(rows * cols);
        CMatrix::from_vec(rows, cols, data)
    }

    /// Haar-random `n × n` unitary: Gram–Schmidt on a Ginibre matrix, which
    /// fixes the R factor to a positive diagonal.
    pub fn haar_unitary(&mut self, n: usize) -> CMatrix {
        let mut g = self.ginibre(n, n);
        crate::linalg::orthonormalize_columns(&mut g);
        g
    }

    pub fn below(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n.saturating_sub(1))
    }
}
