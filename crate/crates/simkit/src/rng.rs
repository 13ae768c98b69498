//! Deterministic random streams for simulation.
//!
//! Draws come from the ChaCha12 counter-based stream cipher keyed by the
//! configured seed; Gaussians use the Box-Muller transform on top of the raw
//! uniform output. Both pieces are exactly specified, so a run is
//! reproducible bit-for-bit from `(seed, draw order)` alone, in any language
//! with a ChaCha implementation.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Seeded Gaussian/uniform stream.
pub struct SimRng {
    inner: ChaCha12Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream for a numbered run: the seed is remixed with the
    /// run index through a SplitMix64-style multiply.
    pub fn for_run(seed: u64, run: u64) -> Self {
        let mixed = seed
            ^ 0x9E37_79B9_7F4A_7C15u64
                .wrapping_mul(run.wrapping_add(1))
                .rotate_left(31);
        Self::new(mixed)
    }

    /// Uniform draw in (0, 1]: the top 53 bits of one `u64`, shifted off
    /// zero so it can feed a logarithm.
    pub fn uniform(&mut self) -> f64 {
        (((self.inner.next_u64() >> 11) + 1) as f64) * (1.0 / 9007199254740992.0)
    }

    /// Standard normal draw via Box-Muller:
    /// `z = sqrt(−2 ln u₁) · cos(2π u₂)`.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn normal_vec3(&mut self, sigma: f64) -> nalgebra::Vector3<f64> {
        nalgebra::Vector3::new(
            self.normal() * sigma,
            self.normal() * sigma,
            self.normal() * sigma,
        )
    }
}
