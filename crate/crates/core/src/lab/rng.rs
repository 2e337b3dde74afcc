//! Deterministic counter-based random number generation.
//!
//! Everything stochastic in the lab (data synthesis, weight initialization,
//! dropout masks, contamination draws) runs on this generator, so results
//! are bit-identical across runs, platforms, and schedules. No platform RNG
//! is ever consulted.
//!
//! The generator is specified exactly so streams are portable:
//!
//! - `mix64` is the SplitMix64 finalizer:
//!   `z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
//!    z *= 0x94D049BB133111EB; z ^= z >> 31` (wrapping arithmetic).
//! - A stream with seed `s` produces output `i` (0-based) as
//!   `mix64(s + (i + 1) * 0x9E3779B97F4A7C15)`.
//! - Derived stream seeds are `split(master, index) =
//!   mix64(master ^ mix64((index + 1) * 0x9E3779B97F4A7C15))`.
//! - Uniforms map the top 53 bits into [0, 1); normals use Box-Muller on two
//!   consecutive uniforms with the first shifted into (0, 1].

/// Golden-ratio increment used by SplitMix64.
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent stream seed from a master seed and a stream index.
#[inline]
pub fn split(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Counter-based generator: output n is a pure function of (seed, n).
#[derive(Debug, Clone)]
pub struct CounterRng {
    seed: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.seed.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in [lo, hi).
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.uniform() * (hi - lo)
    }

    /// Standard normal draw via Box-Muller. Consumes two uniforms; the
    /// radius input is shifted into (0, 1] so the logarithm is finite.
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Uniform index in [0, n).
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // 53-bit uniform scaled; bias is negligible for lab-scale n.
        (self.uniform() * n as f64) as usize % n
    }
}
