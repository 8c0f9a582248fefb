//! Counter-based random numbers for reproducible Monte Carlo.
//!
//! Each (seed, stream) pair indexes an independent substream via a
//! splitmix64-style mix, so results never depend on thread scheduling or on
//! how work is batched.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct CounterRng {
    state: u64,
}

impl CounterRng {
    /// Substream `stream` of the generator seeded with `seed`.
    pub fn from_seed_stream(seed: u64, stream: u64) -> Self {
        let state = mix(seed ^ stream.wrapping_mul(GOLDEN).wrapping_add(GOLDEN));
        Self { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform integer in `[0, n)`.
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        // Multiply-shift; the modulo bias is far below anything these
        // simulations can resolve.
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }
}
