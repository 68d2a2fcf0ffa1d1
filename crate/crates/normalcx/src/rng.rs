//! Fixed, self-contained pseudo-random number generator.
//!
//! This is splitmix64 (Steele–Lea–Flood's 64-bit mixer, the one java.util
//! `SplittableRandom` popularized): state advances by the golden-gamma
//! constant and is scrambled through two xor-multiply rounds. It is
//! implemented here rather than pulled from a crate so that every seed
//! reproduces the same stream on every platform and toolchain, forever —
//! the Monte Carlo estimates and randomized reports are byte-stable.

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [0, n), unbiased by rejection. Panics if n == 0.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Uniform integer in [lo, hi], inclusive.
    pub fn next_int(&mut self, lo: i64, hi: i64) -> i64 {
        assert!(lo <= hi, "empty range");
        let width = (hi - lo) as u64 + 1;
        lo + self.next_below(width) as i64
    }

    /// Derives an independent child stream (for per-item seeding).
    pub fn fork(&mut self) -> SplitMix64 {
        SplitMix64::new(self.next_u64())
    }
}
