//! Seeded random number generation for reproducible sampling.

/// SplitMix64 generator (Steele/Lea/Vigna). 64-bit state, full 2^64 period,
/// and well-behaved even for consecutive integer seeds, which is exactly how
/// the CLI hands out seeds.
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

    /// Uniform draw from `0..bound` via rejection sampling, so the result is
    /// exactly uniform rather than modulo-biased.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be positive");
        let zone = u64::MAX - u64::MAX % bound;
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % bound;
            }
        }
    }
}

/// First `n` entries of a uniform random permutation of `0..count`
/// (partial Fisher-Yates shuffle). Panics if `n > count`.
pub fn sample_without_replacement(count: usize, n: usize, rng: &mut SplitMix64) -> Vec<usize> {
    assert!(n <= count, "cannot draw {n} items from {count}");
    let mut pool: Vec<usize> = (0..count).collect();
    for i in 0..n {
        let j = i + rng.next_below((count - i) as u64) as usize;
        pool.swap(i, j);
    }
    pool.truncate(n);
    pool
}
