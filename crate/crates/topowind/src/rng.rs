//! Seeded pseudo-random numbers with a frozen value stream.
//!
//! Datasets, weight initialization, shuffles, and dropout masks must be
//! byte-identical across runs, platforms, and dependency upgrades, so the
//! generator is written out here instead of pulled from a crate whose stream
//! could change under a version bump. The core is xoshiro256++ seeded through
//! SplitMix64, both published algorithms with fixed reference outputs.

/// SplitMix64 step: advances `state` and returns the next output.
///
/// Used to expand a single u64 seed into generator state and to fold
/// substream tags into a master seed. Constants are from the reference
/// implementation.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a master seed and a tag path.
///
/// Each distinct tag sequence yields a statistically independent substream,
/// so per-sample generators can be built as
/// `derive_seed(master, &[pattern_index, sample_index])` without coupling
/// the draw order of one sample to any other.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut state = master;
    let mut out = splitmix64(&mut state);
    for &t in tags {
        state ^= t.wrapping_mul(0xd1b54a32d192ed03);
        out = splitmix64(&mut state);
    }
    out
}

/// xoshiro256++ generator with a Box-Muller spare slot for normal draws.
#[derive(Debug, Clone)]
pub struct Rng {
    s: [u64; 4],
    spare_normal: Option<f64>,
}

impl Rng {
    /// Creates a generator from a seed, expanding it via SplitMix64.
    ///
    /// Any seed is valid; the expansion cannot produce the all-zero state.
    pub fn from_seed(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Rng { s, spare_normal: None }
    }

    /// Next raw 64-bit output.
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform f64 in [0, 1), using the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform f64 in the open interval (-1, 1).
    ///
    /// Maps [0,1) to [-1,1) and rejects exact -1, so both endpoints are
    /// excluded.
    pub fn open_pm1(&mut self) -> f64 {
        loop {
            let v = 2.0 * self.next_f64() - 1.0;
            if v != -1.0 {
                return v;
            }
        }
    }

    /// Uniform f64 in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal draw (mean 0, variance 1) via Box-Muller.
    ///
    /// Each transform produces two values; the second is cached and returned
    /// on the next call, so draws come in deterministic pairs.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // 1 - u keeps the argument of ln strictly positive.
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let phi = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * phi.sin());
        r * phi.cos()
    }

    /// Uniform integer in [0, n), unbiased (Lemire's method).
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0) is undefined");
        let mut x = self.next_u64();
        let mut m = (x as u128) * (n as u128);
        let mut low = m as u64;
        if low < n {
            let threshold = n.wrapping_neg() % n;
            while low < threshold {
                x = self.next_u64();
                m = (x as u128) * (n as u128);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }
}
