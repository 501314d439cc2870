//! Deterministic random numbers.
//!
//! Everything stochastic in this crate (synthetic graphs, opinion sampling,
//! the `rand` baseline) goes through [`SplitMix64`] so that a seed pins down
//! the full output. The generator is the splitmix64 finalizer of Steele,
//! Lea and Flood; it is tiny, passes BigCrush, and is trivially
//! reproducible in other languages when cross-checking results.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix(self.state)
    }

    /// Uniform on the open interval (0, 1). Uses the top 53 bits, offset by
    /// half an ulp so neither endpoint can occur (safe to pass to `ln`).
    pub fn open01(&mut self) -> f64 {
        let bits = (self.next_u64() >> 11) as f64;
        (bits + 0.5) * (1.0 / 9007199254740992.0)
    }

    /// Uniform on (-1, 1).
    pub fn uniform_open(&mut self) -> f64 {
        2.0 * self.open01() - 1.0
    }

    /// Standard normal via Box-Muller. Consumes exactly two draws per call;
    /// the sine branch is discarded to keep the draw count per sample fixed.
    pub fn gauss(&mut self) -> f64 {
        let u1 = self.open01();
        let u2 = self.open01();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Fisher-Yates shuffle, iterating from the back of the slice.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = (self.next_u64() % (i as u64 + 1)) as usize;
            items.swap(i, j);
        }
    }
}

/// Stable per-purpose seed derivation, so e.g. the uniform and normal
/// opinion samples of one experiment run do not share a stream.
pub fn derive_seed(base: u64, tag: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for byte in tag.as_bytes() {
        h ^= *byte as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    mix((base ^ h).wrapping_add(GAMMA))
}
