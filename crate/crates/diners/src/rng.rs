//! Small deterministic generators: a splitmix64 sequence for shuffles and
//! graph sampling, and a counter-keyed mix so per-vertex choice streams can
//! be evaluated at any (seed, vertex, step) point independently of order.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stateless mix of a seed with two counters. Equal arguments always give
/// equal results, so streams keyed this way are replayable and order-free.
pub(crate) fn mix3(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed;
    z = splitmix64(z.wrapping_add(GOLDEN).wrapping_add(a.wrapping_mul(0xD6E8_FEB8_6659_FD93)));
    z = splitmix64(z.wrapping_add(b.wrapping_mul(0xCA5A_8263_9512_1157)));
    splitmix64(z)
}

/// Map a 64-bit value to a float in [0, 1).
pub(crate) fn unit_f64(x: u64) -> f64 {
    (x >> 11) as f64 / (1u64 << 53) as f64
}

/// Sequential splitmix64 stream.
#[derive(Debug, Clone)]
pub(crate) struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub(crate) fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub(crate) fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        splitmix64(self.state)
    }

    /// Uniform value in `[0, bound)`; `bound` must be nonzero.
    pub(crate) fn below(&mut self, bound: u64) -> u64 {
        // Modulo bias is irrelevant at the sizes used here (test graphs,
        // neighbour shuffles).
        self.next_u64() % bound
    }

    pub(crate) fn chance(&mut self, p: f64) -> bool {
        unit_f64(self.next_u64()) < p
    }

    pub(crate) fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
