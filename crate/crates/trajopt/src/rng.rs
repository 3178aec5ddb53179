//! Deterministic, hierarchically keyed random number streams.
//!
//! Every source of randomness in this crate flows from a single 64-bit seed.
//! An [`RngStream`] is a cheap value that identifies a point in a key tree;
//! deriving a child with [`RngStream::child`] or [`RngStream::index`] never
//! consumes state from the parent, so sibling streams can be materialized and
//! drawn from in any order (including in parallel) without changing results.

use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::SeedableRng;

/// A keyed position in the deterministic stream tree.
///
/// Identical seed and identical key sequence always yield the identical
/// generator, regardless of what other streams were derived in between.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    state: u64,
}

impl RngStream {
    /// Root stream for a seed.
    pub fn new(seed: u64) -> Self {
        RngStream {
            state: mix(0x6a09_e667_f3bc_c908, seed),
        }
    }

    /// Derive a substream for a named purpose (e.g. `"init"`, `"resample"`).
    pub fn child(&self, label: &str) -> Self {
        RngStream {
            state: mix(self.state, fnv1a(label.as_bytes())),
        }
    }

    /// Derive a substream for an integer key (iteration or sample index).
    pub fn index(&self, i: u64) -> Self {
        RngStream {
            state: mix(self.state, i),
        }
    }

    /// Materialize the generator at this point in the key tree.
    pub fn rng(&self) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(self.state)
    }
}

/// splitmix64 finalizer over the combined state and key.
fn mix(state: u64, key: u64) -> u64 {
    let mut z = state
        .rotate_left(23)
        .wrapping_add(key)
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
