//! Set of already emitted samples, keyed by a stable 128-bit hash.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashSet;
use std::hash::{Hash, Hasher};

use crate::model::Model;

/// Stable across runs of the same build (`DefaultHasher::new` uses fixed
/// keys); two salted halves.
pub fn sample_hash(m: &Model) -> u128 {
    let half = |salt: u64| {
        let mut h = DefaultHasher::new();
        salt.hash(&mut h);
        m.hash(&mut h);
        h.finish() as u128
    };
    (half(0x5eed_0001) << 64) | half(0x5eed_0002)
}

const BLOOM_BITS_PER_ENTRY: usize = 16;
const BLOOM_PROBES: u32 = 11;

struct Bloom {
    bits: Vec<u64>,
}

impl Bloom {
    fn new(entries: usize) -> Self {
        let words = (entries * BLOOM_BITS_PER_ENTRY).div_ceil(64).max(1);
        Bloom { bits: vec![0; words] }
    }

    /// Returns false if `h` was (probably) present.
    fn insert(&mut self, h: u128) -> bool {
        let n = (self.bits.len() * 64) as u64;
        let (a, b) = (h as u64, ((h >> 64) as u64) | 1);
        let mut fresh = false;
        for k in 0..BLOOM_PROBES as u64 {
            let bit = a.wrapping_add(k.wrapping_mul(b)) % n;
            let (w, mask) = ((bit / 64) as usize, 1u64 << (bit % 64));
            if self.bits[w] & mask == 0 {
                fresh = true;
                self.bits[w] |= mask;
            }
        }
        fresh
    }
}

/// Exact up to `cap` entries; beyond that new hashes go to a Bloom filter,
/// which may wrongly report a fresh sample as seen (never the reverse).
pub struct SeenSet {
    exact: HashSet<u128>,
    cap: usize,
    bloom: Option<Bloom>,
}

impl SeenSet {
    pub fn new(cap: usize) -> Self {
        SeenSet {
            exact: HashSet::new(),
            cap,
            bloom: None,
        }
    }

    /// Whether `m` was not seen before; records it.
    pub fn insert(&mut self, m: &Model) -> bool {
        self.insert_hash(sample_hash(m))
    }

    pub fn insert_hash(&mut self, h: u128) -> bool {
        if self.exact.contains(&h) {
            return false;
        }
        if self.exact.len() < self.cap {
            return self.exact.insert(h);
        }
        let cap = self.cap;
        self.bloom.get_or_insert_with(|| Bloom::new(cap)).insert(h)
    }

    /// Whether uniqueness checking has become probabilistic.
    pub fn is_probabilistic(&self) -> bool {
        self.bloom.is_some()
    }
}
