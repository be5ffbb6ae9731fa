use std::hash::{Hash, Hasher};

/// Number of constraint ids tracked in the fixed bit vector.
pub const ID_BITS: u32 = 256;
const WORDS: usize = (ID_BITS / 64) as usize;

/// Bounding box of the included constraint discs (f32, diagnostics only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialSummary {
    pub min_x: f32,
    pub min_y: f32,
    pub max_x: f32,
    pub max_y: f32,
}

/// Identity of the constraint subset relevant to one heuristic query.
///
/// Equality and hashing only look at the id set. The spatial and temporal
/// summaries are derived from the same constraints and kept for diagnostics
/// and byte accounting.
#[derive(Debug, Clone)]
pub struct ConflictFingerprint {
    bits: [u64; WORDS],
    /// Sorted ids `>= ID_BITS`.
    overflow: Vec<u32>,
    spatial: Option<SpatialSummary>,
    temporal: Option<(u32, u32)>,
    hash: u64,
}

impl ConflictFingerprint {
    pub fn empty() -> Self {
        FingerprintBuilder::new().finish()
    }

    pub fn builder() -> FingerprintBuilder {
        FingerprintBuilder::new()
    }

    pub fn from_ids(ids: impl IntoIterator<Item = u32>) -> Self {
        let mut b = FingerprintBuilder::new();
        for id in ids {
            b.insert_id(id);
        }
        b.finish()
    }

    pub fn contains(&self, id: u32) -> bool {
        if id < ID_BITS {
            self.bits[(id / 64) as usize] & (1 << (id % 64)) != 0
        } else {
            self.overflow.binary_search(&id).is_ok()
        }
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum::<usize>() + self.overflow.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0) && self.overflow.is_empty()
    }

    /// Included ids in increasing order.
    pub fn ids(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.len());
        for (w, &word) in self.bits.iter().enumerate() {
            let mut rest = word;
            while rest != 0 {
                let b = rest.trailing_zeros();
                out.push(w as u32 * 64 + b);
                rest &= rest - 1;
            }
        }
        out.extend_from_slice(&self.overflow);
        out
    }

    pub fn overflow_len(&self) -> usize {
        self.overflow.len()
    }

    pub fn spatial_summary(&self) -> Option<SpatialSummary> {
        self.spatial
    }

    pub fn temporal_summary(&self) -> Option<(u32, u32)> {
        self.temporal
    }

    /// Cached 64-bit hash, computed once in [`FingerprintBuilder::finish`].
    pub fn fingerprint_hash(&self) -> u64 {
        self.hash
    }

    /// Bytes attributed to this fingerprint: 32-byte bit vector, 8 per
    /// overflow id, 16-byte spatial box, 8-byte interval, 8-byte hash.
    pub fn approx_bytes(&self) -> usize {
        32 + 8 * self.overflow.len() + 16 + 8 + 8
    }
}

impl PartialEq for ConflictFingerprint {
    fn eq(&self, other: &Self) -> bool {
        self.hash == other.hash && self.bits == other.bits && self.overflow == other.overflow
    }
}

impl Eq for ConflictFingerprint {}

impl Hash for ConflictFingerprint {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.hash);
    }
}

/// Free function form of [`ConflictFingerprint::fingerprint_hash`].
pub fn fingerprint_hash(fp: &ConflictFingerprint) -> u64 {
    fp.fingerprint_hash()
}

#[derive(Debug, Clone)]
pub struct FingerprintBuilder {
    bits: [u64; WORDS],
    overflow: Vec<u32>,
    spatial: Option<SpatialSummary>,
    temporal: Option<(u32, u32)>,
}

impl Default for FingerprintBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl FingerprintBuilder {
    pub fn new() -> Self {
        FingerprintBuilder {
            bits: [0; WORDS],
            overflow: Vec::new(),
            spatial: None,
            temporal: None,
        }
    }

    pub fn insert_id(&mut self, id: u32) {
        if id < ID_BITS {
            self.bits[(id / 64) as usize] |= 1 << (id % 64);
        } else {
            self.overflow.push(id);
        }
    }

    /// Adds a constraint id together with its disc and active interval.
    pub fn insert(&mut self, id: u32, center: (f64, f64), radius: f64, interval: (u32, u32)) {
        self.insert_id(id);
        let (x, y) = center;
        let disc = SpatialSummary {
            min_x: (x - radius) as f32,
            min_y: (y - radius) as f32,
            max_x: (x + radius) as f32,
            max_y: (y + radius) as f32,
        };
        self.spatial = Some(match self.spatial {
            None => disc,
            Some(s) => SpatialSummary {
                min_x: s.min_x.min(disc.min_x),
                min_y: s.min_y.min(disc.min_y),
                max_x: s.max_x.max(disc.max_x),
                max_y: s.max_y.max(disc.max_y),
            },
        });
        self.temporal = Some(match self.temporal {
            None => interval,
            Some((lo, hi)) => (lo.min(interval.0), hi.max(interval.1)),
        });
    }

    pub fn finish(mut self) -> ConflictFingerprint {
        self.overflow.sort_unstable();
        self.overflow.dedup();
        let hash = hash_ids(&self.bits, &self.overflow);
        ConflictFingerprint {
            bits: self.bits,
            overflow: self.overflow,
            spatial: self.spatial,
            temporal: self.temporal,
            hash,
        }
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-style word chaining with a splitmix64 finalizer after every word;
/// a plain multiply leaves high-bit differences unmixed.
fn hash_ids(bits: &[u64; WORDS], overflow: &[u32]) -> u64 {
    let mut h = FNV_OFFSET;
    let mut feed = |word: u64| {
        h = avalanche((h ^ word).wrapping_mul(FNV_PRIME));
    };
    for &w in bits {
        feed(w);
    }
    for &id in overflow {
        feed(u64::from(id));
    }
    feed(overflow.len() as u64);
    avalanche(h)
}

fn avalanche(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
