use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hash, Hasher};

use super::fingerprint::ConflictFingerprint;

/// Default entry limit.
pub const DEFAULT_CAPACITY: usize = 100_000;

/// Bytes charged for the state key of an entry (position, heading, time).
pub const KEY_BYTES: usize = 12;
/// Bytes charged for the stored heuristic value.
pub const VALUE_BYTES: usize = 8;
/// Bytes charged for hash-table bookkeeping per entry.
pub const TABLE_OVERHEAD_BYTES: usize = 32;

pub fn entry_bytes(fp: &ConflictFingerprint) -> usize {
    KEY_BYTES + fp.approx_bytes() + VALUE_BYTES + TABLE_OVERHEAD_BYTES
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CacheStats {
    pub lookups: u64,
    pub hits: u64,
    pub misses: u64,
    pub evictions: u64,
    pub entries: usize,
    pub peak_entries: usize,
    /// Sum of per-entry byte estimates over the entries currently stored.
    pub approx_bytes: usize,
}

impl CacheStats {
    pub fn hit_rate(&self) -> f64 {
        if self.lookups == 0 {
            0.0
        } else {
            self.hits as f64 / self.lookups as f64
        }
    }

    pub fn bytes_per_entry(&self) -> f64 {
        if self.entries == 0 {
            0.0
        } else {
            self.approx_bytes as f64 / self.entries as f64
        }
    }

    /// One `key=value` record, space separated.
    pub fn dump(&self) -> String {
        format!(
            "lookups={} hits={} misses={} hit_rate={:.6} evictions={} entries={} approx_bytes={}",
            self.lookups,
            self.hits,
            self.misses,
            self.hit_rate(),
            self.evictions,
            self.entries,
            self.approx_bytes
        )
    }

    pub fn merge(&mut self, other: &CacheStats) {
        self.lookups += other.lookups;
        self.hits += other.hits;
        self.misses += other.misses;
        self.evictions += other.evictions;
        self.entries += other.entries;
        self.peak_entries += other.peak_entries;
        self.approx_bytes += other.approx_bytes;
    }
}

/// Multiplicative word hasher; keys are already well mixed (the fingerprint
/// carries an avalanche hash) so a cheap combiner is enough.
#[derive(Default, Clone, Copy)]
pub struct KeyHasher(u64);

const SEED: u64 = 0x517c_c1b7_2722_0a95;

impl Hasher for KeyHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for chunk in bytes.chunks(8) {
            let mut word = [0u8; 8];
            word[..chunk.len()].copy_from_slice(chunk);
            self.write_u64(u64::from_le_bytes(word));
        }
    }

    fn write_u8(&mut self, i: u8) {
        self.write_u64(u64::from(i));
    }

    fn write_u16(&mut self, i: u16) {
        self.write_u64(u64::from(i));
    }

    fn write_u32(&mut self, i: u32) {
        self.write_u64(u64::from(i));
    }

    fn write_i32(&mut self, i: i32) {
        self.write_u64(i as u32 as u64);
    }

    fn write_usize(&mut self, i: usize) {
        self.write_u64(i as u64);
    }

    fn write_u64(&mut self, i: u64) {
        self.0 = (self.0.rotate_left(5) ^ i).wrapping_mul(SEED);
    }
}

pub type KeyMap<K, V> = HashMap<K, V, BuildHasherDefault<KeyHasher>>;

/// Heuristic values keyed on `(state key, fingerprint)`.
///
/// Entries are immutable once written: a stored value is exactly what the
/// base heuristic returned the first time that pair was seen.
#[derive(Debug, Clone)]
pub struct ConflictAwareCache<K> {
    entries: KeyMap<(K, ConflictFingerprint), f64>,
    capacity: usize,
    stats: CacheStats,
}

impl<K: Hash + Eq + Clone> Default for ConflictAwareCache<K> {
    fn default() -> Self {
        Self::new(DEFAULT_CAPACITY)
    }
}

impl<K: Hash + Eq + Clone> ConflictAwareCache<K> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "cache capacity must be at least one entry");
        ConflictAwareCache {
            entries: KeyMap::default(),
            capacity,
            stats: CacheStats::default(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn stats(&self) -> CacheStats {
        self.stats
    }

    pub fn get(&self, key: &K, fp: &ConflictFingerprint) -> Option<f64> {
        // the tuple key forces a clone for lookups without the raw entry API
        self.entries.get(&(key.clone(), fp.clone())).copied()
    }

    /// Cache query: returns the stored value on a hit, otherwise computes,
    /// stores, and returns it.
    pub fn get_or_compute(&mut self, key: K, fp: ConflictFingerprint, compute: impl FnOnce() -> f64) -> f64 {
        self.stats.lookups += 1;
        let slot = (key, fp);
        if let Some(&v) = self.entries.get(&slot) {
            self.stats.hits += 1;
            return v;
        }
        self.stats.misses += 1;
        let value = compute();
        self.evict_if_full();
        self.stats.approx_bytes += entry_bytes(&slot.1);
        self.entries.insert(slot, value);
        self.stats.entries = self.entries.len();
        self.stats.peak_entries = self.stats.peak_entries.max(self.stats.entries);
        value
    }

    /// Clear-half policy: when the cache is full, drop entries in table order
    /// until at most `capacity / 2` remain.
    pub fn evict_if_full(&mut self) {
        if self.entries.len() < self.capacity {
            return;
        }
        let keep = self.capacity / 2;
        let mut surplus = self.entries.len() - keep;
        let mut freed = 0;
        self.entries.retain(|(_, fp), _| {
            if surplus > 0 {
                surplus -= 1;
                freed += entry_bytes(fp);
                false
            } else {
                true
            }
        });
        let removed = self.stats.entries - self.entries.len();
        self.stats.evictions += removed as u64;
        self.stats.approx_bytes -= freed;
        self.stats.entries = self.entries.len();
    }

    /// Average number of distinct fingerprints stored per state key.
    pub fn fingerprints_per_key(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        let mut per_key: KeyMap<&K, usize> = KeyMap::default();
        for (k, _) in self.entries.keys() {
            *per_key.entry(k).or_default() += 1;
        }
        self.entries.len() as f64 / per_key.len() as f64
    }
}

/// Control cache with one slot per state key. A lookup counts as a hit only
/// when the slot was written under the same fingerprint; otherwise the value
/// is recomputed and the slot overwritten.
#[derive(Debug, Clone)]
pub struct StateOnlyCache<K> {
    entries: KeyMap<K, (ConflictFingerprint, f64)>,
    capacity: usize,
    stats: CacheStats,
}

impl<K: Hash + Eq + Clone> StateOnlyCache<K> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "cache capacity must be at least one entry");
        StateOnlyCache {
            entries: KeyMap::default(),
            capacity,
            stats: CacheStats::default(),
        }
    }

    pub fn stats(&self) -> CacheStats {
        self.stats
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get_or_compute(&mut self, key: K, fp: ConflictFingerprint, compute: impl FnOnce() -> f64) -> f64 {
        self.stats.lookups += 1;
        if let Some((stored, v)) = self.entries.get_mut(&key) {
            if *stored == fp {
                self.stats.hits += 1;
                return *v;
            }
            self.stats.misses += 1;
            let value = compute();
            self.stats.approx_bytes = self.stats.approx_bytes + entry_bytes(&fp) - entry_bytes(stored);
            *stored = fp;
            *v = value;
            return value;
        }
        self.stats.misses += 1;
        let value = compute();
        if self.entries.len() >= self.capacity {
            let keep = self.capacity / 2;
            let mut surplus = self.entries.len() - keep;
            let mut freed = 0;
            self.entries.retain(|_, (fp, _)| {
                if surplus > 0 {
                    surplus -= 1;
                    freed += entry_bytes(fp);
                    false
                } else {
                    true
                }
            });
            self.stats.evictions += (self.stats.entries - self.entries.len()) as u64;
            self.stats.approx_bytes -= freed;
        }
        self.stats.approx_bytes += entry_bytes(&fp);
        self.entries.insert(key, (fp, value));
        self.stats.entries = self.entries.len();
        self.stats.peak_entries = self.stats.peak_entries.max(self.stats.entries);
        value
    }
}

/// Domain hook deciding which constraints can influence the heuristic of a
/// state with respect to a goal.
pub trait RelevanceFilter<S, G, C> {
    fn fingerprint(&self, state: &S, goal: &G, constraints: &[C]) -> ConflictFingerprint;
}

/// Heuristic lookup through the conflict-aware cache: extract the
/// fingerprint, return the cached value for `(key, fingerprint)` if present,
/// otherwise evaluate `base_h` and store it.
pub fn cached_h<K, S, G, C, F>(
    key: K,
    state: &S,
    goal: &G,
    constraints: &[C],
    cache: &mut ConflictAwareCache<K>,
    filter: &F,
    base_h: impl FnOnce(&S, &G, &[C]) -> f64,
) -> f64
where
    K: Hash + Eq + Clone,
    F: RelevanceFilter<S, G, C>,
{
    let fp = filter.fingerprint(state, goal, constraints);
    cache.get_or_compute(key, fp, || base_h(state, goal, constraints))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp(ids: &[u32]) -> ConflictFingerprint {
        ConflictFingerprint::from_ids(ids.iter().copied())
    }

    #[test]
    fn miss_then_hit() {
        let mut cache: ConflictAwareCache<u32> = ConflictAwareCache::new(16);
        let mut calls = 0;
        let a = cache.get_or_compute(7, fp(&[1]), || {
            calls += 1;
            3.5
        });
        let b = cache.get_or_compute(7, fp(&[1]), || {
            calls += 1;
            99.0
        });
        assert_eq!((a, b, calls), (3.5, 3.5, 1));
        let s = cache.stats();
        assert_eq!((s.lookups, s.hits, s.misses), (2, 1, 1));
        assert_eq!(s.lookups, s.hits + s.misses);
        assert_eq!(s.hit_rate(), 0.5);
    }

    #[test]
    fn fingerprints_separate_entries() {
        let mut cache: ConflictAwareCache<u32> = ConflictAwareCache::new(16);
        assert_eq!(cache.get_or_compute(1, fp(&[]), || 1.0), 1.0);
        assert_eq!(cache.get_or_compute(1, fp(&[4]), || 2.0), 2.0);
        assert_eq!(cache.len(), 2);
        assert_eq!(cache.fingerprints_per_key(), 2.0);
    }

    #[test]
    fn clear_half_on_overflow() {
        let mut cache: ConflictAwareCache<u32> = ConflictAwareCache::new(4);
        for k in 0..5 {
            cache.get_or_compute(k, fp(&[]), || f64::from(k));
        }
        let s = cache.stats();
        assert_eq!(s.evictions, 2);
        assert_eq!(cache.len(), 3);
        assert_eq!(cache.get(&4, &fp(&[])), Some(4.0));
        assert!(cache.len() <= cache.capacity());
        assert_eq!(s.approx_bytes, 3 * entry_bytes(&fp(&[])));
    }

    #[test]
    fn no_eviction_below_capacity() {
        let mut cache: ConflictAwareCache<u32> = ConflictAwareCache::default();
        for k in 0..99_999 {
            cache.get_or_compute(k, fp(&[]), || 0.0);
        }
        cache.get_or_compute(100_000, fp(&[]), || 0.0);
        assert_eq!(cache.stats().evictions, 0);
        assert_eq!(cache.len(), 100_000);
    }

    #[test]
    fn evicted_entries_recompute_the_same_value() {
        let base = |k: u32| f64::from(k) * 1.25 + 0.5;
        let mut cache: ConflictAwareCache<u32> = ConflictAwareCache::new(8);
        for k in 0..8 {
            cache.get_or_compute(k, fp(&[k]), || base(k));
        }
        cache.get_or_compute(100, fp(&[]), || base(100));
        assert!(cache.stats().evictions > 0);
        for k in 0..8 {
            assert_eq!(cache.get_or_compute(k, fp(&[k]), || base(k)), base(k));
            assert!(cache.len() <= 8);
        }
    }

    #[test]
    fn entry_byte_model() {
        assert_eq!(entry_bytes(&fp(&[1, 2, 3])), 12 + 64 + 8 + 32);
        assert_eq!(entry_bytes(&fp(&[1, 300])), 12 + 72 + 8 + 32);
    }

    #[test]
    fn state_only_control_counts_context_changes_as_misses() {
        let mut cache: StateOnlyCache<u32> = StateOnlyCache::new(8);
        cache.get_or_compute(1, fp(&[]), || 1.0);
        cache.get_or_compute(1, fp(&[2]), || 2.0);
        assert_eq!(cache.get_or_compute(1, fp(&[]), || 1.0), 1.0);
        assert_eq!(cache.get_or_compute(1, fp(&[]), || 9.0), 1.0);
        let s = cache.stats();
        assert_eq!((s.lookups, s.hits, s.misses), (4, 1, 3));
        assert_eq!(cache.len(), 1);
    }

    #[test]
    fn dump_has_every_field() {
        let line = CacheStats::default().dump();
        for field in ["lookups=", "hits=", "misses=", "hit_rate=", "evictions=", "entries=", "approx_bytes="] {
            assert!(line.contains(field), "{line}");
        }
    }
}
