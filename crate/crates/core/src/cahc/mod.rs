//! Conflict-aware heuristic cache.

pub mod cache;
pub mod fingerprint;
pub mod relevance;

pub use cache::{cached_h, CacheStats, ConflictAwareCache, RelevanceFilter, StateOnlyCache, DEFAULT_CAPACITY};
pub use fingerprint::{ConflictFingerprint, FingerprintBuilder};
pub use relevance::{extract_fingerprint, is_relevant, RelevanceConfig};
