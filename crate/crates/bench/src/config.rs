//! Named solver configurations.

use std::fmt;
use std::str::FromStr;

use anyhow::{bail, Error};
use carchase::lowlevel::{CacheMode, HeuristicMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BenchConfig {
    /// Exact heuristic, no cache.
    Baseline,
    /// Hybrid heuristic behind the conflict-aware cache.
    Carchase,
    /// Exact heuristic behind the conflict-aware cache.
    CacheOnly,
    /// Hybrid heuristic, no cache.
    HybridOnly,
    /// Hybrid heuristic behind a cache keyed on state alone (control).
    StateOnly,
}

impl BenchConfig {
    pub const ALL: [BenchConfig; 5] = [
        BenchConfig::Baseline,
        BenchConfig::Carchase,
        BenchConfig::CacheOnly,
        BenchConfig::HybridOnly,
        BenchConfig::StateOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchConfig::Baseline => "baseline",
            BenchConfig::Carchase => "carchase",
            BenchConfig::CacheOnly => "cache-only",
            BenchConfig::HybridOnly => "hybrid-only",
            BenchConfig::StateOnly => "state-only",
        }
    }

    pub fn modes(self) -> (HeuristicMode, CacheMode) {
        match self {
            BenchConfig::Baseline => (HeuristicMode::Exact, CacheMode::Off),
            BenchConfig::Carchase => (HeuristicMode::Hybrid, CacheMode::ConflictAware),
            BenchConfig::CacheOnly => (HeuristicMode::Exact, CacheMode::ConflictAware),
            BenchConfig::HybridOnly => (HeuristicMode::Hybrid, CacheMode::Off),
            BenchConfig::StateOnly => (HeuristicMode::Hybrid, CacheMode::StateOnly),
        }
    }

    pub fn uses_table(self) -> bool {
        self.modes().0 == HeuristicMode::Hybrid
    }

    /// Grid instances only distinguish cache on/off.
    pub fn grid_cache(self) -> bool {
        self.modes().1 == CacheMode::ConflictAware
    }
}

impl fmt::Display for BenchConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match BenchConfig::ALL.into_iter().find(|c| c.name() == s) {
            Some(c) => Ok(c),
            None => bail!(
                "unknown config `{s}` (expected one of {})",
                BenchConfig::ALL.map(|c| c.name()).join(", ")
            ),
        }
    }
}

/// Parses a comma-separated config list.
pub fn parse_configs(list: &str) -> Result<Vec<BenchConfig>, Error> {
    list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for c in BenchConfig::ALL {
            assert_eq!(c.name().parse::<BenchConfig>().unwrap(), c);
        }
        assert!("fast".parse::<BenchConfig>().is_err());
        assert_eq!(
            parse_configs("baseline, carchase").unwrap(),
            vec![BenchConfig::Baseline, BenchConfig::Carchase]
        );
    }
}
