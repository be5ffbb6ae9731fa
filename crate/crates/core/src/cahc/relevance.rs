//! Relevance filter for disc constraints in the continuous car-like domain.

use super::cache::RelevanceFilter;
use super::fingerprint::{ConflictFingerprint, FingerprintBuilder};
use crate::types::{Constraint, Pose, TimedState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelevanceConfig {
    /// Half-width of the time window around the query state, in timesteps.
    pub t_window: u32,
    /// Maximum distance, in meters, from the state-goal segment.
    pub tau_spatial: f64,
}

impl Default for RelevanceConfig {
    fn default() -> Self {
        RelevanceConfig {
            t_window: 100,
            tau_spatial: 10.0,
        }
    }
}

/// Whether `c` can influence the heuristic of `s` toward `g`.
///
/// A constraint passes when its active interval meets
/// `[s.time - t_window, s.time + t_window]` and either its disc comes within
/// `tau_spatial` of the segment from `s` to `g`, or its center lies ahead of
/// `s` in the direction of the goal.
pub fn is_relevant(s: &TimedState, g: &Pose, c: &Constraint, cfg: &RelevanceConfig) -> bool {
    let lo = s.time.saturating_sub(cfg.t_window);
    let hi = s.time.saturating_add(cfg.t_window);
    if !c.overlaps_window(lo, hi) {
        return false;
    }
    let sp = s.pose.position();
    let gp = g.position();
    if c.center.distance_to_segment(&sp, &gp) <= cfg.tau_spatial + c.radius {
        return true;
    }
    let (dx, dy) = (gp.x - sp.x, gp.y - sp.y);
    // the direction needs no normalization for a sign test
    (dx != 0.0 || dy != 0.0) && (c.center.x - sp.x) * dx + (c.center.y - sp.y) * dy > 0.0
}

pub fn extract_fingerprint(
    s: &TimedState,
    g: &Pose,
    constraints: &[Constraint],
    cfg: &RelevanceConfig,
) -> ConflictFingerprint {
    let mut b = FingerprintBuilder::new();
    for c in constraints.iter().filter(|c| is_relevant(s, g, c, cfg)) {
        b.insert(c.id, (c.center.x, c.center.y), c.radius, (c.t_begin, c.t_end));
    }
    b.finish()
}

impl RelevanceFilter<TimedState, Pose, Constraint> for RelevanceConfig {
    fn fingerprint(&self, state: &TimedState, goal: &Pose, constraints: &[Constraint]) -> ConflictFingerprint {
        extract_fingerprint(state, goal, constraints, self)
    }
}
