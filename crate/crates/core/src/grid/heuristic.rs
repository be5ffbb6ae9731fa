//! Constraint-respecting true distance on the grid, and its relevance filter.

use std::collections::HashMap;

use super::{Cell, GridConstraint, GridConstraintKind, GridMap, GridState};
use crate::cahc::cache::{CacheStats, ConflictAwareCache, RelevanceFilter};
use crate::cahc::fingerprint::{ConflictFingerprint, FingerprintBuilder};

/// Exact cost of the cheapest time-expanded path from `s` to `g` that obeys
/// `constraints` (unit cost per move or wait, counted up to the final
/// arrival at `g`). `f64::INFINITY` if there is none.
pub fn grid_base_h(map: &GridMap, s: &GridState, g: &Cell, constraints: &[GridConstraint]) -> f64 {
    constrained_cost(map, &map.distances_to(g), s, g, constraints)
}

/// [`grid_base_h`] with the static distance field to `g` precomputed.
pub fn constrained_cost(
    map: &GridMap,
    static_dist: &[u32],
    s: &GridState,
    g: &Cell,
    constraints: &[GridConstraint],
) -> f64 {
    let finite = |d: u32| if d == u32::MAX { f64::INFINITY } else { f64::from(d) };
    if !map.is_free(&s.cell) || !map.is_free(g) {
        return f64::INFINITY;
    }
    // only constraints on arrivals after s.time can matter
    let Some(t_last) = constraints.iter().map(|c| c.time).filter(|&t| t > s.time).max() else {
        return finite(static_dist[map.index(&s.cell)]);
    };
    let goal_free_after = |t: u32| {
        !constraints
            .iter()
            .any(|c| c.time > t && matches!(c.kind, GridConstraintKind::Vertex(v) if v == *g))
    };
    let n = map.cell_count();
    let mut layer = vec![false; n];
    layer[map.index(&s.cell)] = true;
    let mut t = s.time;
    loop {
        if layer[map.index(g)] && goal_free_after(t) {
            return f64::from(t - s.time);
        }
        if t == t_last {
            break;
        }
        let mut next = vec![false; n];
        let mut any = false;
        for idx in (0..n).filter(|&i| layer[i]) {
            let from = Cell::new(idx as i32 / map.width, idx as i32 % map.width);
            for to in from.moves() {
                if map.is_free(&to)
                    && !next[map.index(&to)]
                    && !constraints.iter().any(|c| c.forbids(&from, &to, t + 1))
                {
                    next[map.index(&to)] = true;
                    any = true;
                }
            }
        }
        if !any {
            return f64::INFINITY;
        }
        layer = next;
        t += 1;
    }
    // no constraint beyond t_last: finish with static distances
    let best = (0..n)
        .filter(|&i| layer[i])
        .map(|i| static_dist[i])
        .min()
        .unwrap_or(u32::MAX);
    if best == u32::MAX {
        f64::INFINITY
    } else {
        f64::from(t - s.time) + f64::from(best)
    }
}

/// Whether `c` can change any path leaving `s`: the constrained move must be
/// reachable from `s` in time, by Manhattan distance.
pub fn is_relevant(s: &GridState, c: &GridConstraint) -> bool {
    let (cell, at) = match c.kind {
        GridConstraintKind::Vertex(v) => (v, Some(c.time)),
        GridConstraintKind::Edge(from, _) => (from, c.time.checked_sub(1)),
    };
    match at {
        Some(at) if c.time > s.time && at >= s.time => s.cell.manhattan(&cell) <= at - s.time,
        _ => false,
    }
}

pub fn grid_relevance(s: &GridState, _g: &Cell, constraints: &[GridConstraint]) -> ConflictFingerprint {
    let mut b = FingerprintBuilder::new();
    for c in constraints.iter().filter(|c| is_relevant(s, c)) {
        let cell = match c.kind {
            GridConstraintKind::Vertex(v) => v,
            GridConstraintKind::Edge(from, _) => from,
        };
        b.insert(c.id, (f64::from(cell.col), f64::from(cell.row)), 0.5, (c.time, c.time));
    }
    b.finish()
}

/// Reachability-cone filter as a [`RelevanceFilter`].
#[derive(Debug, Clone, Copy, Default)]
pub struct GridFilter;

impl RelevanceFilter<GridState, Cell, GridConstraint> for GridFilter {
    fn fingerprint(&self, state: &GridState, goal: &Cell, constraints: &[GridConstraint]) -> ConflictFingerprint {
        grid_relevance(state, goal, constraints)
    }
}

/// Grid heuristic with optional conflict-aware caching and per-goal static
/// distance fields.
#[derive(Debug)]
pub struct CachedGridHeuristic {
    cache: Option<ConflictAwareCache<(u32, GridState)>>,
    static_fields: HashMap<Cell, Vec<u32>>,
    pub base_calls: u64,
}

impl CachedGridHeuristic {
    pub fn new(cache_capacity: Option<usize>) -> Self {
        CachedGridHeuristic {
            cache: cache_capacity.map(ConflictAwareCache::new),
            static_fields: HashMap::new(),
            base_calls: 0,
        }
    }

    pub fn stats(&self) -> CacheStats {
        self.cache.as_ref().map(|c| c.stats()).unwrap_or_default()
    }

    pub fn h(&mut self, map: &GridMap, agent: usize, s: &GridState, g: &Cell, constraints: &[GridConstraint]) -> f64 {
        let CachedGridHeuristic {
            cache,
            static_fields,
            base_calls,
        } = self;
        let field = static_fields.entry(*g).or_insert_with(|| map.distances_to(g));
        let mut base = || {
            *base_calls += 1;
            constrained_cost(map, field, s, g, constraints)
        };
        match cache {
            None => base(),
            Some(cache) => {
                let fp = grid_relevance(s, g, constraints);
                cache.get_or_compute((agent as u32, *s), fp, base)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vertex(id: u32, row: i32, col: i32, time: u32) -> GridConstraint {
        GridConstraint {
            id,
            agent: 0,
            kind: GridConstraintKind::Vertex(Cell::new(row, col)),
            time,
        }
    }

    #[test]
    fn at_goal_is_zero() {
        let map = GridMap::new(5, 5, &[]);
        let s = GridState::new(Cell::new(2, 2), 4);
        assert_eq!(grid_base_h(&map, &s, &Cell::new(2, 2), &[]), 0.0);
    }

    #[test]
    fn empty_grid_is_manhattan() {
        let map = GridMap::new(5, 5, &[]);
        let s = GridState::new(Cell::new(0, 0), 0);
        assert_eq!(grid_base_h(&map, &s, &Cell::new(0, 4), &[]), 4.0);
    }

    #[test]
    fn vertex_constraint_on_the_way_costs_one_wait() {
        let map = GridMap::new(5, 5, &[]);
        let s = GridState::new(Cell::new(0, 0), 0);
        let h = grid_base_h(&map, &s, &Cell::new(0, 4), &[vertex(0, 0, 2, 2)]);
        assert_eq!(h, 5.0);
    }

    #[test]
    fn later_goal_constraint_forces_a_return() {
        let map = GridMap::new(3, 1, &[]);
        let s = GridState::new(Cell::new(0, 0), 0);
        // arrive at t=2 but the goal is taken at t=5: leave and come back
        let h = grid_base_h(&map, &s, &Cell::new(0, 2), &[vertex(0, 0, 2, 5)]);
        assert_eq!(h, 6.0);
    }

    #[test]
    fn walled_off_goal_is_infinite() {
        let map = GridMap::new(3, 3, &[Cell::new(0, 1), Cell::new(1, 1), Cell::new(2, 1)]);
        let s = GridState::new(Cell::new(0, 0), 0);
        assert!(grid_base_h(&map, &s, &Cell::new(0, 2), &[]).is_infinite());
        assert!(grid_base_h(&map, &s, &Cell::new(0, 2), &[vertex(0, 0, 0, 3)]).is_infinite());
    }

    #[test]
    fn filter_window_and_reach() {
        let s = GridState::new(Cell::new(0, 0), 10);
        assert!(grid_relevance(&s, &Cell::new(0, 4), &[]).is_empty());
        // in the past
        assert!(!is_relevant(&s, &vertex(0, 0, 1, 9)));
        // three cells away, three steps later: reachable
        assert!(is_relevant(&s, &vertex(0, 0, 3, 13)));
        // three cells away, two steps later: not reachable
        assert!(!is_relevant(&s, &vertex(0, 0, 3, 12)));
    }

    #[test]
    fn corridor_constraint_is_kept_and_matters() {
        // one-row corridor: the only route passes (0,2)
        let map = GridMap::new(5, 1, &[]);
        let s = GridState::new(Cell::new(0, 0), 0);
        let g = Cell::new(0, 4);
        let c = vertex(7, 0, 2, 2);
        assert!(grid_relevance(&s, &g, &[c]).contains(7));
        assert_ne!(grid_base_h(&map, &s, &g, &[c]), grid_base_h(&map, &s, &g, &[]));
    }

    #[test]
    fn cache_reuses_values_for_equal_fingerprints() {
        let map = GridMap::new(5, 5, &[]);
        let mut h = CachedGridHeuristic::new(Some(1000));
        let s = GridState::new(Cell::new(0, 0), 0);
        let g = Cell::new(4, 4);
        let near = vertex(0, 0, 1, 1);
        let unreachable = vertex(1, 4, 4, 2);
        let a = h.h(&map, 0, &s, &g, &[near]);
        let b = h.h(&map, 0, &s, &g, &[near, unreachable]);
        assert_eq!(a, b);
        assert_eq!(h.stats().hits, 1);
        assert_eq!(h.base_calls, 1);
    }
}
