//! Conflict-based search on the grid with vertex and edge constraints.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};
use std::time::{Duration, Instant};

use super::heuristic::CachedGridHeuristic;
use super::{Cell, GridAgent, GridConstraint, GridConstraintKind, GridInstance, GridState};
use crate::cahc::{CacheStats, DEFAULT_CAPACITY};

#[derive(Debug, Clone)]
pub struct GridCbsConfig {
    /// Wrap the heuristic in the conflict-aware cache.
    pub cache: bool,
    pub cache_capacity: usize,
    pub timeout: Duration,
    /// Upper bound on expanded constraint-tree nodes.
    pub max_nodes: usize,
}

impl Default for GridCbsConfig {
    fn default() -> Self {
        GridCbsConfig {
            cache: true,
            cache_capacity: DEFAULT_CAPACITY,
            timeout: Duration::from_secs(30),
            max_nodes: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSolution {
    /// One cell per timestep, ending with the final arrival at the goal.
    pub paths: Vec<Vec<Cell>>,
    /// Sum over agents of the final arrival time.
    pub cost: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridConflict {
    Vertex { agents: (usize, usize), cell: Cell, time: u32 },
    /// The agents swap cells between `time - 1` and `time`.
    Edge { agents: (usize, usize), from: Cell, to: Cell, time: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSolveError {
    NoSolution,
    Timeout,
    NodeLimit,
}

#[derive(Debug, Clone, Default)]
pub struct GridSolveStats {
    pub ct_expanded: usize,
    pub ct_generated: usize,
    pub low_level_calls: usize,
    pub expansions: usize,
    pub base_calls: u64,
    pub cache: CacheStats,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct GridSolveReport {
    pub result: Result<GridSolution, GridSolveError>,
    pub stats: GridSolveStats,
}

fn at(path: &[Cell], t: usize) -> Cell {
    path[t.min(path.len() - 1)]
}

/// Earliest conflict; vertex before edge at equal times, then the lowest
/// agent pair.
pub fn first_conflict(paths: &[Vec<Cell>]) -> Option<GridConflict> {
    let horizon = paths.iter().map(Vec::len).max().unwrap_or(0);
    for t in 0..horizon {
        for i in 0..paths.len() {
            for j in i + 1..paths.len() {
                if at(&paths[i], t) == at(&paths[j], t) {
                    return Some(GridConflict::Vertex {
                        agents: (i, j),
                        cell: at(&paths[i], t),
                        time: t as u32,
                    });
                }
            }
        }
        if t == 0 {
            continue;
        }
        for i in 0..paths.len() {
            for j in i + 1..paths.len() {
                let (a0, a1) = (at(&paths[i], t - 1), at(&paths[i], t));
                let (b0, b1) = (at(&paths[j], t - 1), at(&paths[j], t));
                if a0 != a1 && a0 == b1 && a1 == b0 {
                    return Some(GridConflict::Edge {
                        agents: (i, j),
                        from: a0,
                        to: a1,
                        time: t as u32,
                    });
                }
            }
        }
    }
    None
}

/// Number of conflicting (time, pair) events.
pub fn count_conflicts(paths: &[Vec<Cell>]) -> usize {
    let horizon = paths.iter().map(Vec::len).max().unwrap_or(0);
    let mut n = 0;
    for t in 0..horizon {
        for i in 0..paths.len() {
            for j in i + 1..paths.len() {
                let (a1, b1) = (at(&paths[i], t), at(&paths[j], t));
                if a1 == b1 {
                    n += 1;
                } else if t > 0 && at(&paths[i], t - 1) == b1 && at(&paths[j], t - 1) == a1 {
                    n += 1;
                }
            }
        }
    }
    n
}

#[derive(Debug, Clone, Copy)]
struct Open {
    f: f64,
    state: GridState,
    idx: usize,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Open {}
impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Open {
    // min-heap on f, deeper first on ties
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(self.state.time.cmp(&other.state.time))
            .then(other.state.cell.cmp(&self.state.cell))
            .then(other.idx.cmp(&self.idx))
    }
}

/// Space-time A* for one agent; `None` if no path respects `constraints`.
fn plan(
    inst: &GridInstance,
    agent: usize,
    constraints: &[GridConstraint],
    h: &mut CachedGridHeuristic,
    expansions: &mut usize,
) -> Option<Vec<Cell>> {
    let map = &inst.map;
    let GridAgent { start, goal } = inst.agents[agent];
    let last_goal_block = constraints
        .iter()
        .filter(|c| matches!(c.kind, GridConstraintKind::Vertex(v) if v == goal))
        .map(|c| c.time)
        .max();
    let s0 = GridState::new(start, 0);
    let h0 = h.h(map, agent, &s0, &goal, constraints);
    if !h0.is_finite() || constraints.iter().any(|c| c.forbids(&start, &start, 0)) {
        return None;
    }
    let mut nodes: Vec<(GridState, usize)> = vec![(s0, usize::MAX)];
    let mut open = BinaryHeap::from([Open { f: h0, state: s0, idx: 0 }]);
    let mut closed = HashSet::new();
    while let Some(Open { state, idx, .. }) = open.pop() {
        if !closed.insert(state) {
            continue;
        }
        *expansions += 1;
        if state.cell == goal && last_goal_block.map_or(true, |t| t < state.time) {
            let mut path = Vec::with_capacity(state.time as usize + 1);
            let mut i = idx;
            while i != usize::MAX {
                path.push(nodes[i].0.cell);
                i = nodes[i].1;
            }
            path.reverse();
            return Some(path);
        }
        let t = state.time + 1;
        for to in state.cell.moves() {
            let next = GridState::new(to, t);
            if !map.is_free(&to) || closed.contains(&next) || constraints.iter().any(|c| c.forbids(&state.cell, &to, t)) {
                continue;
            }
            let hv = h.h(map, agent, &next, &goal, constraints);
            if !hv.is_finite() {
                continue;
            }
            nodes.push((next, idx));
            open.push(Open {
                f: f64::from(t) + hv,
                state: next,
                idx: nodes.len() - 1,
            });
        }
    }
    None
}

struct CtNode {
    id: usize,
    constraints: Vec<Vec<GridConstraint>>,
    paths: Vec<Vec<Cell>>,
    cost: u64,
    conflicts: usize,
}

fn sum_of_costs(paths: &[Vec<Cell>]) -> u64 {
    paths.iter().map(|p| p.len() as u64 - 1).sum()
}

/// Optimal sum-of-costs CBS. The heuristic is the constraint-respecting
/// distance, optionally behind the conflict-aware cache.
pub fn grid_cbs_solve(inst: &GridInstance, cfg: &GridCbsConfig) -> GridSolveReport {
    let started = Instant::now();
    let mut h = CachedGridHeuristic::new(cfg.cache.then_some(cfg.cache_capacity));
    let mut stats = GridSolveStats::default();
    let result = search(inst, cfg, &mut h, &mut stats, started);
    stats.base_calls = h.base_calls;
    stats.cache = h.stats();
    stats.elapsed = started.elapsed();
    GridSolveReport { result, stats }
}

fn search(
    inst: &GridInstance,
    cfg: &GridCbsConfig,
    h: &mut CachedGridHeuristic,
    stats: &mut GridSolveStats,
    started: Instant,
) -> Result<GridSolution, GridSolveError> {
    let n = inst.agents.len();
    let mut paths = Vec::with_capacity(n);
    for a in 0..n {
        stats.low_level_calls += 1;
        paths.push(plan(inst, a, &[], h, &mut stats.expansions).ok_or(GridSolveError::NoSolution)?);
    }
    let root = CtNode {
        id: 0,
        constraints: vec![Vec::new(); n],
        cost: sum_of_costs(&paths),
        conflicts: count_conflicts(&paths),
        paths,
    };
    let mut nodes = vec![root];
    let mut open = BinaryHeap::from([Reverse((nodes[0].cost, nodes[0].conflicts, 0usize))]);
    stats.ct_generated = 1;
    let mut next_constraint = 0u32;
    while let Some(Reverse((_, _, id))) = open.pop() {
        if started.elapsed() > cfg.timeout {
            return Err(GridSolveError::Timeout);
        }
        if stats.ct_expanded >= cfg.max_nodes {
            return Err(GridSolveError::NodeLimit);
        }
        stats.ct_expanded += 1;
        let Some(conflict) = first_conflict(&nodes[id].paths) else {
            let node = &nodes[id];
            return Ok(GridSolution {
                paths: node.paths.clone(),
                cost: node.cost,
            });
        };
        let branches = match conflict {
            GridConflict::Vertex { agents: (i, j), cell, time } => {
                [(i, GridConstraintKind::Vertex(cell)), (j, GridConstraintKind::Vertex(cell))].map(|b| (b, time))
            }
            GridConflict::Edge { agents: (i, j), from, to, time } => [
                (i, GridConstraintKind::Edge(from, to)),
                (j, GridConstraintKind::Edge(to, from)),
            ]
            .map(|b| (b, time)),
        };
        for ((agent, kind), time) in branches {
            let c = GridConstraint {
                id: next_constraint,
                agent,
                kind,
                time,
            };
            next_constraint += 1;
            let mut constraints = nodes[id].constraints.clone();
            constraints[agent].push(c);
            stats.low_level_calls += 1;
            let Some(path) = plan(inst, agent, &constraints[agent], h, &mut stats.expansions) else {
                continue;
            };
            let mut paths = nodes[id].paths.clone();
            paths[agent] = path;
            let child = CtNode {
                id: nodes.len(),
                cost: sum_of_costs(&paths),
                conflicts: count_conflicts(&paths),
                constraints,
                paths,
            };
            open.push(Reverse((child.cost, child.conflicts, child.id)));
            stats.ct_generated += 1;
            nodes.push(child);
        }
        // expanded nodes are only needed for their children
        nodes[id].paths = Vec::new();
        nodes[id].constraints = Vec::new();
    }
    Err(GridSolveError::NoSolution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{grid_base_h, GridMap};

    fn agent(s: (i32, i32), g: (i32, i32)) -> GridAgent {
        GridAgent {
            start: Cell::new(s.0, s.1),
            goal: Cell::new(g.0, g.1),
        }
    }

    #[test]
    fn single_agent_matches_unconstrained_distance() {
        let map = GridMap::new(6, 5, &[Cell::new(1, 1), Cell::new(2, 1), Cell::new(3, 3)]);
        let inst = GridInstance {
            map,
            agents: vec![agent((0, 0), (4, 5))],
        };
        let rep = grid_cbs_solve(&inst, &GridCbsConfig::default());
        let sol = rep.result.unwrap();
        let h = grid_base_h(&inst.map, &GridState::new(Cell::new(0, 0), 0), &Cell::new(4, 5), &[]);
        assert_eq!(sol.cost as f64, h);
    }

    #[test]
    fn corridor_swap_with_a_bay() {
        // 2x3 with one free bay: two agents swap ends of the top row
        let map = GridMap::new(3, 2, &[Cell::new(1, 0), Cell::new(1, 2)]);
        let inst = GridInstance {
            map,
            agents: vec![agent((0, 0), (0, 2)), agent((0, 2), (0, 0))],
        };
        let sol = grid_cbs_solve(&inst, &GridCbsConfig::default()).result.unwrap();
        assert!(first_conflict(&sol.paths).is_none());
        // one agent ducks into the bay (4), the other waits for it (3)
        assert_eq!(sol.cost, 7);
    }

    #[test]
    fn edge_conflicts_are_found() {
        let a = vec![Cell::new(0, 0), Cell::new(0, 1)];
        let b = vec![Cell::new(0, 1), Cell::new(0, 0)];
        assert!(matches!(
            first_conflict(&[a, b]),
            Some(GridConflict::Edge { time: 1, agents: (0, 1), .. })
        ));
    }

    #[test]
    fn parked_agent_blocks_later_arrivals() {
        let a = vec![Cell::new(0, 1)];
        let b = vec![Cell::new(0, 3), Cell::new(0, 2), Cell::new(0, 1)];
        assert_eq!(
            first_conflict(&[a, b]),
            Some(GridConflict::Vertex {
                agents: (0, 1),
                cell: Cell::new(0, 1),
                time: 2
            })
        );
    }

    #[test]
    fn impossible_swap_reports_no_solution() {
        let inst = GridInstance {
            map: GridMap::new(2, 1, &[]),
            agents: vec![agent((0, 0), (0, 1)), agent((0, 1), (0, 0))],
        };
        let cfg = GridCbsConfig {
            max_nodes: 200,
            ..GridCbsConfig::default()
        };
        assert!(grid_cbs_solve(&inst, &cfg).result.is_err());
    }

    #[test]
    fn cache_does_not_change_costs() {
        let map = GridMap::new(5, 5, &[Cell::new(2, 2)]);
        let inst = GridInstance {
            map,
            agents: vec![agent((0, 0), (4, 4)), agent((4, 4), (0, 0)), agent((0, 4), (4, 0))],
        };
        let on = grid_cbs_solve(&inst, &GridCbsConfig::default());
        let off = grid_cbs_solve(
            &inst,
            &GridCbsConfig {
                cache: false,
                ..GridCbsConfig::default()
            },
        );
        assert_eq!(on.result.unwrap().cost, off.result.unwrap().cost);
        assert!(on.stats.cache.hits > 0);
        assert!(on.stats.base_calls < off.stats.base_calls);
    }
}
