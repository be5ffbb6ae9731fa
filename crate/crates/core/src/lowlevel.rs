//! Spatiotemporal hybrid-state A* for one car under disc constraints.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;
use std::time::Instant;

use crate::approx::ApproxTable;
use crate::cahc::cache::{CacheStats, ConflictAwareCache, KeyMap, StateOnlyCache, DEFAULT_CAPACITY};
use crate::cahc::fingerprint::ConflictFingerprint;
use crate::cahc::relevance::{extract_fingerprint, RelevanceConfig};
use crate::collision::ObstacleIndex;
use crate::hybrid::{hybrid_h, Branch, HybridConfig};
use crate::reeds_shepp::{advance, rs_exact, rs_path, RsConfig, Steer};
use crate::types::{Constraint, Instance, Kinematics, Path, Pose, Resolution, StateKey, TimedState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeuristicMode {
    Exact,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheMode {
    Off,
    ConflictAware,
    /// Control: one slot per state, reused only under an identical context.
    StateOnly,
}

#[derive(Debug, Clone, Copy)]
pub struct PlannerConfig {
    pub resolution: Resolution,
    pub heuristic: HeuristicMode,
    pub cache: CacheMode,
    pub relevance: RelevanceConfig,
    pub cache_capacity: usize,
    /// Wait cost as a fraction of `step_length`.
    pub wait_cost_factor: f64,
    pub max_expansions: usize,
    /// Analytic goal expansion is tried when the exact distance is below
    /// this many turning radii.
    pub analytic_factor: f64,
    pub deadline: Option<Instant>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            resolution: Resolution::default(),
            heuristic: HeuristicMode::Exact,
            cache: CacheMode::Off,
            relevance: RelevanceConfig::default(),
            cache_capacity: DEFAULT_CAPACITY,
            wait_cost_factor: 0.5,
            max_expansions: 300_000,
            analytic_factor: 2.0,
            deadline: None,
        }
    }
}

impl PlannerConfig {
    pub fn wait_cost(&self, k: &Kinematics) -> f64 {
        self.wait_cost_factor * k.step_length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MotionPrimitive {
    pub steer: Steer,
    pub forward: bool,
}

pub const PRIMITIVES: [MotionPrimitive; 6] = [
    MotionPrimitive { steer: Steer::Left, forward: true },
    MotionPrimitive { steer: Steer::Straight, forward: true },
    MotionPrimitive { steer: Steer::Right, forward: true },
    MotionPrimitive { steer: Steer::Left, forward: false },
    MotionPrimitive { steer: Steer::Straight, forward: false },
    MotionPrimitive { steer: Steer::Right, forward: false },
];

impl MotionPrimitive {
    pub fn apply(&self, pose: &Pose, k: &Kinematics) -> Pose {
        let len = if self.forward { k.step_length } else { -k.step_length };
        advance(pose, self.steer, len, k.turning_radius)
    }

    pub fn cost(&self, k: &Kinematics) -> f64 {
        if self.forward {
            k.step_length
        } else {
            k.step_length * k.reverse_penalty
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchNode {
    pub state: TimedState,
    pub g: f64,
    pub h: f64,
    pub parent: Option<usize>,
}

impl SearchNode {
    pub fn f(&self) -> f64 {
        self.g + self.h
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HeuristicStats {
    pub exact_calls: u64,
    pub approx_calls: u64,
    /// Constraints examined by the relevance filter.
    pub filter_seen: u64,
    /// Constraints the filter kept.
    pub filter_kept: u64,
}

/// Heuristic state owned by one solver run and shared by all of its
/// low-level calls.
#[derive(Debug)]
pub struct HeuristicContext {
    rs: RsConfig,
    table: Option<Arc<ApproxTable>>,
    conflict_aware: ConflictAwareCache<(u32, StateKey)>,
    state_only: StateOnlyCache<(u32, StateKey)>,
    pub stats: HeuristicStats,
}

impl HeuristicContext {
    /// `table` is required for hybrid mode.
    pub fn new(instance: &Instance, cfg: &PlannerConfig, table: Option<Arc<ApproxTable>>) -> Self {
        assert!(
            cfg.heuristic == HeuristicMode::Exact || table.is_some(),
            "hybrid heuristic needs an approximation table"
        );
        let k = &instance.kinematics;
        HeuristicContext {
            rs: RsConfig::new(k.turning_radius, k.reverse_penalty),
            table,
            conflict_aware: ConflictAwareCache::new(cfg.cache_capacity),
            state_only: StateOnlyCache::new(cfg.cache_capacity),
            stats: HeuristicStats::default(),
        }
    }

    pub fn cache_stats(&self, mode: CacheMode) -> CacheStats {
        match mode {
            CacheMode::Off => CacheStats::default(),
            CacheMode::ConflictAware => self.conflict_aware.stats(),
            CacheMode::StateOnly => self.state_only.stats(),
        }
    }

    pub fn conflict_aware_cache(&self) -> &ConflictAwareCache<(u32, StateKey)> {
        &self.conflict_aware
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanError {
    NoPath,
    BudgetExceeded,
    Timeout,
}

impl std::fmt::Display for PlanError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PlanError::NoPath => "no path",
            PlanError::BudgetExceeded => "expansion budget exceeded",
            PlanError::Timeout => "deadline passed",
        })
    }
}

impl std::error::Error for PlanError {}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutput {
    pub path: Path,
    pub expansions: usize,
}

/// Per-instance planner; holds the obstacle index across calls.
#[derive(Debug, Clone)]
pub struct LowLevel<'a> {
    pub instance: &'a Instance,
    pub cfg: PlannerConfig,
    obstacles: ObstacleIndex,
}

struct Query<'c> {
    agent: usize,
    goal: Pose,
    constraints: &'c [Constraint],
    /// From this time on no constraint is active; keys stop tracking time.
    t_static: u32,
    hybrid: Option<HybridConfig>,
}

#[derive(PartialEq)]
struct OpenEntry {
    f: f64,
    g: f64,
    key: StateKey,
    idx: usize,
}

impl Eq for OpenEntry {}

impl Ord for OpenEntry {
    // BinaryHeap pops the maximum: smallest f, then largest g, then smallest key
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(self.g.total_cmp(&other.g))
            .then(other.key.cmp(&self.key))
            .then(other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> LowLevel<'a> {
    pub fn new(instance: &'a Instance, cfg: PlannerConfig) -> Self {
        LowLevel {
            instance,
            cfg,
            obstacles: ObstacleIndex::new(instance),
        }
    }

    fn query<'c>(&self, agent: usize, constraints: &'c [Constraint], rs: &RsConfig) -> Query<'c> {
        let task = &self.instance.agents[agent];
        let t_static = constraints.iter().map(|c| c.t_end.saturating_add(1)).max().unwrap_or(0);
        let hybrid = (self.cfg.heuristic == HeuristicMode::Hybrid).then(|| {
            HybridConfig::for_search(
                self.instance.diagonal(),
                rs,
                &task.start,
                &task.goal,
                self.instance.kinematics.step_length,
            )
        });
        Query {
            agent,
            goal: task.goal,
            constraints,
            t_static,
            hybrid,
        }
    }

    fn key(&self, state: &TimedState, q: &Query) -> StateKey {
        let mut key = self.cfg.resolution.discretize(state);
        key.time = key.time.min(q.t_static);
        key
    }

    fn blocked(&self, p: &Pose, t: u32, q: &Query) -> bool {
        let pt = p.position();
        q.constraints.iter().any(|c| c.blocks(&pt, t))
    }

    /// No constraint touches `p` at or after `t`, so the agent can park there.
    fn can_park(&self, p: &Pose, t: u32, q: &Query) -> bool {
        let pt = p.position();
        q.constraints
            .iter()
            .all(|c| c.t_end < t || c.center.distance_sq(&pt) >= c.radius * c.radius)
    }

    fn motion_free(&self, from: &Pose, to: &Pose) -> bool {
        let mid = crate::types::Point::new(0.5 * (from.x + to.x), 0.5 * (from.y + to.y));
        self.obstacles.is_free(&to.position()) && self.obstacles.is_free(&mid)
    }

    /// Legal successors of `state` with their step costs: the six primitives
    /// and a wait, minus those leaving the map, hitting an obstacle, or
    /// entering an active constraint disc at `time + 1`.
    fn successors(&self, state: &TimedState, q: &Query) -> Vec<(TimedState, f64)> {
        let k = &self.instance.kinematics;
        let t = state.time + 1;
        let mut out = Vec::with_capacity(PRIMITIVES.len() + 1);
        for prim in &PRIMITIVES {
            let next = prim.apply(&state.pose, k);
            if self.motion_free(&state.pose, &next) && !self.blocked(&next, t, q) {
                out.push((TimedState::new(next, t), prim.cost(k)));
            }
        }
        if !self.blocked(&state.pose, t, q) {
            out.push((TimedState::new(state.pose, t), self.cfg.wait_cost(k)));
        }
        out
    }

    fn heuristic(&self, key: &StateKey, g_value: f64, q: &Query, ctx: &mut HeuristicContext) -> f64 {
        let rep = self.cfg.resolution.representative(key);
        let HeuristicContext {
            rs,
            table,
            conflict_aware,
            state_only,
            stats,
        } = ctx;
        let mut base = || match (&q.hybrid, table.as_deref()) {
            (Some(h), Some(table)) => {
                let (v, branch) = hybrid_h(&rep, &q.goal, g_value, h, table, rs);
                match branch {
                    Branch::Exact => stats.exact_calls += 1,
                    Branch::Approximate => stats.approx_calls += 1,
                }
                v
            }
            _ => {
                stats.exact_calls += 1;
                rs_exact(&rep, &q.goal, rs)
            }
        };
        match self.cfg.cache {
            CacheMode::Off => base(),
            mode => {
                let fp = if q.constraints.is_empty() {
                    ConflictFingerprint::empty()
                } else {
                    let fp = extract_fingerprint(&TimedState::new(rep, key.time), &q.goal, q.constraints, &self.cfg.relevance);
                    stats.filter_seen += q.constraints.len() as u64;
                    stats.filter_kept += fp.len() as u64;
                    fp
                };
                let ck = (q.agent as u32, *key);
                if mode == CacheMode::ConflictAware {
                    conflict_aware.get_or_compute(ck, fp, base)
                } else {
                    state_only.get_or_compute(ck, fp, base)
                }
            }
        }
    }

    /// Successor nodes of `node` with heuristic values filled in.
    pub fn expand(
        &self,
        node: &SearchNode,
        agent: usize,
        constraints: &[Constraint],
        ctx: &mut HeuristicContext,
    ) -> Vec<SearchNode> {
        let q = self.query(agent, constraints, &ctx.rs);
        self.successors(&node.state, &q)
            .into_iter()
            .map(|(state, cost)| {
                let g = node.g + cost;
                let key = self.key(&state, &q);
                SearchNode {
                    state,
                    g,
                    h: self.heuristic(&key, g, &q, ctx),
                    parent: None,
                }
            })
            .collect()
    }

    /// Reeds-Shepp connection from `from` to the goal, sampled at one step
    /// per timestep, if every sample is clear. Returns the states after
    /// `from` and their total cost.
    fn analytic(&self, from: &TimedState, q: &Query, rs: &RsConfig) -> Option<(Vec<TimedState>, f64)> {
        let k = &self.instance.kinematics;
        let path = rs_path(&from.pose, &q.goal, rs);
        let samples = path.sample(&from.pose, k.step_length, k.turning_radius);
        let mut prev = from.pose;
        let mut t = from.time;
        let mut states = Vec::with_capacity(samples.len());
        let mut cost = 0.0;
        for (pose, _, len) in samples {
            t += 1;
            if !self.motion_free(&prev, &pose) || self.blocked(&pose, t, q) {
                return None;
            }
            cost += if len < 0.0 { -len * k.reverse_penalty } else { len };
            states.push(TimedState::new(pose, t));
            prev = pose;
        }
        let last = states.last()?;
        self.can_park(&last.pose, last.time, q).then_some((states, cost))
    }

    pub fn plan(
        &self,
        agent: usize,
        constraints: &[Constraint],
        ctx: &mut HeuristicContext,
    ) -> Result<PlanOutput, PlanError> {
        let q = self.query(agent, constraints, &ctx.rs);
        let rs = ctx.rs;
        let k = &self.instance.kinematics;
        let analytic_range = self.cfg.analytic_factor * k.turning_radius;

        let start = TimedState::new(self.instance.agents[agent].start, 0);
        let start_key = self.key(&start, &q);
        let mut nodes = vec![SearchNode {
            state: start,
            g: 0.0,
            h: self.heuristic(&start_key, 0.0, &q, ctx),
            parent: None,
        }];
        // analytic tails hang off terminal nodes
        let mut tails: KeyMap<usize, Vec<TimedState>> = KeyMap::default();
        let mut best_g: KeyMap<StateKey, f64> = KeyMap::default();
        best_g.insert(start_key, 0.0);
        let mut open = BinaryHeap::new();
        open.push(OpenEntry {
            f: nodes[0].f(),
            g: 0.0,
            key: start_key,
            idx: 0,
        });
        let mut expansions = 0;

        while let Some(entry) = open.pop() {
            let node = nodes[entry.idx];
            if let Some(tail) = tails.remove(&entry.idx) {
                let path = self.reconstruct(&nodes, entry.idx, tail);
                return Ok(PlanOutput { path, expansions });
            }
            if best_g.get(&entry.key).is_some_and(|&g| g < node.g) {
                continue;
            }
            if self.cfg.resolution.within_goal_tolerance(&node.state.pose, &q.goal)
                && self.can_park(&node.state.pose, node.state.time, &q)
            {
                let path = self.reconstruct(&nodes, entry.idx, Vec::new());
                return Ok(PlanOutput { path, expansions });
            }
            expansions += 1;
            if expansions > self.cfg.max_expansions {
                return Err(PlanError::BudgetExceeded);
            }
            if expansions % 1024 == 0 && self.cfg.deadline.is_some_and(|d| Instant::now() >= d) {
                return Err(PlanError::Timeout);
            }

            if node.state.pose.distance(&q.goal) < analytic_range
                && rs_exact(&node.state.pose, &q.goal, &rs) < analytic_range
            {
                if let Some((tail, cost)) = self.analytic(&node.state, &q, &rs) {
                    let last = *tail.last().unwrap();
                    let idx = nodes.len();
                    nodes.push(SearchNode {
                        state: last,
                        g: node.g + cost,
                        h: 0.0,
                        parent: Some(entry.idx),
                    });
                    tails.insert(idx, tail);
                    open.push(OpenEntry {
                        f: node.g + cost,
                        g: node.g + cost,
                        key: self.key(&last, &q),
                        idx,
                    });
                }
            }

            for (state, cost) in self.successors(&node.state, &q) {
                let g = node.g + cost;
                let key = self.key(&state, &q);
                if best_g.get(&key).is_some_and(|&old| old <= g) {
                    continue;
                }
                best_g.insert(key, g);
                let h = self.heuristic(&key, g, &q, ctx);
                let idx = nodes.len();
                nodes.push(SearchNode {
                    state,
                    g,
                    h,
                    parent: Some(entry.idx),
                });
                open.push(OpenEntry { f: g + h, g, key, idx });
            }
        }
        Err(PlanError::NoPath)
    }

    fn reconstruct(&self, nodes: &[SearchNode], last: usize, tail: Vec<TimedState>) -> Path {
        let (cost, mut at) = if tail.is_empty() {
            (nodes[last].g, Some(last))
        } else {
            // the terminal node duplicates the tail's final state
            (nodes[last].g, nodes[last].parent)
        };
        let mut states = Vec::new();
        while let Some(i) = at {
            states.push(nodes[i].state);
            at = nodes[i].parent;
        }
        states.reverse();
        states.extend(tail);
        Path { states, cost }
    }
}

/// One-shot convenience wrapper around [`LowLevel::plan`].
pub fn plan_single(
    instance: &Instance,
    agent: usize,
    constraints: &[Constraint],
    cfg: &PlannerConfig,
    ctx: &mut HeuristicContext,
) -> Result<PlanOutput, PlanError> {
    LowLevel::new(instance, *cfg).plan(agent, constraints, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{AgentTask, Obstacle, Point};
    use crate::validate::check_solution;
    use crate::Solution;

    fn corridor() -> Instance {
        Instance {
            width: 30.0,
            height: 10.0,
            obstacles: vec![],
            agents: vec![AgentTask {
                start: Pose::new(5.0, 5.0, 0.0),
                goal: Pose::new(25.0, 5.0, 0.0),
            }],
            kinematics: Kinematics::default(),
        }
    }

    fn run(inst: &Instance, cs: &[Constraint], cfg: PlannerConfig) -> Result<PlanOutput, PlanError> {
        let mut ctx = HeuristicContext::new(inst, &cfg, None);
        plan_single(inst, 0, cs, &cfg, &mut ctx)
    }

    fn assert_valid(inst: &Instance, path: &Path, cfg: &PlannerConfig) {
        let sol = Solution::from_paths(vec![path.clone()]);
        let v = check_solution(inst, &sol, &cfg.resolution, cfg.wait_cost(&inst.kinematics));
        assert!(v.is_empty(), "{v:?}");
    }

    #[test]
    fn straight_corridor() {
        let inst = corridor();
        let cfg = PlannerConfig::default();
        let out = run(&inst, &[], cfg).unwrap();
        assert!((out.path.cost - 20.0).abs() <= inst.kinematics.step_length, "{}", out.path.cost);
        assert_valid(&inst, &out.path, &cfg);
    }

    #[test]
    fn blocking_constraint_costs_more() {
        let inst = corridor();
        let cfg = PlannerConfig::default();
        let free = run(&inst, &[], cfg).unwrap();
        let c = Constraint {
            id: 0,
            agent: 0,
            center: Point::new(15.0, 5.0),
            radius: 2.0 * inst.kinematics.footprint_radius,
            t_begin: 0,
            t_end: 30,
        };
        let blocked = run(&inst, &[c], cfg).unwrap();
        assert!(blocked.path.cost > free.path.cost, "{} vs {}", blocked.path.cost, free.path.cost);
        assert_valid(&inst, &blocked.path, &cfg);
        for s in &blocked.path.states {
            assert!(!c.blocks(&s.pose.position(), s.time));
        }
    }

    #[test]
    fn ringed_goal_has_no_path() {
        let mut inst = corridor();
        inst.width = 40.0;
        inst.height = 40.0;
        inst.agents[0].goal = Pose::new(25.0, 20.0, 0.0);
        inst.agents[0].start = Pose::new(5.0, 20.0, 0.0);
        for i in 0..24 {
            let a = i as f64 * std::f64::consts::TAU / 24.0;
            inst.obstacles.push(Obstacle {
                center: Point::new(25.0 + 4.0 * a.cos(), 20.0 + 4.0 * a.sin()),
                radius: 1.0,
            });
        }
        assert_eq!(run(&inst, &[], PlannerConfig::default()), Err(PlanError::NoPath));
    }

    #[test]
    fn seven_successors_in_the_open() {
        let inst = Instance {
            width: 100.0,
            height: 100.0,
            ..corridor()
        };
        let cfg = PlannerConfig::default();
        let ll = LowLevel::new(&inst, cfg);
        let mut ctx = HeuristicContext::new(&inst, &cfg, None);
        let node = SearchNode {
            state: TimedState::new(Pose::new(50.0, 50.0, 0.0), 3),
            g: 0.0,
            h: 0.0,
            parent: None,
        };
        let succ = ll.expand(&node, 0, &[], &mut ctx);
        assert_eq!(succ.len(), 7);
        assert!(succ.iter().all(|s| s.state.time == 4 && s.f() >= s.g));
    }

    #[test]
    fn constrained_and_out_of_bounds_successors_are_dropped() {
        let inst = corridor();
        let cfg = PlannerConfig::default();
        let ll = LowLevel::new(&inst, cfg);
        let mut ctx = HeuristicContext::new(&inst, &cfg, None);
        // facing the bottom wall: forward moves leave the map
        let node = SearchNode {
            state: TimedState::new(Pose::new(15.0, 1.2, 1.5 * std::f64::consts::PI), 0),
            g: 0.0,
            h: 0.0,
            parent: None,
        };
        let succ = ll.expand(&node, 0, &[], &mut ctx);
        assert_eq!(succ.len(), 4);
        let c = Constraint {
            id: 0,
            agent: 0,
            center: Point::new(15.0, 1.2),
            radius: 0.5,
            t_begin: 1,
            t_end: 1,
        };
        let succ = ll.expand(&node, 0, &[c], &mut ctx);
        // the wait lands inside the disc
        assert_eq!(succ.len(), 3);
    }

    #[test]
    fn cache_does_not_change_the_search() {
        let inst = corridor();
        let c = Constraint {
            id: 0,
            agent: 0,
            center: Point::new(15.0, 5.0),
            radius: 2.0,
            t_begin: 5,
            t_end: 20,
        };
        let off = run(&inst, &[c], PlannerConfig::default()).unwrap();
        let on = run(
            &inst,
            &[c],
            PlannerConfig {
                cache: CacheMode::ConflictAware,
                ..PlannerConfig::default()
            },
        )
        .unwrap();
        assert_eq!(off, on);
    }
}
