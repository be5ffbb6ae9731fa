//! Conflict-based search over car paths.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use log::{debug, info, trace};

use crate::approx::ApproxTable;
use crate::cahc::cache::CacheStats;
use crate::lowlevel::{HeuristicContext, HeuristicStats, LowLevel, PlanError, PlannerConfig};
use crate::types::{Constraint, Instance, Path, Point, Solution};

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub planner: PlannerConfig,
    pub timeout: Duration,
    /// Give up after this many constraint-tree expansions.
    pub max_nodes: u64,
    pub batch_size: usize,
    /// Progress line every this many constraint-tree expansions.
    pub log_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            planner: PlannerConfig::default(),
            timeout: Duration::from_secs(120),
            max_nodes: u64::MAX,
            batch_size: 20,
            log_every: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conflict {
    pub agents: (usize, usize),
    pub time: u32,
    pub location: Point,
}

#[derive(Debug, Clone)]
pub struct HighLevelNode {
    pub id: u64,
    /// Constraint list per agent.
    pub constraints: Vec<Vec<Constraint>>,
    pub paths: Vec<Arc<Path>>,
    pub cost: f64,
    pub conflicts: usize,
}

struct Ranked(HighLevelNode);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl Ord for Ranked {
    // min-heap on (cost, conflicts, id)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .cost
            .total_cmp(&self.0.cost)
            .then(other.0.conflicts.cmp(&self.0.conflicts))
            .then(other.0.id.cmp(&self.0.id))
    }
}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveError {
    Timeout,
    NodeLimit,
    /// Some agent has no path even without inter-agent constraints, or the
    /// constraint tree ran dry.
    NoSolution,
}

impl std::fmt::Display for SolveError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveError::Timeout => "timeout",
            SolveError::NodeLimit => "node limit",
            SolveError::NoSolution => "no solution",
        })
    }
}

impl std::error::Error for SolveError {}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub ct_expanded: u64,
    pub ct_generated: u64,
    pub low_level_calls: u64,
    pub low_level_failures: u64,
    pub expansions: u64,
    pub constraints_created: u32,
    pub heuristic: HeuristicStats,
    pub cache: CacheStats,
    /// Distinct fingerprints per (agent, state key) in the conflict-aware cache.
    pub fingerprints_per_key: f64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub result: Result<Solution, SolveError>,
    pub stats: SolveStats,
}

fn overlap(a: &Point, b: &Point, footprint: f64) -> bool {
    let d = 2.0 * footprint;
    a.distance_sq(b) < d * d
}

/// Earliest timestep at which two footprint discs overlap, lowest agent pair
/// first. Agents past the end of their path are parked at the final pose.
pub fn detect_first_conflict<P: AsRef<Path>>(paths: &[P], footprint_radius: f64) -> Option<Conflict> {
    let horizon = paths.iter().map(|p| p.as_ref().end_time()).max()?;
    for t in 0..=horizon {
        for i in 0..paths.len() {
            let a = paths[i].as_ref().pose_at(t).position();
            for (j, other) in paths.iter().enumerate().skip(i + 1) {
                let b = other.as_ref().pose_at(t).position();
                if overlap(&a, &b, footprint_radius) {
                    return Some(Conflict {
                        agents: (i, j),
                        time: t,
                        location: Point::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y)),
                    });
                }
            }
        }
    }
    None
}

/// Number of (timestep, pair) overlaps.
pub fn count_conflicts<P: AsRef<Path>>(paths: &[P], footprint_radius: f64) -> usize {
    let horizon = paths.iter().map(|p| p.as_ref().end_time()).max().unwrap_or(0);
    let mut n = 0;
    for t in 0..=horizon {
        let pos: Vec<Point> = paths.iter().map(|p| p.as_ref().pose_at(t).position()).collect();
        for i in 0..pos.len() {
            n += pos[i + 1..].iter().filter(|b| overlap(&pos[i], b, footprint_radius)).count();
        }
    }
    n
}

/// Constraint keeping `agent` away from `other`'s pose at the conflict time,
/// padded by one step on either side.
pub fn conflict_constraint(id: u32, agent: usize, other: &Path, t: u32, footprint_radius: f64) -> Constraint {
    Constraint {
        id,
        agent,
        center: other.pose_at(t).position(),
        radius: 2.0 * footprint_radius,
        t_begin: t.saturating_sub(1),
        t_end: t + 1,
    }
}

/// Shared state of one solve: low-level planner, heuristic context, counters.
pub struct Cbs<'a> {
    low: LowLevel<'a>,
    ctx: HeuristicContext,
    cfg: SolverConfig,
    next_constraint: u32,
    next_node: u64,
    stats: SolveStats,
}

impl<'a> Cbs<'a> {
    pub fn new(instance: &'a Instance, cfg: SolverConfig, table: Option<Arc<ApproxTable>>) -> Self {
        let ctx = HeuristicContext::new(instance, &cfg.planner, table);
        Cbs {
            low: LowLevel::new(instance, cfg.planner),
            ctx,
            cfg,
            next_constraint: 0,
            next_node: 0,
            stats: SolveStats::default(),
        }
    }

    fn instance(&self) -> &'a Instance {
        self.low.instance
    }

    pub fn fresh_constraint_id(&mut self) -> u32 {
        let id = self.next_constraint;
        self.next_constraint += 1;
        id
    }

    fn fresh_node_id(&mut self) -> u64 {
        let id = self.next_node;
        self.next_node += 1;
        self.stats.ct_generated += 1;
        id
    }

    fn replan(&mut self, agent: usize, constraints: &[Constraint]) -> Result<Option<Path>, SolveError> {
        self.stats.low_level_calls += 1;
        match self.low.plan(agent, constraints, &mut self.ctx) {
            Ok(out) => {
                self.stats.expansions += out.expansions as u64;
                Ok(Some(out.path))
            }
            Err(PlanError::Timeout) => Err(SolveError::Timeout),
            Err(e) => {
                debug!("agent {agent}: {e} under {} constraints", constraints.len());
                self.stats.low_level_failures += 1;
                Ok(None)
            }
        }
    }

    fn make_node(&mut self, constraints: Vec<Vec<Constraint>>, paths: Vec<Arc<Path>>, batch: &[usize]) -> HighLevelNode {
        let fr = self.instance().kinematics.footprint_radius;
        let members: Vec<&Arc<Path>> = batch.iter().map(|&a| &paths[a]).collect();
        HighLevelNode {
            id: self.fresh_node_id(),
            cost: batch.iter().map(|&a| paths[a].cost).sum(),
            conflicts: count_conflicts(&members, fr),
            constraints,
            paths,
        }
    }

    /// Two children, one per agent of the conflict; a child whose agent
    /// cannot be replanned is dropped.
    pub fn branch(
        &mut self,
        node: &HighLevelNode,
        conflict: &Conflict,
        batch: &[usize],
    ) -> Result<Vec<HighLevelNode>, SolveError> {
        let fr = self.instance().kinematics.footprint_radius;
        let (i, j) = conflict.agents;
        let mut children = Vec::with_capacity(2);
        for (agent, other) in [(i, j), (j, i)] {
            let id = self.fresh_constraint_id();
            self.stats.constraints_created += 1;
            let c = conflict_constraint(id, agent, &node.paths[other], conflict.time, fr);
            let mut constraints = node.constraints.clone();
            constraints[agent].push(c);
            if let Some(path) = self.replan(agent, &constraints[agent])? {
                let mut paths = node.paths.clone();
                paths[agent] = Arc::new(path);
                children.push(self.make_node(constraints, paths, batch));
            }
        }
        Ok(children)
    }

    /// CBS over `batch`, with every other agent's constraints fixed in
    /// `base`. Returns the batch paths written into `base_paths`.
    fn solve_batch(
        &mut self,
        batch: &[usize],
        base: Vec<Vec<Constraint>>,
        mut base_paths: Vec<Arc<Path>>,
        deadline: Instant,
    ) -> Result<Vec<Arc<Path>>, SolveError> {
        let fr = self.instance().kinematics.footprint_radius;
        for &a in batch {
            match self.replan(a, &base[a])? {
                Some(p) => base_paths[a] = Arc::new(p),
                None => return Err(SolveError::NoSolution),
            }
        }
        let root = self.make_node(base, base_paths, batch);
        let mut open = BinaryHeap::new();
        open.push(Ranked(root));
        while let Some(Ranked(node)) = open.pop() {
            if Instant::now() >= deadline {
                return Err(SolveError::Timeout);
            }
            if self.stats.ct_expanded >= self.cfg.max_nodes {
                return Err(SolveError::NodeLimit);
            }
            let members: Vec<&Arc<Path>> = batch.iter().map(|&a| &node.paths[a]).collect();
            let Some(local) = detect_first_conflict(&members, fr) else {
                return Ok(node.paths);
            };
            let conflict = Conflict {
                agents: (batch[local.agents.0], batch[local.agents.1]),
                ..local
            };
            self.stats.ct_expanded += 1;
            trace!(
                "node {} cost {:.3}: conflict {:?} t={} at ({:.2}, {:.2})",
                node.id,
                node.cost,
                conflict.agents,
                conflict.time,
                conflict.location.x,
                conflict.location.y
            );
            if self.stats.ct_expanded % self.cfg.log_every.max(1) as u64 == 0 {
                let cache = self.ctx.cache_stats(self.cfg.planner.cache);
                info!(
                    "ct expanded={} open={} best_cost={:.3} hit_rate={:.4}",
                    self.stats.ct_expanded,
                    open.len(),
                    node.cost,
                    cache.hit_rate()
                );
            }
            for child in self.branch(&node, &conflict, batch)? {
                open.push(Ranked(child));
            }
        }
        Err(SolveError::NoSolution)
    }

    /// Paths of finished agents as moving obstacles for `agent`.
    fn obstacle_constraints(&mut self, agent: usize, done: &[Arc<Path>]) -> Vec<Constraint> {
        let fr = self.instance().kinematics.footprint_radius;
        let mut out = Vec::new();
        for path in done {
            for s in &path.states {
                let id = self.fresh_constraint_id();
                out.push(Constraint {
                    id,
                    agent,
                    center: s.pose.position(),
                    radius: 2.0 * fr,
                    t_begin: s.time,
                    t_end: s.time,
                });
            }
            let last = path.states.last().expect("non-empty path");
            let id = self.fresh_constraint_id();
            out.push(Constraint {
                id,
                agent,
                center: last.pose.position(),
                radius: 2.0 * fr,
                t_begin: last.time,
                t_end: u32::MAX,
            });
        }
        out
    }

    pub fn run(mut self) -> SolveReport {
        let started = Instant::now();
        let deadline = started + self.cfg.timeout;
        self.low.cfg.deadline = Some(self.cfg.planner.deadline.map_or(deadline, |d| d.min(deadline)));
        let n = self.instance().agents.len();
        let mut done: Vec<Arc<Path>> = Vec::with_capacity(n);
        let placeholder = Arc::new(Path {
            states: Vec::new(),
            cost: 0.0,
        });
        let mut result = Ok(());
        for (b, batch_start) in (0..n).step_by(self.cfg.batch_size.max(1)).enumerate() {
            let batch: Vec<usize> = (batch_start..(batch_start + self.cfg.batch_size.max(1)).min(n)).collect();
            let mut base = vec![Vec::new(); n];
            for &a in &batch {
                base[a] = self.obstacle_constraints(a, &done);
            }
            let mut paths = done.clone();
            paths.resize(n, placeholder.clone());
            debug!("batch {b}: agents {:?}", batch);
            match self.solve_batch(&batch, base, paths, deadline) {
                Ok(paths) => done.extend(batch.iter().map(|&a| paths[a].clone())),
                Err(e) => {
                    result = Err(e);
                    break;
                }
            }
        }
        self.stats.heuristic = self.ctx.stats;
        self.stats.cache = self.ctx.cache_stats(self.cfg.planner.cache);
        self.stats.fingerprints_per_key = self.ctx.conflict_aware_cache().fingerprints_per_key();
        self.stats.elapsed = started.elapsed();
        let result = result.map(|()| Solution::from_paths(done.iter().map(|p| (**p).clone()).collect()));
        SolveReport {
            result,
            stats: self.stats,
        }
    }
}

pub fn solve(instance: &Instance, cfg: &SolverConfig, table: Option<Arc<ApproxTable>>) -> SolveReport {
    Cbs::new(instance, *cfg, table).run()
}
