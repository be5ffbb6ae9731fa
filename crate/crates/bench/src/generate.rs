//! Random car-like instance suites.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use carchase::grid::io::write_grid_instance;
use carchase::grid::{Cell, GridAgent, GridInstance, GridMap};
use carchase::io::{write_instance, DEFAULT_OBSTACLE_RADIUS};
use carchase::lowlevel::{plan_single, HeuristicContext, PlannerConfig};
use carchase::{AgentTask, Instance, Kinematics, Obstacle, Point, Pose};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Draws per agent before giving up on a placement.
pub const PLACEMENT_RETRIES: usize = 2_000;
/// Whole-map redraws (obstacles included) before reporting failure.
pub const MAP_RETRIES: usize = 20;
/// Expansion budget of the single-agent drivability check.
const DRIVE_CHECK_BUDGET: usize = 60_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellParams {
    /// Square map side, meters.
    pub map_size: f64,
    pub agents: usize,
    /// Target covered-area fraction in `[0, 1)`.
    pub density: f64,
}

impl CellParams {
    /// File-name stem shared by every instance of the cell, e.g. `m25_a04_d20`.
    pub fn label(&self) -> String {
        format!(
            "m{}_a{:02}_d{:02}",
            self.map_size.round() as u64,
            self.agents,
            (self.density * 100.0).round() as u64
        )
    }
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-instance RNG; depends only on the suite seed, the cell, and the index.
pub fn instance_rng(seed: u64, cell: &CellParams, index: usize) -> ChaCha8Rng {
    let mut h = mix(seed);
    for v in [
        cell.map_size.to_bits(),
        cell.agents as u64,
        cell.density.to_bits(),
        index as u64,
    ] {
        h = mix(h ^ v);
    }
    ChaCha8Rng::seed_from_u64(h)
}

/// Free-space connectivity on a 0.5 m lattice for the car disc.
struct Reachability {
    step: f64,
    nx: usize,
    ny: usize,
    label: Vec<u32>,
}

impl Reachability {
    fn new(inst: &Instance) -> Self {
        let step = 0.5;
        let nx = (inst.width / step) as usize + 1;
        let ny = (inst.height / step) as usize + 1;
        let free: Vec<bool> = (0..nx * ny)
            .map(|i| inst.is_free(&Point::new((i % nx) as f64 * step, (i / nx) as f64 * step)))
            .collect();
        let mut label = vec![u32::MAX; nx * ny];
        let mut next = 0;
        for seed in 0..nx * ny {
            if !free[seed] || label[seed] != u32::MAX {
                continue;
            }
            label[seed] = next;
            let mut queue = VecDeque::from([seed]);
            while let Some(c) = queue.pop_front() {
                let (x, y) = (c % nx, c / nx);
                let mut visit = |n: usize| {
                    if free[n] && label[n] == u32::MAX {
                        label[n] = next;
                        queue.push_back(n);
                    }
                };
                if x > 0 {
                    visit(c - 1);
                }
                if x + 1 < nx {
                    visit(c + 1);
                }
                if y > 0 {
                    visit(c - nx);
                }
                if y + 1 < ny {
                    visit(c + nx);
                }
            }
            next += 1;
        }
        Reachability { step, nx, ny, label }
    }

    fn component(&self, p: &Point) -> Option<u32> {
        let x = (p.x / self.step).round() as usize;
        let y = (p.y / self.step).round() as usize;
        if x >= self.nx || y >= self.ny {
            return None;
        }
        Some(self.label[y * self.nx + x]).filter(|&l| l != u32::MAX)
    }
}

/// One random instance: obstacle discs first, then start/goal pairs that are
/// collision-free, drivable for a lone car, and separated from the other
/// starts (resp. goals) by at least two footprint diameters. The map is
/// redrawn if some agent cannot be placed.
pub fn generate_instance(cell: &CellParams, rng: &mut ChaCha8Rng) -> Result<Instance> {
    if !(cell.map_size > 0.0 && (0.0..1.0).contains(&cell.density)) {
        bail!("invalid cell parameters {cell:?}");
    }
    let mut last = None;
    for _ in 0..MAP_RETRIES {
        match try_instance(cell, rng) {
            Ok(inst) => return Ok(inst),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn drivable(inst: &Instance, agent: usize) -> bool {
    let cfg = PlannerConfig {
        max_expansions: DRIVE_CHECK_BUDGET,
        ..PlannerConfig::default()
    };
    let mut ctx = HeuristicContext::new(inst, &cfg, None);
    plan_single(inst, agent, &[], &cfg, &mut ctx).is_ok()
}

fn try_instance(cell: &CellParams, rng: &mut ChaCha8Rng) -> Result<Instance> {
    let w = cell.map_size;
    let r = DEFAULT_OBSTACLE_RADIUS;
    let n_obstacles = (cell.density * w * w / (PI * r * r)).round() as usize;
    let obstacles = (0..n_obstacles)
        .map(|_| Obstacle {
            center: Point::new(rng.gen_range(0.0..w), rng.gen_range(0.0..w)),
            radius: r,
        })
        .collect();
    let mut inst = Instance {
        width: w,
        height: w,
        obstacles,
        agents: Vec::new(),
        kinematics: Kinematics::default(),
    };
    let reach = Reachability::new(&inst);
    let separation = 4.0 * inst.kinematics.footprint_radius;
    let min_travel = 0.25 * w;
    for a in 0..cell.agents {
        let mut placed = None;
        for _ in 0..PLACEMENT_RETRIES {
            let start = Point::new(rng.gen_range(0.0..w), rng.gen_range(0.0..w));
            let goal = Point::new(rng.gen_range(0.0..w), rng.gen_range(0.0..w));
            let (ts, tg) = (rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU));
            if start.distance(&goal) < min_travel || !inst.is_free(&start) || !inst.is_free(&goal) {
                continue;
            }
            let spaced = inst.agents.iter().all(|t| {
                t.start.position().distance(&start) >= separation && t.goal.position().distance(&goal) >= separation
            });
            let sc = reach.component(&start);
            if !spaced || sc.is_none() || sc != reach.component(&goal) {
                continue;
            }
            inst.agents.push(AgentTask {
                start: Pose::new(start.x, start.y, ts),
                goal: Pose::new(goal.x, goal.y, tg),
            });
            if drivable(&inst, a) {
                placed = inst.agents.pop();
                break;
            }
            inst.agents.pop();
        }
        match placed {
            Some(t) => inst.agents.push(t),
            None => bail!(
                "could not place agent {a} after {PLACEMENT_RETRIES} draws ({} map, density {})",
                w,
                cell.density
            ),
        }
    }
    Ok(inst)
}

pub fn instance_file_name(cell: &CellParams, index: usize) -> String {
    format!("{}_i{:03}.yaml", cell.label(), index)
}

/// Writes `count` instances for every cell into `out`; returns the paths in
/// generation order. A cell is written only once all of its instances have
/// been placed.
pub fn generate_suite(seed: u64, cells: &[CellParams], count: usize, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut written = Vec::with_capacity(cells.len() * count);
    for cell in cells {
        let instances = (0..count)
            .map(|i| {
                generate_instance(cell, &mut instance_rng(seed, cell, i))
                    .with_context(|| format!("{} instance {i}", cell.label()))
            })
            .collect::<Result<Vec<_>>>()?;
        for (i, inst) in instances.iter().enumerate() {
            let path = out.join(instance_file_name(cell, i));
            write_instance(inst, &path)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Random grid instance: `density` of the cells blocked, then distinct
/// start and goal cells drawn per agent, each goal reachable from its start.
pub fn generate_grid_instance(cell: &CellParams, rng: &mut ChaCha8Rng) -> Result<GridInstance> {
    let side = cell.map_size.round() as i32;
    if side < 2 || !(0.0..1.0).contains(&cell.density) {
        bail!("invalid grid cell parameters {cell:?}");
    }
    'map: for _ in 0..MAP_RETRIES {
        let n_blocked = (cell.density * f64::from(side * side)).round() as usize;
        let mut blocked = Vec::with_capacity(n_blocked);
        while blocked.len() < n_blocked {
            let c = Cell::new(rng.gen_range(0..side), rng.gen_range(0..side));
            if !blocked.contains(&c) {
                blocked.push(c);
            }
        }
        let map = GridMap::new(side, side, &blocked);
        let mut agents: Vec<GridAgent> = Vec::with_capacity(cell.agents);
        for _ in 0..cell.agents {
            let mut placed = None;
            for _ in 0..PLACEMENT_RETRIES {
                let start = Cell::new(rng.gen_range(0..side), rng.gen_range(0..side));
                let goal = Cell::new(rng.gen_range(0..side), rng.gen_range(0..side));
                if !map.is_free(&start)
                    || !map.is_free(&goal)
                    || agents.iter().any(|a| a.start == start || a.goal == goal)
                    || map.distances_to(&goal)[map.index(&start)] == u32::MAX
                {
                    continue;
                }
                placed = Some(GridAgent { start, goal });
                break;
            }
            match placed {
                Some(a) => agents.push(a),
                None => continue 'map,
            }
        }
        return Ok(GridInstance { map, agents });
    }
    bail!("could not place {} agents on a {side}x{side} grid", cell.agents)
}

/// Grid counterpart of [`generate_suite`]; files are named `g<side>_...`.
pub fn generate_grid_suite(seed: u64, cells: &[CellParams], count: usize, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut written = Vec::with_capacity(cells.len() * count);
    for cell in cells {
        for i in 0..count {
            let mut rng = instance_rng(seed ^ GRID_SEED_SALT, cell, i);
            let inst = generate_grid_instance(cell, &mut rng).with_context(|| format!("{} instance {i}", cell.label()))?;
            let path = out.join(format!("g{}", &instance_file_name(cell, i)[1..]));
            write_grid_instance(&inst, &path)?;
            written.push(path);
        }
    }
    Ok(written)
}

const GRID_SEED_SALT: u64 = 0x6772_6964;

/// Cross product of the three parameter lists.
pub fn cell_grid(map_sizes: &[f64], agents: &[usize], densities: &[f64]) -> Vec<CellParams> {
    let mut out = Vec::new();
    for &map_size in map_sizes {
        for &a in agents {
            for &density in densities {
                out.push(CellParams {
                    map_size,
                    agents: a,
                    density,
                });
            }
        }
    }
    out
}
