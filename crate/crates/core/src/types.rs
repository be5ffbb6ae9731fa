//! Domain types shared by the car-like solver, the cache, and the harness.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Smallest absolute difference between two headings, in `[0, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = normalize_angle(a - b);
    d.min(TAU - d)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    /// Distance from `self` to the closed segment `a`-`b`.
    pub fn distance_to_segment(&self, a: &Point, b: &Point) -> f64 {
        let (vx, vy) = (b.x - a.x, b.y - a.y);
        let len_sq = vx * vx + vy * vy;
        if len_sq == 0.0 {
            return self.distance(a);
        }
        let t = (((self.x - a.x) * vx + (self.y - a.y) * vy) / len_sq).clamp(0.0, 1.0);
        self.distance(&Point::new(a.x + t * vx, a.y + t * vy))
    }
}

/// Continuous car pose. `theta` is kept in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn distance(&self, other: &Pose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedState {
    pub pose: Pose,
    pub time: u32,
}

impl TimedState {
    pub fn new(pose: Pose, time: u32) -> Self {
        TimedState { pose, time }
    }
}

/// Discretized identity of a [`TimedState`], used both as the cache key and
/// as the closed-set key of the low-level search.
///
/// Ordering is lexicographic over `(cell_x, cell_y, heading_bin, time)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey {
    pub cell_x: i32,
    pub cell_y: i32,
    pub heading_bin: u16,
    pub time: u32,
}

/// Quantization used by [`Resolution::discretize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolution {
    pub cell_size: f64,
    pub heading_bins: u16,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution {
            cell_size: 1.0,
            heading_bins: 72,
        }
    }
}

impl Resolution {
    pub fn new(cell_size: f64, heading_bins: u16) -> Self {
        assert!(cell_size > 0.0, "cell_size must be positive");
        assert!(heading_bins >= 4, "at least 4 heading bins are required");
        Resolution {
            cell_size,
            heading_bins,
        }
    }

    pub fn bin_width(&self) -> f64 {
        TAU / f64::from(self.heading_bins)
    }

    pub fn discretize(&self, state: &TimedState) -> StateKey {
        let p = &state.pose;
        let bins = i64::from(self.heading_bins);
        let bin = ((p.theta / self.bin_width()).floor() as i64).rem_euclid(bins);
        StateKey {
            cell_x: (p.x / self.cell_size).floor() as i32,
            cell_y: (p.y / self.cell_size).floor() as i32,
            heading_bin: bin as u16,
            time: state.time,
        }
    }

    /// Canonical pose of a key: the cell center with the bin's center heading.
    pub fn representative(&self, key: &StateKey) -> Pose {
        Pose::new(
            (f64::from(key.cell_x) + 0.5) * self.cell_size,
            (f64::from(key.cell_y) + 0.5) * self.cell_size,
            (f64::from(key.heading_bin) + 0.5) * self.bin_width(),
        )
    }

    /// Goal test tolerance: within one cell and one heading bin.
    pub fn within_goal_tolerance(&self, pose: &Pose, goal: &Pose) -> bool {
        pose.distance(goal) <= self.cell_size && angle_diff(pose.theta, goal.theta) <= self.bin_width()
    }
}

/// Free function form of [`Resolution::discretize`].
pub fn discretize(state: &TimedState, resolution: &Resolution) -> StateKey {
    resolution.discretize(state)
}

/// Disc-shaped spatiotemporal exclusion imposed on one agent: the agent's
/// reference point may not lie strictly inside the disc at any timestep in
/// `[t_begin, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraint {
    pub id: u32,
    pub agent: usize,
    pub center: Point,
    pub radius: f64,
    pub t_begin: u32,
    pub t_end: u32,
}

impl Constraint {
    pub fn active_at(&self, t: u32) -> bool {
        self.t_begin <= t && t <= self.t_end
    }

    pub fn blocks(&self, p: &Point, t: u32) -> bool {
        self.active_at(t) && self.center.distance_sq(p) < self.radius * self.radius
    }

    pub fn overlaps_window(&self, lo: u32, hi: u32) -> bool {
        self.t_begin <= hi && lo <= self.t_end
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub center: Point,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentTask {
    pub start: Pose,
    pub goal: Pose,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kinematics {
    pub turning_radius: f64,
    pub step_length: f64,
    pub reverse_penalty: f64,
    /// Radius of the disc approximating the car body.
    pub footprint_radius: f64,
}

impl Default for Kinematics {
    fn default() -> Self {
        // 2.0 m x 1.0 m body, half-diagonal ~1.118 m
        Kinematics {
            turning_radius: 3.0,
            step_length: 1.0,
            reverse_penalty: 2.0,
            footprint_radius: 0.5 * 2.0_f64.hypot(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub width: f64,
    pub height: f64,
    pub obstacles: Vec<Obstacle>,
    pub agents: Vec<AgentTask>,
    pub kinematics: Kinematics,
}

impl Instance {
    /// The car disc fits inside the map rectangle.
    pub fn in_bounds(&self, p: &Point) -> bool {
        let r = self.kinematics.footprint_radius;
        p.x >= r && p.y >= r && p.x <= self.width - r && p.y <= self.height - r
    }

    pub fn collides_with_obstacle(&self, p: &Point) -> bool {
        let r = self.kinematics.footprint_radius;
        self.obstacles.iter().any(|o| {
            let min = o.radius + r;
            o.center.distance_sq(p) < min * min
        })
    }

    pub fn is_free(&self, p: &Point) -> bool {
        self.in_bounds(p) && !self.collides_with_obstacle(p)
    }

    /// Fraction of the map area covered by obstacle discs (overlaps counted once
    /// per disc, clipped to nothing).
    pub fn obstacle_density(&self) -> f64 {
        let covered: f64 = self
            .obstacles
            .iter()
            .map(|o| std::f64::consts::PI * o.radius * o.radius)
            .sum();
        covered / (self.width * self.height)
    }

    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub states: Vec<TimedState>,
    pub cost: f64,
}

impl Path {
    /// Pose at time `t`; agents past the end of their path stay parked at the
    /// final pose.
    pub fn pose_at(&self, t: u32) -> Pose {
        let first = self.states[0].time;
        let idx = t.saturating_sub(first) as usize;
        self.states[idx.min(self.states.len() - 1)].pose
    }

    pub fn end_time(&self) -> u32 {
        self.states.last().map(|s| s.time).unwrap_or(0)
    }
}

impl AsRef<Path> for Path {
    fn as_ref(&self) -> &Path {
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub paths: Vec<Path>,
    pub cost: f64,
}

impl Solution {
    pub fn from_paths(paths: Vec<Path>) -> Self {
        let cost = paths.iter().map(|p| p.cost).sum();
        Solution { paths, cost }
    }

    pub fn makespan(&self) -> u32 {
        self.paths.iter().map(Path::end_time).max().unwrap_or(0)
    }
}
