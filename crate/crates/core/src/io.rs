//! Instance and solution files.
//!
//! Both formats are YAML. Instances follow the usual car-like MAPF benchmark
//! layout:
//!
//! ```yaml
//! map:
//!   dimensions: [50, 50]
//!   obstacle_radius: 1.0
//!   obstacles: [[10.0, 12.5], [30.0, 4.0, 2.0]]
//! agents:
//!   - start: [5.0, 5.0, 0.0]
//!     goal: [40.0, 5.0, 0.0]
//! ```
//!
//! Obstacles are `[x, y]` (radius from `obstacle_radius`) or `[x, y, r]`.
//! Grid instances use the same container with `kind: grid` and integer cells.

use std::fs;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{AgentTask, Kinematics, Instance, Obstacle, Path, Point, Pose, Solution, TimedState};

pub const DEFAULT_OBSTACLE_RADIUS: f64 = 1.0;

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    pub map: MapSection,
    pub agents: Vec<AgentEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kinematics: Option<Kinematics>,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct MapSection {
    pub dimensions: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obstacle_radius: Option<f64>,
    #[serde(default)]
    pub obstacles: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct AgentEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
}

pub(crate) fn read_instance_file(path: &FsPath) -> Result<InstanceFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_yaml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub(crate) fn write_yaml<T: Serialize>(value: &T, path: &FsPath) -> Result<()> {
    let text = serde_yaml::to_string(value).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn pose_from(v: &[f64], what: &str) -> Result<Pose> {
    match v {
        [x, y, theta] => Ok(Pose::new(*x, *y, *theta)),
        _ => Err(Error::Parse(format!("{what}: expected [x, y, theta], got {v:?}"))),
    }
}

/// Reads and validates a car-like instance.
pub fn load_instance(path: impl AsRef<FsPath>) -> Result<Instance> {
    let path = path.as_ref();
    let file = read_instance_file(path)?;
    instance_from_file(file)
}

/// Parses an instance from YAML text.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let file: InstanceFile = serde_yaml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    instance_from_file(file)
}

fn instance_from_file(file: InstanceFile) -> Result<Instance> {
    if let Some(kind) = &file.kind {
        if kind != "carlike" {
            return Err(Error::Parse(format!("expected a car-like instance, found kind `{kind}`")));
        }
    }
    let [width, height] = file.map.dimensions[..] else {
        return Err(Error::Parse("map.dimensions must be [W, H]".into()));
    };
    let default_radius = file.map.obstacle_radius.unwrap_or(DEFAULT_OBSTACLE_RADIUS);
    let obstacles = file
        .map
        .obstacles
        .iter()
        .map(|o| match o[..] {
            [x, y] => Ok(Obstacle {
                center: Point::new(x, y),
                radius: default_radius,
            }),
            [x, y, r] => Ok(Obstacle {
                center: Point::new(x, y),
                radius: r,
            }),
            _ => Err(Error::Parse(format!("obstacle must be [x, y] or [x, y, r], got {o:?}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let agents = file
        .agents
        .iter()
        .enumerate()
        .map(|(i, a)| {
            Ok(AgentTask {
                start: pose_from(&a.start, &format!("agent {i} start"))?,
                goal: pose_from(&a.goal, &format!("agent {i} goal"))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let instance = Instance {
        width,
        height,
        obstacles,
        agents,
        kinematics: file.kinematics.unwrap_or_default(),
    };
    validate_instance(&instance)?;
    Ok(instance)
}

/// Checks every instance invariant: positive dimensions, sane kinematics,
/// starts and goals finite, inside the map, and clear of obstacles.
pub fn validate_instance(instance: &Instance) -> Result<()> {
    let invalid = |msg: String| Err(Error::Validation(msg));
    if !(instance.width > 0.0 && instance.height > 0.0) {
        return invalid(format!("map dimensions must be positive, got {}x{}", instance.width, instance.height));
    }
    let k = &instance.kinematics;
    if !(k.turning_radius > 0.0 && k.step_length > 0.0 && k.footprint_radius > 0.0) {
        return invalid(format!("kinematics must be positive: {k:?}"));
    }
    if k.reverse_penalty < 1.0 {
        return invalid(format!("reverse_penalty must be >= 1, got {}", k.reverse_penalty));
    }
    for (i, o) in instance.obstacles.iter().enumerate() {
        if !(o.radius > 0.0) || !o.center.x.is_finite() || !o.center.y.is_finite() {
            return invalid(format!("obstacle {i} is malformed: {o:?}"));
        }
    }
    for (i, task) in instance.agents.iter().enumerate() {
        for (what, pose) in [("start", &task.start), ("goal", &task.goal)] {
            if !pose.is_finite() {
                return invalid(format!("agent {i} {what} is not finite"));
            }
            let p = pose.position();
            if !instance.in_bounds(&p) {
                return invalid(format!("agent {i} {what} ({}, {}) is outside the map", p.x, p.y));
            }
            if instance.collides_with_obstacle(&p) {
                return invalid(format!("agent {i} {what} ({}, {}) is inside an obstacle", p.x, p.y));
            }
        }
        if task.start == task.goal {
            log::warn!("agent {i} has identical start and goal");
        }
    }
    Ok(())
}

/// Writes an instance in the format read by [`load_instance`].
pub fn write_instance(instance: &Instance, path: impl AsRef<FsPath>) -> Result<()> {
    write_yaml(&instance_to_file(instance), path.as_ref())
}

pub fn instance_to_yaml(instance: &Instance) -> Result<String> {
    serde_yaml::to_string(&instance_to_file(instance)).map_err(|e| Error::Parse(e.to_string()))
}

fn instance_to_file(instance: &Instance) -> InstanceFile {
    let default_radius = instance
        .obstacles
        .first()
        .map(|o| o.radius)
        .unwrap_or(DEFAULT_OBSTACLE_RADIUS);
    InstanceFile {
        kind: None,
        map: MapSection {
            dimensions: vec![instance.width, instance.height],
            obstacle_radius: Some(default_radius),
            obstacles: instance
                .obstacles
                .iter()
                .map(|o| {
                    if o.radius == default_radius {
                        vec![o.center.x, o.center.y]
                    } else {
                        vec![o.center.x, o.center.y, o.radius]
                    }
                })
                .collect(),
        },
        agents: instance
            .agents
            .iter()
            .map(|a| AgentEntry {
                name: None,
                start: vec![a.start.x, a.start.y, a.start.theta],
                goal: vec![a.goal.x, a.goal.y, a.goal.theta],
            })
            .collect(),
        kinematics: Some(instance.kinematics),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SolutionFile {
    cost: f64,
    paths: Vec<PathEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PathEntry {
    agent: usize,
    cost: f64,
    /// Rows of `[x, y, theta, t]`.
    states: Vec<[f64; 4]>,
}

/// Writes a solution as per-agent blocks of `[x, y, theta, t]` rows, in agent
/// order. Floats are written with shortest round-trip precision.
pub fn write_solution(solution: &Solution, path: impl AsRef<FsPath>) -> Result<()> {
    let file = SolutionFile {
        cost: solution.cost,
        paths: solution
            .paths
            .iter()
            .enumerate()
            .map(|(agent, p)| PathEntry {
                agent,
                cost: p.cost,
                states: p
                    .states
                    .iter()
                    .map(|s| [s.pose.x, s.pose.y, s.pose.theta, f64::from(s.time)])
                    .collect(),
            })
            .collect(),
    };
    write_yaml(&file, path.as_ref())
}

pub fn load_solution(path: impl AsRef<FsPath>) -> Result<Solution> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: SolutionFile =
        serde_yaml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut paths = Vec::with_capacity(file.paths.len());
    for (i, entry) in file.paths.into_iter().enumerate() {
        if entry.agent != i {
            return Err(Error::Parse(format!("path block {i} is labelled agent {}", entry.agent)));
        }
        let states = entry
            .states
            .iter()
            .map(|&[x, y, theta, t]| {
                if t < 0.0 || t.fract() != 0.0 || t > f64::from(u32::MAX) {
                    return Err(Error::Parse(format!("bad timestep {t}")));
                }
                Ok(TimedState::new(Pose { x, y, theta }, t as u32))
            })
            .collect::<Result<Vec<_>>>()?;
        if states.is_empty() {
            return Err(Error::Parse(format!("agent {i} has an empty path")));
        }
        paths.push(Path {
            states,
            cost: entry.cost,
        });
    }
    Ok(Solution {
        paths,
        cost: file.cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
map:
  dimensions: [30, 30]
  obstacles: []
agents:
  - start: [5, 5, 0]
    goal: [20, 5, 0]
";

    #[test]
    fn minimal_instance() {
        let inst = parse_instance(MINIMAL).unwrap();
        assert_eq!(inst.agents.len(), 1);
        assert!(inst.obstacles.is_empty());
        assert_eq!(inst.agents[0].goal, Pose::new(20.0, 5.0, 0.0));
        assert_eq!(inst.kinematics, Kinematics::default());
    }

    #[test]
    fn goal_inside_obstacle_is_rejected() {
        let text = "
map:
  dimensions: [30, 30]
  obstacles: [[20, 5]]
agents:
  - start: [5, 5, 0]
    goal: [20, 5, 0]
";
        assert!(matches!(parse_instance(text), Err(Error::Validation(_))));
    }

    #[test]
    fn start_outside_map_is_rejected() {
        let text = "
map:
  dimensions: [30, 30]
agents:
  - start: [-5, 5, 0]
    goal: [20, 5, 0]
";
        assert!(matches!(parse_instance(text), Err(Error::Validation(_))));
    }

    #[test]
    fn malformed_file_is_a_parse_error() {
        assert!(matches!(parse_instance("map: [1, 2"), Err(Error::Parse(_))));
        let bad_pose = "
map:
  dimensions: [30, 30]
agents:
  - start: [5, 5]
    goal: [20, 5, 0]
";
        assert!(matches!(parse_instance(bad_pose), Err(Error::Parse(_))));
    }

    #[test]
    fn grid_kind_is_not_a_car_instance() {
        let text = format!("kind: grid\n{MINIMAL}");
        assert!(matches!(parse_instance(&text), Err(Error::Parse(_))));
    }

    #[test]
    fn mixed_obstacle_radii_round_trip() {
        let text = "
map:
  dimensions: [40, 40]
  obstacle_radius: 1.5
  obstacles: [[20, 20], [30, 30, 2.25]]
agents:
  - start: [5, 5, 0]
    goal: [10, 35, 1.5707963267948966]
";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.obstacles[1].radius, 2.25);
        let again = parse_instance(&instance_to_yaml(&inst).unwrap()).unwrap();
        assert_eq!(again, inst);
    }

    #[test]
    fn solution_blocks_in_agent_order() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("sol.yaml");
        let mk = |x0: f64| Path {
            states: vec![
                TimedState::new(Pose::new(x0, 1.0, 0.0), 0),
                TimedState::new(Pose::new(x0 + 1.0, 1.0, 0.0), 1),
            ],
            cost: 1.0,
        };
        let sol = Solution::from_paths(vec![mk(1.0), mk(7.0)]);
        write_solution(&sol, &file).unwrap();
        let text = std::fs::read_to_string(&file).unwrap();
        assert!(text.find("agent: 0").unwrap() < text.find("agent: 1").unwrap());
        assert_eq!(load_solution(&file).unwrap(), sol);
    }
}
