//! Grid instances in the shared YAML container, tagged `kind: grid`.
//!
//! ```yaml
//! kind: grid
//! map:
//!   dimensions: [8, 6]
//!   obstacles: [[2, 3], [2, 4]]
//! agents:
//!   - start: [0, 0]
//!     goal: [5, 7]
//! ```
//!
//! Cells are `[row, col]`; dimensions are `[width, height]`.

use std::path::Path;

use super::{Cell, GridAgent, GridInstance, GridMap};
use crate::error::{Error, Result};
use crate::io::{read_instance_file, write_yaml, AgentEntry, InstanceFile, MapSection};

fn cell_from(v: &[f64], what: &str) -> Result<Cell> {
    match v {
        [r, c] if r.fract() == 0.0 && c.fract() == 0.0 => Ok(Cell::new(*r as i32, *c as i32)),
        _ => Err(Error::Parse(format!("{what}: expected integer [row, col], got {v:?}"))),
    }
}

fn cell_to(c: &Cell) -> Vec<f64> {
    vec![f64::from(c.row), f64::from(c.col)]
}

pub fn load_grid_instance(path: impl AsRef<Path>) -> Result<GridInstance> {
    grid_from_file(read_instance_file(path.as_ref())?)
}

pub fn parse_grid_instance(text: &str) -> Result<GridInstance> {
    grid_from_file(serde_yaml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?)
}

fn grid_from_file(file: InstanceFile) -> Result<GridInstance> {
    if file.kind.as_deref() != Some("grid") {
        return Err(Error::Parse(format!("expected `kind: grid`, found {:?}", file.kind)));
    }
    let [w, h] = file.map.dimensions[..] else {
        return Err(Error::Parse("map.dimensions must be [W, H]".into()));
    };
    if !(w >= 1.0 && h >= 1.0 && w.fract() == 0.0 && h.fract() == 0.0) {
        return Err(Error::Validation(format!("bad grid dimensions [{w}, {h}]")));
    }
    let (w, h) = (w as i32, h as i32);
    let obstacles = file
        .map
        .obstacles
        .iter()
        .map(|o| cell_from(o, "obstacle"))
        .collect::<Result<Vec<_>>>()?;
    if let Some(c) = obstacles.iter().find(|c| c.row < 0 || c.row >= h || c.col < 0 || c.col >= w) {
        return Err(Error::Validation(format!("obstacle {c:?} off the grid")));
    }
    let map = GridMap::new(w, h, &obstacles);
    let agents = file
        .agents
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let agent = GridAgent {
                start: cell_from(&a.start, &format!("agent {i} start"))?,
                goal: cell_from(&a.goal, &format!("agent {i} goal"))?,
            };
            if !map.is_free(&agent.start) || !map.is_free(&agent.goal) {
                return Err(Error::Validation(format!("agent {i}: start or goal blocked or off the grid")));
            }
            Ok(agent)
        })
        .collect::<Result<Vec<_>>>()?;
    for (i, a) in agents.iter().enumerate() {
        if let Some(j) = agents[i + 1..].iter().position(|b| b.start == a.start || b.goal == a.goal) {
            return Err(Error::Validation(format!("agents {i} and {} share a start or goal", i + 1 + j)));
        }
    }
    Ok(GridInstance { map, agents })
}

pub fn grid_instance_to_yaml(inst: &GridInstance) -> Result<String> {
    serde_yaml::to_string(&grid_to_file(inst)).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_grid_instance(inst: &GridInstance, path: impl AsRef<Path>) -> Result<()> {
    write_yaml(&grid_to_file(inst), path.as_ref())
}

fn grid_to_file(inst: &GridInstance) -> InstanceFile {
    InstanceFile {
        kind: Some("grid".into()),
        map: MapSection {
            dimensions: vec![f64::from(inst.map.width), f64::from(inst.map.height)],
            obstacle_radius: None,
            obstacles: inst.map.obstacles().iter().map(cell_to).collect(),
        },
        agents: inst
            .agents
            .iter()
            .map(|a| AgentEntry {
                name: None,
                start: cell_to(&a.start),
                goal: cell_to(&a.goal),
            })
            .collect(),
        kinematics: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let inst = GridInstance {
            map: GridMap::new(4, 3, &[Cell::new(1, 1), Cell::new(2, 3)]),
            agents: vec![
                GridAgent {
                    start: Cell::new(0, 0),
                    goal: Cell::new(2, 2),
                },
                GridAgent {
                    start: Cell::new(0, 3),
                    goal: Cell::new(1, 0),
                },
            ],
        };
        let text = grid_instance_to_yaml(&inst).unwrap();
        assert_eq!(parse_grid_instance(&text).unwrap(), inst);
    }

    #[test]
    fn rejects_car_instances_and_blocked_goals() {
        let car = "map:\n  dimensions: [10, 10]\nagents: []\n";
        assert!(parse_grid_instance(car).is_err());
        let blocked = "kind: grid\nmap:\n  dimensions: [3, 3]\n  obstacles: [[1, 1]]\nagents:\n  - start: [0, 0]\n    goal: [1, 1]\n";
        assert!(matches!(parse_grid_instance(blocked), Err(Error::Validation(_))));
    }
}
