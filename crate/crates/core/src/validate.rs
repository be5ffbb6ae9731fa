//! Independent solution checker. It re-derives every motion from the raw
//! waypoints and scans obstacles and agent pairs without any search index.

use std::f64::consts::PI;

use crate::reeds_shepp::{advance, Steer};
use crate::types::{normalize_angle, Instance, Pose, Resolution, Solution};

const POSE_TOL: f64 = 1e-6;

/// Cost of the move from `a` to `b` if it is a wait or a single L/S/R arc no
/// longer than one step; `None` otherwise.
pub fn primitive_cost(a: &Pose, b: &Pose, instance: &Instance, wait_cost: f64) -> Option<f64> {
    let k = &instance.kinematics;
    let r = k.turning_radius;
    if a.distance(b) < POSE_TOL && heading_delta(a, b).abs() < POSE_TOL {
        return Some(wait_cost);
    }
    let dtheta = heading_delta(a, b);
    let candidates: Vec<(Steer, f64)> = if dtheta.abs() < 1e-9 {
        let (s, c) = a.theta.sin_cos();
        vec![(Steer::Straight, (b.x - a.x) * c + (b.y - a.y) * s)]
    } else {
        vec![(Steer::Left, dtheta * r), (Steer::Right, -dtheta * r)]
    };
    candidates.iter().find_map(|&(steer, len)| {
        if len.abs() > k.step_length + 1e-9 {
            return None;
        }
        let end = advance(a, steer, len, r);
        let close = end.distance(b) < POSE_TOL && heading_delta(&end, b).abs() < POSE_TOL;
        close.then(|| if len < 0.0 { -len * k.reverse_penalty } else { len })
    })
}

/// Signed heading change in `(-π, π]`.
fn heading_delta(a: &Pose, b: &Pose) -> f64 {
    let d = normalize_angle(b.theta - a.theta);
    if d > PI {
        d - 2.0 * PI
    } else {
        d
    }
}

fn point_free(instance: &Instance, x: f64, y: f64) -> bool {
    instance.is_free(&crate::types::Point::new(x, y))
}

/// Every violation found, as human-readable messages; empty means valid.
pub fn check_solution(instance: &Instance, solution: &Solution, resolution: &Resolution, wait_cost: f64) -> Vec<String> {
    let mut out = Vec::new();
    if solution.paths.len() != instance.agents.len() {
        out.push(format!(
            "{} paths for {} agents",
            solution.paths.len(),
            instance.agents.len()
        ));
        return out;
    }
    let fr = instance.kinematics.footprint_radius;
    for (i, (path, task)) in solution.paths.iter().zip(&instance.agents).enumerate() {
        let Some(first) = path.states.first() else {
            out.push(format!("agent {i}: empty path"));
            continue;
        };
        if first.time != 0 || first.pose.distance(&task.start) > POSE_TOL {
            out.push(format!("agent {i}: does not begin at its start at t=0"));
        }
        let last = path.states.last().unwrap();
        if !resolution.within_goal_tolerance(&last.pose, &task.goal) {
            out.push(format!("agent {i}: ends at {:?}, outside goal tolerance", last.pose));
        }
        let mut cost = 0.0;
        for (n, w) in path.states.windows(2).enumerate() {
            if w[1].time != w[0].time + 1 {
                out.push(format!("agent {i}: times not consecutive at index {n}"));
            }
            match primitive_cost(&w[0].pose, &w[1].pose, instance, wait_cost) {
                Some(c) => cost += c,
                None => out.push(format!("agent {i}: illegal move at t={}", w[0].time)),
            }
            let mx = 0.5 * (w[0].pose.x + w[1].pose.x);
            let my = 0.5 * (w[0].pose.y + w[1].pose.y);
            if !point_free(instance, mx, my) {
                out.push(format!("agent {i}: collides between t={} and t={}", w[0].time, w[1].time));
            }
        }
        for s in &path.states {
            if !point_free(instance, s.pose.x, s.pose.y) {
                out.push(format!("agent {i}: out of bounds or in an obstacle at t={}", s.time));
            }
        }
        if (cost - path.cost).abs() > 1e-6 * cost.max(1.0) {
            out.push(format!("agent {i}: recorded cost {} but moves sum to {cost}", path.cost));
        }
    }
    let total: f64 = solution.paths.iter().map(|p| p.cost).sum();
    if (total - solution.cost).abs() > 1e-6 * total.max(1.0) {
        out.push(format!("solution cost {} but paths sum to {total}", solution.cost));
    }
    let horizon = solution.paths.iter().map(|p| p.end_time()).max().unwrap_or(0);
    let limit = (2.0 * fr) * (2.0 * fr);
    for t in 0..=horizon {
        for i in 0..solution.paths.len() {
            for j in i + 1..solution.paths.len() {
                let (a, b) = (solution.paths[i].pose_at(t), solution.paths[j].pose_at(t));
                let d2 = (a.x - b.x).powi(2) + (a.y - b.y).powi(2);
                if d2 < limit {
                    out.push(format!("agents {i} and {j} collide at t={t}"));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{AgentTask, Kinematics, Path, TimedState};

    fn inst() -> Instance {
        Instance {
            width: 30.0,
            height: 30.0,
            obstacles: vec![],
            agents: vec![AgentTask {
                start: Pose::new(5.0, 5.0, 0.0),
                goal: Pose::new(8.0, 5.0, 0.0),
            }],
            kinematics: Kinematics::default(),
        }
    }

    fn straight(y: f64) -> Path {
        let states = (0..4).map(|t| TimedState::new(Pose::new(5.0 + t as f64, y, 0.0), t)).collect();
        Path { states, cost: 3.0 }
    }

    #[test]
    fn straight_path_is_valid() {
        let sol = Solution::from_paths(vec![straight(5.0)]);
        assert!(check_solution(&inst(), &sol, &Resolution::default(), 0.5).is_empty());
    }

    #[test]
    fn teleport_and_wrong_cost_are_reported() {
        let mut p = straight(5.0);
        p.states[2].pose.x += 0.5;
        let sol = Solution::from_paths(vec![p]);
        let v = check_solution(&inst(), &sol, &Resolution::default(), 0.5);
        assert!(v.iter().any(|m| m.contains("illegal move")), "{v:?}");
    }

    #[test]
    fn arcs_and_reverse_moves_are_recognized() {
        let i = inst();
        let a = Pose::new(10.0, 10.0, 0.3);
        let left = advance(&a, Steer::Left, 1.0, 3.0);
        let back_right = advance(&a, Steer::Right, -0.4, 3.0);
        assert!((primitive_cost(&a, &left, &i, 0.5).unwrap() - 1.0).abs() < 1e-9);
        assert!((primitive_cost(&a, &back_right, &i, 0.5).unwrap() - 0.8).abs() < 1e-9);
        assert_eq!(primitive_cost(&a, &a, &i, 0.5), Some(0.5));
        let too_far = advance(&a, Steer::Left, 1.5, 3.0);
        assert_eq!(primitive_cost(&a, &too_far, &i, 0.5), None);
    }

    #[test]
    fn agent_collision_is_reported() {
        let mut i = inst();
        i.agents.push(i.agents[0]);
        i.agents[1].start = Pose::new(5.0, 6.0, 0.0);
        i.agents[1].goal = Pose::new(8.0, 6.0, 0.0);
        let sol = Solution::from_paths(vec![straight(5.0), straight(6.0)]);
        let v = check_solution(&i, &sol, &Resolution::default(), 0.5);
        assert!(v.iter().any(|m| m.contains("collide at t=0")), "{v:?}");
    }
}
