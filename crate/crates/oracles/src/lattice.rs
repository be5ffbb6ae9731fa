//! Shortest car path by uniform-cost search over short motion primitives.
//!
//! Every node keeps its true continuous pose; poses are merged only through a
//! fine duplicate-detection lattice. The result is the cost of a real
//! drivable path that ends within `step` of the goal position and within one
//! primitive's heading change of the goal heading.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::{PI, TAU};

#[derive(Debug, Clone, Copy)]
pub struct LatticeConfig {
    pub turning_radius: f64,
    pub reverse_penalty: f64,
    /// Arc length of one primitive, meters.
    pub step: f64,
    /// Give up after this many expansions.
    pub max_expansions: usize,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig {
            turning_radius: 3.0,
            reverse_penalty: 2.0,
            step: 0.05,
            max_expansions: 20_000_000,
        }
    }
}

#[derive(Clone, Copy)]
struct Entry {
    f: f64,
    g: f64,
    pose: (f64, f64, f64),
}

impl PartialEq for Entry {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f).then(self.g.total_cmp(&o.g))
    }
}

fn wrap(a: f64) -> f64 {
    let a = a.rem_euclid(TAU);
    if a > PI {
        a - TAU
    } else {
        a
    }
}

/// Minimum weighted path length found, or `None` if the budget ran out.
pub fn lattice_distance(from: (f64, f64, f64), to: (f64, f64, f64), cfg: &LatticeConfig) -> Option<f64> {
    let r = cfg.turning_radius;
    let step = cfg.step;
    let dtheta = step / r;
    let key = |p: (f64, f64, f64)| {
        let i = (p.0 / (0.5 * step)).round() as i64;
        let j = (p.1 / (0.5 * step)).round() as i64;
        let k = (wrap(p.2).rem_euclid(TAU) / (0.5 * dtheta)).round() as i64;
        (i, j, k)
    };
    let euclid = |p: (f64, f64, f64)| ((p.0 - to.0).powi(2) + (p.1 - to.1).powi(2)).sqrt();
    let h = |p: (f64, f64, f64)| (euclid(p) - step).max(0.0);
    let mut best: HashMap<(i64, i64, i64), f64> = HashMap::new();
    let mut open = BinaryHeap::from([Entry {
        f: h(from),
        g: 0.0,
        pose: from,
    }]);
    best.insert(key(from), 0.0);
    let mut expansions = 0;
    while let Some(Entry { g, pose, .. }) = open.pop() {
        if best.get(&key(pose)).is_some_and(|&b| g > b) {
            continue;
        }
        if euclid(pose) <= step && wrap(pose.2 - to.2).abs() <= dtheta {
            return Some(g);
        }
        expansions += 1;
        if expansions > cfg.max_expansions {
            return None;
        }
        let (x, y, th) = pose;
        for dir in [1.0, -1.0] {
            let cost = if dir > 0.0 { step } else { step * cfg.reverse_penalty };
            for curv in [-1.0, 0.0, 1.0] {
                let l = dir * step;
                let next = if curv == 0.0 {
                    (x + l * th.cos(), y + l * th.sin(), th)
                } else {
                    let nt = th + curv * l / r;
                    (x + curv * r * (nt.sin() - th.sin()), y - curv * r * (nt.cos() - th.cos()), nt)
                };
                let ng = g + cost;
                let k = key(next);
                if best.get(&k).is_none_or(|&b| ng < b) {
                    best.insert(k, ng);
                    open.push(Entry {
                        f: ng + h(next),
                        g: ng,
                        pose: next,
                    });
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_ahead() {
        let d = lattice_distance((0.0, 0.0, 0.0), (5.0, 0.0, 0.0), &LatticeConfig::default()).unwrap();
        assert!((d - 5.0).abs() <= 0.05 + 1e-9, "{d}");
    }

    #[test]
    fn straight_back_pays_penalty() {
        let d = lattice_distance((0.0, 0.0, 0.0), (-2.0, 0.0, 0.0), &LatticeConfig::default()).unwrap();
        assert!((d - 4.0).abs() <= 0.1 + 1e-9, "{d}");
    }
}
