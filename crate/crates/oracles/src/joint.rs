//! Optimal sum-of-costs by uniform-cost search in the joint state space.
//!
//! A joint state is every agent's cell plus a mask of agents that have
//! stopped for good at their goal. Each step costs one per agent still
//! moving; stopping is free but only allowed on the goal.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::grid::{Cell, Grid};

type Joint = (Vec<Cell>, u32);

/// Optimal sum of final arrival times, or `None` if there is no plan.
pub fn joint_optimal(grid: &Grid, starts: &[Cell], goals: &[Cell]) -> Option<u64> {
    let n = starts.len();
    assert!(n <= 4 && goals.len() == n);
    let full = (1u32 << n) - 1;
    let mut dist: HashMap<Joint, u64> = HashMap::new();
    let mut open = BinaryHeap::new();
    let s0: Joint = (starts.to_vec(), 0);
    dist.insert(s0.clone(), 0);
    open.push(Reverse((0u64, s0)));
    while let Some(Reverse((d, state))) = open.pop() {
        if dist.get(&state).is_some_and(|&b| d > b) {
            continue;
        }
        let (cells, done) = &state;
        if *done == full {
            return Some(d);
        }
        let mut push = |next: Joint, nd: u64| {
            if dist.get(&next).is_none_or(|&b| nd < b) {
                dist.insert(next.clone(), nd);
                open.push(Reverse((nd, next)));
            }
        };
        for a in 0..n {
            if done & (1 << a) == 0 && cells[a] == goals[a] {
                push((cells.clone(), done | (1 << a)), d);
            }
        }
        let active: Vec<usize> = (0..n).filter(|a| done & (1 << a) == 0).collect();
        let combos = 5usize.pow(active.len() as u32);
        for mut code in 0..combos {
            let mut next = cells.clone();
            for &a in &active {
                next[a] = Grid::moves(cells[a])[code % 5];
                code /= 5;
            }
            let ok = active.iter().all(|&a| grid.free(next[a]))
                && (0..n).all(|i| {
                    (i + 1..n).all(|j| next[i] != next[j] && !(next[i] == cells[j] && next[j] == cells[i]))
                });
            if ok {
                push((next, *done), d + active.len() as u64);
            }
        }
    }
    None
}
