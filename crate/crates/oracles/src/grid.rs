//! Time-expanded shortest paths on a 4-connected grid, by plain BFS over
//! `(cell, t)` up to an explicit horizon, and by exhaustive enumeration.

pub type Cell = (i32, i32);

#[derive(Debug, Clone)]
pub struct Grid {
    pub width: i32,
    pub height: i32,
    pub blocked: Vec<Cell>,
}

impl Grid {
    pub fn free(&self, c: Cell) -> bool {
        c.0 >= 0 && c.0 < self.height && c.1 >= 0 && c.1 < self.width && !self.blocked.contains(&c)
    }

    pub fn moves(c: Cell) -> [Cell; 5] {
        [c, (c.0 - 1, c.1), (c.0 + 1, c.1), (c.0, c.1 - 1), (c.0, c.1 + 1)]
    }
}

/// `Vertex(cell, t)`: not at `cell` at time `t`. `Edge(a, b, t)`: no move
/// `a -> b` arriving at `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Forbid {
    Vertex(Cell, u32),
    Edge(Cell, Cell, u32),
}

fn allowed(forbid: &[Forbid], from: Cell, to: Cell, t: u32) -> bool {
    !forbid.iter().any(|f| match *f {
        Forbid::Vertex(c, ft) => c == to && ft == t,
        Forbid::Edge(a, b, ft) => a == from && b == to && ft == t,
    })
}

fn may_stop(forbid: &[Forbid], goal: Cell, t: u32) -> bool {
    !forbid.iter().any(|f| matches!(*f, Forbid::Vertex(c, ft) if c == goal && ft > t))
}

/// Fewest steps from `start` at `t0` to a final stop at `goal` (staying there
/// forever after), obeying `forbid`. `None` if unreachable.
pub fn constrained_distance(grid: &Grid, start: Cell, t0: u32, goal: Cell, forbid: &[Forbid]) -> Option<u32> {
    if !grid.free(start) || !grid.free(goal) {
        return None;
    }
    let last = forbid
        .iter()
        .map(|f| match *f {
            Forbid::Vertex(_, t) | Forbid::Edge(_, _, t) => t,
        })
        .max()
        .unwrap_or(0);
    let horizon = last.max(t0) + (grid.width * grid.height) as u32 + 1;
    let mut frontier = vec![start];
    let mut t = t0;
    loop {
        if frontier.contains(&goal) && may_stop(forbid, goal, t) {
            return Some(t - t0);
        }
        if t >= horizon || frontier.is_empty() {
            return None;
        }
        let mut next: Vec<Cell> = Vec::new();
        for &c in &frontier {
            for n in Grid::moves(c) {
                if grid.free(n) && allowed(forbid, c, n, t + 1) && !next.contains(&n) {
                    next.push(n);
                }
            }
        }
        frontier = next;
        t += 1;
    }
}

/// Same quantity by trying every move sequence of length `<= max_len`.
pub fn enumerate_distance(grid: &Grid, start: Cell, t0: u32, goal: Cell, forbid: &[Forbid], max_len: u32) -> Option<u32> {
    fn go(grid: &Grid, at: Cell, t: u32, left: u32, goal: Cell, forbid: &[Forbid], used: u32, best: &mut Option<u32>) {
        if at == goal && may_stop(forbid, goal, t) {
            *best = Some(best.map_or(used, |b| b.min(used)));
        }
        if left == 0 {
            return;
        }
        for n in Grid::moves(at) {
            if grid.free(n) && allowed(forbid, at, n, t + 1) {
                go(grid, n, t + 1, left - 1, goal, forbid, used + 1, best);
            }
        }
    }
    if !grid.free(start) {
        return None;
    }
    let mut best = None;
    go(grid, start, t0, max_len, goal, forbid, 0, &mut best);
    best
}
