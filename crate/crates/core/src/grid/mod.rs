//! Four-connected grid MAPF: the second domain for the conflict-aware cache.

pub mod cbs;
pub mod heuristic;
pub mod io;

pub use cbs::{grid_cbs_solve, GridCbsConfig, GridConflict, GridSolution, GridSolveError, GridSolveReport};
pub use heuristic::{grid_base_h, grid_relevance, is_relevant, CachedGridHeuristic};

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub row: i32,
    pub col: i32,
}

impl Cell {
    pub const fn new(row: i32, col: i32) -> Self {
        Cell { row, col }
    }

    pub fn manhattan(&self, other: &Cell) -> u32 {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }

    /// The cell itself (wait) followed by its four neighbors.
    pub fn moves(&self) -> [Cell; 5] {
        let Cell { row, col } = *self;
        [
            *self,
            Cell::new(row - 1, col),
            Cell::new(row + 1, col),
            Cell::new(row, col - 1),
            Cell::new(row, col + 1),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridState {
    pub cell: Cell,
    pub time: u32,
}

impl GridState {
    pub const fn new(cell: Cell, time: u32) -> Self {
        GridState { cell, time }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GridConstraintKind {
    /// Occupying the cell at `time`.
    Vertex(Cell),
    /// Moving `from -> to`, arriving at `time`.
    Edge(Cell, Cell),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridConstraint {
    pub id: u32,
    pub agent: usize,
    pub kind: GridConstraintKind,
    pub time: u32,
}

impl GridConstraint {
    /// Whether the move `from -> to` arriving at `time` violates this constraint.
    pub fn forbids(&self, from: &Cell, to: &Cell, time: u32) -> bool {
        time == self.time
            && match self.kind {
                GridConstraintKind::Vertex(c) => c == *to,
                GridConstraintKind::Edge(a, b) => a == *from && b == *to,
            }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    pub width: i32,
    pub height: i32,
    blocked: Vec<bool>,
}

impl GridMap {
    pub fn new(width: i32, height: i32, obstacles: &[Cell]) -> Self {
        assert!(width > 0 && height > 0, "grid must be non-empty");
        let mut blocked = vec![false; (width * height) as usize];
        for c in obstacles {
            assert!(c.row >= 0 && c.row < height && c.col >= 0 && c.col < width, "obstacle {c:?} off the grid");
            blocked[(c.row * width + c.col) as usize] = true;
        }
        GridMap { width, height, blocked }
    }

    pub fn in_bounds(&self, c: &Cell) -> bool {
        c.row >= 0 && c.row < self.height && c.col >= 0 && c.col < self.width
    }

    pub fn is_free(&self, c: &Cell) -> bool {
        self.in_bounds(c) && !self.blocked[self.index(c)]
    }

    pub fn index(&self, c: &Cell) -> usize {
        (c.row * self.width + c.col) as usize
    }

    pub fn cell_count(&self) -> usize {
        self.blocked.len()
    }

    pub fn obstacles(&self) -> Vec<Cell> {
        (0..self.height)
            .flat_map(|r| (0..self.width).map(move |c| Cell::new(r, c)))
            .filter(|c| self.blocked[self.index(c)])
            .collect()
    }

    /// BFS distances to `target` (moves only); `u32::MAX` where unreachable.
    pub fn distances_to(&self, target: &Cell) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.cell_count()];
        if !self.is_free(target) {
            return dist;
        }
        dist[self.index(target)] = 0;
        let mut queue = VecDeque::from([*target]);
        while let Some(c) = queue.pop_front() {
            let d = dist[self.index(&c)];
            for n in &c.moves()[1..] {
                if self.is_free(n) && dist[self.index(n)] == u32::MAX {
                    dist[self.index(n)] = d + 1;
                    queue.push_back(*n);
                }
            }
        }
        dist
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridAgent {
    pub start: Cell,
    pub goal: Cell,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridInstance {
    pub map: GridMap,
    pub agents: Vec<GridAgent>,
}
