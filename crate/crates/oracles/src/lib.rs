//! Slow, independent reference solvers. Nothing here shares code with the
//! solver crates; tests compare the two.

pub mod grid;
pub mod joint;
pub mod lattice;
