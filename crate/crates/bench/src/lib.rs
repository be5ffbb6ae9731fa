//! Benchmark harness: instance generation, isolated suite runs, summaries.

pub mod config;
pub mod generate;
pub mod record;
pub mod run;
pub mod summarize;
