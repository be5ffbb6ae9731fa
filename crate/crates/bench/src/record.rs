//! One CSV row per (instance, configuration) run.

use std::fs::File;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub config: String,
    pub solved: bool,
    pub wall_time_s: f64,
    /// Empty unless solved.
    pub cost: Option<f64>,
    pub expansions: u64,
    pub cache_lookups: u64,
    pub cache_hits: u64,
    pub cache_entries: u64,
    /// Analytic estimate, not RSS.
    pub cache_bytes: u64,
    pub evictions: u64,
}

impl RunRecord {
    /// An unsolved row. Work counters are left at zero: for a run cut off by
    /// the clock they depend on machine speed.
    pub fn unsolved(instance: &str, config: &str, wall_time_s: f64) -> Self {
        RunRecord {
            instance: instance.to_owned(),
            config: config.to_owned(),
            solved: false,
            wall_time_s,
            cost: None,
            expansions: 0,
            cache_lookups: 0,
            cache_hits: 0,
            cache_entries: 0,
            cache_bytes: 0,
            evictions: 0,
        }
    }
}

pub const CSV_HEADER: &str =
    "instance,config,solved,wall_time_s,cost,expansions,cache_lookups,cache_hits,cache_entries,cache_bytes,evictions";

/// Appends rows and flushes after each one.
pub struct RecordWriter {
    inner: csv::Writer<File>,
}

impl RecordWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(RecordWriter {
            inner: csv::Writer::from_writer(file),
        })
    }

    pub fn write(&mut self, r: &RunRecord) -> Result<()> {
        self.inner.serialize(r)?;
        self.inner.flush()?;
        Ok(())
    }
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let mut rd = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    rd.deserialize()
        .collect::<Result<Vec<RunRecord>, _>>()
        .with_context(|| format!("parsing {}", path.display()))
}

pub fn write_records(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut w = RecordWriter::create(path)?;
    for r in records {
        w.write(r)?;
    }
    Ok(())
}

/// Renders rows with the header, as written to disk.
pub fn to_csv_string(records: &[RunRecord]) -> Result<String> {
    if records.is_empty() {
        return Ok(format!("{CSV_HEADER}\n"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_the_documented_columns() {
        let r = RunRecord::unsolved("a", "baseline", 1.0);
        let text = to_csv_string(&[r]).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(to_csv_string(&[]).unwrap().trim(), CSV_HEADER);
    }

    #[test]
    fn round_trip_through_a_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let mut solved = RunRecord::unsolved("m25_a04_d00_i000", "carchase", 0.25);
        solved.solved = true;
        solved.cost = Some(81.5);
        solved.cache_hits = 7;
        let rows = vec![solved, RunRecord::unsolved("x", "baseline", 30.0)];
        write_records(&path, &rows).unwrap();
        assert_eq!(read_records(&path).unwrap(), rows);
    }
}
