//! Aggregates a run CSV into success rates, times, and speedups.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::record::RunRecord;

/// Floor applied to wall times before taking ratios.
const MIN_TIME: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigSummary {
    pub config: String,
    pub attempted: usize,
    pub solved: usize,
    /// Percent.
    pub success_rate: f64,
    /// Mean over this configuration's own solved instances.
    pub avg_time_own: Option<f64>,
    pub unsolved: usize,
    /// Total hits over total lookups, solved runs only.
    pub hit_rate: Option<f64>,
    /// Mean analytic bytes per cache entry over solved runs with entries.
    pub bytes_per_entry: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub mutual: usize,
    /// Means over the mutually solved set.
    pub base_avg_time: Option<f64>,
    pub test_avg_time: Option<f64>,
    /// Geometric mean of base/test time over the mutually solved set.
    pub speedup: Option<f64>,
    /// Instances solved by test only, minus those solved by base only.
    pub extra_solved: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub cell: String,
    pub agents: Option<usize>,
    pub base: ConfigSummary,
    pub test: ConfigSummary,
    pub comparison: Comparison,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSummary {
    pub base: ConfigSummary,
    pub test: ConfigSummary,
    pub overall: Comparison,
    pub cells: Vec<CellSummary>,
    /// (agent count, speedup) pooled over all cells with that count.
    pub speedup_by_agents: Vec<(usize, Option<f64>)>,
    pub total_runtime_s: f64,
}

/// Instance ids look like `m25_a04_d20_i003`; the cell is everything before
/// the `_i` index suffix.
pub fn cell_of(instance: &str) -> &str {
    match instance.rfind("_i") {
        Some(i) if instance[i + 2..].chars().all(|c| c.is_ascii_digit()) && i + 2 < instance.len() => &instance[..i],
        _ => instance,
    }
}

pub fn agents_of(cell: &str) -> Option<usize> {
    cell.split('_').find_map(|p| p.strip_prefix('a')?.parse().ok())
}

pub fn geometric_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    Some((values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp())
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = values.fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    (n > 0).then(|| s / n as f64)
}

fn config_summary(config: &str, rows: &[&RunRecord]) -> ConfigSummary {
    let own: Vec<&&RunRecord> = rows.iter().filter(|r| r.config == config).collect();
    let solved: Vec<&&RunRecord> = own.iter().copied().filter(|r| r.solved).collect();
    let lookups: u64 = solved.iter().map(|r| r.cache_lookups).sum();
    let hits: u64 = solved.iter().map(|r| r.cache_hits).sum();
    ConfigSummary {
        config: config.to_owned(),
        attempted: own.len(),
        solved: solved.len(),
        success_rate: if own.is_empty() {
            0.0
        } else {
            100.0 * solved.len() as f64 / own.len() as f64
        },
        avg_time_own: mean(solved.iter().map(|r| r.wall_time_s)),
        unsolved: own.len() - solved.len(),
        hit_rate: (lookups > 0).then(|| hits as f64 / lookups as f64),
        bytes_per_entry: mean(
            solved
                .iter()
                .filter(|r| r.cache_entries > 0)
                .map(|r| r.cache_bytes as f64 / r.cache_entries as f64),
        ),
    }
}

fn compare(base: &str, test: &str, rows: &[&RunRecord]) -> Comparison {
    let solved = |cfg: &str| -> BTreeMap<&str, f64> {
        rows.iter()
            .filter(|r| r.config == cfg && r.solved)
            .map(|r| (r.instance.as_str(), r.wall_time_s))
            .collect()
    };
    let (b, t) = (solved(base), solved(test));
    let mutual: Vec<(f64, f64)> = b.iter().filter_map(|(k, &bt)| t.get(k).map(|&tt| (bt, tt))).collect();
    let ratios: Vec<f64> = mutual.iter().map(|(bt, tt)| bt.max(MIN_TIME) / tt.max(MIN_TIME)).collect();
    Comparison {
        mutual: mutual.len(),
        base_avg_time: mean(mutual.iter().map(|m| m.0)),
        test_avg_time: mean(mutual.iter().map(|m| m.1)),
        speedup: geometric_mean(&ratios),
        extra_solved: t.len() as i64 - b.len() as i64,
    }
}

/// Pure function of the rows.
pub fn summarize(records: &[RunRecord], base: &str, test: &str) -> SuiteSummary {
    let all: Vec<&RunRecord> = records.iter().collect();
    let cells: BTreeSet<&str> = records.iter().map(|r| cell_of(&r.instance)).collect();
    let cell_rows = |cell: &str| -> Vec<&RunRecord> {
        records.iter().filter(|r| cell_of(&r.instance) == cell).collect()
    };
    let cells: Vec<CellSummary> = cells
        .into_iter()
        .map(|cell| {
            let rows = cell_rows(cell);
            CellSummary {
                cell: cell.to_owned(),
                agents: agents_of(cell),
                base: config_summary(base, &rows),
                test: config_summary(test, &rows),
                comparison: compare(base, test, &rows),
            }
        })
        .collect();
    let agent_counts: BTreeSet<usize> = cells.iter().filter_map(|c| c.agents).collect();
    let speedup_by_agents = agent_counts
        .into_iter()
        .map(|a| {
            let rows: Vec<&RunRecord> = records
                .iter()
                .filter(|r| agents_of(cell_of(&r.instance)) == Some(a))
                .collect();
            (a, compare(base, test, &rows).speedup)
        })
        .collect();
    SuiteSummary {
        base: config_summary(base, &all),
        test: config_summary(test, &all),
        overall: compare(base, test, &all),
        cells,
        speedup_by_agents,
        total_runtime_s: records.iter().map(|r| r.wall_time_s).sum(),
    }
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".to_owned(), |v| format!("{v:.digits$}"))
}

/// Plain-text table: one row per cell plus an overall row.
pub fn render_table(s: &SuiteSummary) -> String {
    let mut out = String::new();
    let (b, t) = (&s.base.config, &s.test.config);
    let _ = writeln!(
        out,
        "{:<16} {:>8} {:>8} {:>10} {:>10} {:>8} {:>8}",
        "cell",
        format!("{b} %"),
        format!("{t} %"),
        format!("{b} s"),
        format!("{t} s"),
        "mutual",
        "speedup"
    );
    let row = |out: &mut String, name: &str, bs: &ConfigSummary, ts: &ConfigSummary, c: &Comparison| {
        let _ = writeln!(
            out,
            "{:<16} {:>8.1} {:>8.1} {:>10} {:>10} {:>8} {:>8}",
            name,
            bs.success_rate,
            ts.success_rate,
            opt(c.base_avg_time, 3),
            opt(c.test_avg_time, 3),
            c.mutual,
            opt(c.speedup, 2).replace("n/a", "n/a").to_owned() + if c.speedup.is_some() { "x" } else { "" }
        );
    };
    for c in &s.cells {
        row(&mut out, &c.cell, &c.base, &c.test, &c.comparison);
    }
    row(&mut out, "overall", &s.base, &s.test, &s.overall);
    let _ = writeln!(out);
    let _ = writeln!(out, "times: means over the mutually solved set");
    for c in [&s.base, &s.test] {
        let _ = writeln!(
            out,
            "{}: solved {}/{}, unsolved {}, mean time over own solved set {} s, hit rate {}, bytes/entry {}",
            c.config,
            c.solved,
            c.attempted,
            c.unsolved,
            opt(c.avg_time_own, 3),
            opt(c.hit_rate.map(|h| 100.0 * h), 1).replace("n/a", "n/a") + if c.hit_rate.is_some() { "%" } else { "" },
            opt(c.bytes_per_entry, 1)
        );
    }
    let _ = writeln!(out, "extra instances solved by {t}: {}", s.overall.extra_solved);
    let _ = writeln!(out, "total recorded runtime: {:.1} s", s.total_runtime_s);
    out
}

/// `agents,speedup` lines; speedup empty where no instance was mutually solved.
pub fn render_plot_data(s: &SuiteSummary) -> String {
    let mut out = String::from("agents,speedup\n");
    for (a, sp) in &s.speedup_by_agents {
        let _ = writeln!(out, "{a},{}", sp.map_or(String::new(), |v| format!("{v:.6}")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(instance: &str, config: &str, solved: bool, t: f64) -> RunRecord {
        let mut r = RunRecord::unsolved(instance, config, t);
        if solved {
            r.solved = true;
            r.cost = Some(1.0);
        }
        r
    }

    #[test]
    fn cell_and_agent_parsing() {
        assert_eq!(cell_of("m25_a04_d20_i003"), "m25_a04_d20");
        assert_eq!(cell_of("custom"), "custom");
        assert_eq!(agents_of("m50_a12_d20"), Some(12));
    }

    #[test]
    fn identical_configs_give_unit_speedup() {
        let rows = vec![
            rec("m25_a04_d00_i000", "a", true, 0.3),
            rec("m25_a04_d00_i000", "b", true, 0.3),
            rec("m25_a04_d00_i001", "a", true, 2.0),
            rec("m25_a04_d00_i001", "b", true, 2.0),
        ];
        assert_eq!(summarize(&rows, "a", "b").overall.speedup, Some(1.0));
    }

    #[test]
    fn geometric_mean_of_two_ratios() {
        let rows = vec![
            rec("x_i000", "base", true, 2.0),
            rec("x_i000", "test", true, 1.0),
            rec("x_i001", "base", true, 8.0),
            rec("x_i001", "test", true, 2.0),
        ];
        let s = summarize(&rows, "base", "test");
        assert!((s.overall.speedup.unwrap() - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn one_sided_timeouts_are_left_out_of_the_mean() {
        let rows = vec![
            rec("x_i000", "base", true, 2.0),
            rec("x_i000", "test", true, 1.0),
            rec("x_i001", "base", false, 30.0),
            rec("x_i001", "test", true, 5.0),
            rec("x_i002", "base", true, 4.0),
            rec("x_i002", "test", false, 30.0),
        ];
        let s = summarize(&rows, "base", "test");
        assert_eq!(s.overall.mutual, 1);
        assert_eq!(s.overall.speedup, Some(2.0));
        assert_eq!(s.overall.extra_solved, 0);
        assert!((s.base.success_rate - 200.0 / 3.0).abs() < 1e-9);
        assert_eq!(s.test.avg_time_own, Some(3.0));
    }

    #[test]
    fn empty_intersection_marks_speedup_unavailable() {
        let rows = vec![rec("x_i000", "base", true, 2.0), rec("x_i000", "test", false, 30.0)];
        let s = summarize(&rows, "base", "test");
        assert_eq!(s.overall.speedup, None);
        assert!(render_table(&s).contains("n/a"));
    }

    #[test]
    fn summary_is_a_pure_function_of_the_rows() {
        let rows = vec![
            rec("m25_a04_d00_i000", "base", true, 2.0),
            rec("m25_a04_d00_i000", "test", true, 1.0),
            rec("m50_a12_d20_i000", "base", true, 9.0),
            rec("m50_a12_d20_i000", "test", true, 3.0),
        ];
        let a = summarize(&rows, "base", "test");
        let b = summarize(&rows, "base", "test");
        assert_eq!(a, b);
        assert_eq!(render_table(&a), render_table(&b));
        assert_eq!(render_plot_data(&a), "agents,speedup\n4,2.000000\n12,3.000000\n");
    }
}
