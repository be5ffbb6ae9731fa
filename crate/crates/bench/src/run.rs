//! Running suites: one child process per (instance, configuration).

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use carchase::approx::{ApproxTable, TableBounds, TableResolution};
use carchase::cbs::{solve, SolverConfig};
use carchase::grid::io::load_grid_instance;
use carchase::grid::{grid_cbs_solve, GridCbsConfig};
use carchase::io::load_instance;
use carchase::reeds_shepp::RsConfig;
use carchase::Instance;
use wait_timeout::ChildExt;

use crate::config::BenchConfig;
use crate::record::{RecordWriter, RunRecord};

/// Extra time granted to a child beyond the solver timeout before it is killed.
pub const GRACE: Duration = Duration::from_millis(900);

/// Instance id used in the CSV: the file stem.
pub fn instance_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Instance files of a suite directory, sorted by name.
pub fn list_suite(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("yaml" | "yml")))
        .collect();
    files.sort();
    Ok(files)
}

fn is_grid_file(path: &Path) -> Result<bool> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().any(|l| l.trim() == "kind: grid"))
}

/// Approximation table matching the kinematics of `inst`, cached at `path`.
pub fn table_for(inst: &Instance, path: &Path) -> Result<ApproxTable> {
    let k = &inst.kinematics;
    let rs = RsConfig::new(k.turning_radius, k.reverse_penalty);
    Ok(ApproxTable::load_or_build(
        path,
        rs,
        TableBounds::symmetric(50.0),
        TableResolution::default(),
    )?)
}

/// Solves one instance in this process.
pub fn solve_one(path: &Path, config: BenchConfig, timeout: Duration, table_path: &Path) -> Result<RunRecord> {
    let id = instance_id(path);
    if is_grid_file(path)? {
        let inst = load_grid_instance(path)?;
        let cfg = GridCbsConfig {
            cache: config.grid_cache(),
            timeout,
            ..GridCbsConfig::default()
        };
        let rep = grid_cbs_solve(&inst, &cfg);
        let wall = rep.stats.elapsed.as_secs_f64();
        return Ok(match rep.result {
            Err(_) => RunRecord::unsolved(&id, config.name(), wall),
            Ok(sol) => RunRecord {
                instance: id,
                config: config.name().to_owned(),
                solved: true,
                wall_time_s: wall,
                cost: Some(sol.cost as f64),
                expansions: rep.stats.expansions as u64,
                cache_lookups: rep.stats.cache.lookups,
                cache_hits: rep.stats.cache.hits,
                cache_entries: rep.stats.cache.entries as u64,
                cache_bytes: rep.stats.cache.approx_bytes as u64,
                evictions: rep.stats.cache.evictions,
            },
        });
    }
    let inst = load_instance(path)?;
    let table = if config.uses_table() {
        Some(Arc::new(table_for(&inst, table_path)?))
    } else {
        None
    };
    let (heuristic, cache) = config.modes();
    let mut cfg = SolverConfig {
        timeout,
        ..SolverConfig::default()
    };
    cfg.planner.heuristic = heuristic;
    cfg.planner.cache = cache;
    let rep = solve(&inst, &cfg, table);
    let wall = rep.stats.elapsed.as_secs_f64();
    Ok(match rep.result {
        Err(_) => RunRecord::unsolved(&id, config.name(), wall),
        Ok(sol) => RunRecord {
            instance: id,
            config: config.name().to_owned(),
            solved: true,
            wall_time_s: wall,
            cost: Some(sol.cost),
            expansions: rep.stats.expansions,
            cache_lookups: rep.stats.cache.lookups,
            cache_hits: rep.stats.cache.hits,
            cache_entries: rep.stats.cache.entries as u64,
            cache_bytes: rep.stats.cache.approx_bytes as u64,
            evictions: rep.stats.cache.evictions,
        },
    })
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Binary providing the `solve` subcommand.
    pub solver_exe: PathBuf,
    pub configs: Vec<BenchConfig>,
    pub timeout: Duration,
    pub jobs: usize,
    pub table: PathBuf,
}

/// Runs the child for one job; never fails, a crash or kill is an unsolved row.
fn run_child(opts: &RunOptions, instance: &Path, config: BenchConfig) -> RunRecord {
    let id = instance_id(instance);
    let started = Instant::now();
    let spawned = Command::new(&opts.solver_exe)
        .arg("solve")
        .arg("--instance")
        .arg(instance)
        .arg("--config")
        .arg(config.name())
        .arg("--timeout")
        .arg(opts.timeout.as_secs_f64().to_string())
        .arg("--table")
        .arg(&opts.table)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn();
    let mut child = match spawned {
        Ok(c) => c,
        Err(e) => {
            log::error!("{id} {config}: spawn failed: {e}");
            return RunRecord::unsolved(&id, config.name(), 0.0);
        }
    };
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = thread::spawn(move || {
        let mut s = String::new();
        stdout.read_to_string(&mut s).map(|_| s)
    });
    let status = match child.wait_timeout(opts.timeout + GRACE) {
        Ok(Some(status)) => Some(status),
        Ok(None) | Err(_) => {
            let _ = child.kill();
            let _ = child.wait();
            None
        }
    };
    let elapsed = started.elapsed().as_secs_f64();
    let output = reader.join().ok().and_then(|r| r.ok()).unwrap_or_default();
    match status {
        Some(s) if s.success() => match serde_json::from_str::<RunRecord>(output.trim()) {
            Ok(r) => r,
            Err(e) => {
                log::error!("{id} {config}: unreadable child output: {e}");
                RunRecord::unsolved(&id, config.name(), elapsed)
            }
        },
        Some(s) => {
            log::warn!("{id} {config}: child exited with {s}");
            RunRecord::unsolved(&id, config.name(), elapsed)
        }
        None => {
            log::warn!("{id} {config}: killed after {elapsed:.1}s");
            RunRecord::unsolved(&id, config.name(), opts.timeout.as_secs_f64())
        }
    }
}

/// Runs every (instance, config) pair in isolation and streams rows to
/// `out` in job order, flushing each.
pub fn run_suite(instances: &[PathBuf], opts: &RunOptions, out: &Path) -> Result<Vec<RunRecord>> {
    if opts.configs.is_empty() {
        bail!("no configurations given");
    }
    if let Some(first) = instances.first() {
        if opts.configs.iter().any(|c| c.uses_table()) && !is_grid_file(first)? {
            // build once up front so children only load it
            table_for(&load_instance(first)?, &opts.table)?;
        }
    }
    let jobs: Vec<(PathBuf, BenchConfig)> = instances
        .iter()
        .flat_map(|p| opts.configs.iter().map(move |&c| (p.clone(), c)))
        .collect();
    let mut writer = RecordWriter::create(out)?;
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    let mut rows = Vec::with_capacity(jobs.len());
    thread::scope(|scope| -> Result<()> {
        for _ in 0..opts.jobs.max(1) {
            let tx = tx.clone();
            let (jobs, next) = (&jobs, &next);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((path, config)) = jobs.get(i) else { break };
                let rec = run_child(opts, path, *config);
                if tx.send((i, rec)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        for (i, rec) in rx {
            log::info!(
                "{} {}: solved={} {:.2}s",
                rec.instance,
                rec.config,
                rec.solved,
                rec.wall_time_s
            );
            pending.insert(i, rec);
            while let Some(rec) = pending.remove(&rows.len()) {
                writer.write(&rec)?;
                rows.push(rec);
            }
        }
        Ok(())
    })?;
    Ok(rows)
}
