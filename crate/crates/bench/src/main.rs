use std::fs;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use carchase_bench::config::{parse_configs, BenchConfig};
use carchase_bench::generate::{cell_grid, generate_grid_suite, generate_suite};
use carchase_bench::record::read_records;
use carchase_bench::run::{list_suite, run_suite, solve_one, RunOptions};
use carchase_bench::summarize::{render_plot_data, render_table, summarize};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "carchase-bench", version, about = "Benchmark harness for the carchase solvers")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write random car-like instances for every (map size, agents, density) cell.
    Generate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Map sides in meters, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "25,50")]
        map_size: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "4,8,12")]
        agents: Vec<usize>,
        /// Covered-area fractions, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0,0.2")]
        density: Vec<f64>,
        /// Instances per cell.
        #[arg(long, default_value_t = 20)]
        count: usize,
        /// Grid instances instead: map size in cells, density of blocked cells.
        #[arg(long)]
        grid: bool,
        /// Warn about and skip cells whose agents cannot be placed.
        #[arg(long)]
        skip_infeasible: bool,
    },
    /// Solve every instance of a suite under each configuration.
    Run {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long, default_value = "baseline,carchase")]
        configs: String,
        /// Seconds per instance.
        #[arg(long, default_value_t = 30.0)]
        timeout: f64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: PathBuf,
        /// Approximation table cache file; defaults to `rs_table.bin` in the suite.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Compare two configurations of a run CSV.
    Summarize {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value = "baseline")]
        base: String,
        #[arg(long, default_value = "carchase")]
        test: String,
        /// Table output; the plot data goes next to it as `<stem>_speedup.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one instance and print its record as JSON (used by `run`).
    #[command(hide = true)]
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        config: BenchConfig,
        #[arg(long)]
        timeout: f64,
        #[arg(long)]
        table: PathBuf,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Cmd::Generate {
            seed,
            out,
            map_size,
            agents,
            density,
            count,
            grid,
            skip_infeasible,
        } => {
            let mut files = 0;
            for cell in cell_grid(&map_size, &agents, &density) {
                let written = if grid {
                    generate_grid_suite(seed, &[cell], count, &out)
                } else {
                    generate_suite(seed, &[cell], count, &out)
                };
                match written {
                    Ok(w) => files += w.len(),
                    Err(e) if skip_infeasible => log::warn!("skipping {}: {e:#}", cell.label()),
                    Err(e) => return Err(e),
                }
            }
            log::info!("wrote {files} instances to {}", out.display());
        }
        Cmd::Run {
            suite,
            configs,
            timeout,
            jobs,
            out,
            table,
        } => {
            let instances = list_suite(&suite)?;
            if instances.is_empty() {
                bail!("no instances in {}", suite.display());
            }
            let opts = RunOptions {
                solver_exe: std::env::current_exe()?,
                configs: parse_configs(&configs)?,
                timeout: Duration::from_secs_f64(timeout),
                jobs,
                table: table.unwrap_or_else(|| suite.join("rs_table.bin")),
            };
            let rows = run_suite(&instances, &opts, &out)?;
            log::info!("{} rows written to {}", rows.len(), out.display());
        }
        Cmd::Summarize { csv, base, test, out } => {
            let records = read_records(&csv)?;
            for cfg in [&base, &test] {
                if !records.iter().any(|r| &r.config == cfg) {
                    bail!("{} has no rows for config `{cfg}`", csv.display());
                }
            }
            let summary = summarize(&records, &base, &test);
            let table = render_table(&summary);
            print!("{table}");
            if let Some(out) = out {
                fs::write(&out, &table).with_context(|| format!("writing {}", out.display()))?;
                let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                let plot = out.with_file_name(format!("{stem}_speedup.csv"));
                fs::write(&plot, render_plot_data(&summary)).with_context(|| format!("writing {}", plot.display()))?;
            }
        }
        Cmd::Solve {
            instance,
            config,
            timeout,
            table,
        } => {
            let rec = solve_one(&instance, config, Duration::from_secs_f64(timeout), &table)?;
            println!("{}", serde_json::to_string(&rec)?);
        }
    }
    Ok(())
}
