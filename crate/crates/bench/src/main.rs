use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use morp_bench::report::{emit_explore_report, emit_timing_report, write_atomic};
use morp_bench::{
    build_pool, emit_report, run_exploration_benchmark, run_sweep, with_threads, BenchError, ExploreBenchConfig,
    ReportFormat, Result, SweepConfig,
};
use morp_core::agents::{run_episode, run_oracle_episode, AgentConfig, AgentKind};
use morp_core::gridmap::SizeClass;
use morp_core::planner::{solver_timing_sweep, DEFAULT_EXACT_BOUND};
use morp_core::sim::{write_trace_csv, EpisodeSpec};

#[derive(Parser)]
#[command(name = "morp", version, about = "Multi-object rearrangement planning benchmark")]
struct Cli {
    /// Worker threads (overrides MORP_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a pool of maps as text files plus a statistics table.
    GenMaps {
        #[arg(long, value_delimiter = ',', default_value = "small,medium,large")]
        classes: Vec<SizeClass>,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "maps")]
        out: PathBuf,
    },
    /// Run a parameter sweep and write its report.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "report")]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Exploration-only benchmark of the target policies.
    ExploreBench {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Wall-clock timings of the routing solvers on random instances.
    SolverTiming {
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        n_o: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,3")]
        c: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[arg(long, default_value_t = DEFAULT_EXACT_BOUND)]
        exact_bound: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Run one episode from a spec file and print its metrics as JSON.
    Episode {
        #[arg(long)]
        spec: PathBuf,
        /// `oracle` or `heuristic:<rnd|wfbe-r|wfbe-w:W>`.
        #[arg(long, default_value = "heuristic:wfbe-r")]
        agent: String,
        /// Low-level trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

fn config_or_default<T: Default>(path: Option<&Path>, load: impl Fn(&Path) -> Result<T>) -> Result<T> {
    path.map_or_else(|| Ok(T::default()), load)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenMaps { classes, count, seed, out } => {
            let pool = with_threads(cli.threads, || build_pool(&classes, count, seed, 2.0))??;
            std::fs::create_dir_all(&out)?;
            let mut table = csv::Writer::from_writer(Vec::new());
            table.write_record(["file", "class", "index", "seed", "nav_area", "nav_complexity"])?;
            for (class, maps) in &pool.maps {
                for (i, m) in maps.iter().enumerate() {
                    let name = format!("{class}_{i:03}.txt");
                    write_atomic(&out.join(&name), m.map.to_text().as_bytes())?;
                    table.write_record([
                        name,
                        class.to_string(),
                        i.to_string(),
                        m.seed.to_string(),
                        m.stats.nav_area.to_string(),
                        m.stats.nav_complexity.to_string(),
                    ])?;
                }
            }
            let bytes = table.into_inner().map_err(|e| BenchError::Io(e.into_error()))?;
            write_atomic(&out.join("maps.csv"), &bytes)?;
            println!("wrote {} maps to {}", pool.maps.values().map(Vec::len).sum::<usize>(), out.display());
        }
        Command::Sweep { config, out, format } => {
            let format: ReportFormat = format.parse()?;
            let cfg = config_or_default(config.as_deref(), SweepConfig::load)?;
            let result = with_threads(cli.threads, || run_sweep(&cfg))??;
            let files = emit_report(&result, &out, format)?;
            println!("{} episodes, {} cells", result.rows.len(), result.cells.len());
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::ExploreBench { config, out } => {
            let cfg = config_or_default(config.as_deref(), ExploreBenchConfig::load)?;
            let result = with_threads(cli.threads, || run_exploration_benchmark(&cfg))??;
            for s in &result.summary {
                println!(
                    "{:<12} n_o={:<3} total={:.2} m (sd {:.2})  first object={:.2} m  found all={:.3}",
                    s.policy.to_string(),
                    s.n_o,
                    s.mean_total,
                    s.std_total,
                    s.mean_first_object,
                    s.found_all_rate
                );
            }
            for f in emit_explore_report(&result, &out)? {
                println!("wrote {}", f.display());
            }
        }
        Command::SolverTiming { n_o, c, instances, exact_bound, seed, out } => {
            if n_o.is_empty() || c.is_empty() || c.contains(&0) {
                return Err(BenchError::Config("n_o and c need non-empty values, c ≥ 1".into()));
            }
            let rows = solver_timing_sweep(&n_o, &c, instances, exact_bound, seed)?;
            for r in &rows {
                println!("n_o={:<3} c={:<2} {:<9} median={:.4} ms p90={:.4} ms", r.n_o, r.c, r.solver.to_string(), r.median_ms, r.p90_ms);
            }
            for f in emit_timing_report(&rows, &out)? {
                println!("wrote {}", f.display());
            }
        }
        Command::Episode { spec, agent, trace } => {
            let kind: AgentKind = agent.parse().map_err(|e: morp_core::MorpError| BenchError::Config(e.to_string()))?;
            let text = std::fs::read_to_string(&spec)?;
            let ep = EpisodeSpec::from_json(&text).map_err(|e| BenchError::Config(e.to_string()))?;
            let map = ep.map.resolve(spec.parent())?;
            let cfg = AgentConfig::default();
            let result = match kind {
                AgentKind::Oracle => run_oracle_episode(&ep, &map, None, &cfg)?,
                AgentKind::Heuristic(policy) => run_episode(&ep, &map, None, policy, &cfg, trace.is_some())?,
            };
            if let Some(path) = trace {
                let mut bytes = Vec::new();
                write_trace_csv(&result.trace, &mut bytes)?;
                write_atomic(&path, &bytes)?;
            }
            let summary = serde_json::json!({
                "agent": kind.to_string(),
                "status": result.status,
                "metrics": result.metrics,
                "oracle_exact": result.oracle_exact,
                "high_actions": result.high_actions,
                "low_steps": result.low_steps,
                "stuck": result.stuck,
            });
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
