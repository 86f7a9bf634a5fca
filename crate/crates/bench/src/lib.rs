//! Episode datasets, parameter sweeps and report emission.

pub mod config;
pub mod episodes;
pub mod error;
pub mod explore_bench;
pub mod pool;
pub mod report;
pub mod sweep;

pub use config::{ExploreBenchConfig, SweepConfig};
pub use episodes::{generate_episodes, CellKey, GeneratedEpisode};
pub use error::{BenchError, Result};
pub use explore_bench::{run_exploration_benchmark, ExploreBenchResult, ExploreRow, ExploreSummary};
pub use pool::{build_pool, MapPool, PoolMap};
pub use report::{emit_report, read_aggregates, ReportFormat};
pub use sweep::{run_episodes, run_sweep, run_sweep_on, CellAggregate, EpisodeRow, SweepResult};

/// Runs `f` on a rayon pool sized by `threads`, or by `MORP_THREADS`, or by
/// rayon's default.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let n = match threads {
        Some(n) => n,
        None => match std::env::var("MORP_THREADS") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| BenchError::Config(format!("MORP_THREADS={v:?} is not a count")))?,
            Err(_) => 0,
        },
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| BenchError::Config(e.to_string()))?;
    Ok(pool.install(f))
}
