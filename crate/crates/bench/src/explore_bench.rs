use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use morp_core::agents::run_exploration_episode;
use morp_core::explore::ExplorePolicy;
use morp_core::gridmap::SizeClass;

use crate::config::ExploreBenchConfig;
use crate::episodes::{generate_layout, LayoutRequest};
use crate::error::Result;
use crate::pool::{build_pool, MapPool};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExploreRow {
    pub id: usize,
    pub class: SizeClass,
    pub n_o: usize,
    pub policy: ExplorePolicy,
    pub index: usize,
    pub map_seed: u64,
    pub nav_area: f64,
    pub total_length: f64,
    pub first_object_length: Option<f64>,
    pub found_all: bool,
    pub high_actions: u32,
}

/// Per (policy, object count) means over every size class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExploreSummary {
    pub policy: ExplorePolicy,
    pub n_o: usize,
    pub episodes: usize,
    pub mean_total: f64,
    /// Sample standard deviation of the total path length.
    pub std_total: f64,
    pub mean_first_object: f64,
    pub found_all_rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExploreBenchResult {
    pub config: ExploreBenchConfig,
    pub rows: Vec<ExploreRow>,
    pub summary: Vec<ExploreSummary>,
}

impl ExploreBenchResult {
    pub fn summary_for(&self, policy: ExplorePolicy, n_o: usize) -> Option<&ExploreSummary> {
        self.summary.iter().find(|s| s.policy == policy && s.n_o == n_o)
    }
}

fn summarize(config: &ExploreBenchConfig, rows: &[ExploreRow]) -> Vec<ExploreSummary> {
    let mut out = Vec::new();
    for &policy in &config.policies {
        for &n_o in &config.n_o_values {
            let sel: Vec<&ExploreRow> = rows.iter().filter(|r| r.policy == policy && r.n_o == n_o).collect();
            let n = sel.len() as f64;
            let mean = sel.iter().map(|r| r.total_length).sum::<f64>() / n;
            let var = if sel.len() > 1 {
                sel.iter().map(|r| (r.total_length - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let fo: Vec<f64> = sel.iter().filter_map(|r| r.first_object_length).collect();
            out.push(ExploreSummary {
                policy,
                n_o,
                episodes: sel.len(),
                mean_total: mean,
                std_total: var.sqrt(),
                mean_first_object: if fo.is_empty() { 0.0 } else { fo.iter().sum::<f64>() / fo.len() as f64 },
                found_all_rate: sel.iter().filter(|r| r.found_all).count() as f64 / n,
            });
        }
    }
    out
}

/// Exploration-only episodes on the current rayon pool. Every policy runs on
/// the same layouts.
pub fn run_exploration_benchmark_on(config: &ExploreBenchConfig, pool: &MapPool) -> Result<ExploreBenchResult> {
    config.validate()?;
    let mut jobs = Vec::new();
    for &class in &config.size_classes {
        for &n_o in &config.n_o_values {
            for index in 0..config.episodes {
                let req = LayoutRequest {
                    seed: config.seed,
                    class,
                    n_o,
                    n_r: 1,
                    index,
                    max_t: config.max_high_actions,
                    max_dist: config.max_dist,
                    fov: config.fov,
                };
                let (map_index, spec) = generate_layout(pool, &req)?;
                for &policy in &config.policies {
                    jobs.push((class, n_o, index, map_index, policy, spec.clone()));
                }
            }
        }
    }
    let rows = jobs
        .par_iter()
        .enumerate()
        .map(|(id, (class, n_o, index, map_index, policy, spec))| {
            let pm = pool.get(*class, *map_index).expect("episode map in pool");
            let run = run_exploration_episode(
                spec,
                &pm.map,
                Some(pm.sensor.clone()),
                *policy,
                &config.agent,
                config.max_high_actions,
            )?;
            Ok(ExploreRow {
                id,
                class: *class,
                n_o: *n_o,
                policy: *policy,
                index: *index,
                map_seed: pm.seed,
                nav_area: pm.stats.nav_area,
                total_length: run.total_length,
                first_object_length: run.first_object_length,
                found_all: run.found_all,
                high_actions: run.high_actions,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(config, &rows);
    Ok(ExploreBenchResult {
        config: config.clone(),
        rows,
        summary,
    })
}

pub fn run_exploration_benchmark(config: &ExploreBenchConfig) -> Result<ExploreBenchResult> {
    config.validate()?;
    let pool = build_pool(&config.size_classes, config.maps_per_class, config.seed, config.fov.range_m)?;
    run_exploration_benchmark_on(config, &pool)
}
