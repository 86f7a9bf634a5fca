use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use morp_core::agents::run_episode;
use morp_core::explore::ExplorePolicy;
use morp_core::gridmap::SizeClass;
use morp_core::sim::Status;

use crate::config::SweepConfig;
use crate::episodes::{generate_episodes, CellKey, GeneratedEpisode};
use crate::error::Result;
use crate::pool::{build_pool, MapPool};

/// One episode of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub id: usize,
    pub class: SizeClass,
    pub c: usize,
    pub n_o: usize,
    pub n_r: usize,
    pub policy: ExplorePolicy,
    pub index: usize,
    pub map_seed: u64,
    pub nav_area: f64,
    pub nav_complexity: f64,
    pub episode_seed: u64,
    pub status: Status,
    pub es: f64,
    pub ror: f64,
    pub sor: f64,
    pub mc: f64,
    pub espl: f64,
    pub path_length: f64,
    pub oracle_length: f64,
    pub oracle_exact: bool,
    pub high_actions: u32,
    pub low_steps: u64,
    pub initially_seen: usize,
    pub discovered_exploring: usize,
    pub discovered_planning: usize,
    pub first_object_length: Option<f64>,
    pub stuck: Option<String>,
}

/// Per-cell means over its episodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellAggregate {
    pub class: SizeClass,
    pub c: usize,
    pub n_o: usize,
    pub n_r: usize,
    pub policy: ExplorePolicy,
    pub episodes: usize,
    pub es: f64,
    pub ror: f64,
    pub sor: f64,
    pub mc: f64,
    pub espl: f64,
    pub path_length: f64,
    pub oracle_length: f64,
    /// Share of objects not seen at spawn that were first seen while
    /// executing a plan action, pooled over the cell.
    pub discovery_planning: Option<f64>,
    pub stuck: usize,
}

impl CellAggregate {
    pub fn key(&self) -> CellKey {
        CellKey {
            class: self.class,
            c: self.c,
            n_o: self.n_o,
            n_r: self.n_r,
            policy: self.policy,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub rows: Vec<EpisodeRow>,
    pub cells: Vec<CellAggregate>,
}

impl SweepResult {
    pub fn cell(&self, key: &CellKey) -> Option<&CellAggregate> {
        self.cells.iter().find(|a| a.key() == *key)
    }
}

fn run_one(config: &SweepConfig, pool: &MapPool, ep: &GeneratedEpisode) -> Result<EpisodeRow> {
    let pm = pool.get(ep.cell.class, ep.map_index).expect("episode map in pool");
    let r = run_episode(&ep.spec, &pm.map, Some(pm.sensor.clone()), ep.cell.policy, &config.agent, false)?;
    Ok(EpisodeRow {
        id: ep.id,
        class: ep.cell.class,
        c: ep.cell.c,
        n_o: ep.cell.n_o,
        n_r: ep.cell.n_r,
        policy: ep.cell.policy,
        index: ep.index,
        map_seed: pm.seed,
        nav_area: pm.stats.nav_area,
        nav_complexity: pm.stats.nav_complexity,
        episode_seed: ep.spec.seed,
        status: r.status,
        es: r.metrics.es,
        ror: r.metrics.ror,
        sor: r.metrics.sor,
        mc: r.metrics.mc,
        espl: r.metrics.espl,
        path_length: r.metrics.path_length,
        oracle_length: r.metrics.oracle_length,
        oracle_exact: r.oracle_exact,
        high_actions: r.high_actions,
        low_steps: r.low_steps,
        initially_seen: r.initially_seen,
        discovered_exploring: r.discovered_exploring,
        discovered_planning: r.discovered_planning,
        first_object_length: r.first_object_length,
        stuck: r.stuck,
    })
}

/// Means per cell, summed in row order.
pub fn aggregate(rows: &[EpisodeRow]) -> Vec<CellAggregate> {
    let mut cells: Vec<CellAggregate> = Vec::new();
    let mut later: Vec<(usize, usize)> = Vec::new();
    for r in rows {
        let key = CellKey {
            class: r.class,
            c: r.c,
            n_o: r.n_o,
            n_r: r.n_r,
            policy: r.policy,
        };
        let k = match cells.iter().position(|a| a.key() == key) {
            Some(k) => k,
            None => {
                cells.push(CellAggregate {
                    class: r.class,
                    c: r.c,
                    n_o: r.n_o,
                    n_r: r.n_r,
                    policy: r.policy,
                    episodes: 0,
                    es: 0.0,
                    ror: 0.0,
                    sor: 0.0,
                    mc: 0.0,
                    espl: 0.0,
                    path_length: 0.0,
                    oracle_length: 0.0,
                    discovery_planning: None,
                    stuck: 0,
                });
                later.push((0, 0));
                cells.len() - 1
            }
        };
        let a = &mut cells[k];
        a.episodes += 1;
        a.es += r.es;
        a.ror += r.ror;
        a.sor += r.sor;
        a.mc += r.mc;
        a.espl += r.espl;
        a.path_length += r.path_length;
        a.oracle_length += r.oracle_length;
        a.stuck += usize::from(r.stuck.is_some());
        later[k].0 += r.discovered_planning;
        later[k].1 += r.discovered_exploring + r.discovered_planning;
    }
    for (a, (planning, total)) in cells.iter_mut().zip(later) {
        let n = a.episodes as f64;
        for v in [&mut a.es, &mut a.ror, &mut a.sor, &mut a.mc, &mut a.espl, &mut a.path_length, &mut a.oracle_length] {
            *v /= n;
        }
        a.discovery_planning = (total > 0).then(|| planning as f64 / total as f64);
    }
    cells
}

/// Runs every episode of the sweep on the current rayon pool.
pub fn run_sweep_on(config: &SweepConfig, pool: &MapPool) -> Result<SweepResult> {
    let episodes = generate_episodes(config, pool)?;
    run_episodes(config, pool, &episodes)
}

/// Runs the given episodes and aggregates them; rows keep the input order.
pub fn run_episodes(config: &SweepConfig, pool: &MapPool, episodes: &[GeneratedEpisode]) -> Result<SweepResult> {
    let rows = episodes
        .par_iter()
        .map(|ep| run_one(config, pool, ep))
        .collect::<Result<Vec<_>>>()?;
    let cells = aggregate(&rows);
    Ok(SweepResult {
        config: config.clone(),
        rows,
        cells,
    })
}

/// Builds the map pool and runs the sweep.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let pool = build_pool(&config.size_classes, config.maps_per_class, config.seed, config.fov.range_m)?;
    run_sweep_on(config, &pool)
}
