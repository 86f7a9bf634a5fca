use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use morp_core::explore::ExplorePolicy;
use morp_core::gridmap::{Cell, FovSpec, Heading, Pose, SizeClass};
use morp_core::seed::{derive_seed, label_hash};
use morp_core::sim::{EpisodeSpec, MapRef, ObjectSpec, ReceptacleSpec, DEFAULT_MAX_LOW_STEPS};
use morp_core::MorpError;

use crate::config::SweepConfig;
use crate::error::Result;
use crate::pool::MapPool;

/// One sweep cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub class: SizeClass,
    pub c: usize,
    pub n_o: usize,
    pub n_r: usize,
    pub policy: ExplorePolicy,
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/c={}/n_o={}/n_r={}/{}", self.class, self.c, self.n_o, self.n_r, self.policy)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedEpisode {
    /// Position in the sweep; rows are reported in this order.
    pub id: usize,
    pub cell: CellKey,
    pub index: usize,
    pub map_index: usize,
    pub spec: EpisodeSpec,
}

/// Layout parameters shared by every capacity and policy.
#[derive(Clone, Copy, Debug)]
pub struct LayoutRequest {
    pub seed: u64,
    pub class: SizeClass,
    pub n_o: usize,
    pub n_r: usize,
    pub index: usize,
    pub max_t: u32,
    pub max_dist: f64,
    pub fov: FovSpec,
}

const MAX_LAYOUT_ATTEMPTS: u64 = 64;

/// Places objects, receptacles and the spawn uniformly on a pool map.
///
/// The layout depends only on the request, so every capacity and policy sees
/// the same episode. Capacity is set to 1 and overwritten by callers.
pub fn generate_layout(pool: &MapPool, req: &LayoutRequest) -> Result<(usize, EpisodeSpec)> {
    let n_maps = pool.count(req.class);
    if n_maps == 0 {
        return Err(MorpError::Precondition(format!("map pool has no {} maps", req.class)).into());
    }
    let base = derive_seed(&[req.seed, label_hash(req.class.name()), req.n_o as u64, req.n_r as u64, req.index as u64]);
    for attempt in 0..MAX_LAYOUT_ATTEMPTS {
        let ep_seed = derive_seed(&[base, attempt]);
        let mut rng = ChaCha8Rng::seed_from_u64(ep_seed);
        let map_index = rng.gen_range(0..n_maps);
        let pm = pool.get(req.class, map_index).expect("index in range");
        let cells: Vec<Cell> = pm.map.navigable_cells().collect();
        if cells.len() < req.n_o + req.n_r + 1 {
            return Err(MorpError::Precondition(format!(
                "map has {} navigable cells, fewer than n_o + n_r + 1 = {}",
                cells.len(),
                req.n_o + req.n_r + 1
            ))
            .into());
        }
        let objects = (0..req.n_o)
            .map(|i| ObjectSpec {
                kind: i % req.n_r,
                cell: cells[rng.gen_range(0..cells.len())],
            })
            .collect();
        let receptacles = sample(&mut rng, cells.len(), req.n_r)
            .into_iter()
            .enumerate()
            .map(|(kind, k)| ReceptacleSpec { kind, cell: cells[k] })
            .collect();
        let spawn = Pose::new(
            cells[rng.gen_range(0..cells.len())],
            Heading::new(rng.gen_range(0..8)).expect("heading in range"),
        );
        let spec = EpisodeSpec {
            map: MapRef::Generated {
                class: req.class,
                seed: pm.seed,
            },
            objects,
            receptacles,
            spawn,
            capacity: 1,
            fov: req.fov,
            max_t: req.max_t,
            max_dist: req.max_dist,
            max_low_steps: DEFAULT_MAX_LOW_STEPS,
            seed: ep_seed,
        };
        if spec.validate(&pm.map).is_ok() {
            return Ok((map_index, spec));
        }
    }
    Err(MorpError::GenerationFailure {
        attempts: MAX_LAYOUT_ATTEMPTS as usize,
    }
    .into())
}

/// Every (cell, index) episode of the sweep, in a fixed order.
///
/// Layouts are derived from the config seed, size class, object and
/// receptacle counts and index, so cells that differ only in capacity or
/// policy run on identical episodes.
pub fn generate_episodes(config: &SweepConfig, pool: &MapPool) -> Result<Vec<GeneratedEpisode>> {
    config.validate()?;
    let mut out = Vec::with_capacity(config.n_cells() * config.episodes_per_cell);
    for &class in &config.size_classes {
        for &n_o in &config.n_o_values {
            for &n_r in &config.n_r_values {
                for index in 0..config.episodes_per_cell {
                    let req = LayoutRequest {
                        seed: config.seed,
                        class,
                        n_o,
                        n_r,
                        index,
                        max_t: config.max_t,
                        max_dist: config.max_dist,
                        fov: config.fov,
                    };
                    let (map_index, layout) = generate_layout(pool, &req)?;
                    for &c in &config.c_values {
                        for &policy in &config.policies {
                            let mut spec = layout.clone();
                            spec.capacity = c;
                            out.push(GeneratedEpisode {
                                id: 0,
                                cell: CellKey { class, c, n_o, n_r, policy },
                                index,
                                map_index,
                                spec,
                            });
                        }
                    }
                }
            }
        }
    }
    // report order: cell by cell, episodes by index
    let order = |e: &GeneratedEpisode| {
        let cls = config.size_classes.iter().position(|&x| x == e.cell.class);
        let c = config.c_values.iter().position(|&x| x == e.cell.c);
        let n_o = config.n_o_values.iter().position(|&x| x == e.cell.n_o);
        let n_r = config.n_r_values.iter().position(|&x| x == e.cell.n_r);
        let p = config.policies.iter().position(|&x| x == e.cell.policy);
        (cls, c, n_o, n_r, p, e.index)
    };
    out.sort_by_key(order);
    for (id, e) in out.iter_mut().enumerate() {
        e.id = id;
    }
    Ok(out)
}
