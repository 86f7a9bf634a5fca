use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use morp_core::gridmap::{generate_map, map_stats, MapStats, OccupancyMap, SizeClass, VisibilityCache, DEFAULT_SAMPLE_PAIRS};
use morp_core::seed::{derive_seed, label_hash};

use crate::error::Result;

/// A generated map with its statistics and shared visibility cache.
pub struct PoolMap {
    pub class: SizeClass,
    pub seed: u64,
    pub map: Arc<OccupancyMap>,
    pub sensor: Arc<VisibilityCache>,
    pub stats: MapStats,
}

/// Maps per size class, in generation order.
#[derive(Default)]
pub struct MapPool {
    pub maps: BTreeMap<SizeClass, Vec<PoolMap>>,
}

impl MapPool {
    pub fn get(&self, class: SizeClass, index: usize) -> Option<&PoolMap> {
        self.maps.get(&class).and_then(|v| v.get(index))
    }

    pub fn count(&self, class: SizeClass) -> usize {
        self.maps.get(&class).map_or(0, Vec::len)
    }
}

/// Seed of the `index`-th pool map of `class`.
pub fn map_seed(seed: u64, class: SizeClass, index: usize) -> u64 {
    derive_seed(&[seed, label_hash(class.name()), index as u64])
}

/// Generates `per_class` maps for each class, in parallel.
pub fn build_pool(classes: &[SizeClass], per_class: usize, seed: u64, range_m: f64) -> Result<MapPool> {
    let jobs: Vec<(SizeClass, usize)> = classes
        .iter()
        .flat_map(|&c| (0..per_class).map(move |i| (c, i)))
        .collect();
    let built = jobs
        .par_iter()
        .map(|&(class, i)| {
            let s = map_seed(seed, class, i);
            let map = generate_map(s, class)?;
            let stats = map_stats(&map, DEFAULT_SAMPLE_PAIRS, s)?;
            let sensor = Arc::new(VisibilityCache::new(&map, range_m));
            Ok(PoolMap {
                class,
                seed: s,
                map: Arc::new(map),
                sensor,
                stats,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pool = MapPool::default();
    for m in built {
        pool.maps.entry(m.class).or_default().push(m);
    }
    Ok(pool)
}
