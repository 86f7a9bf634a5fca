use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Cell, OccupancyMap};
use crate::error::{MorpError, Result};
use crate::pathfind::distance_field;

pub const DEFAULT_SAMPLE_PAIRS: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapStats {
    /// Navigable area in m².
    pub nav_area: f64,
    /// Largest sampled ratio of geodesic to euclidean distance.
    pub nav_complexity: f64,
}

/// Navigable area and sampled navigation complexity.
///
/// Pairs are drawn as `⌈√pairs⌉` uniform sources, each with uniform targets, so
/// every pair is marginally uniform while only one search runs per source.
/// Disconnected pairs are skipped.
pub fn map_stats(map: &OccupancyMap, sample_pairs: usize, seed: u64) -> Result<MapStats> {
    let cells: Vec<Cell> = map.navigable_cells().collect();
    if cells.len() < 2 {
        return Err(MorpError::DegenerateMap(
            "map statistics need at least two navigable cells".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sources = (sample_pairs as f64).sqrt().ceil().max(1.0) as usize;
    let per_source = sample_pairs.div_ceil(sources).max(1);
    let mut worst: f64 = 1.0;
    let mut drawn = 0;
    for _ in 0..sources {
        if drawn >= sample_pairs {
            break;
        }
        let a = cells[rng.gen_range(0..cells.len())];
        let field = distance_field(map, a)?;
        for _ in 0..per_source.min(sample_pairs - drawn) {
            drawn += 1;
            let b = cells[rng.gen_range(0..cells.len())];
            if a == b {
                continue;
            }
            if let Some(s) = field[map.index(b)] {
                worst = worst.max(s.meters(1.0) / a.euclidean(b));
            }
        }
    }
    Ok(MapStats {
        nav_area: map.nav_area(),
        nav_complexity: worst,
    })
}
