//! Frontier detection, frontier clustering and exploration target selection.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MorpError, Result};
use crate::gridmap::{Cell, CellState, FovSpec, Heading, OccupancyMap, Pose, VisibilityCache};
use crate::pathfind::{distance_field, shortest_path, GridPath};
use crate::seed::derive_seed;

/// Number of frontier clusters.
pub const DEFAULT_CLUSTERS: usize = 10;
const KMEANS_MAX_ITERS: usize = 100;

/// Unexplored navigable cells with at least one explored 8-neighbor, row-major.
pub fn detect_frontiers(map: &OccupancyMap) -> Vec<Cell> {
    (0..map.len())
        .filter(|&i| map.state_at(i) == CellState::Unexplored)
        .map(|i| map.cell_at(i))
        .filter(|c| {
            Heading::ALL.iter().any(|h| {
                let (dx, dy) = h.delta();
                map.is_explored(c.offset(dx, dy))
            })
        })
        .collect()
}

/// How the information gain of a candidate frontier is measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainMode {
    /// Unexplored cells seen from any pose along the path to the frontier.
    #[default]
    AlongPath,
    /// Unexplored cells seen from the frontier cell only.
    AtFrontier,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrontierCandidate {
    pub cell: Cell,
    /// Geodesic distance from the agent, meters.
    pub distance: f64,
    pub gain: usize,
    pub path: GridPath,
}

/// Candidate frontiers, one per non-empty cluster with a reachable representative.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrontierSet {
    pub candidates: Vec<FrontierCandidate>,
}

impl FrontierSet {
    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }
}

fn sq_dist(p: (f64, f64), c: Cell) -> f64 {
    let dx = p.0 - f64::from(c.x);
    let dy = p.1 - f64::from(c.y);
    dx * dx + dy * dy
}

/// Lloyd's k-means on cell coordinates with k-means++ seeding.
///
/// The seeding RNG is keyed by the frontier set itself, so identical inputs
/// always cluster identically. Returns per-point cluster labels and centroids.
pub fn kmeans(points: &[Cell], k: usize) -> (Vec<usize>, Vec<(f64, f64)>) {
    let k = k.min(points.len());
    if k == 0 {
        return (Vec::new(), Vec::new());
    }
    let key: Vec<u64> = points
        .iter()
        .map(|c| (u64::from(c.x as u32) << 32) | u64::from(c.y as u32))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&key));

    let mut centroids: Vec<(f64, f64)> = Vec::with_capacity(k);
    let first = points[rng.gen_range(0..points.len())];
    centroids.push((f64::from(first.x), f64::from(first.y)));
    let mut nearest: Vec<f64> = points.iter().map(|&p| sq_dist(centroids[0], p)).collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total <= 0.0 {
            rng.gen_range(0..points.len())
        } else {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = points.len() - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        };
        let c = (f64::from(points[pick].x), f64::from(points[pick].y));
        centroids.push(c);
        for (n, &p) in nearest.iter_mut().zip(points) {
            *n = n.min(sq_dist(c, p));
        }
    }

    let mut labels = vec![usize::MAX; points.len()];
    for _ in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        for (label, &p) in labels.iter_mut().zip(points) {
            let best = (0..centroids.len())
                .min_by(|&a, &b| sq_dist(centroids[a], p).total_cmp(&sq_dist(centroids[b], p)))
                .expect("k >= 1");
            if *label != best {
                *label = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![(0.0, 0.0, 0usize); centroids.len()];
        for (&l, &p) in labels.iter().zip(points) {
            sums[l].0 += f64::from(p.x);
            sums[l].1 += f64::from(p.y);
            sums[l].2 += 1;
        }
        for (c, s) in centroids.iter_mut().zip(&sums) {
            // an emptied cluster keeps its old centroid
            if s.2 > 0 {
                *c = (s.0 / s.2 as f64, s.1 / s.2 as f64);
            }
        }
    }
    (labels, centroids)
}

/// Counts unexplored cells that would be seen along `path` (or only at its end).
pub fn path_gain(
    map: &OccupancyMap,
    sensor: &VisibilityCache,
    fov: &FovSpec,
    path: &GridPath,
    start_heading: Heading,
    mode: GainMode,
) -> usize {
    let mut seen = vec![false; map.len()];
    let mut buf = Vec::new();
    let mut heading = start_heading;
    let mut gain = 0;
    for (i, &cell) in path.cells.iter().enumerate() {
        if i > 0 {
            let prev = path.cells[i - 1];
            heading = Heading::from_delta(cell.x - prev.x, cell.y - prev.y).unwrap_or(heading);
        }
        if mode == GainMode::AtFrontier && i + 1 < path.cells.len() {
            continue;
        }
        buf.clear();
        sensor.visible_into(Pose::new(cell, heading), fov, &mut buf);
        for &v in &buf {
            let v = v as usize;
            if !seen[v] && map.state_at(v) == CellState::Unexplored {
                seen[v] = true;
                gain += 1;
            }
        }
    }
    gain
}

/// Clusters frontiers and scores one representative per cluster.
///
/// The representative is the member closest to its centroid (ties to the
/// lowest row-major cell). Unreachable representatives are dropped, so the
/// result may be empty.
pub fn cluster_frontiers(
    map: &OccupancyMap,
    sensor: &VisibilityCache,
    fov: &FovSpec,
    frontiers: &[Cell],
    agent: Pose,
    k: usize,
    mode: GainMode,
) -> Result<FrontierSet> {
    if frontiers.is_empty() {
        return Err(MorpError::Precondition("no frontiers to cluster".into()));
    }
    let (labels, centroids) = kmeans(frontiers, k);
    let mut reps: Vec<Option<Cell>> = vec![None; centroids.len()];
    for (&l, &p) in labels.iter().zip(frontiers) {
        let better = match reps[l] {
            None => true,
            Some(cur) => {
                let (dp, dc) = (sq_dist(centroids[l], p), sq_dist(centroids[l], cur));
                dp < dc || (dp == dc && p < cur)
            }
        };
        if better {
            reps[l] = Some(p);
        }
    }
    let mut candidates = Vec::new();
    for rep in reps.into_iter().flatten() {
        if let Some(path) = shortest_path(map, agent.cell, rep)? {
            if path.length_m > 0.0 {
                let gain = path_gain(map, sensor, fov, &path, agent.heading, mode);
                candidates.push(FrontierCandidate {
                    cell: rep,
                    distance: path.length_m,
                    gain,
                    path,
                });
            }
        }
    }
    Ok(FrontierSet { candidates })
}

fn require_candidates(fs: &FrontierSet) -> Result<()> {
    if fs.is_empty() {
        Err(MorpError::Precondition("empty frontier set".into()))
    } else {
        Ok(())
    }
}

/// Smaller distance first, then row-major cell.
fn tie_break(a: &FrontierCandidate, b: &FrontierCandidate) -> std::cmp::Ordering {
    a.distance.total_cmp(&b.distance).then(a.cell.cmp(&b.cell))
}

/// Index of the candidate maximizing gain per meter.
pub fn choose_wfbe_r(fs: &FrontierSet) -> Result<usize> {
    require_candidates(fs)?;
    let score = |c: &FrontierCandidate| c.gain as f64 / c.distance;
    Ok((0..fs.len())
        .min_by(|&a, &b| {
            let (ca, cb) = (&fs.candidates[a], &fs.candidates[b]);
            score(cb).total_cmp(&score(ca)).then_with(|| tie_break(ca, cb))
        })
        .expect("non-empty"))
}

/// Index of the candidate minimizing `w·d̄ + (1 − w)·ḡ` over normalized
/// distance and gain. All normalized gains are zero when no candidate has gain.
pub fn choose_wfbe_w(fs: &FrontierSet, w: f64) -> Result<usize> {
    require_candidates(fs)?;
    if !(0.0..=1.0).contains(&w) {
        return Err(MorpError::Precondition(format!("weight {w} not in [0, 1]")));
    }
    let dsum: f64 = fs.candidates.iter().map(|c| c.distance).sum();
    let gsum: usize = fs.candidates.iter().map(|c| c.gain).sum();
    let utility = |c: &FrontierCandidate| {
        let dn = c.distance / dsum;
        let gn = if gsum == 0 {
            0.0
        } else {
            c.gain as f64 / gsum as f64
        };
        w * dn + (1.0 - w) * gn
    };
    Ok((0..fs.len())
        .min_by(|&a, &b| {
            let (ca, cb) = (&fs.candidates[a], &fs.candidates[b]);
            utility(ca).total_cmp(&utility(cb)).then_with(|| tie_break(ca, cb))
        })
        .expect("non-empty"))
}

/// Uniformly random unexplored cell reachable from `from`.
pub fn choose_rnd<R: Rng + ?Sized>(map: &OccupancyMap, from: Cell, rng: &mut R) -> Result<Cell> {
    let field = distance_field(map, from)?;
    let pool: Vec<Cell> = (0..map.len())
        .filter(|&i| map.state_at(i) == CellState::Unexplored && field[i].is_some())
        .map(|i| map.cell_at(i))
        .collect();
    pool.choose(rng)
        .copied()
        .ok_or_else(|| MorpError::Precondition("no reachable unexplored cell".into()))
}

/// Exploration target policy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ExplorePolicy {
    Random,
    GainRatio,
    Weighted(f64),
}

impl fmt::Display for ExplorePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExplorePolicy::Random => f.write_str("rnd"),
            ExplorePolicy::GainRatio => f.write_str("wfbe-r"),
            ExplorePolicy::Weighted(w) => write!(f, "wfbe-w:{w}"),
        }
    }
}

impl FromStr for ExplorePolicy {
    type Err = MorpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rnd" => Ok(ExplorePolicy::Random),
            "wfbe-r" => Ok(ExplorePolicy::GainRatio),
            _ => {
                let w = s
                    .strip_prefix("wfbe-w:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| MorpError::Precondition(format!("unknown policy {s:?}")))?;
                if !(0.0..=1.0).contains(&w) {
                    return Err(MorpError::Precondition(format!("weight {w} not in [0, 1]")));
                }
                Ok(ExplorePolicy::Weighted(w))
            }
        }
    }
}

impl TryFrom<String> for ExplorePolicy {
    type Error = MorpError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ExplorePolicy> for String {
    fn from(p: ExplorePolicy) -> String {
        p.to_string()
    }
}
