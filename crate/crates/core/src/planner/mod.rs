//! Single-vehicle capacitated pickup-and-delivery routing.
//!
//! Location `0` is the agent, `2i + 1` the pickup of object `i` and `2i + 2`
//! its dropoff. A plan visits every location once, starting at `0`, never
//! carries more than the capacity, drops each object after picking it up, and
//! visits the pickups of already-held objects first. Those pickups sit at the
//! agent's cell and cost nothing. Held objects count against the capacity from
//! the start.

mod exact;
mod heuristic;
mod timing;

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MorpError, Result};
use crate::gridmap::{Cell, OccupancyMap};
use crate::pathfind::{distance_field, DistanceMatrix, StepCount};
use crate::sim::{Episode, ObjectId};

pub use exact::{solve_exact, DEFAULT_EXACT_BOUND, MAX_EXACT_BOUND};
pub use heuristic::{solve_heuristic, DEFAULT_HEURISTIC_BUDGET};
pub use timing::{solver_timing_sweep, SolverKind, TimingRow};

/// A routing instance over `n_s` objects and `2·n_s + 1` locations.
#[derive(Clone, Debug, PartialEq)]
pub struct CvrpInstance {
    /// Episode object id behind each instance object.
    pub objects: Vec<ObjectId>,
    pub dist: DistanceMatrix,
    pub capacity: usize,
    /// Whether each instance object is already in the gripper.
    pub held: Vec<bool>,
}

impl CvrpInstance {
    /// Validates shapes, capacity and finiteness.
    pub fn new(
        objects: Vec<ObjectId>,
        dist: DistanceMatrix,
        capacity: usize,
        held: Vec<bool>,
    ) -> Result<Self> {
        let n = objects.len();
        if dist.len() != 2 * n + 1 || held.len() != n {
            return Err(MorpError::Precondition(format!(
                "{} locations and {} held flags for {n} objects",
                dist.len(),
                held.len()
            )));
        }
        if capacity == 0 {
            return Err(MorpError::Precondition("capacity must be at least 1".into()));
        }
        if held.iter().filter(|&&h| h).count() > capacity {
            return Err(MorpError::Precondition("more held objects than gripper slots".into()));
        }
        if dist.values().iter().any(|d| !d.is_finite()) {
            return Err(MorpError::Precondition("instance has unreachable locations".into()));
        }
        Ok(Self {
            objects,
            dist,
            capacity,
            held,
        })
    }

    /// Instance over planar points with euclidean costs; used for fuzzing and timing.
    ///
    /// Held objects get their pickup moved onto the agent.
    pub fn from_points(
        agent: (f64, f64),
        pairs: &[((f64, f64), (f64, f64))],
        held: Vec<bool>,
        capacity: usize,
    ) -> Result<Self> {
        let mut pts = vec![agent];
        for (i, &(p, d)) in pairs.iter().enumerate() {
            pts.push(if held.get(i).copied().unwrap_or(false) { agent } else { p });
            pts.push(d);
        }
        let n = pts.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                values[i * n + j] = (pts[i].0 - pts[j].0).hypot(pts[i].1 - pts[j].1);
            }
        }
        let cells = pts
            .iter()
            .map(|p| Cell::new(p.0.round() as i32, p.1.round() as i32))
            .collect();
        Self::new(
            (0..pairs.len()).collect(),
            DistanceMatrix::from_values(cells, values)?,
            capacity,
            held,
        )
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn n_locations(&self) -> usize {
        self.dist.len()
    }

    pub fn held_count(&self) -> usize {
        self.held.iter().filter(|&&h| h).count()
    }

    pub fn locations(&self) -> &[Cell] {
        &self.dist.locations
    }

    pub fn cost(&self, from: usize, to: usize) -> f64 {
        self.dist.get(from, to)
    }

    /// Object served by a non-zero location index.
    pub fn object_of(location: usize) -> usize {
        (location - 1) / 2
    }

    pub fn is_pickup(location: usize) -> bool {
        location % 2 == 1
    }

    /// Sum of leg costs along `order`, accumulated front to back.
    pub fn route_cost(&self, order: &[usize]) -> f64 {
        order.windows(2).fold(0.0, |acc, w| acc + self.cost(w[0], w[1]))
    }

    /// Whether `order` (a full plan) satisfies every routing constraint.
    pub fn is_feasible(&self, order: &[usize]) -> bool {
        let n = self.n_objects();
        if order.len() != 2 * n + 1 || order.first() != Some(&0) {
            return false;
        }
        self.is_feasible_prefix(order) && order.len() == 2 * n + 1
    }

    /// Checks capacity, precedence, held-first and uniqueness on a partial route.
    fn is_feasible_prefix(&self, order: &[usize]) -> bool {
        let n = self.n_objects();
        let held_total = self.held_count();
        let mut state = vec![0u8; n];
        let mut load = 0usize;
        for (step, &loc) in order.iter().enumerate().skip(1) {
            if loc == 0 || loc > 2 * n {
                return false;
            }
            let obj = Self::object_of(loc);
            if Self::is_pickup(loc) {
                if state[obj] != 0 {
                    return false;
                }
                if self.held[obj] != (step <= held_total) {
                    return false;
                }
                state[obj] = 1;
                load += 1;
                if load > self.capacity {
                    return false;
                }
            } else {
                if state[obj] != 1 {
                    return false;
                }
                state[obj] = 2;
                load -= 1;
            }
        }
        true
    }
}

/// An ordered visit sequence and its cost in meters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoutePlan {
    pub order: Vec<usize>,
    pub cost: f64,
}

impl RoutePlan {
    /// First location after the formal pickups of held objects, if any remains.
    pub fn first_real_visit(&self, inst: &CvrpInstance) -> Option<usize> {
        self.order.get(1 + inst.held_count()..)?.first().copied()
    }
}

/// Memoized single-source distance fields for one map.
///
/// Object and receptacle cells recur across replans, so their searches are
/// kept; rows for a new agent cell are read off the cached fields by symmetry.
#[derive(Default)]
pub struct DistanceCache {
    fields: HashMap<Cell, Vec<Option<StepCount>>>,
}

impl DistanceCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    fn ensure(&mut self, map: &OccupancyMap, c: Cell) -> Result<()> {
        if !self.fields.contains_key(&c) {
            let f = distance_field(map, c)?;
            self.fields.insert(c, f);
        }
        Ok(())
    }

    /// Distance matrix over `locations`, searching from every location except
    /// an uncached first one when others exist.
    pub fn matrix(&mut self, map: &OccupancyMap, locations: &[Cell]) -> Result<DistanceMatrix> {
        let n = locations.len();
        for (i, &c) in locations.iter().enumerate() {
            if !map.is_navigable(c) {
                return Err(MorpError::NotNavigable(c));
            }
            if i == 0 && n > 1 && !self.fields.contains_key(&c) && locations[1..].iter().all(|&o| o != c) {
                continue;
            }
            self.ensure(map, c)?;
        }
        let mut values = vec![f64::INFINITY; n * n];
        for (i, &a) in locations.iter().enumerate() {
            for (j, &b) in locations.iter().enumerate() {
                let steps = match self.fields.get(&a) {
                    _ if a == b => Some(StepCount::ZERO),
                    Some(f) => f[map.index(b)],
                    None => self.fields[&b][map.index(a)],
                };
                if let Some(s) = steps {
                    values[i * n + j] = s.meters(map.resolution());
                }
            }
        }
        DistanceMatrix::from_values(locations.to_vec(), values)
    }
}

/// Instance over the episode's seen-but-unrearranged objects, held ones included.
pub fn build_instance(ep: &Episode, cache: &mut DistanceCache) -> Result<CvrpInstance> {
    let pending = ep.pending();
    if pending.is_empty() {
        return Err(MorpError::EmptyInstance);
    }
    let here = ep.agent.pose.cell;
    let mut locations = vec![here];
    let mut held = Vec::with_capacity(pending.len());
    for &id in &pending {
        let is_held = ep.agent.is_holding(id);
        let pickup = if is_held {
            here
        } else {
            ep.world.object_cells[id]
                .ok_or_else(|| MorpError::State(format!("object {id} has no cell")))?
        };
        locations.push(pickup);
        locations.push(ep.receptacle_of(id));
        held.push(is_held);
    }
    let dist = cache.matrix(ep.map(), &locations)?;
    CvrpInstance::new(pending, dist, ep.spec().capacity, held)
}

/// Random planar instance: points uniform in a `20 × 15` m box, with the first
/// `held` objects already in the gripper.
pub fn random_instance<R: Rng + ?Sized>(
    rng: &mut R,
    n_objects: usize,
    capacity: usize,
    held: usize,
) -> Result<CvrpInstance> {
    let mut point = || (rng.gen_range(0.0..20.0), rng.gen_range(0.0..15.0));
    let agent = point();
    let pairs: Vec<_> = (0..n_objects).map(|_| (point(), point())).collect();
    let flags = (0..n_objects).map(|i| i < held).collect();
    CvrpInstance::from_points(agent, &pairs, flags, capacity)
}

/// Solves exactly when `n_s ≤ exact_bound`, heuristically otherwise.
/// The flag is true when the returned plan is provably optimal.
pub fn solve(inst: &CvrpInstance, exact_bound: usize, budget: usize) -> Result<(RoutePlan, bool)> {
    if inst.n_objects() <= exact_bound {
        Ok((solve_exact(inst, exact_bound)?, true))
    } else {
        Ok((solve_heuristic(inst, budget), false))
    }
}
