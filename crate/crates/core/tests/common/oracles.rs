//! Independent oracles. Nothing here calls into the code under test except
//! plain data accessors.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use morp_core::gridmap::{load_map, Cell, FovSpec, OccupancyMap, Pose};
use morp_core::planner::CvrpInstance;
use morp_core::sim::{EpisodeSpec, MapRef, ObjectSpec, ReceptacleSpec};

pub fn open_map(w: usize, h: usize) -> OccupancyMap {
    load_map(&vec![".".repeat(w); h].join("\n")).unwrap()
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Plain Dijkstra over the 8-connected grid without corner cutting.
/// Returns `(straight, diagonal)` step counts of a shortest path to each cell.
pub fn dijkstra(map: &OccupancyMap, from: Cell) -> Vec<Option<(u32, u32)>> {
    let w = map.width() as i32;
    let h = map.height() as i32;
    let idx = |c: Cell| (c.y * w + c.x) as usize;
    let open = |x: i32, y: i32| x >= 0 && y >= 0 && x < w && y < h && map.is_navigable(Cell::new(x, y));
    let mut best: Vec<Option<(u32, u32)>> = vec![None; (w * h) as usize];
    let mut done = vec![false; (w * h) as usize];
    let mut heap = BinaryHeap::new();
    best[idx(from)] = Some((0, 0));
    heap.push(Entry(0.0, idx(from)));
    while let Some(Entry(_, i)) = heap.pop() {
        if done[i] {
            continue;
        }
        done[i] = true;
        let (x, y) = (i as i32 % w, i as i32 / w);
        let (s, d) = best[i].unwrap();
        for dy in -1..=1 {
            for dx in -1..=1 {
                if (dx, dy) == (0, 0) || !open(x + dx, y + dy) {
                    continue;
                }
                let diag = dx != 0 && dy != 0;
                if diag && !(open(x + dx, y) && open(x, y + dy)) {
                    continue;
                }
                let next = if diag { (s, d + 1) } else { (s + 1, d) };
                let cost = next.0 as f64 + next.1 as f64 * std::f64::consts::SQRT_2;
                let j = idx(Cell::new(x + dx, y + dy));
                let better = match best[j] {
                    None => true,
                    Some((s2, d2)) => cost < s2 as f64 + d2 as f64 * std::f64::consts::SQRT_2,
                };
                if better && !done[j] {
                    best[j] = Some(next);
                    heap.push(Entry(cost, j));
                }
            }
        }
    }
    best
}

/// Checks a visit order against the routing constraints: starts at the
/// agent, visits every pickup and dropoff once, picks before dropping, keeps
/// the load (held objects included) within capacity, and visits held
/// pickups before anything else.
pub fn validate_route(order: &[usize], n: usize, capacity: usize, held: &[bool]) -> Result<(), String> {
    if order.len() != 2 * n + 1 {
        return Err(format!("length {} != {}", order.len(), 2 * n + 1));
    }
    if order[0] != 0 {
        return Err("does not start at the agent".into());
    }
    let mut visited = vec![false; 2 * n + 1];
    visited[0] = true;
    for &l in &order[1..] {
        if l == 0 || l > 2 * n {
            return Err(format!("bad location {l}"));
        }
        if visited[l] {
            return Err(format!("location {l} visited twice"));
        }
        visited[l] = true;
    }
    let n_held = held.iter().filter(|&&b| b).count();
    let mut load = 0usize;
    let mut picked = vec![false; n];
    for (pos, &l) in order[1..].iter().enumerate() {
        let obj = (l - 1) / 2;
        if l % 2 == 1 {
            if held[obj] != (pos < n_held) {
                return Err(format!("held pickups must come first (location {l} at {pos})"));
            }
            picked[obj] = true;
            load += 1;
            if load > capacity {
                return Err(format!("load {load} over capacity {capacity}"));
            }
        } else {
            if !picked[obj] {
                return Err(format!("object {obj} dropped before pickup"));
            }
            load -= 1;
        }
    }
    Ok(())
}

fn forward_cost(inst: &CvrpInstance, order: &[usize]) -> f64 {
    let mut c = 0.0;
    for w in order.windows(2) {
        c += inst.cost(w[0], w[1]);
    }
    c
}

/// Cheapest valid order by enumerating every permutation.
pub fn brute_force(inst: &CvrpInstance) -> Option<(f64, Vec<usize>)> {
    let n = inst.n_objects();
    let mut rest: Vec<usize> = (1..=2 * n).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    fn rec(
        inst: &CvrpInstance,
        n: usize,
        prefix: &mut Vec<usize>,
        rest: &mut Vec<usize>,
        best: &mut Option<(f64, Vec<usize>)>,
    ) {
        if rest.is_empty() {
            if validate_route(prefix, n, inst.capacity, &inst.held).is_ok() {
                let c = forward_cost(inst, prefix);
                if best.as_ref().is_none_or(|(b, _)| c < *b) {
                    *best = Some((c, prefix.clone()));
                }
            }
            return;
        }
        for i in 0..rest.len() {
            let l = rest.remove(i);
            prefix.push(l);
            rec(inst, n, prefix, rest, best);
            prefix.pop();
            rest.insert(i, l);
        }
    }
    let mut prefix = vec![0];
    rec(inst, n, &mut prefix, &mut rest, &mut best);
    best
}

/// Sum of costs along `order`, front to back.
pub fn resum(inst: &CvrpInstance, order: &[usize]) -> f64 {
    forward_cost(inst, order)
}

/// Spec on an inline map; object `i` goes to receptacle `kinds[i]`.
pub fn inline_spec(
    map: &OccupancyMap,
    objects: &[(usize, Cell)],
    receptacles: &[Cell],
    spawn: Pose,
    capacity: usize,
    range_m: f64,
) -> EpisodeSpec {
    EpisodeSpec {
        map: MapRef::Inline { text: map.to_text() },
        objects: objects.iter().map(|&(kind, cell)| ObjectSpec { kind, cell }).collect(),
        receptacles: receptacles
            .iter()
            .enumerate()
            .map(|(kind, &cell)| ReceptacleSpec { kind, cell })
            .collect(),
        spawn,
        capacity,
        fov: FovSpec { theta_deg: 360.0, range_m },
        max_t: 100,
        max_dist: 10.0,
        max_low_steps: 100_000,
        seed: 0,
    }
}
