use super::{CvrpInstance, RoutePlan};
use crate::error::{MorpError, Result};

/// Largest instance `solve_exact` accepts by default.
pub const DEFAULT_EXACT_BOUND: usize = 6;
/// Hard ceiling: the memo table holds `3^n · (2n + 1)` entries.
pub const MAX_EXACT_BOUND: usize = 12;

struct Search<'a> {
    inst: &'a CvrpInstance,
    n: usize,
    held_total: usize,
    pow3: Vec<usize>,
    /// Cheapest prefix cost seen per (object states, last location).
    memo: Vec<f64>,
    status: Vec<u8>,
    route: Vec<usize>,
    load: usize,
    best: f64,
    best_route: Vec<usize>,
}

impl Search<'_> {
    fn dfs(&mut self, last: usize, partial: f64, code: usize) {
        if self.route.len() == 2 * self.n + 1 {
            if partial < self.best {
                self.best = partial;
                self.best_route.clone_from(&self.route);
            }
            return;
        }
        if partial >= self.best {
            return;
        }
        let slot = code * (2 * self.n + 1) + last;
        // An earlier prefix reached the same state at no greater cost. Float
        // addition is monotone, so it dominates every completion from here and,
        // being visited first, is also lexicographically smaller.
        if partial >= self.memo[slot] {
            return;
        }
        self.memo[slot] = partial;
        let forced_held = self.route.len() <= self.held_total;
        for next in 1..=2 * self.n {
            let obj = CvrpInstance::object_of(next);
            let pickup = CvrpInstance::is_pickup(next);
            let allowed = if pickup {
                self.status[obj] == 0
                    && self.load < self.inst.capacity
                    && self.inst.held[obj] == forced_held
            } else {
                !forced_held && self.status[obj] == 1
            };
            if !allowed {
                continue;
            }
            self.status[obj] += 1;
            if pickup {
                self.load += 1;
            } else {
                self.load -= 1;
            }
            self.route.push(next);
            let cost = partial + self.inst.cost(last, next);
            self.dfs(next, cost, code + self.pow3[obj]);
            self.route.pop();
            self.status[obj] -= 1;
            if pickup {
                self.load -= 1;
            } else {
                self.load += 1;
            }
        }
    }
}

/// Optimal plan by depth-first branch and bound over visit orders, memoized on
/// (per-object progress, last location).
///
/// Among optimal plans the lexicographically smallest order is returned.
pub fn solve_exact(inst: &CvrpInstance, bound: usize) -> Result<RoutePlan> {
    let n = inst.n_objects();
    let bound = bound.min(MAX_EXACT_BOUND);
    if n > bound {
        return Err(MorpError::SizeBound { n_s: n, bound });
    }
    let pow3: Vec<usize> = (0..n).map(|i| 3usize.pow(i as u32)).collect();
    let states = 3usize.pow(n as u32);
    let mut search = Search {
        inst,
        n,
        held_total: inst.held_count(),
        pow3,
        memo: vec![f64::INFINITY; states * (2 * n + 1)],
        status: vec![0; n],
        route: vec![0],
        load: 0,
        best: f64::INFINITY,
        best_route: Vec::new(),
    };
    search.dfs(0, 0.0, 0);
    if search.best_route.is_empty() {
        return Err(MorpError::Precondition("instance admits no feasible plan".into()));
    }
    let cost = inst.route_cost(&search.best_route);
    Ok(RoutePlan {
        order: search.best_route,
        cost,
    })
}
