use super::{CvrpInstance, RoutePlan};

/// Accepted local-search improvements before stopping.
pub const DEFAULT_HEURISTIC_BUDGET: usize = 50;

const IMPROVEMENT_EPS: f64 = 1e-9;

/// Cheapest feasible way to add `obj` to `route`. Held objects only need their
/// dropoff placed; others get a pickup/dropoff pair.
fn best_insertion(inst: &CvrpInstance, route: &[usize], obj: usize) -> Option<(f64, Vec<usize>)> {
    let first_free = 1 + inst.held_count();
    let pickup = 2 * obj + 1;
    let dropoff = 2 * obj + 2;
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut consider = |cand: Vec<usize>| {
        if !inst.is_feasible_prefix(&cand) {
            return;
        }
        let cost = inst.route_cost(&cand);
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, cand));
        }
    };
    if inst.held[obj] {
        for j in first_free..=route.len() {
            let mut cand = route.to_vec();
            cand.insert(j, dropoff);
            consider(cand);
        }
    } else {
        for i in first_free..=route.len() {
            for j in i + 1..=route.len() + 1 {
                let mut cand = route.to_vec();
                cand.insert(i, pickup);
                cand.insert(j, dropoff);
                consider(cand);
            }
        }
    }
    best
}

/// Every route reachable by one pair relocation, node relocation or segment
/// reversal, keeping the held pickups in front.
fn neighbors(inst: &CvrpInstance, route: &[usize]) -> Vec<Vec<usize>> {
    let first_free = 1 + inst.held_count();
    let mut out = Vec::new();
    for obj in 0..inst.n_objects() {
        let mut without: Vec<usize> = route.to_vec();
        without.retain(|&l| l != 2 * obj + 2 && (inst.held[obj] || l != 2 * obj + 1));
        if let Some((_, cand)) = best_insertion(inst, &without, obj) {
            out.push(cand);
        }
    }
    for a in first_free..route.len() {
        let mut rest = route.to_vec();
        let node = rest.remove(a);
        for b in first_free..=rest.len() {
            if b == a {
                continue;
            }
            let mut cand = rest.clone();
            cand.insert(b, node);
            out.push(cand);
        }
    }
    for i in first_free..route.len() {
        for j in i + 1..route.len() {
            let mut cand = route.to_vec();
            cand[i..=j].reverse();
            out.push(cand);
        }
    }
    out
}

/// Cheapest-insertion construction followed by best-improvement local search.
///
/// Construction repeatedly inserts the object whose cheapest feasible insertion
/// is globally cheapest. Local search then applies the best improving move
/// until none improves or `budget` moves have been accepted. Deterministic.
pub fn solve_heuristic(inst: &CvrpInstance, budget: usize) -> RoutePlan {
    let mut route: Vec<usize> = std::iter::once(0)
        .chain((0..inst.n_objects()).filter(|&o| inst.held[o]).map(|o| 2 * o + 1))
        .collect();
    let mut remaining: Vec<usize> = (0..inst.n_objects()).collect();
    while !remaining.is_empty() {
        let mut pick: Option<(usize, f64, Vec<usize>)> = None;
        for (k, &obj) in remaining.iter().enumerate() {
            if let Some((cost, cand)) = best_insertion(inst, &route, obj) {
                if pick.as_ref().is_none_or(|(_, c, _)| cost < *c) {
                    pick = Some((k, cost, cand));
                }
            }
        }
        match pick {
            Some((k, _, cand)) => {
                route = cand;
                remaining.remove(k);
            }
            None => {
                // appending a pickup/dropoff pair (or a lone dropoff) is always feasible
                let obj = remaining.remove(0);
                if !inst.held[obj] {
                    route.push(2 * obj + 1);
                }
                route.push(2 * obj + 2);
            }
        }
    }

    let mut cost = inst.route_cost(&route);
    let mut accepted = 0;
    while accepted < budget {
        let mut best: Option<(f64, Vec<usize>)> = None;
        for cand in neighbors(inst, &route) {
            if !inst.is_feasible(&cand) {
                continue;
            }
            let c = inst.route_cost(&cand);
            if c < cost - IMPROVEMENT_EPS * cost.max(1.0) && best.as_ref().is_none_or(|(b, _)| c < *b) {
                best = Some((c, cand));
            }
        }
        match best {
            Some((c, cand)) => {
                route = cand;
                cost = c;
                accepted += 1;
            }
            None => break,
        }
    }
    RoutePlan { order: route, cost }
}
