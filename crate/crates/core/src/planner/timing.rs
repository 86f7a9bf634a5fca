use std::fmt;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{random_instance, solve_exact, solve_heuristic, DEFAULT_HEURISTIC_BUDGET, MAX_EXACT_BOUND};
use crate::error::Result;
use crate::seed::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Exact,
    Heuristic,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Exact => "exact",
            SolverKind::Heuristic => "heuristic",
        })
    }
}

/// Wall-clock statistics for one (objects, capacity, solver) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub n_o: usize,
    pub c: usize,
    pub solver: SolverKind,
    pub median_ms: f64,
    pub p90_ms: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[pos]
}

/// Times both solvers on random planar instances.
///
/// The exact solver only runs where `n_o ≤ exact_bound`. Each cell solves the
/// same `instances` instances with both solvers, single-threaded.
pub fn solver_timing_sweep(
    n_o_values: &[usize],
    c_values: &[usize],
    instances: usize,
    exact_bound: usize,
    seed: u64,
) -> Result<Vec<TimingRow>> {
    let mut rows = Vec::new();
    let instances = instances.max(1);
    for &n_o in n_o_values {
        for &c in c_values {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, n_o as u64, c as u64]));
            let batch = (0..instances)
                .map(|_| random_instance(&mut rng, n_o, c, 0))
                .collect::<Result<Vec<_>>>()?;
            let mut solvers = vec![SolverKind::Heuristic];
            if n_o <= exact_bound.min(MAX_EXACT_BOUND) {
                solvers.insert(0, SolverKind::Exact);
            }
            for solver in solvers {
                let mut times = Vec::with_capacity(batch.len());
                for inst in &batch {
                    let t = Instant::now();
                    match solver {
                        SolverKind::Exact => {
                            std::hint::black_box(solve_exact(inst, exact_bound)?);
                        }
                        SolverKind::Heuristic => {
                            std::hint::black_box(solve_heuristic(inst, DEFAULT_HEURISTIC_BUDGET));
                        }
                    }
                    times.push(t.elapsed().as_secs_f64() * 1e3);
                }
                times.sort_by(f64::total_cmp);
                rows.push(TimingRow {
                    n_o,
                    c,
                    solver,
                    median_ms: quantile(&times, 0.5),
                    p90_ms: quantile(&times, 0.9),
                });
            }
        }
    }
    Ok(rows)
}
