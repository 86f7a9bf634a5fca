//! Executable agents: the greedy explore/plan heuristic agent and the
//! full-information oracle that provides the path-length baseline.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MorpError, Result};
use crate::explore::{
    choose_rnd, choose_wfbe_r, choose_wfbe_w, cluster_frontiers, detect_frontiers, ExplorePolicy,
    GainMode, DEFAULT_CLUSTERS,
};
use crate::gridmap::{Cell, OccupancyMap, VisibilityCache};
use crate::pathfind::{distance_matrix, path_to_actions, shortest_path, GridPath, LowAction};
use crate::planner::{
    build_instance, solve, CvrpInstance, DistanceCache, RoutePlan, DEFAULT_EXACT_BOUND,
    DEFAULT_HEURISTIC_BUDGET,
};
use crate::seed::derive_seed;
use crate::sim::{
    Episode, EpisodeMetrics, EpisodeSpec, Event, ObjectId, Phase, Status, TraceRecord,
};

/// Oracle plans up to this many objects are solved exactly.
pub const DEFAULT_ORACLE_EXACT_BOUND: usize = 10;

/// Tunables shared by the agents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    /// Largest instance the agent solves exactly when replanning.
    pub exact_bound: usize,
    /// Largest instance the oracle solves exactly.
    pub oracle_exact_bound: usize,
    pub heuristic_budget: usize,
    pub clusters: usize,
    pub gain_mode: GainMode,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            exact_bound: DEFAULT_EXACT_BOUND,
            oracle_exact_bound: DEFAULT_ORACLE_EXACT_BOUND,
            heuristic_budget: DEFAULT_HEURISTIC_BUDGET,
            clusters: DEFAULT_CLUSTERS,
            gain_mode: GainMode::AlongPath,
        }
    }
}

/// Oracle path length and the plan it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleBaseline {
    pub z: f64,
    pub plan: RoutePlan,
    /// Episode ids of the objects in the plan (the misplaced ones).
    pub objects: Vec<ObjectId>,
    /// False when the plan came from the heuristic solver, so `z` may exceed
    /// the true optimum.
    pub exact: bool,
}

/// Optimal rearrangement of the initially misplaced objects with every
/// location known, starting from the spawn.
pub fn oracle_run(spec: &EpisodeSpec, map: &OccupancyMap, cfg: &AgentConfig) -> Result<OracleBaseline> {
    spec.validate(map)?;
    let receptacles = spec.receptacle_cells()?;
    let misplaced: Vec<ObjectId> = (0..spec.n_objects())
        .filter(|&i| spec.objects[i].cell != receptacles[i])
        .collect();
    if misplaced.is_empty() {
        return Ok(OracleBaseline {
            z: 0.0,
            plan: RoutePlan {
                order: vec![0],
                cost: 0.0,
            },
            objects: misplaced,
            exact: true,
        });
    }
    let mut locations = vec![spec.spawn.cell];
    for &i in &misplaced {
        locations.push(spec.objects[i].cell);
        locations.push(receptacles[i]);
    }
    let dist = distance_matrix(map, &locations)?;
    let n = misplaced.len();
    let inst = CvrpInstance::new(misplaced.clone(), dist, spec.capacity, vec![false; n])?;
    let (plan, exact) = solve(&inst, cfg.oracle_exact_bound, cfg.heuristic_budget)?;
    Ok(OracleBaseline {
        z: plan.cost,
        plan,
        objects: misplaced,
        exact,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HighLevelKind {
    Explore,
    Plan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HighLevelAction {
    pub kind: HighLevelKind,
    pub target: Cell,
    pub path: GridPath,
}

/// How a high-level action ended.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HighLevelOutcome {
    pub reached: bool,
    /// Stopped because a new object came into view while planning.
    pub replan: bool,
    /// Translation during this action, meters.
    pub traveled: f64,
}

/// One line of the high-level action log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HighLevelRecord {
    pub kind: HighLevelKind,
    pub target: Cell,
    /// Seen-but-unrearranged objects when the decision was made (held included).
    pub pending_before: usize,
    pub held_before: usize,
    pub outcome: HighLevelOutcome,
}

/// The decision boundary between arbitration policies and execution.
pub trait HighLevelPolicy {
    /// Next high-level action, or `None` when nothing is left to do.
    fn decide(&mut self, ep: &Episode) -> Result<Option<HighLevelAction>>;
}

/// Greedy arbitration: plan whenever something seen still needs rearranging,
/// otherwise explore with the configured target policy.
pub struct GreedyAgent {
    policy: ExplorePolicy,
    cfg: AgentConfig,
    rng: ChaCha8Rng,
    cache: DistanceCache,
    solver_ms: Vec<f64>,
}

impl GreedyAgent {
    pub fn new(policy: ExplorePolicy, cfg: AgentConfig, seed: u64) -> Self {
        Self {
            policy,
            cfg,
            rng: ChaCha8Rng::seed_from_u64(derive_seed(&[seed, 0xA6E7])),
            cache: DistanceCache::new(),
            solver_ms: Vec::new(),
        }
    }

    /// Wall-clock milliseconds of every planner call so far.
    pub fn solver_ms(&self) -> &[f64] {
        &self.solver_ms
    }

    fn plan_action(&mut self, ep: &Episode) -> Result<HighLevelAction> {
        let inst = build_instance(ep, &mut self.cache)?;
        let t = Instant::now();
        let (plan, _) = solve(&inst, self.cfg.exact_bound, self.cfg.heuristic_budget)?;
        self.solver_ms.push(t.elapsed().as_secs_f64() * 1e3);
        let next = plan
            .first_real_visit(&inst)
            .ok_or_else(|| MorpError::State("plan has no visit".into()))?;
        let target = inst.locations()[next];
        let path = shortest_path(ep.map(), ep.agent.pose.cell, target)?
            .ok_or_else(|| MorpError::State(format!("planned waypoint {target} unreachable")))?;
        Ok(HighLevelAction {
            kind: HighLevelKind::Plan,
            target,
            path,
        })
    }

    /// Exploration target from the configured policy, falling back to a random
    /// reachable unexplored cell when clustering yields nothing.
    pub fn explore_action(&mut self, ep: &Episode) -> Result<HighLevelAction> {
        let map = ep.map();
        let here = ep.agent.pose;
        let chosen = match self.policy {
            ExplorePolicy::Random => None,
            policy => {
                let frontiers = detect_frontiers(map);
                if frontiers.is_empty() {
                    None
                } else {
                    let fs = cluster_frontiers(
                        map,
                        ep.sensor(),
                        &ep.spec().fov,
                        &frontiers,
                        here,
                        self.cfg.clusters,
                        self.cfg.gain_mode,
                    )?;
                    if fs.is_empty() {
                        None
                    } else {
                        let k = match policy {
                            ExplorePolicy::GainRatio => choose_wfbe_r(&fs)?,
                            ExplorePolicy::Weighted(w) => choose_wfbe_w(&fs, w)?,
                            ExplorePolicy::Random => unreachable!(),
                        };
                        let c = fs.candidates.into_iter().nth(k).expect("index from chooser");
                        Some((c.cell, c.path))
                    }
                }
            }
        };
        let (target, path) = match chosen {
            Some(tp) => tp,
            None => {
                let target = choose_rnd(map, here.cell, &mut self.rng)
                    .map_err(|_| MorpError::Stuck("no reachable unexplored cell left".into()))?;
                let path = shortest_path(map, here.cell, target)?
                    .ok_or_else(|| MorpError::State(format!("target {target} unreachable")))?;
                (target, path)
            }
        };
        Ok(HighLevelAction {
            kind: HighLevelKind::Explore,
            target,
            path,
        })
    }

    /// The greedy decision rule for the current state.
    pub fn heuristic_policy_step(&mut self, ep: &Episode) -> Result<Option<HighLevelAction>> {
        if ep.status() != Status::Running {
            return Err(MorpError::State("episode is not running".into()));
        }
        if !ep.pending().is_empty() {
            return self.plan_action(ep).map(Some);
        }
        if ep.world.rearranged.len() < ep.spec().n_objects() {
            return self.explore_action(ep).map(Some);
        }
        Ok(None)
    }
}

impl HighLevelPolicy for GreedyAgent {
    fn decide(&mut self, ep: &Episode) -> Result<Option<HighLevelAction>> {
        self.heuristic_policy_step(ep)
    }
}

/// Follows `hla.path` until the target is reached, `max_dist` meters have been
/// covered, a new object is discovered while planning, `stop` holds, or the
/// episode ends. Issues grab/drop on reaching a plan waypoint. Counts exactly
/// one high-level action.
pub fn execute_high_level_with(
    ep: &mut Episode,
    hla: &HighLevelAction,
    max_dist: f64,
    stop: impl Fn(&Episode) -> bool,
) -> Result<HighLevelOutcome> {
    if hla.path.start() != ep.agent.pose.cell {
        return Err(MorpError::State(format!(
            "path starts at {} but agent is at {}",
            hla.path.start(),
            ep.agent.pose.cell
        )));
    }
    ep.set_phase(match hla.kind {
        HighLevelKind::Explore => Phase::Explore,
        HighLevelKind::Plan => Phase::Plan,
    });
    let (actions, _) = path_to_actions(&hla.path, ep.agent.pose.heading)?;
    let start = ep.agent.path_length;
    let mut replan = false;
    let mut cut = false;
    for a in actions {
        if ep.status() != Status::Running {
            break;
        }
        let events = ep.step(a)?;
        if events.contains(&Event::Blocked) {
            return Err(MorpError::State(format!("path through {} blocked", ep.agent.pose.cell)));
        }
        if hla.kind == HighLevelKind::Plan && events.iter().any(|e| matches!(e, Event::Discovered(_))) {
            replan = true;
        }
        if a == LowAction::Forward && ep.agent.path_length - start >= max_dist {
            cut = true;
        }
        if replan || cut || stop(ep) {
            break;
        }
    }
    let reached = ep.agent.pose.cell == hla.target;
    if reached && hla.kind == HighLevelKind::Plan && ep.status() == Status::Running && !stop(ep) {
        ep.step(LowAction::GrabDrop)?;
    }
    ep.end_high_level();
    Ok(HighLevelOutcome {
        reached,
        replan,
        traveled: ep.agent.path_length - start,
    })
}

/// [`execute_high_level_with`] without an extra stop condition.
pub fn execute_high_level(ep: &mut Episode, hla: &HighLevelAction) -> Result<HighLevelOutcome> {
    let max_dist = ep.spec().max_dist;
    execute_high_level_with(ep, hla, max_dist, |_| false)
}

/// Everything reported about one finished episode.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeResult {
    pub metrics: EpisodeMetrics,
    pub status: Status,
    pub oracle_exact: bool,
    pub high_actions: u32,
    pub low_steps: u64,
    pub n_objects: usize,
    pub initially_seen: usize,
    pub discovered_exploring: usize,
    pub discovered_planning: usize,
    /// Path length when the first object was seen.
    pub first_object_length: Option<f64>,
    pub stuck: Option<String>,
    pub log: Vec<HighLevelRecord>,
    pub trace: Vec<TraceRecord>,
    pub solver_ms: Vec<f64>,
}

impl EpisodeResult {
    /// Share of objects not seen at spawn that were first seen while planning.
    pub fn discovery_while_planning(&self) -> Option<f64> {
        let later = self.discovered_exploring + self.discovered_planning;
        (later > 0).then(|| self.discovered_planning as f64 / later as f64)
    }
}

fn first_object_length(ep: &Episode) -> Option<f64> {
    ep.discoveries()
        .iter()
        .flatten()
        .map(|d| d.path_length)
        .min_by(f64::total_cmp)
}

fn count_phase(ep: &Episode, phase: Phase) -> usize {
    ep.discoveries().iter().flatten().filter(|d| d.phase == phase).count()
}

/// Drives `policy` until the episode ends and scores it against `oracle`.
pub fn run_with_policy(
    mut ep: Episode,
    policy: &mut dyn HighLevelPolicy,
    oracle: &OracleBaseline,
) -> Result<(EpisodeResult, Episode)> {
    let mut log = Vec::new();
    let mut stuck = None;
    while ep.status() == Status::Running {
        let pending_before = ep.pending().len();
        let held_before = ep.agent.held_count();
        let hla = match policy.decide(&ep) {
            Ok(Some(hla)) => hla,
            Ok(None) => break,
            Err(MorpError::Stuck(why)) => {
                stuck = Some(why);
                ep.abort();
                break;
            }
            Err(e) => return Err(e),
        };
        let outcome = execute_high_level(&mut ep, &hla)?;
        log.push(HighLevelRecord {
            kind: hla.kind,
            target: hla.target,
            pending_before,
            held_before,
            outcome,
        });
    }
    if ep.status() == Status::Running {
        ep.abort();
    }
    let metrics = ep.compute_metrics(oracle.z)?;
    let result = EpisodeResult {
        metrics,
        status: ep.status(),
        oracle_exact: oracle.exact,
        high_actions: ep.agent.high_actions,
        low_steps: ep.agent.low_steps,
        n_objects: ep.spec().n_objects(),
        initially_seen: count_phase(&ep, Phase::Init),
        discovered_exploring: count_phase(&ep, Phase::Explore),
        discovered_planning: count_phase(&ep, Phase::Plan),
        first_object_length: first_object_length(&ep),
        stuck,
        log,
        trace: ep.take_trace(),
        solver_ms: Vec::new(),
    };
    Ok((result, ep))
}

/// Runs the greedy agent on `spec` and scores it against the oracle.
pub fn run_episode(
    spec: &EpisodeSpec,
    map: &OccupancyMap,
    sensor: Option<Arc<VisibilityCache>>,
    policy: ExplorePolicy,
    cfg: &AgentConfig,
    record_trace: bool,
) -> Result<EpisodeResult> {
    let oracle = oracle_run(spec, map, cfg)?;
    let mut ep = Episode::init(spec.clone(), map, sensor)?;
    if !record_trace {
        ep = ep.without_trace();
    }
    let mut agent = GreedyAgent::new(policy, cfg.clone(), spec.seed);
    let (mut result, _) = run_with_policy(ep, &mut agent, &oracle)?;
    result.solver_ms = agent.solver_ms;
    Ok(result)
}

/// Replays the oracle plan in the simulator, one high-level action per visit.
///
/// Objects already at their receptacle are not part of the plan, so the
/// episode only succeeds if they happen to be seen on the way.
pub fn run_oracle_episode(
    spec: &EpisodeSpec,
    map: &OccupancyMap,
    sensor: Option<Arc<VisibilityCache>>,
    cfg: &AgentConfig,
) -> Result<EpisodeResult> {
    struct Replay {
        waypoints: Vec<Cell>,
        next: usize,
    }
    impl HighLevelPolicy for Replay {
        fn decide(&mut self, ep: &Episode) -> Result<Option<HighLevelAction>> {
            // a discovery cut the last move short
            if self.next > 0 && ep.agent.pose.cell != self.waypoints[self.next - 1] {
                self.next -= 1;
            }
            let Some(&target) = self.waypoints.get(self.next) else {
                return Ok(None);
            };
            self.next += 1;
            let path = shortest_path(ep.map(), ep.agent.pose.cell, target)?
                .ok_or_else(|| MorpError::State(format!("waypoint {target} unreachable")))?;
            Ok(Some(HighLevelAction {
                kind: HighLevelKind::Plan,
                target,
                path,
            }))
        }
    }
    let oracle = oracle_run(spec, map, cfg)?;
    let receptacles = spec.receptacle_cells()?;
    let waypoints = oracle.plan.order[1..]
        .iter()
        .map(|&loc| {
            let id = oracle.objects[CvrpInstance::object_of(loc)];
            if CvrpInstance::is_pickup(loc) {
                spec.objects[id].cell
            } else {
                receptacles[id]
            }
        })
        .collect();
    let mut spec = spec.clone();
    spec.max_dist = f64::INFINITY;
    spec.max_t = spec.max_t.max((oracle.plan.order.len() + spec.n_objects()) as u32);
    let ep = Episode::init(spec, map, sensor)?;
    let (result, _) = run_with_policy(ep, &mut Replay { waypoints, next: 0 }, &oracle)?;
    Ok(result)
}

/// Exploration-only outcome: how far the agent walked to see every object.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplorationRun {
    /// Path length when the last object was seen, or at budget exhaustion.
    pub total_length: f64,
    /// Path length when the first object was seen.
    pub first_object_length: Option<f64>,
    pub found_all: bool,
    pub high_actions: u32,
}

/// Explores without ever planning until every object has been seen or
/// `max_high_actions` is spent.
pub fn run_exploration_episode(
    spec: &EpisodeSpec,
    map: &OccupancyMap,
    sensor: Option<Arc<VisibilityCache>>,
    policy: ExplorePolicy,
    cfg: &AgentConfig,
    max_high_actions: u32,
) -> Result<ExplorationRun> {
    let mut spec = spec.clone();
    spec.max_t = max_high_actions.max(1);
    let n = spec.n_objects();
    let max_dist = spec.max_dist;
    let mut ep = Episode::init(spec.clone(), map, sensor)?.without_trace();
    let mut agent = GreedyAgent::new(policy, cfg.clone(), spec.seed);
    let all_seen = |ep: &Episode| ep.agent.seen.len() == n;
    while ep.status() == Status::Running && !all_seen(&ep) {
        let hla = match agent.explore_action(&ep) {
            Ok(hla) => hla,
            Err(MorpError::Stuck(_)) => break,
            Err(e) => return Err(e),
        };
        execute_high_level_with(&mut ep, &hla, max_dist, all_seen)?;
    }
    Ok(ExplorationRun {
        total_length: ep.agent.path_length,
        first_object_length: first_object_length(&ep),
        found_all: all_seen(&ep),
        high_actions: ep.agent.high_actions,
    })
}

/// Agent selector: `oracle` or `heuristic:<policy>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AgentKind {
    Oracle,
    Heuristic(ExplorePolicy),
}

impl FromStr for AgentKind {
    type Err = MorpError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "oracle" {
            return Ok(AgentKind::Oracle);
        }
        s.strip_prefix("heuristic:")
            .ok_or_else(|| MorpError::Precondition(format!("unknown agent {s:?}")))?
            .parse()
            .map(AgentKind::Heuristic)
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentKind::Oracle => f.write_str("oracle"),
            AgentKind::Heuristic(p) => write!(f, "heuristic:{p}"),
        }
    }
}
