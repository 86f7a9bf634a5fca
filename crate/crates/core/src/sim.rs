//! Episode state machine.
//!
//! An [`Episode`] owns a private copy of the map's exploration overlay, the
//! object positions, and the agent. Every low-level action is followed by a
//! sensing pass that explores visible cells and marks visible objects as seen.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{MorpError, Result};
use crate::gridmap::{
    generate_map, load_map, Cell, FovSpec, OccupancyMap, Pose, SizeClass, VisibilityCache,
};
use crate::pathfind::{can_step, distance_field, LowAction, StepCount};

pub type ObjectId = usize;

/// Default cap on low-level steps, guarding against non-terminating policies.
pub const DEFAULT_MAX_LOW_STEPS: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectSpec {
    /// Object type; selects the receptacle.
    pub kind: usize,
    pub cell: Cell,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceptacleSpec {
    pub kind: usize,
    pub cell: Cell,
}

/// Where an episode's map comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum MapRef {
    Generated { class: SizeClass, seed: u64 },
    File { path: PathBuf },
    Inline { text: String },
}

impl MapRef {
    /// Materializes the map. Relative file paths resolve against `base`.
    pub fn resolve(&self, base: Option<&Path>) -> Result<OccupancyMap> {
        match self {
            MapRef::Generated { class, seed } => generate_map(*seed, *class),
            MapRef::Inline { text } => load_map(text),
            MapRef::File { path } => {
                let full = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| MorpError::Io(format!("{}: {e}", full.display())))?;
                load_map(&text)
            }
        }
    }
}

fn default_max_low_steps() -> u64 {
    DEFAULT_MAX_LOW_STEPS
}

/// Everything needed to replay one episode.
///
/// Object ids are indices into `objects`; an object's receptacle is the one
/// with the same `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub map: MapRef,
    pub objects: Vec<ObjectSpec>,
    pub receptacles: Vec<ReceptacleSpec>,
    pub spawn: Pose,
    pub capacity: usize,
    #[serde(default)]
    pub fov: FovSpec,
    /// Budget of high-level actions.
    pub max_t: u32,
    /// Translation budget per high-level action, meters.
    pub max_dist: f64,
    #[serde(default = "default_max_low_steps")]
    pub max_low_steps: u64,
    pub seed: u64,
}

impl EpisodeSpec {
    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    /// Receptacle cell of each object, in object order.
    pub fn receptacle_cells(&self) -> Result<Vec<Cell>> {
        self.objects
            .iter()
            .enumerate()
            .map(|(id, o)| {
                self.receptacles
                    .iter()
                    .find(|r| r.kind == o.kind)
                    .map(|r| r.cell)
                    .ok_or_else(|| MorpError::Spec(format!("object {id} has no receptacle for type {}", o.kind)))
            })
            .collect()
    }

    /// Checks the structural invariants and reachability on `map`.
    pub fn validate(&self, map: &OccupancyMap) -> Result<()> {
        if self.capacity == 0 {
            return Err(MorpError::Spec("capacity must be at least 1".into()));
        }
        if self.max_t == 0 {
            return Err(MorpError::Spec("max_t must be at least 1".into()));
        }
        if !(self.max_dist > 0.0) {
            return Err(MorpError::Spec("max_dist must be positive".into()));
        }
        self.fov.validate().map_err(|e| MorpError::Spec(e.to_string()))?;
        let mut kinds = BTreeSet::new();
        for r in &self.receptacles {
            if !kinds.insert(r.kind) {
                return Err(MorpError::Spec(format!("type {} has several receptacles", r.kind)));
            }
        }
        self.receptacle_cells()?;
        if !map.is_navigable(self.spawn.cell) {
            return Err(MorpError::Spec(format!("spawn {} is not navigable", self.spawn.cell)));
        }
        let field = distance_field(map, self.spawn.cell)?;
        let points = self
            .objects
            .iter()
            .map(|o| ("object", o.cell))
            .chain(self.receptacles.iter().map(|r| ("receptacle", r.cell)));
        for (what, c) in points {
            if !map.is_navigable(c) {
                return Err(MorpError::Spec(format!("{what} at {c} is not navigable")));
            }
            if field[map.index(c)].is_none() {
                return Err(MorpError::Spec(format!("{what} at {c} is unreachable from spawn")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("specs always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| MorpError::Spec(e.to_string()))
    }
}

/// Agent pose, gripper slots and counters.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentState {
    pub pose: Pose,
    /// One entry per gripper slot.
    pub slots: Vec<Option<ObjectId>>,
    pub seen: BTreeSet<ObjectId>,
    /// Exact translation so far.
    pub traveled: StepCount,
    /// Translation so far in meters.
    pub path_length: f64,
    pub low_steps: u64,
    pub high_actions: u32,
}

impl AgentState {
    pub fn held(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.slots.iter().flatten().copied()
    }

    pub fn held_count(&self) -> usize {
        self.slots.iter().flatten().count()
    }

    pub fn is_holding(&self, id: ObjectId) -> bool {
        self.slots.contains(&Some(id))
    }

    /// Gripper occupancy as a `capacity × n_objects` 0/1 matrix.
    pub fn gripper_matrix(&self, n_objects: usize) -> Vec<Vec<u8>> {
        self.slots
            .iter()
            .map(|slot| (0..n_objects).map(|j| u8::from(*slot == Some(j))).collect())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    /// Current cell of each object; `None` while held.
    pub object_cells: Vec<Option<Cell>>,
    pub rearranged: BTreeSet<ObjectId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Success,
    Timeout,
}

/// What the agent was doing when something happened.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Init,
    Explore,
    Plan,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Discovery {
    pub phase: Phase,
    /// Agent path length at the moment of discovery.
    pub path_length: f64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    Blocked,
    Discovered(ObjectId),
    Rearranged(ObjectId),
    Grabbed { object: ObjectId, slot: usize },
    Dropped(ObjectId),
    Wasted,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Blocked => f.write_str("blocked"),
            Event::Discovered(id) => write!(f, "discovered:{id}"),
            Event::Rearranged(id) => write!(f, "rearranged:{id}"),
            Event::Grabbed { object, slot } => write!(f, "grabbed:{object}@{slot}"),
            Event::Dropped(id) => write!(f, "dropped:{id}"),
            Event::Wasted => f.write_str("wasted"),
        }
    }
}

/// Outcome of a grab/drop action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GrabDropEffect {
    Dropped(Vec<ObjectId>),
    Grabbed { object: ObjectId, slot: usize },
    Wasted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub step: u64,
    /// `None` for the initial sensing pass.
    pub action: Option<LowAction>,
    pub pose: Pose,
    pub events: Vec<Event>,
}

/// The five episode metrics plus the lengths they were computed from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub es: f64,
    pub ror: f64,
    pub sor: f64,
    pub mc: f64,
    pub espl: f64,
    pub path_length: f64,
    pub oracle_length: f64,
}

/// Success weighted by path length: `es · z / max(z, l)`, and `es` when `z = 0`.
///
/// With nothing to move, walking only serves to verify object placement and
/// is not charged.
pub fn espl(success: bool, oracle_length: f64, path_length: f64) -> f64 {
    if !success {
        return 0.0;
    }
    if oracle_length == 0.0 {
        1.0
    } else {
        oracle_length / oracle_length.max(path_length)
    }
}

/// A running episode.
pub struct Episode {
    spec: EpisodeSpec,
    map: OccupancyMap,
    sensor: Arc<VisibilityCache>,
    receptacles: Vec<Cell>,
    pub world: WorldState,
    pub agent: AgentState,
    status: Status,
    phase: Phase,
    discoveries: Vec<Option<Discovery>>,
    trace: Vec<TraceRecord>,
    record_trace: bool,
    visible: Vec<u32>,
    stamp: Vec<u32>,
    generation: u32,
}

impl Episode {
    /// Spawns the agent and runs the initial sensing pass.
    ///
    /// `sensor` may be shared between episodes on the same layout; a fresh one
    /// is built when absent or when it does not match the map and sensor range.
    pub fn init(
        spec: EpisodeSpec,
        map: &OccupancyMap,
        sensor: Option<Arc<VisibilityCache>>,
    ) -> Result<Self> {
        spec.validate(map)?;
        let sensor = match sensor {
            Some(s) if s.matches(map, &spec.fov) => s,
            _ => Arc::new(VisibilityCache::new(map, spec.fov.range_m)),
        };
        let mut map = map.clone();
        map.clear_exploration();
        let n = spec.n_objects();
        let mut ep = Self {
            receptacles: spec.receptacle_cells()?,
            world: WorldState {
                object_cells: spec.objects.iter().map(|o| Some(o.cell)).collect(),
                rearranged: BTreeSet::new(),
            },
            agent: AgentState {
                pose: spec.spawn,
                slots: vec![None; spec.capacity],
                seen: BTreeSet::new(),
                traveled: StepCount::ZERO,
                path_length: 0.0,
                low_steps: 0,
                high_actions: 0,
            },
            status: Status::Running,
            phase: Phase::Init,
            discoveries: vec![None; n],
            trace: Vec::new(),
            record_trace: true,
            visible: Vec::new(),
            stamp: vec![0; map.len()],
            generation: 0,
            sensor,
            map,
            spec,
        };
        let events = ep.sense();
        ep.push_trace(None, events);
        ep.refresh_status();
        Ok(ep)
    }

    /// Disables trace recording (sweeps that only need metrics).
    pub fn without_trace(mut self) -> Self {
        self.record_trace = false;
        self.trace.clear();
        self
    }

    pub fn spec(&self) -> &EpisodeSpec {
        &self.spec
    }

    pub fn map(&self) -> &OccupancyMap {
        &self.map
    }

    pub fn sensor(&self) -> &Arc<VisibilityCache> {
        &self.sensor
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }

    pub fn receptacle_of(&self, id: ObjectId) -> Cell {
        self.receptacles[id]
    }

    pub fn discoveries(&self) -> &[Option<Discovery>] {
        &self.discoveries
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn take_trace(&mut self) -> Vec<TraceRecord> {
        std::mem::take(&mut self.trace)
    }

    /// Objects seen but not yet rearranged, including held ones.
    pub fn pending(&self) -> Vec<ObjectId> {
        self.agent
            .seen
            .iter()
            .copied()
            .filter(|id| !self.world.rearranged.contains(id))
            .collect()
    }

    fn push_trace(&mut self, action: Option<LowAction>, events: Vec<Event>) {
        if self.record_trace {
            self.trace.push(TraceRecord {
                step: self.agent.low_steps,
                action,
                pose: self.agent.pose,
                events,
            });
        }
    }

    fn sense(&mut self) -> Vec<Event> {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.generation = 1;
        }
        self.visible.clear();
        self.sensor
            .visible_into(self.agent.pose, &self.spec.fov, &mut self.visible);
        for &i in &self.visible {
            self.stamp[i as usize] = self.generation;
            self.map.explore_index(i as usize);
        }
        let mut events = Vec::new();
        for id in 0..self.spec.n_objects() {
            if self.agent.seen.contains(&id) {
                continue;
            }
            if let Some(c) = self.world.object_cells[id] {
                if self.stamp[self.map.index(c)] == self.generation {
                    self.agent.seen.insert(id);
                    self.discoveries[id] = Some(Discovery {
                        phase: self.phase,
                        path_length: self.agent.path_length,
                    });
                    events.push(Event::Discovered(id));
                }
            }
        }
        for id in 0..self.spec.n_objects() {
            if self.agent.seen.contains(&id)
                && !self.world.rearranged.contains(&id)
                && self.world.object_cells[id] == Some(self.receptacles[id])
            {
                self.world.rearranged.insert(id);
                events.push(Event::Rearranged(id));
            }
        }
        events
    }

    /// Applies the grab/drop resolution order at the agent's cell.
    pub fn grab_drop_rule(&mut self) -> GrabDropEffect {
        let here = self.agent.pose.cell;
        let mut dropped = Vec::new();
        for slot in 0..self.agent.slots.len() {
            if let Some(id) = self.agent.slots[slot] {
                if self.receptacles[id] == here {
                    self.agent.slots[slot] = None;
                    self.world.object_cells[id] = Some(here);
                    self.world.rearranged.insert(id);
                    dropped.push(id);
                }
            }
        }
        if !dropped.is_empty() {
            dropped.sort_unstable();
            return GrabDropEffect::Dropped(dropped);
        }
        let free = self.agent.slots.iter().position(Option::is_none);
        let candidate = (0..self.spec.n_objects()).find(|id| {
            self.agent.seen.contains(id)
                && !self.world.rearranged.contains(id)
                && self.world.object_cells[*id] == Some(here)
        });
        match (free, candidate) {
            (Some(slot), Some(object)) => {
                self.agent.slots[slot] = Some(object);
                self.world.object_cells[object] = None;
                GrabDropEffect::Grabbed { object, slot }
            }
            _ => GrabDropEffect::Wasted,
        }
    }

    /// Executes one low-level action followed by a sensing pass.
    pub fn step(&mut self, action: LowAction) -> Result<Vec<Event>> {
        if self.status != Status::Running {
            return Err(MorpError::State(format!(
                "episode already ended with {:?}",
                self.status
            )));
        }
        let mut events = Vec::new();
        let pose = &mut self.agent.pose;
        match action {
            LowAction::Forward => {
                if can_step(&self.map, pose.cell, pose.heading) {
                    let (dx, dy) = pose.heading.delta();
                    pose.cell = pose.cell.offset(dx, dy);
                    let t = &mut self.agent.traveled;
                    if pose.heading.is_diagonal() {
                        t.diagonal += 1;
                    } else {
                        t.straight += 1;
                    }
                    self.agent.path_length = t.meters(self.map.resolution());
                } else {
                    events.push(Event::Blocked);
                }
            }
            LowAction::Left => pose.heading = pose.heading.left(),
            LowAction::Right => pose.heading = pose.heading.right(),
            LowAction::GrabDrop => match self.grab_drop_rule() {
                GrabDropEffect::Dropped(ids) => events.extend(ids.into_iter().map(Event::Dropped)),
                GrabDropEffect::Grabbed { object, slot } => {
                    events.push(Event::Grabbed { object, slot })
                }
                GrabDropEffect::Wasted => events.push(Event::Wasted),
            },
        }
        self.agent.low_steps += 1;
        events.extend(self.sense());
        self.push_trace(Some(action), events.clone());
        self.refresh_status();
        Ok(events)
    }

    /// Counts one completed high-level action against `max_t`.
    pub fn end_high_level(&mut self) {
        self.agent.high_actions += 1;
        self.refresh_status();
    }

    /// Forces the episode to end unsuccessfully (stuck policies).
    pub fn abort(&mut self) {
        if self.status == Status::Running {
            self.status = Status::Timeout;
        }
    }

    fn refresh_status(&mut self) {
        if self.status == Status::Running {
            self.status = self.check_termination();
        }
    }

    /// Success needs every object seen and at its receptacle; it takes
    /// precedence over running out of budget on the same step.
    pub fn check_termination(&self) -> Status {
        if self.world.rearranged.len() == self.spec.n_objects() {
            Status::Success
        } else if self.agent.high_actions >= self.spec.max_t
            || self.agent.low_steps >= self.spec.max_low_steps
        {
            Status::Timeout
        } else {
            Status::Running
        }
    }

    /// Metrics of a finished episode given the oracle path length `z`.
    pub fn compute_metrics(&self, oracle_length: f64) -> Result<EpisodeMetrics> {
        if self.status == Status::Running {
            return Err(MorpError::State("metrics requested mid-episode".into()));
        }
        if !(oracle_length >= 0.0) {
            return Err(MorpError::Precondition(format!(
                "oracle length {oracle_length} must be non-negative"
            )));
        }
        let n = self.spec.n_objects();
        let ratio = |k: usize| if n == 0 { 1.0 } else { k as f64 / n as f64 };
        let success = self.status == Status::Success;
        Ok(EpisodeMetrics {
            es: if success { 1.0 } else { 0.0 },
            ror: ratio(self.world.rearranged.len()),
            sor: ratio(self.agent.seen.len()),
            mc: self.map.coverage(),
            espl: espl(success, oracle_length, self.agent.path_length),
            path_length: self.agent.path_length,
            oracle_length,
        })
    }

    /// Writes the trace as CSV. See [`write_trace_csv`].
    pub fn write_trace_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_trace_csv(&self.trace, out)
    }
}

/// Writes trace records as CSV: `step,action,x,y,heading,events`, where events
/// are `;`-separated.
pub fn write_trace_csv<W: Write>(records: &[TraceRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "step,action,x,y,heading,events")?;
    for r in records {
        let events: Vec<String> = r.events.iter().map(ToString::to_string).collect();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.step,
            r.action.map_or("init", LowAction::name),
            r.pose.cell.x,
            r.pose.cell.y,
            r.pose.heading.index(),
            events.join(";")
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::Heading;

    fn open_text(w: usize, h: usize) -> String {
        vec![".".repeat(w); h].join("\n")
    }

    fn spec(text: &str, objects: Vec<ObjectSpec>, receptacles: Vec<ReceptacleSpec>, spawn: Cell) -> EpisodeSpec {
        EpisodeSpec {
            map: MapRef::Inline { text: text.to_string() },
            objects,
            receptacles,
            spawn: Pose::new(spawn, Heading::N),
            capacity: 2,
            fov: FovSpec::default(),
            max_t: 100,
            max_dist: 10.0,
            max_low_steps: DEFAULT_MAX_LOW_STEPS,
            seed: 0,
        }
    }

    fn start(s: EpisodeSpec) -> Episode {
        let map = s.map.resolve(None).unwrap();
        Episode::init(s, &map, None).unwrap()
    }

    #[test]
    fn prearranged_object_in_view_counts_at_init() {
        let s = spec(
            &open_text(10, 10),
            vec![ObjectSpec { kind: 0, cell: Cell::new(5, 6) }],
            vec![ReceptacleSpec { kind: 0, cell: Cell::new(5, 6) }],
            Cell::new(5, 5),
        );
        let ep = start(s);
        assert_eq!(ep.status(), Status::Success);
        assert!(ep.world.rearranged.contains(&0));
    }

    #[test]
    fn unseen_object_stays_unseen() {
        let s = spec(
            &open_text(60, 10),
            vec![ObjectSpec { kind: 0, cell: Cell::new(50, 5) }],
            vec![ReceptacleSpec { kind: 0, cell: Cell::new(1, 1) }],
            Cell::new(5, 5),
        );
        let mut ep = start(s);
        assert!(ep.agent.seen.is_empty());
        ep.abort();
        assert!(ep.compute_metrics(1.0).unwrap().sor < 1.0);
    }

    #[test]
    fn seen_count_by_distance() {
        // objects at 1.5 m, 1.9 m and 2.5 m from the spawn
        let s = spec(
            &open_text(61, 61),
            vec![
                ObjectSpec { kind: 0, cell: Cell::new(45, 30) },
                ObjectSpec { kind: 0, cell: Cell::new(30, 49) },
                ObjectSpec { kind: 0, cell: Cell::new(5, 30) },
            ],
            vec![ReceptacleSpec { kind: 0, cell: Cell::new(0, 0) }],
            Cell::new(30, 30),
        );
        assert_eq!(start(s).agent.seen.len(), 2);
    }

    #[test]
    fn rejects_missing_receptacle_and_unreachable() {
        let s = spec(
            &open_text(5, 5),
            vec![ObjectSpec { kind: 1, cell: Cell::new(1, 1) }],
            vec![ReceptacleSpec { kind: 0, cell: Cell::new(0, 0) }],
            Cell::new(2, 2),
        );
        let map = s.map.resolve(None).unwrap();
        assert!(matches!(Episode::init(s, &map, None), Err(MorpError::Spec(_))));

        let s = spec(
            "..#..",
            vec![ObjectSpec { kind: 0, cell: Cell::new(4, 0) }],
            vec![ReceptacleSpec { kind: 0, cell: Cell::new(0, 0) }],
            Cell::new(1, 0),
        );
        let map = s.map.resolve(None).unwrap();
        assert!(matches!(Episode::init(s, &map, None), Err(MorpError::Spec(_))));
    }

    #[test]
    fn movement_rules() {
        let s = spec(
            "...\n.#.\n...",
            vec![ObjectSpec { kind: 0, cell: Cell::new(0, 0) }],
            vec![ReceptacleSpec { kind: 0, cell: Cell::new(2, 2) }],
            Cell::new(0, 1),
        );
        let mut ep = start(s);
        // east is the wall
        ep.agent.pose.heading = Heading::E;
        let ev = ep.step(LowAction::Forward).unwrap();
        assert!(ev.contains(&Event::Blocked));
        assert_eq!(ep.agent.pose.cell, Cell::new(0, 1));
        assert_eq!(ep.agent.path_length, 0.0);
        // diagonal NE would cut the wall corner
        ep.agent.pose.heading = Heading::NE;
        assert!(ep.step(LowAction::Forward).unwrap().contains(&Event::Blocked));
        let before = ep.agent.pose;
        ep.step(LowAction::Left).unwrap();
        ep.step(LowAction::Right).unwrap();
        assert_eq!(ep.agent.pose, before);
        assert_eq!(ep.agent.low_steps, 4);
    }

    #[test]
    fn diagonal_cost() {
        let s = spec(
            &open_text(5, 5),
            vec![ObjectSpec { kind: 0, cell: Cell::new(0, 0) }],
            vec![ReceptacleSpec { kind: 0, cell: Cell::new(4, 4) }],
            Cell::new(2, 2),
        );
        let mut ep = start(s);
        ep.agent.pose.heading = Heading::SE;
        ep.step(LowAction::Forward).unwrap();
        assert!((ep.agent.path_length - 0.1 * std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn grab_drop_resolution() {
        let s = spec(
            &open_text(5, 5),
            vec![
                ObjectSpec { kind: 0, cell: Cell::new(1, 1) },
                ObjectSpec { kind: 0, cell: Cell::new(1, 1) },
                ObjectSpec { kind: 0, cell: Cell::new(1, 1) },
            ],
            vec![ReceptacleSpec { kind: 0, cell: Cell::new(3, 3) }],
            Cell::new(2, 2),
        );
        let mut ep = start(s);
        // empty cell, empty gripper
        assert_eq!(ep.grab_drop_rule(), GrabDropEffect::Wasted);
        ep.agent.pose.cell = Cell::new(1, 1);
        assert_eq!(ep.grab_drop_rule(), GrabDropEffect::Grabbed { object: 0, slot: 0 });
        assert_eq!(ep.grab_drop_rule(), GrabDropEffect::Grabbed { object: 1, slot: 1 });
        // full gripper standing on object 2
        assert_eq!(ep.grab_drop_rule(), GrabDropEffect::Wasted);
        ep.agent.pose.cell = Cell::new(3, 3);
        assert_eq!(ep.grab_drop_rule(), GrabDropEffect::Dropped(vec![0, 1]));
        assert_eq!(ep.world.rearranged.len(), 2);
        assert_eq!(ep.agent.held_count(), 0);
    }

    #[test]
    fn step_after_end_is_an_error() {
        let s = spec(&open_text(3, 3), vec![], vec![], Cell::new(1, 1));
        let mut ep = start(s);
        assert_eq!(ep.status(), Status::Success);
        assert!(matches!(ep.step(LowAction::Left), Err(MorpError::State(_))));
        let m = ep.compute_metrics(0.0).unwrap();
        assert_eq!((m.es, m.espl, m.ror, m.sor), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn success_wins_on_the_last_high_level_action() {
        let mut s = spec(
            &open_text(5, 5),
            vec![ObjectSpec { kind: 0, cell: Cell::new(2, 1) }],
            vec![ReceptacleSpec { kind: 0, cell: Cell::new(2, 3) }],
            Cell::new(2, 2),
        );
        s.max_t = 1;
        let mut ep = start(s);
        use LowAction::*;
        for a in [Forward, GrabDrop, Right, Right, Right, Right, Forward, Forward] {
            ep.step(a).unwrap();
        }
        assert_eq!(ep.status(), Status::Running);
        ep.step(GrabDrop).unwrap();
        ep.end_high_level();
        assert_eq!(ep.agent.high_actions, 1);
        assert_eq!(ep.status(), Status::Success);
    }

    #[test]
    fn unverified_object_blocks_success() {
        // object already at its receptacle but far outside the field of view
        let mut s = spec(
            &open_text(60, 5),
            vec![ObjectSpec { kind: 0, cell: Cell::new(55, 2) }],
            vec![ReceptacleSpec { kind: 0, cell: Cell::new(55, 2) }],
            Cell::new(2, 2),
        );
        s.max_t = 1;
        let mut ep = start(s);
        assert_eq!(ep.status(), Status::Running);
        ep.end_high_level();
        assert_eq!(ep.status(), Status::Timeout);
    }

    #[test]
    fn metrics_need_a_finished_episode() {
        let s = spec(
            &open_text(60, 5),
            vec![ObjectSpec { kind: 0, cell: Cell::new(55, 2) }],
            vec![ReceptacleSpec { kind: 0, cell: Cell::new(1, 1) }],
            Cell::new(2, 2),
        );
        let ep = start(s);
        assert!(matches!(ep.compute_metrics(1.0), Err(MorpError::State(_))));
    }

    #[test]
    fn espl_formula() {
        assert_eq!(espl(true, 10.0, 20.0), 0.5);
        assert_eq!(espl(false, 10.0, 3.0), 0.0);
        assert_eq!(espl(true, 10.0, 4.0), 1.0);
        assert_eq!(espl(true, 0.0, 0.0), 1.0);
        assert_eq!(espl(false, 0.0, 0.0), 0.0);
        assert_eq!(espl(true, 0.0, 7.5), 1.0);
        assert_eq!(espl(false, 0.0, 7.5), 0.0);
    }

    #[test]
    fn spec_json_round_trip() {
        let s = spec(
            &open_text(4, 4),
            vec![ObjectSpec { kind: 0, cell: Cell::new(1, 1) }],
            vec![ReceptacleSpec { kind: 0, cell: Cell::new(2, 2) }],
            Cell::new(0, 0),
        );
        assert_eq!(EpisodeSpec::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn trace_csv_has_header_and_rows() {
        let s = spec(
            &open_text(4, 4),
            vec![ObjectSpec { kind: 0, cell: Cell::new(3, 3) }],
            vec![ReceptacleSpec { kind: 0, cell: Cell::new(0, 0) }],
            Cell::new(1, 1),
        );
        let mut ep = start(s);
        ep.step(LowAction::Right).unwrap();
        let mut buf = Vec::new();
        ep.write_trace_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "step,action,x,y,heading,events");
        assert_eq!(lines[1], "0,init,1,1,0,discovered:0");
        assert_eq!(lines[2], "1,right,1,1,1,");
    }
}
