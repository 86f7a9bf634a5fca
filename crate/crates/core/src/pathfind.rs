//! Shortest paths on the occupancy grid.
//!
//! Moves go to any of the eight neighbors. Straight steps cost one cell and
//! diagonal steps cost √2 cells; a diagonal step needs both orthogonal cells
//! it squeezes between to be navigable. Exploration state is ignored since the
//! static map is known.
//!
//! Path costs are carried as exact `(straight, diagonal)` step counts and only
//! converted to meters at the boundary, so two routes of equal length compare
//! equal regardless of summation order.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use crate::error::{MorpError, Result};
use crate::gridmap::{Cell, Heading, OccupancyMap};

/// An octile path cost `straight + diagonal·√2`, in cells.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct StepCount {
    pub straight: u32,
    pub diagonal: u32,
}

impl StepCount {
    pub const ZERO: StepCount = StepCount {
        straight: 0,
        diagonal: 0,
    };

    fn step(self, diagonal: bool) -> Self {
        if diagonal {
            Self {
                diagonal: self.diagonal + 1,
                ..self
            }
        } else {
            Self {
                straight: self.straight + 1,
                ..self
            }
        }
    }

    fn plus(self, other: StepCount) -> Self {
        Self {
            straight: self.straight + other.straight,
            diagonal: self.diagonal + other.diagonal,
        }
    }

    /// Length in meters at the given resolution.
    pub fn meters(self, resolution: f64) -> f64 {
        resolution * (f64::from(self.straight) + f64::from(self.diagonal) * SQRT_2)
    }

    /// Octile distance between two cells, ignoring obstacles.
    pub fn octile(a: Cell, b: Cell) -> Self {
        let dx = (a.x - b.x).unsigned_abs();
        let dy = (a.y - b.y).unsigned_abs();
        Self {
            straight: dx.max(dy) - dx.min(dy),
            diagonal: dx.min(dy),
        }
    }
}

impl Ord for StepCount {
    fn cmp(&self, other: &Self) -> Ordering {
        // sign of (a1 - a2) + (b1 - b2)·√2, decided in integers
        let da = i64::from(self.straight) - i64::from(other.straight);
        let db = i64::from(self.diagonal) - i64::from(other.diagonal);
        match (da.signum(), db.signum()) {
            (0, 0) => Ordering::Equal,
            (sa, sb) if sa >= 0 && sb >= 0 => Ordering::Greater,
            (sa, sb) if sa <= 0 && sb <= 0 => Ordering::Less,
            (1, _) => (da * da).cmp(&(2 * db * db)),
            _ => (2 * db * db).cmp(&(da * da)),
        }
    }
}

impl PartialOrd for StepCount {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// An 8-connected path with its geodesic length.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPath {
    pub cells: Vec<Cell>,
    pub steps: StepCount,
    pub length_m: f64,
}

impl GridPath {
    pub fn start(&self) -> Cell {
        self.cells[0]
    }

    pub fn end(&self) -> Cell {
        *self.cells.last().expect("paths are never empty")
    }
}

/// Whether a single move from `from` in direction `h` is legal.
pub fn can_step(map: &OccupancyMap, from: Cell, h: Heading) -> bool {
    let (dx, dy) = h.delta();
    let to = from.offset(dx, dy);
    if !map.is_navigable(to) {
        return false;
    }
    !h.is_diagonal()
        || (map.is_navigable(from.offset(dx, 0)) && map.is_navigable(from.offset(0, dy)))
}

fn check_navigable(map: &OccupancyMap, c: Cell) -> Result<()> {
    if map.is_navigable(c) {
        Ok(())
    } else {
        Err(MorpError::NotNavigable(c))
    }
}

fn rebuild(map: &OccupancyMap, parent: &[u32], from: Cell, to: Cell) -> Vec<Cell> {
    let mut cells = vec![to];
    let mut cur = map.index(to);
    let start = map.index(from);
    while cur != start {
        cur = parent[cur] as usize;
        cells.push(map.cell_at(cur));
    }
    cells.reverse();
    cells
}

/// A* with the octile heuristic. `Ok(None)` when `to` is unreachable.
pub fn shortest_path(map: &OccupancyMap, from: Cell, to: Cell) -> Result<Option<GridPath>> {
    check_navigable(map, from)?;
    check_navigable(map, to)?;
    let n = map.len();
    let mut g: Vec<Option<StepCount>> = vec![None; n];
    let mut parent = vec![u32::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let mut counter: u64 = 0;
    g[map.index(from)] = Some(StepCount::ZERO);
    open.push(Reverse((StepCount::octile(from, to), counter, map.index(from))));
    while let Some(Reverse((_, _, i))) = open.pop() {
        if closed[i] {
            continue;
        }
        closed[i] = true;
        let cell = map.cell_at(i);
        let gi = g[i].expect("queued nodes have a cost");
        if cell == to {
            return Ok(Some(GridPath {
                cells: rebuild(map, &parent, from, to),
                steps: gi,
                length_m: gi.meters(map.resolution()),
            }));
        }
        for h in Heading::ALL {
            if !can_step(map, cell, h) {
                continue;
            }
            let (dx, dy) = h.delta();
            let nc = cell.offset(dx, dy);
            let j = map.index(nc);
            if closed[j] {
                continue;
            }
            let cand = gi.step(h.is_diagonal());
            if g[j].is_none_or(|old| cand < old) {
                g[j] = Some(cand);
                parent[j] = i as u32;
                counter += 1;
                open.push(Reverse((cand.plus(StepCount::octile(nc, to)), counter, j)));
            }
        }
    }
    Ok(None)
}

/// Single-source Dijkstra over the whole grid. Entry `i` is the step count to
/// the cell with row-major index `i`, or `None` if unreachable or a wall.
pub fn distance_field(map: &OccupancyMap, source: Cell) -> Result<Vec<Option<StepCount>>> {
    check_navigable(map, source)?;
    let n = map.len();
    let mut dist: Vec<Option<StepCount>> = vec![None; n];
    let mut open = BinaryHeap::new();
    dist[map.index(source)] = Some(StepCount::ZERO);
    open.push(Reverse((StepCount::ZERO, map.index(source))));
    while let Some(Reverse((d, i))) = open.pop() {
        if dist[i] != Some(d) {
            continue;
        }
        let cell = map.cell_at(i);
        for h in Heading::ALL {
            if !can_step(map, cell, h) {
                continue;
            }
            let (dx, dy) = h.delta();
            let j = map.index(cell.offset(dx, dy));
            let cand = d.step(h.is_diagonal());
            if dist[j].is_none_or(|old| cand < old) {
                dist[j] = Some(cand);
                open.push(Reverse((cand, j)));
            }
        }
    }
    Ok(dist)
}

/// Symmetric matrix of geodesic distances in meters (`∞` when disconnected).
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    pub locations: Vec<Cell>,
    d: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from explicit values; `values` is row-major `n × n`.
    pub fn from_values(locations: Vec<Cell>, values: Vec<f64>) -> Result<Self> {
        let n = locations.len();
        if values.len() != n * n {
            return Err(MorpError::Precondition(format!(
                "{} values for {n} locations",
                values.len()
            )));
        }
        Ok(Self { locations, d: values })
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.locations.len() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.d
    }
}

/// Pairwise geodesic distances with one full-grid search per location.
pub fn distance_matrix(map: &OccupancyMap, locations: &[Cell]) -> Result<DistanceMatrix> {
    for &c in locations {
        check_navigable(map, c)?;
    }
    let n = locations.len();
    let mut d = vec![f64::INFINITY; n * n];
    for (i, &a) in locations.iter().enumerate() {
        // repeated locations share a search
        if let Some(k) = locations[..i].iter().position(|&c| c == a) {
            for j in 0..n {
                d[i * n + j] = d[k * n + j];
            }
            continue;
        }
        let field = distance_field(map, a)?;
        for (j, &b) in locations.iter().enumerate() {
            if let Some(s) = field[map.index(b)] {
                d[i * n + j] = s.meters(map.resolution());
            }
        }
    }
    Ok(DistanceMatrix {
        locations: locations.to_vec(),
        d,
    })
}

/// Low-level agent actions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowAction {
    Forward,
    Left,
    Right,
    GrabDrop,
}

impl LowAction {
    pub fn name(self) -> &'static str {
        match self {
            LowAction::Forward => "forward",
            LowAction::Left => "left",
            LowAction::Right => "right",
            LowAction::GrabDrop => "grab_drop",
        }
    }
}

/// Turns needed to face `to` from `from`: positive is clockwise. A half turn
/// goes clockwise.
pub fn turn_delta(from: Heading, to: Heading) -> i32 {
    let cw = (i32::from(to.index()) - i32::from(from.index())).rem_euclid(8);
    if cw <= 4 {
        cw
    } else {
        cw - 8
    }
}

/// Converts a path into turn/forward actions and returns the final heading.
pub fn path_to_actions(path: &GridPath, start_heading: Heading) -> Result<(Vec<LowAction>, Heading)> {
    let mut heading = start_heading;
    let mut actions = Vec::new();
    for w in path.cells.windows(2) {
        let h = Heading::from_delta(w[1].x - w[0].x, w[1].y - w[0].y).ok_or_else(|| {
            MorpError::Precondition(format!("{} and {} are not neighbors", w[0], w[1]))
        })?;
        let turns = turn_delta(heading, h);
        let action = if turns > 0 {
            LowAction::Right
        } else {
            LowAction::Left
        };
        actions.extend(std::iter::repeat_n(action, turns.unsigned_abs() as usize));
        actions.push(LowAction::Forward);
        heading = h;
    }
    Ok((actions, heading))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::load_map;

    fn open(w: usize, h: usize) -> OccupancyMap {
        load_map(&vec![".".repeat(w); h].join("\n")).unwrap()
    }

    #[test]
    fn identity_path() {
        let m = open(3, 3);
        let p = shortest_path(&m, Cell::new(1, 1), Cell::new(1, 1)).unwrap().unwrap();
        assert_eq!(p.cells, vec![Cell::new(1, 1)]);
        assert_eq!(p.length_m, 0.0);
    }

    #[test]
    fn straight_and_mixed_lengths() {
        let m = open(10, 10);
        let p = shortest_path(&m, Cell::new(0, 0), Cell::new(0, 5)).unwrap().unwrap();
        assert!((p.length_m - 0.5).abs() < 1e-12);
        let p = shortest_path(&m, Cell::new(0, 0), Cell::new(3, 5)).unwrap().unwrap();
        assert_eq!(p.steps, StepCount { straight: 2, diagonal: 3 });
        assert!((p.length_m - 0.6242640687119285).abs() < 1e-12);
    }

    #[test]
    fn no_corner_cutting() {
        let m = load_map(".#\n#.").unwrap();
        assert_eq!(shortest_path(&m, Cell::new(0, 0), Cell::new(1, 1)).unwrap(), None);
    }

    #[test]
    fn wall_endpoint_rejected() {
        let m = load_map(".#").unwrap();
        assert!(shortest_path(&m, Cell::new(0, 0), Cell::new(1, 0)).is_err());
    }

    #[test]
    fn step_count_order_is_exact() {
        let a = StepCount { straight: 99, diagonal: 0 };
        let b = StepCount { straight: 0, diagonal: 70 };
        assert!(b < a);
        let c = StepCount { straight: 3, diagonal: 2 };
        let d = StepCount { straight: 5, diagonal: 1 };
        assert!(c.meters(1.0) < d.meters(1.0));
        assert!(c < d);
    }

    #[test]
    fn matrix_basics() {
        let m = load_map("..#..").unwrap();
        let dm = distance_matrix(&m, &[Cell::new(0, 0)]).unwrap();
        assert_eq!(dm.get(0, 0), 0.0);
        let dm = distance_matrix(&m, &[Cell::new(0, 0), Cell::new(4, 0)]).unwrap();
        assert!(dm.get(0, 1).is_infinite());
        assert_eq!(dm.get(1, 1), 0.0);
    }

    #[test]
    fn actions_for_simple_paths() {
        let single = GridPath {
            cells: vec![Cell::new(0, 0)],
            steps: StepCount::ZERO,
            length_m: 0.0,
        };
        assert_eq!(path_to_actions(&single, Heading::W).unwrap(), (vec![], Heading::W));

        let south = GridPath {
            cells: vec![Cell::new(0, 0), Cell::new(0, 1)],
            steps: StepCount { straight: 1, diagonal: 0 },
            length_m: 0.1,
        };
        let (acts, h) = path_to_actions(&south, Heading::N).unwrap();
        assert_eq!(acts, [vec![LowAction::Right; 4], vec![LowAction::Forward]].concat());
        assert_eq!(h, Heading::S);

        let bend = GridPath {
            cells: vec![Cell::new(0, 3), Cell::new(0, 2), Cell::new(0, 1), Cell::new(1, 0)],
            steps: StepCount { straight: 2, diagonal: 1 },
            length_m: 0.2 + 0.1 * SQRT_2,
        };
        let (acts, h) = path_to_actions(&bend, Heading::N).unwrap();
        use LowAction::*;
        assert_eq!(acts, vec![Forward, Forward, Right, Forward]);
        assert_eq!(h, Heading::NE);
    }

    #[test]
    fn turn_delta_is_shortest() {
        assert_eq!(turn_delta(Heading::N, Heading::NW), -1);
        assert_eq!(turn_delta(Heading::N, Heading::SE), 3);
        assert_eq!(turn_delta(Heading::E, Heading::W), 4);
        assert_eq!(turn_delta(Heading::SW, Heading::N), 3);
    }
}
