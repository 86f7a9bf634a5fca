//! Occupancy grids: cell states, map files, layouts, visibility and statistics.

mod fov;
mod generate;
mod stats;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{MorpError, Result};

pub use fov::{visible_cells, FovSpec, VisibilityCache};
pub use generate::{generate_map, SizeClass};
pub use stats::{map_stats, MapStats, DEFAULT_SAMPLE_PAIRS};

/// Default grid resolution in meters per cell.
pub const DEFAULT_RESOLUTION: f64 = 0.1;
pub const DEFAULT_WIDTH: usize = 200;
pub const DEFAULT_HEIGHT: usize = 150;

/// Grid coordinate. `x` grows east (column), `y` grows south (row).
///
/// Ordering is row-major, which is the tie-break order used throughout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    pub fn euclidean(self, other: Cell) -> f64 {
        let dx = f64::from(self.x - other.x);
        let dy = f64::from(self.y - other.y);
        dx.hypot(dy)
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// One of eight compass headings, 0 = N and increasing clockwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Heading(u8);

impl Heading {
    pub const N: Heading = Heading(0);
    pub const NE: Heading = Heading(1);
    pub const E: Heading = Heading(2);
    pub const SE: Heading = Heading(3);
    pub const S: Heading = Heading(4);
    pub const SW: Heading = Heading(5);
    pub const W: Heading = Heading(6);
    pub const NW: Heading = Heading(7);

    /// Neighbor order used for expansion and tie-breaking.
    pub const ALL: [Heading; 8] = [
        Heading::N,
        Heading::NE,
        Heading::E,
        Heading::SE,
        Heading::S,
        Heading::SW,
        Heading::W,
        Heading::NW,
    ];

    pub fn new(index: u8) -> Result<Self> {
        if index < 8 {
            Ok(Heading(index))
        } else {
            Err(MorpError::Precondition(format!("heading {index} not in 0..8")))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }

    /// Unit step `(dx, dy)` in grid coordinates.
    pub fn delta(self) -> (i32, i32) {
        const DELTAS: [(i32, i32); 8] = [
            (0, -1),
            (1, -1),
            (1, 0),
            (1, 1),
            (0, 1),
            (-1, 1),
            (-1, 0),
            (-1, -1),
        ];
        DELTAS[self.0 as usize]
    }

    pub fn is_diagonal(self) -> bool {
        self.0 % 2 == 1
    }

    /// 45° clockwise.
    pub fn right(self) -> Self {
        Heading((self.0 + 1) % 8)
    }

    /// 45° counter-clockwise.
    pub fn left(self) -> Self {
        Heading((self.0 + 7) % 8)
    }

    /// Heading of a unit step between 8-neighbors.
    pub fn from_delta(dx: i32, dy: i32) -> Option<Self> {
        Heading::ALL.into_iter().find(|h| h.delta() == (dx, dy))
    }
}

impl TryFrom<u8> for Heading {
    type Error = MorpError;

    fn try_from(value: u8) -> Result<Self> {
        Heading::new(value)
    }
}

impl From<Heading> for u8 {
    fn from(h: Heading) -> u8 {
        h.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pose {
    pub cell: Cell,
    pub heading: Heading,
}

impl Pose {
    pub fn new(cell: Cell, heading: Heading) -> Self {
        Self { cell, heading }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellState {
    Innavigable,
    Unexplored,
    Explored,
}

impl CellState {
    pub fn is_navigable(self) -> bool {
        self != CellState::Innavigable
    }
}

/// A rectangular grid of cell states plus its metric resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyMap {
    width: usize,
    height: usize,
    resolution: f64,
    cells: Vec<CellState>,
    navigable: usize,
    explored: usize,
}

impl OccupancyMap {
    /// A map where every cell is a wall.
    pub fn blocked(width: usize, height: usize, resolution: f64) -> Self {
        Self {
            width,
            height,
            resolution,
            cells: vec![CellState::Innavigable; width * height],
            navigable: 0,
            explored: 0,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    /// Row-major index of an in-bounds cell.
    pub fn index(&self, c: Cell) -> usize {
        debug_assert!(self.in_bounds(c));
        c.y as usize * self.width + c.x as usize
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new((index % self.width) as i32, (index / self.width) as i32)
    }

    /// State of `c`; out-of-bounds cells read as walls.
    pub fn state(&self, c: Cell) -> CellState {
        if self.in_bounds(c) {
            self.cells[self.index(c)]
        } else {
            CellState::Innavigable
        }
    }

    pub fn state_at(&self, index: usize) -> CellState {
        self.cells[index]
    }

    pub fn is_navigable(&self, c: Cell) -> bool {
        self.state(c).is_navigable()
    }

    pub fn is_explored(&self, c: Cell) -> bool {
        self.state(c) == CellState::Explored
    }

    pub fn navigable_count(&self) -> usize {
        self.navigable
    }

    pub fn explored_count(&self) -> usize {
        self.explored
    }

    /// Navigable area in m².
    pub fn nav_area(&self) -> f64 {
        self.navigable as f64 * self.resolution * self.resolution
    }

    /// Fraction of navigable cells that have been explored.
    pub fn coverage(&self) -> f64 {
        if self.navigable == 0 {
            return 0.0;
        }
        self.explored as f64 / self.navigable as f64
    }

    /// Navigable cells in row-major order.
    pub fn navigable_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_navigable())
            .map(|(i, _)| self.cell_at(i))
    }

    /// Turns a wall into an unexplored navigable cell (or back). Layout editing only.
    pub fn set_navigable(&mut self, c: Cell, navigable: bool) {
        let i = self.index(c);
        let old = self.cells[i];
        let new = if navigable {
            if old.is_navigable() {
                old
            } else {
                CellState::Unexplored
            }
        } else {
            CellState::Innavigable
        };
        if old.is_navigable() && !new.is_navigable() {
            self.navigable -= 1;
            if old == CellState::Explored {
                self.explored -= 1;
            }
        } else if !old.is_navigable() && new.is_navigable() {
            self.navigable += 1;
        }
        self.cells[i] = new;
    }

    /// Marks navigable cells as explored and returns how many were newly explored.
    ///
    /// Validates the whole set before changing anything.
    pub fn mark_explored<I>(&mut self, cells: I) -> Result<usize>
    where
        I: IntoIterator<Item = Cell>,
        I::IntoIter: Clone,
    {
        let iter = cells.into_iter();
        if let Some(bad) = iter.clone().find(|&c| !self.is_navigable(c)) {
            return Err(MorpError::NotNavigable(bad));
        }
        let mut n = 0;
        for c in iter {
            let i = self.index(c);
            n += usize::from(self.explore_index(i));
        }
        Ok(n)
    }

    /// Explores a navigable cell by index; returns whether it flipped.
    pub(crate) fn explore_index(&mut self, i: usize) -> bool {
        if self.cells[i] == CellState::Unexplored {
            self.cells[i] = CellState::Explored;
            self.explored += 1;
            true
        } else {
            false
        }
    }

    /// Resets every navigable cell to unexplored.
    pub fn clear_exploration(&mut self) {
        for s in &mut self.cells {
            if *s == CellState::Explored {
                *s = CellState::Unexplored;
            }
        }
        self.explored = 0;
    }

    /// Parses the text map format: `#` wall, `.` navigable, `o` explored navigable,
    /// with an optional leading `# resolution=<meters>` line.
    pub fn load(text: &str) -> Result<Self> {
        let mut resolution = DEFAULT_RESOLUTION;
        let mut rows: Vec<&str> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if n == 0 {
                if let Some(v) = line.strip_prefix("# resolution=") {
                    resolution = v.trim().parse().map_err(|_| {
                        MorpError::Format(format!("bad resolution header {line:?}"))
                    })?;
                    if !(resolution.is_finite() && resolution > 0.0) {
                        return Err(MorpError::Format(format!("resolution {resolution} must be > 0")));
                    }
                    continue;
                }
            }
            rows.push(line);
        }
        while rows.last().is_some_and(|r| r.is_empty()) {
            rows.pop();
        }
        if rows.is_empty() || rows[0].is_empty() {
            return Err(MorpError::Format("empty map".into()));
        }
        let width = rows[0].chars().count();
        let height = rows.len();
        let mut map = Self::blocked(width, height, resolution);
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(MorpError::Format(format!(
                    "row {y} has {} cells, expected {width}",
                    row.chars().count()
                )));
            }
            for (x, ch) in row.chars().enumerate() {
                let state = match ch {
                    '#' => CellState::Innavigable,
                    '.' => CellState::Unexplored,
                    'o' => CellState::Explored,
                    other => {
                        return Err(MorpError::Format(format!(
                            "unexpected character {other:?} at row {y}, column {x}"
                        )))
                    }
                };
                map.cells[y * width + x] = state;
            }
        }
        map.navigable = map.cells.iter().filter(|s| s.is_navigable()).count();
        map.explored = map.cells.iter().filter(|&&s| s == CellState::Explored).count();
        if map.navigable == 0 {
            return Err(MorpError::DegenerateMap("map has no navigable cell".into()));
        }
        Ok(map)
    }

    /// Serializes to the text format, always with the resolution header.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height + 24);
        out.push_str(&format!("# resolution={}\n", self.resolution));
        for row in self.cells.chunks(self.width) {
            out.extend(row.iter().map(|s| match s {
                CellState::Innavigable => '#',
                CellState::Unexplored => '.',
                CellState::Explored => 'o',
            }));
            out.push('\n');
        }
        out
    }
}

/// Parses a map file's contents. See [`OccupancyMap::load`].
pub fn load_map(text: &str) -> Result<OccupancyMap> {
    OccupancyMap::load(text)
}
