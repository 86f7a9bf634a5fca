use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Cell, OccupancyMap, DEFAULT_HEIGHT, DEFAULT_RESOLUTION, DEFAULT_WIDTH};
use crate::error::{MorpError, Result};
use crate::seed::{derive_seed, label_hash};

const MAX_ATTEMPTS: usize = 64;
/// Generated layouts are accepted within this relative band of the class mean.
const AREA_TOLERANCE: f64 = 0.15;
const MEDIUM_LEAF: i32 = 18;
const LARGE_LEAF: i32 = 26;
const CORRIDOR_MIN: i32 = 4;
const CORRIDOR_MAX: i32 = 8;

/// Scene size classes, each with a target mean navigable area.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    Small,
    Medium,
    Large,
}

impl SizeClass {
    pub const ALL: [SizeClass; 3] = [SizeClass::Small, SizeClass::Medium, SizeClass::Large];

    /// Mean navigable area of the class in m².
    pub fn target_area(self) -> f64 {
        match self {
            SizeClass::Small => 1.38,
            SizeClass::Medium => 30.53,
            SizeClass::Large => 66.09,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SizeClass::Small => "small",
            SizeClass::Medium => "medium",
            SizeClass::Large => "large",
        }
    }

    /// Smallest BSP leaf side, cells.
    fn min_leaf(self) -> i32 {
        match self {
            SizeClass::Small => 5,
            SizeClass::Medium => MEDIUM_LEAF,
            SizeClass::Large => LARGE_LEAF,
        }
    }

    /// Corridor and doorway width range, cells.
    fn corridor_widths(self) -> (i32, i32) {
        match self {
            SizeClass::Small => (1, 1),
            _ => (CORRIDOR_MIN, CORRIDOR_MAX),
        }
    }
}

impl fmt::Display for SizeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SizeClass {
    type Err = MorpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(SizeClass::Small),
            "medium" => Ok(SizeClass::Medium),
            "large" => Ok(SizeClass::Large),
            other => Err(MorpError::Precondition(format!("unknown size class {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Rect {
    x: i32,
    y: i32,
    w: i32,
    h: i32,
}

impl Rect {
    fn center(&self) -> Cell {
        Cell::new(self.x + self.w / 2, self.y + self.h / 2)
    }
}

struct Bsp<'a> {
    rng: &'a mut ChaCha8Rng,
    min_leaf: i32,
    corridor_widths: (i32, i32),
    rooms: Vec<Rect>,
    corridors: Vec<(Cell, Cell, i32, bool)>,
}

impl Bsp<'_> {
    /// Splits `r` recursively; returns the indices of rooms placed under it.
    fn split(&mut self, r: Rect) -> Vec<usize> {
        let can_v = r.w >= 2 * self.min_leaf;
        let can_h = r.h >= 2 * self.min_leaf;
        if !can_v && !can_h {
            return vec![self.place_room(r)];
        }
        let vertical = match (can_v, can_h) {
            (true, false) => true,
            (false, true) => false,
            _ => {
                if r.w as f64 > 1.25 * r.h as f64 {
                    true
                } else if r.h as f64 > 1.25 * r.w as f64 {
                    false
                } else {
                    self.rng.gen_bool(0.5)
                }
            }
        };
        let (a, b) = if vertical {
            let cut = self.rng.gen_range(self.min_leaf..=r.w - self.min_leaf);
            (
                Rect { w: cut, ..r },
                Rect {
                    x: r.x + cut,
                    w: r.w - cut,
                    ..r
                },
            )
        } else {
            let cut = self.rng.gen_range(self.min_leaf..=r.h - self.min_leaf);
            (
                Rect { h: cut, ..r },
                Rect {
                    y: r.y + cut,
                    h: r.h - cut,
                    ..r
                },
            )
        };
        let left = self.split(a);
        let right = self.split(b);
        let from = self.rooms[left[self.rng.gen_range(0..left.len())]].center();
        let to = self.rooms[right[self.rng.gen_range(0..right.len())]].center();
        let width = self.rng.gen_range(self.corridor_widths.0..=self.corridor_widths.1);
        let horizontal_first = self.rng.gen_bool(0.5);
        self.corridors.push((from, to, width, horizontal_first));
        left.into_iter().chain(right).collect()
    }

    fn place_room(&mut self, leaf: Rect) -> usize {
        // the last row and column of each leaf stay solid as a shared wall
        let max_w = (leaf.w - 1).max(1);
        let max_h = (leaf.h - 1).max(1);
        let w = self.rng.gen_range(((max_w * 3) / 5).max(1)..=max_w);
        let h = self.rng.gen_range(((max_h * 3) / 5).max(1)..=max_h);
        let x = leaf.x + self.rng.gen_range(0..=max_w - w);
        let y = leaf.y + self.rng.gen_range(0..=max_h - h);
        self.rooms.push(Rect { x, y, w, h });
        self.rooms.len() - 1
    }
}

fn carve_rect(map: &mut OccupancyMap, x0: i32, y0: i32, x1: i32, y1: i32) {
    for y in y0.min(y1)..=y0.max(y1) {
        for x in x0.min(x1)..=x0.max(x1) {
            let c = Cell::new(x, y);
            if x >= 1 && y >= 1 && (x as usize) < map.width() - 1 && (y as usize) < map.height() - 1 {
                map.set_navigable(c, true);
            }
        }
    }
}

fn carve_corridor(map: &mut OccupancyMap, from: Cell, to: Cell, width: i32, horizontal_first: bool) {
    let w = width - 1;
    let corner = if horizontal_first {
        Cell::new(to.x, from.y)
    } else {
        Cell::new(from.x, to.y)
    };
    carve_rect(map, from.x, from.y, corner.x + w, corner.y + w);
    carve_rect(map, corner.x, corner.y, to.x + w, to.y + w);
}

/// Whether all navigable cells form one 4-connected component.
pub(crate) fn is_connected(map: &OccupancyMap) -> bool {
    let Some(start) = map.navigable_cells().next() else {
        return false;
    };
    let mut seen = vec![false; map.len()];
    let mut queue = VecDeque::from([start]);
    seen[map.index(start)] = true;
    let mut count = 1;
    while let Some(c) = queue.pop_front() {
        for (dx, dy) in [(0, -1), (1, 0), (0, 1), (-1, 0)] {
            let n = c.offset(dx, dy);
            if map.is_navigable(n) && !seen[map.index(n)] {
                seen[map.index(n)] = true;
                count += 1;
                queue.push_back(n);
            }
        }
    }
    count == map.navigable_count()
}

/// Generates a rooms-and-corridors layout by recursive binary space partition.
///
/// Deterministic in `(seed, class)`. The result is a single connected region
/// whose navigable area lies within 15% of the class mean.
pub fn generate_map(seed: u64, class: SizeClass) -> Result<OccupancyMap> {
    let target_cells = class.target_area() / (DEFAULT_RESOLUTION * DEFAULT_RESOLUTION);
    let mut fill = 0.55;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[
            seed,
            label_hash(class.name()),
            attempt as u64,
        ]));
        let region_area = target_cells / fill;
        let aspect: f64 = rng.gen_range(1.0..1.5);
        let rw = ((region_area * aspect).sqrt().round() as i32).clamp(4, DEFAULT_WIDTH as i32 - 2);
        let rh = ((region_area / rw as f64).round() as i32).clamp(4, DEFAULT_HEIGHT as i32 - 2);
        let origin = Cell::new(
            (DEFAULT_WIDTH as i32 - rw) / 2,
            (DEFAULT_HEIGHT as i32 - rh) / 2,
        );
        let mut bsp = Bsp {
            rng: &mut rng,
            min_leaf: class.min_leaf(),
            corridor_widths: class.corridor_widths(),
            rooms: Vec::new(),
            corridors: Vec::new(),
        };
        bsp.split(Rect {
            x: origin.x,
            y: origin.y,
            w: rw,
            h: rh,
        });
        let mut map = OccupancyMap::blocked(DEFAULT_WIDTH, DEFAULT_HEIGHT, DEFAULT_RESOLUTION);
        for r in &bsp.rooms {
            carve_rect(&mut map, r.x, r.y, r.x + r.w - 1, r.y + r.h - 1);
        }
        for &(from, to, width, hf) in &bsp.corridors {
            carve_corridor(&mut map, from, to, width, hf);
        }
        let n = map.navigable_count() as f64;
        if n > 0.0 {
            fill = (n / (rw * rh) as f64).clamp(0.2, 1.0);
        }
        if (n - target_cells).abs() <= AREA_TOLERANCE * target_cells && is_connected(&map) {
            return Ok(map);
        }
    }
    Err(MorpError::GenerationFailure {
        attempts: MAX_ATTEMPTS,
    })
}
