use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{Cell, OccupancyMap, Pose};
use crate::error::{MorpError, Result};

const EPS: f64 = 1e-9;

/// Sensor cone: total opening angle in degrees and cutoff radius in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FovSpec {
    pub theta_deg: f64,
    pub range_m: f64,
}

impl Default for FovSpec {
    fn default() -> Self {
        Self {
            theta_deg: 360.0,
            range_m: 2.0,
        }
    }
}

impl FovSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_deg > 0.0 && self.theta_deg <= 360.0) {
            return Err(MorpError::Precondition(format!(
                "fov angle {} not in (0, 360]",
                self.theta_deg
            )));
        }
        if !(self.range_m > 0.0 && self.range_m.is_finite()) {
            return Err(MorpError::Precondition(format!(
                "fov range {} must be positive",
                self.range_m
            )));
        }
        Ok(())
    }

    fn is_omni(&self) -> bool {
        self.theta_deg >= 360.0
    }

    /// Whether the bearing from `pose` to `target` lies inside the closed cone.
    fn in_cone(&self, pose: Pose, target: Cell) -> bool {
        if self.is_omni() || target == pose.cell {
            return true;
        }
        let (hx, hy) = pose.heading.delta();
        let heading = f64::from(hy).atan2(f64::from(hx));
        let bearing = f64::from(target.y - pose.cell.y).atan2(f64::from(target.x - pose.cell.x));
        let mut diff = (bearing - heading).abs();
        if diff > std::f64::consts::PI {
            diff = 2.0 * std::f64::consts::PI - diff;
        }
        diff <= self.theta_deg.to_radians() / 2.0 + EPS
    }
}

/// Walks the supercover line between two cell centers, calling `visit` for every
/// cell strictly between them. Stops early when `visit` returns false.
///
/// When the segment passes exactly through a lattice corner both side cells
/// are visited.
fn supercover_interior(from: Cell, to: Cell, mut visit: impl FnMut(Cell) -> bool) -> bool {
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    let (nx, ny) = (dx.abs(), dy.abs());
    let (sx, sy) = (dx.signum(), dy.signum());
    let (mut ix, mut iy) = (0, 0);
    let mut p = from;
    while ix < nx || iy < ny {
        let decision = (1 + 2 * ix) * ny - (1 + 2 * iy) * nx;
        if decision == 0 {
            let a = p.offset(sx, 0);
            let b = p.offset(0, sy);
            if a != to && !visit(a) {
                return false;
            }
            if b != to && !visit(b) {
                return false;
            }
            p = p.offset(sx, sy);
            ix += 1;
            iy += 1;
        } else if decision < 0 {
            p = p.offset(sx, 0);
            ix += 1;
        } else {
            p = p.offset(0, sy);
            iy += 1;
        }
        if p != to && !visit(p) {
            return false;
        }
    }
    true
}

fn line_of_sight(map: &OccupancyMap, from: Cell, to: Cell) -> bool {
    supercover_interior(from, to, |c| map.is_navigable(c))
}

fn radius_cells(map: &OccupancyMap, fov: &FovSpec) -> f64 {
    fov.range_m / map.resolution()
}

/// Cells visible from `pose`: navigable, within range, inside the cone and with
/// an unobstructed supercover line. Returned in row-major order; the pose cell
/// is always included.
pub fn visible_cells(map: &OccupancyMap, pose: Pose, fov: &FovSpec) -> Result<Vec<Cell>> {
    if !map.is_navigable(pose.cell) {
        return Err(MorpError::NotNavigable(pose.cell));
    }
    fov.validate()?;
    let r = radius_cells(map, fov);
    let r2 = r * r + EPS;
    let reach = r.floor() as i32;
    let mut out = Vec::new();
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let c = pose.cell.offset(dx, dy);
            if !map.is_navigable(c) || f64::from(dx * dx + dy * dy) > r2 {
                continue;
            }
            if fov.in_cone(pose, c) && line_of_sight(map, pose.cell, c) {
                out.push(c);
            }
        }
    }
    Ok(out)
}

/// Lazily memoized omnidirectional visibility for a fixed layout and range.
///
/// Line of sight depends only on walls, which never change during an episode,
/// so one cache can be shared by every episode on the same map. Cone filtering
/// is applied on top of the cached disc.
pub struct VisibilityCache {
    layout: OccupancyMap,
    range_m: f64,
    discs: Vec<OnceLock<Box<[u32]>>>,
}

impl VisibilityCache {
    pub fn new(map: &OccupancyMap, range_m: f64) -> Self {
        let mut layout = map.clone();
        layout.clear_exploration();
        let discs = (0..layout.len()).map(|_| OnceLock::new()).collect();
        Self {
            layout,
            range_m,
            discs,
        }
    }

    pub fn range_m(&self) -> f64 {
        self.range_m
    }

    /// Whether this cache was built for the given map layout and sensor range.
    pub fn matches(&self, map: &OccupancyMap, fov: &FovSpec) -> bool {
        self.range_m == fov.range_m
            && self.layout.width() == map.width()
            && self.layout.height() == map.height()
            && self.layout.resolution() == map.resolution()
    }

    /// Row-major indices visible from `cell` with a 360° sensor.
    pub fn disc(&self, cell: Cell) -> &[u32] {
        let i = self.layout.index(cell);
        self.discs[i].get_or_init(|| {
            let fov = FovSpec {
                theta_deg: 360.0,
                range_m: self.range_m,
            };
            visible_cells(&self.layout, Pose::new(cell, super::Heading::N), &fov)
                .map(|cells| cells.iter().map(|&c| self.layout.index(c) as u32).collect())
                .unwrap_or_default()
        })
    }

    /// Appends the row-major indices visible from `pose` to `out`.
    pub fn visible_into(&self, pose: Pose, fov: &FovSpec, out: &mut Vec<u32>) {
        let disc = self.disc(pose.cell);
        if fov.is_omni() {
            out.extend_from_slice(disc);
        } else {
            out.extend(
                disc.iter()
                    .copied()
                    .filter(|&i| fov.in_cone(pose, self.layout.cell_at(i as usize))),
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::{load_map, Heading};

    fn open(w: usize, h: usize) -> OccupancyMap {
        let row = ".".repeat(w);
        load_map(&vec![row; h].join("\n")).unwrap()
    }

    fn disc_oracle(r: i32) -> usize {
        let mut n = 0;
        for dy in -r..=r {
            for dx in -r..=r {
                if dx * dx + dy * dy <= r * r {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn open_room_disc_count() {
        let m = open(50, 50);
        let v = visible_cells(&m, Pose::new(Cell::new(25, 25), Heading::N), &FovSpec::default()).unwrap();
        assert_eq!(disc_oracle(20), 1257);
        assert_eq!(v.len(), 1257);
    }

    #[test]
    fn radius_one_cell() {
        let m = open(5, 5);
        let fov = FovSpec {
            theta_deg: 360.0,
            range_m: 0.1,
        };
        let v = visible_cells(&m, Pose::new(Cell::new(2, 2), Heading::E), &fov).unwrap();
        assert_eq!(v.len(), 5);
        assert!(v.contains(&Cell::new(2, 2)));
    }

    #[test]
    fn wall_occludes() {
        // agent at (1,2), wall column at x=2 rows 0..=4
        let m = load_map(".....\n..#..\n..#..\n..#..\n.....").unwrap();
        let v = visible_cells(&m, Pose::new(Cell::new(1, 2), Heading::E), &FovSpec::default()).unwrap();
        assert!(!v.contains(&Cell::new(3, 2)));
        assert!(!v.contains(&Cell::new(4, 2)));
        assert!(v.contains(&Cell::new(0, 2)));
    }

    #[test]
    fn innavigable_pose_rejected() {
        let m = load_map(".#").unwrap();
        assert!(visible_cells(&m, Pose::new(Cell::new(1, 0), Heading::N), &FovSpec::default()).is_err());
    }

    #[test]
    fn narrow_cone_is_closed() {
        let m = open(21, 21);
        let fov = FovSpec {
            theta_deg: 90.0,
            range_m: 1.0,
        };
        let v = visible_cells(&m, Pose::new(Cell::new(10, 10), Heading::N), &fov).unwrap();
        // boundary bearings at exactly ±45° are included
        assert!(v.contains(&Cell::new(13, 7)));
        assert!(v.contains(&Cell::new(7, 7)));
        assert!(v.contains(&Cell::new(10, 0)));
        assert!(!v.contains(&Cell::new(10, 11)));
        assert!(!v.contains(&Cell::new(14, 7)));
    }

    #[test]
    fn cache_matches_direct_computation() {
        let m = load_map("......\n.##...\n...#..\n......\n.#....").unwrap();
        let fov = FovSpec {
            theta_deg: 135.0,
            range_m: 0.35,
        };
        let cache = VisibilityCache::new(&m, fov.range_m);
        for c in m.navigable_cells() {
            for h in Heading::ALL {
                let pose = Pose::new(c, h);
                let direct: Vec<u32> = visible_cells(&m, pose, &fov)
                    .unwrap()
                    .iter()
                    .map(|&c| m.index(c) as u32)
                    .collect();
                let mut cached = Vec::new();
                cache.visible_into(pose, &fov, &mut cached);
                assert_eq!(direct, cached);
            }
        }
    }

    #[test]
    fn diagonal_through_wall_corner_is_blocked() {
        let m = load_map("..\n#.").unwrap();
        let mut seen = Vec::new();
        supercover_interior(Cell::new(0, 0), Cell::new(1, 1), |c| {
            seen.push(c);
            true
        });
        assert_eq!(seen, vec![Cell::new(1, 0), Cell::new(0, 1)]);
        assert!(!line_of_sight(&m, Cell::new(0, 0), Cell::new(1, 1)));
    }
}
