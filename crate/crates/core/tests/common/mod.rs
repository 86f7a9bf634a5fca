//! Shared helpers for the integration tests.
#![allow(dead_code)]

mod oracles;

use proptest::prelude::*;

use morp_core::gridmap::{load_map, OccupancyMap};

pub use oracles::*;

/// Random grid text: `w × h` cells, each blocked with probability ~`p`.
pub fn grid_text(w: std::ops::Range<usize>, h: std::ops::Range<usize>, p: f64) -> impl Strategy<Value = String> {
    (w, h).prop_flat_map(move |(w, h)| {
        proptest::collection::vec(proptest::bool::weighted(p), w * h).prop_map(move |bits| {
            let mut s = String::new();
            for y in 0..h {
                for x in 0..w {
                    // keep the top-left cell open so every map has a navigable cell
                    let blocked = bits[y * w + x] && (x, y) != (0, 0);
                    s.push(if blocked { '#' } else { '.' });
                }
                s.push('\n');
            }
            s
        })
    })
}

pub fn grid(w: std::ops::Range<usize>, h: std::ops::Range<usize>, p: f64) -> impl Strategy<Value = OccupancyMap> {
    grid_text(w, h, p).prop_map(|t| load_map(&t).unwrap())
}
