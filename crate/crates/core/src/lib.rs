//! Multi-object rearrangement under partial observability on 2D occupancy grids.
//!
//! An agent knows the static map and the receptacle locations but not where the
//! objects are. It discovers them with frontier-based exploration and delivers
//! them with a capacitated pickup-and-delivery route planner. The modules are
//! layered bottom-up:
//!
//! - [`gridmap`]: occupancy grids, map files, procedural layouts, field of view.
//! - [`pathfind`]: octile shortest paths and geodesic distance matrices.
//! - [`sim`]: the episode state machine and its metrics.
//! - [`explore`]: frontiers, clustering and exploration target policies.
//! - [`planner`]: the routing model with exact and heuristic solvers.
//! - [`agents`]: the greedy explore/plan agent and the full-information oracle.

pub mod agents;
pub mod error;
pub mod explore;
pub mod gridmap;
pub mod pathfind;
pub mod planner;
pub mod seed;
pub mod sim;

pub use error::{MorpError, Result};
