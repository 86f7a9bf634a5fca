use std::path::Path;

use serde::{Deserialize, Serialize};

use morp_core::agents::AgentConfig;
use morp_core::explore::ExplorePolicy;
use morp_core::gridmap::{FovSpec, SizeClass};

use crate::error::{BenchError, Result};

/// Grid of episode cells: every combination of size class, capacity, object
/// count, receptacle count and policy, each run `episodes_per_cell` times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub size_classes: Vec<SizeClass>,
    pub c_values: Vec<usize>,
    pub n_o_values: Vec<usize>,
    pub n_r_values: Vec<usize>,
    pub policies: Vec<ExplorePolicy>,
    pub episodes_per_cell: usize,
    pub seed: u64,
    pub max_t: u32,
    pub max_dist: f64,
    pub fov: FovSpec,
    /// Generated maps per size class; episodes draw from this pool.
    pub maps_per_class: usize,
    pub agent: AgentConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            size_classes: vec![SizeClass::Medium, SizeClass::Large],
            c_values: vec![1, 3],
            n_o_values: vec![1, 3, 5, 10],
            n_r_values: vec![1, 3, 5],
            policies: vec![ExplorePolicy::GainRatio],
            episodes_per_cell: 100,
            seed: 0,
            max_t: 100,
            max_dist: 10.0,
            fov: FovSpec::default(),
            maps_per_class: 10,
            agent: AgentConfig::default(),
        }
    }
}

impl SweepConfig {
    /// The alternative receptacle preset, `n_r ∈ {1, 2, 3}`.
    pub fn small_receptacle_preset() -> Self {
        Self {
            n_r_values: vec![1, 2, 3],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lists = [
            ("size_classes", self.size_classes.is_empty()),
            ("c_values", self.c_values.is_empty()),
            ("n_o_values", self.n_o_values.is_empty()),
            ("n_r_values", self.n_r_values.is_empty()),
            ("policies", self.policies.is_empty()),
        ];
        if let Some((name, _)) = lists.iter().find(|(_, empty)| *empty) {
            return Err(BenchError::Config(format!("{name} must not be empty")));
        }
        if self.episodes_per_cell == 0 {
            return Err(BenchError::Config("episodes_per_cell must be at least 1".into()));
        }
        if self.maps_per_class == 0 {
            return Err(BenchError::Config("maps_per_class must be at least 1".into()));
        }
        if self.c_values.contains(&0) {
            return Err(BenchError::Config("capacities must be at least 1".into()));
        }
        if self.n_r_values.contains(&0) {
            return Err(BenchError::Config("n_r must be at least 1".into()));
        }
        if self.max_t == 0 {
            return Err(BenchError::Config("max_t must be at least 1".into()));
        }
        if !(self.max_dist > 0.0) {
            return Err(BenchError::Config("max_dist must be positive".into()));
        }
        self.fov.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs always serialize")
    }

    pub fn n_cells(&self) -> usize {
        self.size_classes.len()
            * self.c_values.len()
            * self.n_o_values.len()
            * self.n_r_values.len()
            * self.policies.len()
    }
}

/// Exploration-only benchmark: how far each policy walks to see every object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExploreBenchConfig {
    pub size_classes: Vec<SizeClass>,
    pub n_o_values: Vec<usize>,
    pub policies: Vec<ExplorePolicy>,
    pub episodes: usize,
    pub seed: u64,
    /// High-level action budget per episode.
    pub max_high_actions: u32,
    pub max_dist: f64,
    pub fov: FovSpec,
    pub maps_per_class: usize,
    pub agent: AgentConfig,
}

impl Default for ExploreBenchConfig {
    fn default() -> Self {
        Self {
            size_classes: vec![SizeClass::Medium, SizeClass::Large],
            n_o_values: vec![5],
            policies: vec![
                ExplorePolicy::Random,
                ExplorePolicy::GainRatio,
                ExplorePolicy::Weighted(1.0),
                ExplorePolicy::Weighted(0.5),
            ],
            episodes: 50,
            seed: 0,
            max_high_actions: 400,
            max_dist: 10.0,
            fov: FovSpec::default(),
            maps_per_class: 10,
            agent: AgentConfig::default(),
        }
    }
}

impl ExploreBenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.size_classes.is_empty() || self.n_o_values.is_empty() || self.policies.is_empty() {
            return Err(BenchError::Config("value lists must not be empty".into()));
        }
        if self.episodes == 0 || self.maps_per_class == 0 || self.max_high_actions == 0 {
            return Err(BenchError::Config("episodes, maps_per_class and max_high_actions must be at least 1".into()));
        }
        if !(self.max_dist > 0.0) {
            return Err(BenchError::Config("max_dist must be positive".into()));
        }
        self.fov.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
