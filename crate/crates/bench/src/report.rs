use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::json;

use morp_core::planner::TimingRow;

use crate::error::{BenchError, Result};
use crate::explore_bench::ExploreBenchResult;
use crate::sweep::{CellAggregate, EpisodeRow, SweepResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(BenchError::Config(format!("unknown report format {s:?}"))),
        }
    }
}

pub const EPISODE_HEADER: &[&str] = &[
    "id", "class", "c", "n_o", "n_r", "policy", "index", "map_seed", "nav_area", "nav_complexity",
    "episode_seed", "status", "es", "ror", "sor", "mc", "espl", "path_length", "oracle_length",
    "oracle_exact", "high_actions", "low_steps", "initially_seen", "discovered_exploring",
    "discovered_planning", "first_object_length", "stuck",
];

pub const AGGREGATE_HEADER: &[&str] = &[
    "class", "c", "n_o", "n_r", "policy", "episodes", "es", "ror", "sor", "mc", "espl",
    "path_length", "oracle_length", "discovery_planning", "stuck",
];

pub const SCATTER_HEADER: &[&str] = &["id", "class", "policy", "nav_area", "espl"];

pub const EXPLORE_HEADER: &[&str] = &[
    "id", "class", "n_o", "policy", "index", "map_seed", "nav_area", "total_length",
    "first_object_length", "found_all", "high_actions",
];

pub const EXPLORE_SUMMARY_HEADER: &[&str] = &[
    "policy", "n_o", "episodes", "mean_total", "std_total", "mean_first_object", "found_all_rate",
];

pub const TIMING_HEADER: &[&str] = &["n_o", "c", "solver", "median_ms", "p90_ms"];

/// Identifies the producing build, `morp-<version>` unless `MORP_BUILD_ID`
/// was set at compile time.
pub fn build_id() -> &'static str {
    option_env!("MORP_BUILD_ID").unwrap_or(concat!("morp-", env!("CARGO_PKG_VERSION")))
}

/// Writes `bytes` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| BenchError::Config(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// CSV bytes with an explicit header, so empty tables still carry one.
pub fn csv_bytes<T: Serialize>(header: &[&str], rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| BenchError::Io(e.into_error()))
}

fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("report values always serialize");
    v.push(b'\n');
    v
}

#[derive(Serialize)]
struct ScatterRow<'a> {
    id: usize,
    class: &'a str,
    policy: String,
    nav_area: f64,
    espl: f64,
}

fn write_all(dir: &Path, files: Vec<(&str, Vec<u8>)>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for (name, bytes) in files {
        let p = dir.join(name);
        write_atomic(&p, &bytes)?;
        out.push(p);
    }
    Ok(out)
}

/// Writes per-episode rows, per-cell aggregates, the nav-area scatter and
/// sweep metadata into `dir`. Returns the written paths.
pub fn emit_report(result: &SweepResult, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    let scatter: Vec<ScatterRow> = result
        .rows
        .iter()
        .map(|r| ScatterRow {
            id: r.id,
            class: r.class.name(),
            policy: r.policy.to_string(),
            nav_area: r.nav_area,
            espl: r.espl,
        })
        .collect();
    let mut map_seeds: Vec<u64> = result.rows.iter().map(|r| r.map_seed).collect();
    map_seeds.sort_unstable();
    map_seeds.dedup();
    let meta = json!({
        "kind": "sweep",
        "build": build_id(),
        "config": result.config,
        "seed": result.config.seed,
        "map_seeds": map_seeds,
        "episodes": result.rows.len(),
        "cells": result.cells.len(),
    });
    let mut files = match format {
        ReportFormat::Csv => vec![
            ("episodes.csv", csv_bytes(EPISODE_HEADER, &result.rows)?),
            ("aggregates.csv", csv_bytes(AGGREGATE_HEADER, &result.cells)?),
        ],
        ReportFormat::Json => vec![
            ("episodes.json", json_bytes(&result.rows)),
            ("aggregates.json", json_bytes(&result.cells)),
        ],
    };
    files.push(("fig4_scatter.csv", csv_bytes(SCATTER_HEADER, &scatter)?));
    files.push(("metadata.json", json_bytes(&meta)));
    write_all(dir, files)
}

pub fn read_aggregates(path: &Path) -> Result<Vec<CellAggregate>> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(path)?;
        return serde_json::from_str(&text).map_err(|e| BenchError::Config(e.to_string()));
    }
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn read_episode_rows(path: &Path) -> Result<Vec<EpisodeRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Exploration-benchmark rows, per-policy summary and metadata.
pub fn emit_explore_report(result: &ExploreBenchResult, dir: &Path) -> Result<Vec<PathBuf>> {
    let meta = json!({
        "kind": "explore-bench",
        "build": build_id(),
        "config": result.config,
        "seed": result.config.seed,
        "episodes": result.rows.len(),
    });
    write_all(
        dir,
        vec![
            ("explore_episodes.csv", csv_bytes(EXPLORE_HEADER, &result.rows)?),
            ("explore_summary.csv", csv_bytes(EXPLORE_SUMMARY_HEADER, &result.summary)?),
            ("metadata.json", json_bytes(&meta)),
        ],
    )
}

/// Long-format solver timing table for the scaling plot.
pub fn emit_timing_report(rows: &[TimingRow], dir: &Path) -> Result<Vec<PathBuf>> {
    write_all(dir, vec![("solver_timing.csv", csv_bytes(TIMING_HEADER, rows)?)])
}
