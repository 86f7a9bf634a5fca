mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use morp_core::agents::{oracle_run, run_episode, run_oracle_episode, AgentConfig, HighLevelKind};
use morp_core::explore::ExplorePolicy;
use morp_core::gridmap::{generate_map, Cell, FovSpec, Heading, OccupancyMap, Pose, SizeClass, VisibilityCache};
use morp_core::sim::{write_trace_csv, EpisodeSpec, MapRef, ObjectSpec, ReceptacleSpec, Status};

use common::{inline_spec, open_map};

fn layout(class: SizeClass, map_seed: u64, map: &OccupancyMap, n_o: usize, n_r: usize, c: usize, seed: u64) -> EpisodeSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells: Vec<Cell> = map.navigable_cells().collect();
    let recs: Vec<Cell> = cells.choose_multiple(&mut rng, n_r).copied().collect();
    EpisodeSpec {
        map: MapRef::Generated { class, seed: map_seed },
        objects: (0..n_o)
            .map(|i| ObjectSpec { kind: i % n_r, cell: cells[rng.gen_range(0..cells.len())] })
            .collect(),
        receptacles: recs.iter().enumerate().map(|(kind, &cell)| ReceptacleSpec { kind, cell }).collect(),
        spawn: Pose::new(cells[rng.gen_range(0..cells.len())], Heading::new(rng.gen_range(0..8)).unwrap()),
        capacity: c,
        fov: FovSpec::default(),
        max_t: 100,
        max_dist: 10.0,
        max_low_steps: 100_000,
        seed,
    }
}

fn policy() -> impl Strategy<Value = ExplorePolicy> {
    prop_oneof![
        Just(ExplorePolicy::Random),
        Just(ExplorePolicy::GainRatio),
        (0.0f64..=1.0).prop_map(ExplorePolicy::Weighted),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn episodes_respect_greedy_order_and_oracle_bound(
        map_seed in 0u64..4,
        medium in any::<bool>(),
        n_o in 1usize..6,
        n_r in 1usize..4,
        c in 1usize..4,
        seed in any::<u64>(),
        policy in policy(),
    ) {
        let class = if medium { SizeClass::Medium } else { SizeClass::Small };
        let map = generate_map(map_seed, class).unwrap();
        prop_assume!(map.navigable_count() > n_o + n_r + 1);
        let spec = layout(class, map_seed, &map, n_o, n_r, c, seed);
        let cfg = AgentConfig::default();
        let sensor = Arc::new(VisibilityCache::new(&map, spec.fov.range_m));
        let r = run_episode(&spec, &map, Some(sensor), policy, &cfg, false).unwrap();
        let m = r.metrics;
        prop_assert!((0.0..=1.0).contains(&m.espl));
        prop_assert!(m.ror <= m.sor + 1e-12);
        if m.espl == 1.0 && m.oracle_length > 0.0 {
            prop_assert!(m.path_length <= m.oracle_length);
        }
        prop_assert!(r.oracle_exact);
        if r.status == Status::Success {
            prop_assert_eq!(m.es, 1.0);
            prop_assert_eq!(m.sor, 1.0);
            prop_assert!(m.path_length >= m.oracle_length - 1e-9, "l {} < z {}", m.path_length, m.oracle_length);
        } else {
            prop_assert_eq!(m.espl, 0.0);
        }
        for rec in &r.log {
            match rec.kind {
                HighLevelKind::Explore => prop_assert!(rec.pending_before == 0 && rec.held_before == 0, "{:?}", rec),
                HighLevelKind::Plan => prop_assert!(rec.pending_before > 0),
            }
        }
        prop_assert_eq!(
            r.initially_seen + r.discovered_exploring + r.discovered_planning,
            (m.sor * n_o as f64).round() as usize
        );
    }
}

#[test]
fn oracle_replay_walks_exactly_z() {
    for seed in 0..6u64 {
        let map = generate_map(seed % 2, SizeClass::Medium).unwrap();
        let spec = layout(SizeClass::Medium, seed % 2, &map, 3, 2, 1 + (seed as usize % 3), seed);
        let cfg = AgentConfig::default();
        let z = oracle_run(&spec, &map, &cfg).unwrap().z;
        let r = run_oracle_episode(&spec, &map, None, &cfg).unwrap();
        assert!((r.metrics.path_length - z).abs() < 1e-9, "seed {seed}: l {} z {z} {:?} {:?}", r.metrics.path_length, r.status, r.stuck);
    }
}

#[test]
fn everything_in_place_succeeds_at_spawn() {
    let map = open_map(10, 10);
    let recs = [Cell::new(4, 4), Cell::new(6, 5)];
    let spec = inline_spec(&map, &[(0, recs[0]), (1, recs[1]), (0, recs[0])], &recs, Pose::new(Cell::new(5, 5), Heading::N), 1, 2.0);
    for policy in [ExplorePolicy::Random, ExplorePolicy::GainRatio, ExplorePolicy::Weighted(0.5)] {
        let r = run_episode(&spec, &map, None, policy, &AgentConfig::default(), false).unwrap();
        assert_eq!(r.status, Status::Success);
        assert_eq!(r.metrics.path_length, 0.0);
        assert_eq!(r.metrics.oracle_length, 0.0);
        assert_eq!(r.metrics.espl, 1.0);
        assert_eq!(r.high_actions, 0);
    }
}

#[test]
fn single_visible_object_is_taken_straight_home() {
    let map = open_map(40, 10);
    let spec = inline_spec(&map, &[(0, Cell::new(6, 5))], &[Cell::new(35, 5)], Pose::new(Cell::new(5, 5), Heading::E), 1, 2.0);
    for policy in [ExplorePolicy::Random, ExplorePolicy::GainRatio, ExplorePolicy::Weighted(0.5)] {
        let r = run_episode(&spec, &map, None, policy, &AgentConfig::default(), false).unwrap();
        assert_eq!(r.status, Status::Success);
        assert!((r.metrics.path_length - 3.0).abs() < 1e-9);
        assert!((r.metrics.oracle_length - 3.0).abs() < 1e-9);
        assert_eq!(r.metrics.espl, 1.0);
    }
}

fn golden_spec() -> (EpisodeSpec, OccupancyMap) {
    let map = generate_map(3, SizeClass::Medium).unwrap();
    (layout(SizeClass::Medium, 3, &map, 3, 2, 1, 42), map)
}

#[test]
fn golden_medium_episode() {
    let (spec, map) = golden_spec();
    let r = run_episode(&spec, &map, None, ExplorePolicy::GainRatio, &AgentConfig::default(), true).unwrap();
    assert_eq!(r.status, Status::Success);
    assert_eq!(r.metrics.sor, 1.0);
    let mut csv = Vec::new();
    write_trace_csv(&r.trace, &mut csv).unwrap();
    let again = run_episode(&spec, &map, None, ExplorePolicy::GainRatio, &AgentConfig::default(), true).unwrap();
    let mut csv2 = Vec::new();
    write_trace_csv(&again.trace, &mut csv2).unwrap();
    assert_eq!(csv, csv2);

    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden_medium_trace.csv");
    if std::env::var_os("MORP_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &csv).unwrap();
    }
    let golden = std::fs::read(&path).expect("golden trace present; run with MORP_BLESS=1 to record");
    assert!(golden == csv, "trace differs from the recorded golden run");
}
