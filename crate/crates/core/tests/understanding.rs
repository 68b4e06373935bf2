use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safeguard_core::geometry::Point2;
use safeguard_core::grid::OccupancyGrid;
use safeguard_core::memory::{EquipmentEntry, FacilityMapStore, MapItemKind};
use safeguard_core::perception::thermal_profile;
use safeguard_core::understanding::{
    fire_stage, project_temp, root_cause, temp_rate, time_to_critical, FireStage, TrendEstimate,
};
use safeguard_core::worldsim::{load_scenario, Pipe};
use std::path::PathBuf;

#[test]
fn rate_projection_and_critical_examples() {
    assert_eq!(temp_rate(70.0, 70.0, 60.0).unwrap(), 0.0);
    assert!((temp_rate(80.0, 70.0, 60.0).unwrap() - 0.1667).abs() < 1e-4);
    assert_eq!(temp_rate(65.0, 80.0, 30.0).unwrap(), -0.5);
    assert!(temp_rate(1.0, 0.0, -1.0).is_err());
    assert!(TrendEstimate::new(1.0, 0.0, 0.0).is_err());

    assert_eq!(project_temp(100.0, 0.5, 0.0), 100.0);
    assert!((project_temp(80.0, 0.1667, 60.0) - 90.0).abs() < 0.01);
    assert!((project_temp(125.8, -0.2, 60.0) - 113.8).abs() < 1e-12);

    assert!((time_to_critical(110.0, 80.0, 0.1667).unwrap() - 180.0).abs() < 1.0);
    assert_eq!(time_to_critical(110.0, 125.8, 5.0), Some(0.0));
    assert_eq!(time_to_critical(110.0, 125.8, -5.0), Some(0.0));
    assert_eq!(time_to_critical(110.0, 80.0, -0.1), None);
    assert_eq!(time_to_critical(110.0, 80.0, 0.0), None);
}

#[test]
fn projection_and_critical_are_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..500 {
        let (t1, t2) = (rng.random_range(20.0..140.0), rng.random_range(20.0..140.0));
        let d = rng.random_range(1.0..120.0);
        let r = temp_rate(t2, t1, d).unwrap();
        let lin = t2 + (t2 - t1);
        assert!((project_temp(t2, r, d) - lin).abs() < 1e-9);

        let limit = rng.random_range(90.0..130.0);
        if let Some(tc) = time_to_critical(limit, t2, r) {
            if t2 < limit {
                assert!((project_temp(t2, r, tc) - limit).abs() < 1e-6);
            } else {
                assert_eq!(tc, 0.0);
            }
        } else {
            assert!(r <= 0.0 && t2 < limit);
        }
    }
}

#[test]
fn stage_examples_and_monotonicity() {
    assert_eq!(fire_stage(0.0, 0.05, 0.0, 10.0), FireStage::Incipient);
    assert_eq!(fire_stage(0.05, 0.1, 0.001, 20.0), FireStage::Growth);
    assert_eq!(fire_stage(0.15, 0.3, 0.002, 60.0), FireStage::FullyDeveloped);
    assert_eq!(fire_stage(0.15, 0.3, -0.01, 60.0), FireStage::Decay);
    assert!(FireStage::Incipient < FireStage::Growth && FireStage::FullyDeveloped < FireStage::Decay);
    assert_eq!(FireStage::Decay.number(), 4);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let (a, b) = (rng.random::<f64>() * 0.3, rng.random::<f64>() * 0.3);
        let ds = rng.random_range(-0.0005..0.01);
        assert!(fire_stage(a.min(b), 0.1, ds, 5.0) <= fire_stage(a.max(b), 0.1, ds, 5.0));
    }
}

#[test]
fn root_cause_finds_stuck_valve() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/thermal_pv.json");
    let sc = load_scenario(path).unwrap();
    let mut world = sc.world.clone();
    world.apply_event(&sc.script.events[0]).unwrap();
    let pipe = world.pipe("PP-C-15").unwrap();
    let map = FacilityMapStore::from_world(&world);
    let prof = thermal_profile(pipe, 0.1).unwrap();
    let rc = root_cause(&prof, pipe, &map, 1.0).unwrap();
    assert_eq!(rc, Some(("PV-C-15-M".to_string(), MapItemKind::Valve)));
    assert!(root_cause(&prof, pipe, &map, 0.0).is_err());
}

#[test]
fn root_cause_none_and_tie_break() {
    let pipe = Pipe::new("P", vec![Point2::new(0.0, 0.0), Point2::new(10.0, 0.0)], 60.0, 120.0, 1.0);
    let mut prof = thermal_profile(&pipe, 1.0).unwrap();
    prof.temps[5] = 90.0;
    prof.peak_index = 5;
    let mut map = FacilityMapStore::empty(OccupancyGrid::new(10, 10, 1.0));
    assert_eq!(root_cause(&prof, &pipe, &map, 1.0).unwrap(), None);
    for (id, y) in [("B-2", 0.5), ("A-1", -0.5)] {
        map.equipment.insert(
            id.to_string(),
            EquipmentEntry {
                position: Point2::new(5.0, y),
                kind: "pump".into(),
                zone: None,
            },
        );
    }
    assert_eq!(root_cause(&prof, &pipe, &map, 1.0).unwrap().unwrap().0, "A-1");
    assert_eq!(root_cause(&prof, &pipe, &map, 0.4).unwrap(), None);
}
