use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safeguard_core::geometry::Point2;
use safeguard_core::grid::OccupancyGrid;
use safeguard_core::harness::baseline_capture;
use safeguard_core::memory::{
    BaselineStore, EquipmentEntry, FacilityMapStore, MemoryError, MemoryStore, PersonnelDb, ZoneEntry,
};
use safeguard_core::perception::ThermalImage;
use safeguard_core::worldsim::load_scenario;
use std::path::PathBuf;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn empty_map() -> FacilityMapStore {
    FacilityMapStore::empty(OccupancyGrid::new(20, 20, 0.5))
}

#[test]
fn equipment_near_examples() {
    let mut map = empty_map();
    assert!(map.equipment_near(&Point2::new(1.0, 1.0), 5.0).is_empty());
    let sc = load_scenario(scenario("thermal_pv.json")).unwrap();
    map = FacilityMapStore::from_world(&sc.world);
    // valve sits on the pipe centreline at x = 3 + 4.5
    let near = map.equipment_near(&Point2::new(7.5, 8.2), 0.5);
    assert_eq!(near[0].0, "PV-C-15-M");
    assert!((near[0].1 - 0.2).abs() < 1e-9);
    assert!(map.equipment_near(&Point2::new(7.5, 8.2), 0.0).iter().all(|(_, d, _)| *d == 0.0));
}

#[test]
fn equipment_near_matches_linear_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let mut map = empty_map();
        let mut items = Vec::new();
        for i in 0..20 {
            let p = Point2::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0));
            let id = format!("EQ-{i:02}");
            map.equipment.insert(
                id.clone(),
                EquipmentEntry {
                    position: p,
                    kind: "pump".into(),
                    zone: None,
                },
            );
            items.push((id, p));
        }
        let q = Point2::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0));
        let r = rng.random_range(0.5..6.0);
        let mut want: Vec<(String, f64)> = Vec::new();
        for (id, p) in &items {
            let d = ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt();
            if d <= r {
                want.push((id.clone(), d));
            }
        }
        want.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
        let got: Vec<(String, f64)> = map.equipment_near(&q, r).into_iter().map(|(i, d, _)| (i, d)).collect();
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            assert_eq!(g.0, w.0);
            assert!((g.1 - w.1).abs() < 1e-12);
        }
    }
}

#[test]
fn zone_status_examples() {
    let mut map = empty_map();
    map.zones.insert(
        "Z-A".into(),
        ZoneEntry {
            polygon: vec![
                Point2::new(0.0, 0.0),
                Point2::new(4.0, 0.0),
                Point2::new(4.0, 4.0),
                Point2::new(0.0, 4.0),
            ],
            restricted: true,
            allowed_windows: vec![(25_200.0, 68_400.0)],
        },
    );
    let open = map.zone_status(&Point2::new(8.0, 8.0), 3600.0);
    assert_eq!((open.zone_id, open.restricted, open.within_allowed), (None, false, true));
    let night = map.zone_status(&Point2::new(2.0, 2.0), 7200.0);
    assert_eq!(
        (night.zone_id.as_deref(), night.restricted, night.within_allowed),
        (Some("Z-A"), true, false)
    );
    assert!(map.zone_status(&Point2::new(2.0, 2.0), 30_000.0).within_allowed);
    // closed boundary and wrap-around time of day
    assert_eq!(map.zone_status(&Point2::new(4.0, 2.0), 0.0).zone_id.as_deref(), Some("Z-A"));
    assert_eq!(map.zone_status(&Point2::new(0.0, 0.0), 0.0).zone_id.as_deref(), Some("Z-A"));
    assert!(map.zone_status(&Point2::new(2.0, 2.0), 86_400.0 + 30_000.0).within_allowed);
}

#[test]
fn personnel_insert_normalizes_and_rejects() {
    let mut db = PersonnelDb::new();
    db.insert("A", vec![3.0, 4.0], true).unwrap();
    let r = db.get("A").unwrap();
    assert!(r.normalized_on_insert);
    assert!((r.embedding[0] - 0.6).abs() < 1e-15 && (r.embedding[1] - 0.8).abs() < 1e-15);
    db.insert("B", vec![1.0, 0.0], false).unwrap();
    assert!(!db.get("B").unwrap().normalized_on_insert);
    assert!(db.insert("A", vec![1.0, 0.0], true).is_err());
    assert!(db.insert("C", vec![0.0, 0.0], true).is_err());
    assert!(db.insert("D", vec![f64::NAN, 1.0], true).is_err());
    assert_eq!(db.len(), 2);
}

#[test]
fn bundled_facility_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["fire_cnc.json", "thermal_pv.json", "intruder_night.json", "patrol_quiet.json"] {
        let sc = load_scenario(scenario(name)).unwrap();
        let store = baseline_capture(&sc).unwrap();
        let path = dir.path().join(format!("{name}.mem"));
        store.save(&path).unwrap();
        let back = MemoryStore::load(&path).unwrap();
        assert_eq!(back, store, "{name}");
        assert_eq!(back.to_json(), store.to_json());
    }
}

#[test]
fn baseline_image_round_trips_bit_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(160);
    let temps: Vec<f64> = (0..160 * 120).map(|_| rng.random_range(-40.0..400.0)).collect();
    let mut baselines = BaselineStore::new(160, 120);
    baselines
        .insert("IP-1", ThermalImage::from_vec(160, 120, temps.clone()).unwrap(), 12.5)
        .unwrap();
    assert!(baselines.insert("IP-2", ThermalImage::filled(10, 10, 0.0), 0.0).is_err());
    let store = MemoryStore::new(empty_map(), baselines, PersonnelDb::new());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.json");
    store.save(&path).unwrap();
    let back = MemoryStore::load(&path).unwrap();
    let got = &back.baselines.get("IP-1").unwrap().image.temps;
    assert!(got.iter().zip(&temps).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn damaged_files_report_schema_errors() {
    let sc = load_scenario(scenario("intruder_night.json")).unwrap();
    let text = baseline_capture(&sc).unwrap().to_json();
    let dir = tempfile::tempdir().unwrap();

    let path = dir.path().join("trunc.json");
    std::fs::write(&path, &text[..text.len() / 2]).unwrap();
    assert!(matches!(MemoryStore::load(&path), Err(MemoryError::Schema { .. })));

    let path = dir.path().join("field.json");
    std::fs::write(&path, text.replacen("\"authorized\": true", "\"authorized\": \"yes\"", 1)).unwrap();
    match MemoryStore::load(&path) {
        Err(MemoryError::Schema { field, .. }) => assert!(field.contains("authorized"), "{field}"),
        other => panic!("expected schema error, got {other:?}"),
    }

    let path = dir.path().join("version.json");
    std::fs::write(&path, text.replacen("\"schema_version\": 1", "\"schema_version\": 9", 1)).unwrap();
    assert!(matches!(MemoryStore::load(&path), Err(MemoryError::Invalid(_))));

    assert!(matches!(MemoryStore::load(dir.path().join("missing.json")), Err(MemoryError::Io { .. })));
}
