use safeguard_core::geometry::{Point2, Pose2};
use safeguard_core::grid::OccupancyGrid;
use safeguard_core::locomotion::Gait;
use safeguard_core::perception::DetectionClass;
use safeguard_core::planning::VelocityCommand;
use safeguard_core::worldsim::{
    emit_sensor_frame, load_scenario, parse_scenario, ActuationCommand, FacilityWorld, NoiseConfig, Scenario,
    ScenarioError, TrajectoryPoint, WorldError,
};
use std::path::PathBuf;

fn scenario(name: &str) -> Scenario {
    load_scenario(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)).unwrap()
}

/// World with every scripted event at t = 0 applied.
fn injected(name: &str) -> FacilityWorld {
    let sc = scenario(name);
    let mut w = sc.world.clone();
    for e in sc.script.events.iter().filter(|e| e.t == 0.0) {
        w.apply_event(e).unwrap();
    }
    w
}

fn step_n(w: &mut FacilityWorld, dt: f64, n: usize) {
    for _ in 0..n {
        w.step_mut(dt);
    }
}

#[test]
fn zero_step_is_identity() {
    let w = injected("fire_cnc.json");
    assert_eq!(w.step(0.0), w);
    let mut moving = w.clone();
    moving
        .apply_actuation(&ActuationCommand::Velocity {
            command: VelocityCommand::new(0.5, 0.0, 0.1),
            gait: Gait::Walk,
        })
        .unwrap();
    assert_eq!(moving.step(0.0), moving);
}

#[test]
fn suppressed_fire_clears_within_thirty_seconds() {
    let mut w = injected("fire_cnc.json");
    let fire = |w: &FacilityWorld| w.fire("F-1").unwrap().area_ratio;
    let mut prev = fire(&w);
    for _ in 0..180 {
        w.step_mut(0.1);
        assert!(fire(&w) >= prev, "unsuppressed fire shrank");
        prev = fire(&w);
    }
    assert!((w.clock - 18.0).abs() < 1e-9);
    w.apply_actuation(&ActuationCommand::FireSuppression { fire_id: "F-1".into() })
        .unwrap();
    for _ in 0..300 {
        w.step_mut(0.1);
        assert!(fire(&w) <= prev, "suppressed fire grew");
        prev = fire(&w);
    }
    assert!((w.clock - 48.0).abs() < 1e-9);
    assert!(fire(&w) < 0.005, "area {}", fire(&w));
}

#[test]
fn reset_pipe_returns_to_baseline_in_five_minutes() {
    let mut w = injected("thermal_pv.json");
    let pipe = |w: &FacilityWorld| w.pipe("PP-C-15").unwrap().clone();
    assert!((pipe(&w).max_temp() - 125.8).abs() < 1e-9);
    step_n(&mut w, 0.1, 1200);
    assert!((w.clock - 120.0).abs() < 1e-9);
    w.apply_actuation(&ActuationCommand::ValveReset {
        valve_id: "PV-C-15-M".into(),
    })
    .unwrap();
    let mut prev = pipe(&w).max_abs_delta();
    for _ in 0..3000 {
        w.step_mut(0.1);
        let d = pipe(&w).max_abs_delta();
        assert!(d <= prev + 1e-12);
        prev = d;
    }
    assert!((w.clock - 420.0).abs() < 1e-9);
    assert!(prev < 2.0, "still {prev} above baseline");
}

#[test]
fn time_additivity_of_thermal_and_people() {
    let base = injected("thermal_transient.json");
    for (a, b) in [(3.0, 7.5), (0.25, 40.0), (11.0, 13.0)] {
        let split = base.step(a).step(b);
        let whole = base.step(a + b);
        for (p, q) in split.pipes.iter().zip(&whole.pipes) {
            for (x, y) in p.segment_temps.iter().zip(&q.segment_temps) {
                assert!((x - y).abs() < 1e-9, "{x} vs {y}");
            }
        }
    }
    let mut w = injected("intruder_night.json");
    w.persons[0].trajectory = vec![
        TrajectoryPoint {
            t: 0.0,
            position: Point2::new(6.5, 5.0),
        },
        TrajectoryPoint {
            t: 10.0,
            position: Point2::new(9.5, 7.0),
        },
    ];
    let split = w.step(2.5).step(4.0);
    let whole = w.step(6.5);
    assert!(split.persons[0].position.distance(&whole.persons[0].position) < 1e-12);
    assert!(whole.persons[0].position.distance(&Point2::new(8.45, 6.3)) < 1e-12);
}

#[test]
fn fire_ahead_is_detected_at_scripted_confidence() {
    let w = injected("fire_cnc.json");
    let f = emit_sensor_frame(&w, &NoiseConfig::zero(), 1);
    let fires: Vec<_> = f.detections.iter().filter(|d| d.class == DetectionClass::Fire).collect();
    assert_eq!(fires.len(), 1);
    assert_eq!(fires[0].confidence, 0.92);
    let idx = f.detections.iter().position(|d| d.class == DetectionClass::Fire).unwrap();
    assert!((f.depth_of[&idx] - 6.2).abs() < 1e-9);
    for d in &f.detections {
        assert!((0.0..=1.0).contains(&d.confidence));
        assert!(d.bbox.u >= 0.0 && d.bbox.v >= 0.0);
        assert!(d.bbox.u + d.bbox.w <= 1280.0 + 1e-9 && d.bbox.v + d.bbox.h <= 720.0 + 1e-9);
    }
}

#[test]
fn empty_facility_and_determinism() {
    let grid = OccupancyGrid::new(50, 50, 0.1);
    let w = FacilityWorld::empty(grid, Pose2::new(2.5, 2.5, 0.0));
    assert!(emit_sensor_frame(&w, &NoiseConfig::default(), 3).detections.is_empty());

    let noisy = NoiseConfig {
        detection_prob: 0.8,
        confidence_jitter: 0.05,
        depth_std: 0.1,
        thermal_std: 0.5,
        embedding_std: 0.02,
    };
    let w = injected("intruder_night.json");
    assert_eq!(emit_sensor_frame(&w, &noisy, 42), emit_sensor_frame(&w, &noisy, 42));
    let w = injected("fire_cnc.json");
    assert_eq!(emit_sensor_frame(&w, &noisy, 7), emit_sensor_frame(&w, &noisy, 7));
}

#[test]
fn actuation_examples() {
    let mut w = injected("thermal_pv.json");
    assert_eq!(w.valve("PV-C-15-M").unwrap().open_fraction, 0.15);
    assert!(w.valve("PV-C-15-M").unwrap().stuck);
    w.apply_actuation(&ActuationCommand::ValveReset {
        valve_id: "PV-C-15-M".into(),
    })
    .unwrap();
    let v = w.valve("PV-C-15-M").unwrap();
    assert_eq!((v.open_fraction, v.stuck), (0.65, false));

    let mut w = injected("fire_cnc.json");
    match w.apply_actuation(&ActuationCommand::FireSuppression { fire_id: "F-9".into() }) {
        Err(WorldError::CommandRejected { id, .. }) => assert_eq!(id, "F-9"),
        other => panic!("expected rejection, got {other:?}"),
    }
    let iso = ActuationCommand::PowerIsolation { zone_id: "CNC-B".into() };
    w.apply_actuation(&iso).unwrap();
    let once = w.clone();
    w.apply_actuation(&iso).unwrap();
    assert_eq!(w, once);
    assert_eq!(w.power_zones["CNC-B"], false);
    assert!(w
        .apply_actuation(&ActuationCommand::PowerIsolation { zone_id: "nowhere".into() })
        .is_err());
}

#[test]
fn bundled_fire_scenario_contents() {
    let sc = scenario("fire_cnc.json");
    assert!(sc.world.equipment("CNC-B-04").is_some());
    let hazards: Vec<_> = sc.script.hazards().collect();
    assert_eq!(hazards.len(), 1);
    assert_eq!(hazards[0].t, 0.0);
    assert_eq!(hazards[0].kind_name(), "ignite_fire");
}

#[test]
fn scenario_errors_are_diagnosed() {
    assert!(matches!(parse_scenario("", "empty.json"), Err(ScenarioError::Parse { .. })));
    let text = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/thermal_pv.json"))
        .unwrap();
    let dangling = text.replacen("\"pipe_id\": \"PP-C-15\", \"arclength_pos\"", "\"pipe_id\": \"PP-X-99\", \"arclength_pos\"", 1);
    match parse_scenario(&dangling, "dangling.json") {
        Err(ScenarioError::Semantic { message, .. }) => assert!(message.contains("PP-X-99"), "{message}"),
        other => panic!("expected semantic error, got {other:?}"),
    }
    let bad = text.replacen("\"duration_s\": 900.0", "\"duration_s\": \"long\"", 1);
    match parse_scenario(&bad, "bad.json") {
        Err(ScenarioError::Parse { field, line, .. }) => {
            assert_eq!(field, "duration_s");
            assert_eq!(line, 5);
        }
        other => panic!("expected parse error, got {other:?}"),
    }
    assert!(matches!(load_scenario("/nonexistent/x.json"), Err(ScenarioError::Io { .. })));
}
