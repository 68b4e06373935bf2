mod common;

use common::{scenario, scenario_path};
use safeguard_core::harness::{
    batch, batch_csv, emit_timeline, load_scenario_dir, phase_breakdown, replay_rewards, resolve_out_dir, run,
    run_scenario, RunConfig,
};
use safeguard_core::locomotion::{discounted_return, RewardWeights, NUM_JOINTS};
use safeguard_core::orchestra::{Outcome, Priority};
use std::path::Path;

#[test]
fn fire_run_writes_artifacts_and_milestones() {
    let dir = tempfile::tempdir().unwrap();
    let report = run(scenario_path("fire_cnc"), 3, &RunConfig::default(), dir.path()).unwrap();
    assert_eq!(report.outcome, Outcome::Success);
    let m = &report.milestones;
    assert!(m.detection.unwrap() <= 0.5);
    assert!(m.alert.unwrap() <= 3.0);
    assert!((m.suppression.unwrap() - 18.0).abs() <= 0.5);
    assert!((m.cleared.unwrap() - 48.0).abs() <= 1.0);
    for p in [&report.paths.event_log, &report.paths.metrics, &report.paths.timeline, &report.paths.report] {
        let p = p.as_ref().unwrap();
        assert!(p.starts_with(dir.path()) && p.exists(), "{}", p.display());
    }
    let metrics = std::fs::read_to_string(report.paths.metrics.as_ref().unwrap()).unwrap();
    assert!(metrics.lines().nth(1).unwrap().starts_with("fire_cnc,3,Success,"));
    // every event line carries the four record fields
    let log = std::fs::read_to_string(report.paths.event_log.as_ref().unwrap()).unwrap();
    for line in log.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for k in ["t", "layer", "kind", "payload"] {
            assert!(v.get(k).is_some(), "{line}");
        }
    }
}

#[test]
fn phases_sum_to_total_and_span_injection_to_intervention() {
    for (name, end) in [("fire_cnc", "suppression"), ("thermal_pv", "valve_reset"), ("intruder_night", "warning")] {
        let (report, out) = run_scenario(&scenario(name), 0, &RunConfig::default()).unwrap();
        let p = report.phases;
        assert!((p.total - p.sum()).abs() <= 1e-9, "{name}");
        let m = serde_json::to_value(&report.milestones).unwrap();
        let done = m[end].as_f64().unwrap();
        let injected = out.truth.iter().map(|h| h.injected_at).fold(f64::INFINITY, f64::min);
        assert!((p.total - (done - injected)).abs() <= 1e-9, "{name}: {} vs {}", p.total, done - injected);
        assert!(p.detection >= 0.0 && p.reasoning >= 0.0 && p.alert_transmission >= 0.0);
        assert!(p.navigation >= 0.0 && p.intervention >= 0.0, "{name}: {p:?}");
        assert_eq!(phase_breakdown(&out), p);
    }
    let (fire, _) = run_scenario(&scenario("fire_cnc"), 0, &RunConfig::default()).unwrap();
    assert!((fire.phases.detection - 0.13).abs() < 1e-9);
    assert!((fire.phases.reasoning - 0.85).abs() < 1e-9);
    assert!((fire.phases.alert_transmission - 0.42).abs() < 1e-9);
}

#[test]
fn thermal_incident_fits_twelve_minutes() {
    let (report, _) = run_scenario(&scenario("thermal_pv"), 1, &RunConfig::default()).unwrap();
    assert_eq!(report.outcome, Outcome::Success);
    assert!(report.end_time <= 720.0);
    assert_eq!(report.alerts[0].priority, Priority::P1);
}

#[test]
fn hazard_free_runs_never_alert() {
    let sc = scenario("patrol_quiet");
    for seed in 0..10 {
        let (report, _) = run_scenario(&sc, seed, &RunConfig::default()).unwrap();
        assert!(report.alerts.is_empty(), "seed {seed}");
        assert_eq!(report.outcome, Outcome::Success);
        assert_eq!(report.phases.total, 0.0);
    }
}

#[test]
fn timelines() {
    let (_, fire) = run_scenario(&scenario("fire_cnc"), 0, &RunConfig::default()).unwrap();
    let csv = emit_timeline(&fire);
    let rows: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert!(csv.starts_with("t,fire_confidence\n"));
    assert!((rows[0].1 - 0.92).abs() < 1e-9);
    assert!(rows.last().unwrap().1 < 0.005);

    let (_, th) = run_scenario(&scenario("thermal_pv"), 0, &RunConfig::default()).unwrap();
    let csv = emit_timeline(&th);
    assert!(csv.starts_with("arclength,temperature\n"));
    let (mut best_s, mut best_t) = (0.0, f64::NEG_INFINITY);
    for l in csv.lines().skip(1) {
        let (a, b) = l.split_once(',').unwrap();
        let (s, t): (f64, f64) = (a.parse().unwrap(), b.parse().unwrap());
        if t > best_t {
            (best_s, best_t) = (s, t);
        }
    }
    assert!((best_s - 4.5).abs() <= 0.1, "{best_s}");
    assert!((best_t - 125.8).abs() < 0.5, "{best_t}");

    let (_, quiet) = run_scenario(&scenario("intruder_authorized"), 0, &RunConfig::default()).unwrap();
    assert_eq!(emit_timeline(&quiet).lines().count(), 1);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let cfg = RunConfig::default();
    for name in ["fire_cnc", "intruder_dispatch", "patrol_quiet"] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ra = run(scenario_path(name), 11, &cfg, a.path()).unwrap();
        let rb = run(scenario_path(name), 11, &cfg, b.path()).unwrap();
        assert_eq!(ra.outcome, rb.outcome);
        for f in std::fs::read_dir(a.path()).unwrap() {
            let f = f.unwrap();
            let other = b.path().join(f.file_name());
            let (x, y) = (std::fs::read(f.path()).unwrap(), std::fs::read(&other).unwrap());
            if f.file_name().to_string_lossy().ends_with("_report.json") {
                // reports embed their own directory
                let strip = |s: &[u8], d: &Path| String::from_utf8_lossy(s).replace(&d.display().to_string(), "");
                assert_eq!(strip(&x, a.path()), strip(&y, b.path()));
            } else {
                assert_eq!(x, y, "{name}: {:?}", f.file_name());
            }
        }
    }
}

#[test]
fn batch_table_structure_and_means() {
    let set = vec![scenario("fire_cnc"), scenario("intruder_night"), scenario("patrol_quiet")];
    let table = batch(&set, 4, &RunConfig::default()).unwrap();
    assert_eq!(table.rows.len(), 3);
    assert_eq!(table.overall.runs, 12);
    for row in table.rows.iter().chain([&table.overall]) {
        assert!((row.success_pct + row.partial_pct + row.failure_pct - 100.0).abs() < 1e-9);
        let mine: Vec<_> = table
            .reports
            .iter()
            .filter(|r| row.scenario_id == "overall" || r.scenario_id == row.scenario_id)
            .collect();
        let mean = mine.iter().map(|r| r.phases.total).sum::<f64>() / mine.len() as f64;
        assert!((row.mean_phases.total - mean).abs() < 1e-12);
        let det = mine.iter().map(|r| r.phases.detection).sum::<f64>() / mine.len() as f64;
        assert!((row.mean_phases.detection - det).abs() < 1e-12);
    }
    let csv = batch_csv(&table);
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().last().unwrap().starts_with("overall,12,"));

    let one = batch(&set[..1], 1, &RunConfig::default()).unwrap();
    for p in [one.rows[0].success_pct, one.rows[0].partial_pct, one.rows[0].failure_pct] {
        assert!(p == 0.0 || p == 100.0);
    }
    assert!(batch(&set, 0, &RunConfig::default()).is_err());
}

#[test]
fn bundled_scenarios_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let all = load_scenario_dir(&dir).unwrap();
    assert!(all.len() >= 8);
    assert!(all.windows(2).all(|w| w[0].id < w[1].id));
}

#[test]
fn config_overrides_apply() {
    let cfg: RunConfig = serde_json::from_str(r#"{"latency_overrides": {"fire_severity": 0.5}, "budget": 400}"#).unwrap();
    let (report, _) = run_scenario(&scenario("fire_cnc"), 0, &cfg).unwrap();
    assert!((report.phases.reasoning - 0.5).abs() < 1e-9);
    assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    assert_eq!(resolve_out_dir(Some(Path::new("/tmp/x"))), Path::new("/tmp/x"));
}

#[test]
fn reward_replay_decomposes_each_step() {
    let w = RewardWeights::default();
    let step = |v: f64| {
        serde_json::json!({
            "v_xy": [v, 0.0], "v_cmd_xy": [1.0, 0.0], "omega": 0.0, "omega_cmd": 0.0,
            "torque": vec![0.0; NUM_JOINTS], "qddot": vec![0.0; NUM_JOINTS],
            "g_z": -1.0, "feet_heights": [w.h_target, w.h_target]
        })
        .to_string()
    };
    let trace = [step(1.0), step(0.5), String::new(), step(1.0)].join("\n");
    let csv = replay_rewards(&trace, &w).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][1], 2.0);
    assert_eq!(rows[0][3], 0.5);
    assert_eq!(rows[0][4], 2.5);
    let totals: Vec<f64> = rows.iter().map(|r| r[4]).collect();
    assert!((rows[0][5] - discounted_return(&totals, w.gamma).unwrap()).abs() < 1e-9);
    assert!(replay_rewards("{not json", &w).is_err());
}
