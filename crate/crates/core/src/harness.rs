//! Scenario runner, metrics and report emission.

use crate::eventlog::EventLog;
use crate::locomotion::{discounted_return, reward_reg, reward_style, reward_track, total_reward, RewardWeights};
use crate::memory::{MemoryError, MemoryStore};
use crate::orchestra::{
    backend_from_spec, capture_baselines, react_loop, AlertMessage, EpisodeConfig, EpisodeOutput, HazardKind,
    Milestones, NavLeg, OrchestraError, Outcome,
};
use crate::planning::MppiParams;
use crate::worldsim::{load_scenario, NoiseConfig, Scenario, ScenarioError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SAFEGUARD_OUT_DIR";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Orchestra(#[from] OrchestraError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Run overrides, usually read from a JSON file. Unset fields keep defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub budget: Option<usize>,
    pub tick_s: Option<f64>,
    pub latency_overrides: BTreeMap<String, f64>,
    pub mppi: Option<MppiParams>,
    pub noise: Option<NoiseConfig>,
    pub max_duration_s: Option<f64>,
    pub warning_delta_c: Option<f64>,
    /// `rules` or `process:<command>`.
    pub backend: Option<String>,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    pub fn episode_config(&self, seed: u64) -> EpisodeConfig {
        let d = EpisodeConfig::default();
        EpisodeConfig {
            seed,
            budget: self.budget.unwrap_or(d.budget),
            tick_s: self.tick_s.unwrap_or(d.tick_s),
            latency_overrides: self.latency_overrides.clone(),
            mppi: self.mppi.unwrap_or(d.mppi),
            noise: self.noise,
            max_duration_s: self.max_duration_s,
            warning_delta_c: self.warning_delta_c.unwrap_or(d.warning_delta_c),
            log_frames: d.log_frames,
        }
    }

    pub fn backend_spec(&self) -> &str {
        self.backend.as_deref().unwrap_or("rules")
    }
}

/// Incident time split into consecutive phases, all in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseBreakdown {
    pub detection: f64,
    pub reasoning: f64,
    pub alert_transmission: f64,
    pub navigation: f64,
    pub intervention: f64,
    pub total: f64,
}

impl PhaseBreakdown {
    pub fn sum(&self) -> f64 {
        self.detection + self.reasoning + self.alert_transmission + self.navigation + self.intervention
    }

    fn mean(items: &[PhaseBreakdown]) -> PhaseBreakdown {
        if items.is_empty() {
            return PhaseBreakdown::default();
        }
        let n = items.len() as f64;
        let avg = |f: fn(&PhaseBreakdown) -> f64| items.iter().map(f).sum::<f64>() / n;
        PhaseBreakdown {
            detection: avg(|p| p.detection),
            reasoning: avg(|p| p.reasoning),
            alert_transmission: avg(|p| p.alert_transmission),
            navigation: avg(|p| p.navigation),
            intervention: avg(|p| p.intervention),
            total: avg(|p| p.total),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportPaths {
    pub event_log: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
    pub timeline: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario_id: String,
    pub seed: u64,
    pub outcome: Outcome,
    pub notes: Vec<String>,
    pub phases: PhaseBreakdown,
    pub alerts: Vec<AlertMessage>,
    pub milestones: Milestones,
    /// Sim time of the first scripted hazard, if any.
    pub hazard_injected_at: Option<f64>,
    pub nav_legs: Vec<NavLeg>,
    pub steps: usize,
    pub end_time: f64,
    pub paths: ReportPaths,
}

/// Phase split for the first hazard that expects an alert. Every phase is
/// measured between consecutive events so the total telescopes to
/// `completion - injection`.
pub fn phase_breakdown(out: &EpisodeOutput) -> PhaseBreakdown {
    let Some(hazard) = out.truth.iter().find(|h| h.expects_alert) else {
        return PhaseBreakdown::default();
    };
    let t0 = hazard.injected_at;
    let detected = out
        .detection_of(hazard.kind)
        .map(|d| d.completed_at)
        .unwrap_or(t0)
        .max(t0);
    let alert_step = out.trace.steps.iter().find(|s| {
        s.action.tool == "alert_center"
            && s.observation.ok
            && s.action.args.get("hazard").and_then(|h| h.as_str()) == Some(hazard.kind.as_str())
    });
    let (alert_start, alert_end) = alert_step
        .map(|s| (s.started_at().max(detected), s.sim_time.max(detected)))
        .unwrap_or((detected, detected));
    let m = &out.milestones;
    let completion = match hazard.kind {
        HazardKind::Fire => m.suppression,
        HazardKind::Thermal => m.valve_reset,
        HazardKind::Intruder => m.warning,
        HazardKind::Spill => None,
    }
    .or(m.finished)
    .unwrap_or(out.end_time)
    .max(alert_end);
    let navigation: f64 = out
        .nav_legs
        .iter()
        .filter(|l| l.started_at >= alert_end - 1e-9 && l.finished_at <= completion + 1e-9)
        .map(NavLeg::duration)
        .fold(0.0, |a, d| a + d);
    let phases = PhaseBreakdown {
        detection: detected - t0,
        reasoning: alert_start - detected,
        alert_transmission: alert_end - alert_start,
        navigation,
        intervention: completion - alert_end - navigation,
        total: completion - t0,
    };
    PhaseBreakdown {
        total: phases.sum(),
        ..phases
    }
}

/// Per-frame fire confidence for fire runs, the first pipe profile for thermal
/// runs, otherwise a header-only `t,value` file.
pub fn emit_timeline(out: &EpisodeOutput) -> String {
    let mut s = String::new();
    if out.truth.iter().any(|h| h.kind == HazardKind::Fire) {
        s.push_str("t,fire_confidence\n");
        for (t, c) in &out.fire_series {
            let _ = writeln!(s, "{t:.3},{c:.6}");
        }
    } else if let Some(p) = out.profiles.first() {
        s.push_str("arclength,temperature\n");
        for (x, t) in p.profile.positions.iter().zip(&p.profile.temps) {
            let _ = writeln!(s, "{x:.3},{t:.4}");
        }
    } else {
        s.push_str("t,value\n");
    }
    s
}

pub fn metrics_csv(report: &RunReport) -> String {
    let p = &report.phases;
    let mut s = String::from("scenario,seed,outcome,detection,reasoning,alert_transmission,navigation,intervention,total,alerts,steps\n");
    let _ = writeln!(
        s,
        "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}",
        report.scenario_id,
        report.seed,
        report.outcome.as_str(),
        p.detection,
        p.reasoning,
        p.alert_transmission,
        p.navigation,
        p.intervention,
        p.total,
        report.alerts.len(),
        report.steps
    );
    s
}

fn report_of(out: &EpisodeOutput) -> RunReport {
    RunReport {
        scenario_id: out.scenario_id.clone(),
        seed: out.seed,
        outcome: out.outcome(),
        notes: out.outcome_notes.clone(),
        phases: phase_breakdown(out),
        alerts: out.trace.alerts.clone(),
        milestones: out.milestones.clone(),
        hazard_injected_at: out.truth.iter().map(|h| h.injected_at).reduce(f64::min),
        nav_legs: out.nav_legs.clone(),
        steps: out.trace.steps.len(),
        end_time: out.end_time,
        paths: ReportPaths::default(),
    }
}

/// Run one episode in memory.
pub fn run_scenario(scenario: &Scenario, seed: u64, config: &RunConfig) -> Result<(RunReport, EpisodeOutput), HarnessError> {
    let mut backend = backend_from_spec(config.backend_spec()).map_err(OrchestraError::from)?;
    let out = react_loop(scenario, backend.as_mut(), &config.episode_config(seed))?;
    Ok((report_of(&out), out))
}

/// Output directory: explicit argument, then the environment, then `./out`.
pub fn resolve_out_dir(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(io_err(path))
}

/// Run a scenario file and write the event log, metrics, timeline and report
/// into `out_dir`.
pub fn run(scenario_path: impl AsRef<Path>, seed: u64, config: &RunConfig, out_dir: &Path) -> Result<RunReport, HarnessError> {
    let scenario = load_scenario(scenario_path)?;
    let (mut report, out) = run_scenario(&scenario, seed, config)?;
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let stem = format!("{}_seed{}", scenario.id, seed);
    let paths = ReportPaths {
        event_log: Some(out_dir.join(format!("{stem}_events.jsonl"))),
        metrics: Some(out_dir.join(format!("{stem}_metrics.csv"))),
        timeline: Some(out_dir.join(format!("{stem}_timeline.csv"))),
        report: Some(out_dir.join(format!("{stem}_report.json"))),
    };
    let p = |o: &Option<PathBuf>| o.clone().expect("all paths set above");
    out.log.write(p(&paths.event_log)).map_err(io_err(&p(&paths.event_log)))?;
    write(&p(&paths.metrics), &metrics_csv(&report))?;
    write(&p(&paths.timeline), &emit_timeline(&out))?;
    report.paths = paths;
    let json = serde_json::to_string_pretty(&report).expect("reports serialize");
    write(&p(&report.paths.report), &(json + "\n"))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub scenario_id: String,
    pub runs: usize,
    pub success_pct: f64,
    pub partial_pct: f64,
    pub failure_pct: f64,
    pub mean_phases: PhaseBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchTable {
    pub rows: Vec<BatchRow>,
    pub overall: BatchRow,
    pub reports: Vec<RunReport>,
}

fn summarize(id: &str, reports: &[&RunReport]) -> BatchRow {
    let n = reports.len();
    let pct = |o: Outcome| {
        if n == 0 {
            0.0
        } else {
            100.0 * reports.iter().filter(|r| r.outcome == o).count() as f64 / n as f64
        }
    };
    let phases: Vec<PhaseBreakdown> = reports.iter().map(|r| r.phases).collect();
    BatchRow {
        scenario_id: id.to_string(),
        runs: n,
        success_pct: pct(Outcome::Success),
        partial_pct: pct(Outcome::Partial),
        failure_pct: pct(Outcome::Failure),
        mean_phases: PhaseBreakdown::mean(&phases),
    }
}

/// Seeds `0..seeds` for every scenario, in parallel. Row order follows the input.
pub fn batch(scenarios: &[Scenario], seeds: u64, config: &RunConfig) -> Result<BatchTable, HarnessError> {
    if seeds == 0 {
        return Err(HarnessError::Config("batch needs at least one seed".into()));
    }
    let jobs: Vec<(usize, u64)> = (0..scenarios.len())
        .flat_map(|i| (0..seeds).map(move |s| (i, s)))
        .collect();
    let reports = jobs
        .par_iter()
        .map(|&(i, s)| run_scenario(&scenarios[i], s, config).map(|(r, _)| r))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = scenarios
        .iter()
        .map(|sc| {
            let mine: Vec<&RunReport> = reports.iter().filter(|r| r.scenario_id == sc.id).collect();
            summarize(&sc.id, &mine)
        })
        .collect();
    let all: Vec<&RunReport> = reports.iter().collect();
    Ok(BatchTable {
        rows,
        overall: summarize("overall", &all),
        reports,
    })
}

pub fn batch_csv(table: &BatchTable) -> String {
    let mut s = String::from(
        "scenario,runs,success_pct,partial_pct,failure_pct,detection,reasoning,alert_transmission,navigation,intervention,total\n",
    );
    for r in table.rows.iter().chain(std::iter::once(&table.overall)) {
        let p = &r.mean_phases;
        let _ = writeln!(
            s,
            "{},{},{:.1},{:.1},{:.1},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
            r.scenario_id,
            r.runs,
            r.success_pct,
            r.partial_pct,
            r.failure_pct,
            p.detection,
            p.reasoning,
            p.alert_transmission,
            p.navigation,
            p.intervention,
            p.total
        );
    }
    s
}

/// Load every `*.json` scenario in `dir`, sorted by file name.
pub fn load_scenario_dir(dir: &Path) -> Result<Vec<Scenario>, HarnessError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| load_scenario(p).map_err(HarnessError::from))
        .collect()
}

/// Memory store for a scenario with baselines captured from its hazard-free start.
pub fn baseline_capture(scenario: &Scenario) -> Result<MemoryStore, HarnessError> {
    let store = MemoryStore::new(
        crate::memory::FacilityMapStore::from_world(&scenario.world),
        capture_baselines(&scenario.world),
        crate::memory::PersonnelDb::from_entries(&scenario.personnel)?,
    );
    store.validate()?;
    Ok(store)
}

/// One logged locomotion step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayStep {
    pub v_xy: [f64; 2],
    pub v_cmd_xy: [f64; 2],
    pub omega: f64,
    pub omega_cmd: f64,
    pub torque: Vec<f64>,
    pub qddot: Vec<f64>,
    #[serde(default)]
    pub foot_speeds: Vec<f64>,
    #[serde(default)]
    pub contacts: Vec<bool>,
    pub g_z: f64,
    #[serde(default)]
    pub feet_heights: Vec<f64>,
}

/// Per-step reward decomposition of a JSON-Lines state/action trace, with the
/// discounted return from each step to the end.
pub fn replay_rewards(trace: &str, weights: &RewardWeights) -> Result<String, HarnessError> {
    weights.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut rows = Vec::new();
    for (i, line) in trace.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let step: ReplayStep =
            serde_json::from_str(line).map_err(|e| HarnessError::Config(format!("trace line {}: {e}", i + 1)))?;
        let track = reward_track(step.v_xy, step.v_cmd_xy, step.omega, step.omega_cmd, weights);
        let reg = reward_reg(&step.torque, &step.qddot, &step.foot_speeds, &step.contacts, weights)
            .map_err(|e| HarnessError::Config(format!("trace line {}: {e}", i + 1)))?;
        let style = reward_style(step.g_z, &step.feet_heights, weights.h_target, weights);
        rows.push((track, reg, style, total_reward(track, reg, style)));
    }
    let totals: Vec<f64> = rows.iter().map(|r| r.3).collect();
    let mut s = String::from("step,r_track,r_reg,r_style,r_total,return_to_go\n");
    for (i, (track, reg, style, total)) in rows.iter().enumerate() {
        let g = discounted_return(&totals[i..], weights.gamma).map_err(|e| HarnessError::Config(e.to_string()))?;
        let _ = writeln!(s, "{i},{track:.12},{reg:.12},{style:.12},{total:.12},{g:.12}");
    }
    Ok(s)
}

/// Event log of an in-memory run, as written by [`run`].
pub fn event_log_text(log: &EventLog) -> String {
    log.to_jsonl()
}
