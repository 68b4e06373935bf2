//! Episode runner: interleaves perception ticks, scripted events and latency-
//! modeled tool calls on one simulated clock.

use super::backend::{Decision, LastObservation, Mission, ReasoningBackend, Snapshot, WaitCondition, WaitReport};
use super::registry::{build_registry, ToolCategory, ToolRegistry};
use super::trace::{EpisodeTrace, HazardKind, Outcome, ReasoningStep, ToolCall, ToolResult};
use super::OrchestraError;
use crate::eventlog::{EventLog, Layer};
use crate::geometry::Pose2;
use crate::grid::OccupancyGrid;
use crate::memory::{BaselineStore, FacilityMapStore, MemoryStore, PersonnelDb};
use crate::perception::{DetectionClass, ThermalImage, ThermalProfile};
use crate::planning::MppiParams;
use crate::rng::{derive_seed, stream_rng, STREAM_FRAME, STREAM_THERMAL};
use crate::worldsim::{
    emit_sensor_frame, render_thermal, EventKind, FacilityWorld, NoiseConfig, OperatorDecision, Scenario, ScriptEvent,
    SensorFrame,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::{BTreeMap, VecDeque};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    pub seed: u64,
    /// Maximum number of backend decisions.
    pub budget: usize,
    /// Perception period, s.
    pub tick_s: f64,
    /// Per-tool fixed latency overrides, s.
    pub latency_overrides: BTreeMap<String, f64>,
    pub mppi: MppiParams,
    /// Replaces the scenario's noise model when set.
    pub noise: Option<NoiseConfig>,
    /// Replaces the scenario's duration when set.
    pub max_duration_s: Option<f64>,
    pub warning_delta_c: f64,
    /// Record one event-log line per perception frame.
    pub log_frames: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            budget: 500,
            tick_s: 0.1,
            latency_overrides: BTreeMap::new(),
            mppi: MppiParams::default(),
            noise: None,
            max_duration_s: None,
            warning_delta_c: crate::perception::DEFAULT_WARNING_DELTA_C,
            log_frames: true,
        }
    }
}

/// Ground-truth hazard as scripted, used only for outcome classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthHazard {
    pub kind: HazardKind,
    pub injected_at: f64,
    pub expects_alert: bool,
    pub description: String,
}

/// First perception call whose output contained a ground-truth hazard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub kind: HazardKind,
    pub frame_t: f64,
    pub completed_at: f64,
    pub tool: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavLeg {
    pub started_at: f64,
    pub finished_at: f64,
    pub arrived: bool,
    pub path_length: f64,
    pub shortest_length: f64,
    pub replans: usize,
}

impl NavLeg {
    pub fn duration(&self) -> f64 {
        self.finished_at - self.started_at
    }

    /// Realized over shortest length; 1 for zero-length legs.
    pub fn ratio(&self) -> f64 {
        if self.shortest_length > 1e-9 {
            self.path_length / self.shortest_length
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub t: f64,
    pub pipe_id: String,
    pub profile: ThermalProfile,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Milestones {
    pub detection: Option<f64>,
    pub detection_complete: Option<f64>,
    pub alert: Option<f64>,
    pub suppression: Option<f64>,
    pub cleared: Option<f64>,
    pub valve_reset: Option<f64>,
    /// First tick after a valve reset with the pipe back inside the band.
    pub recovered: Option<f64>,
    pub warning: Option<f64>,
    pub finished: Option<f64>,
}

#[derive(Debug, Clone)]
pub(super) struct StoredFrame {
    pub pose: Pose2,
    pub frame: SensorFrame,
}

#[derive(Debug, Clone)]
pub(super) struct StoredImage {
    pub image: ThermalImage,
}

#[derive(Debug)]
pub struct EpisodeOutput {
    pub scenario_id: String,
    pub seed: u64,
    pub trace: EpisodeTrace,
    pub log: EventLog,
    pub world: FacilityWorld,
    pub memory: MemoryStore,
    pub milestones: Milestones,
    /// `(t, max fire confidence)` per perception frame.
    pub fire_series: Vec<(f64, f64)>,
    pub profiles: Vec<ProfileRecord>,
    pub nav_legs: Vec<NavLeg>,
    pub truth: Vec<TruthHazard>,
    pub detections: Vec<DetectionRecord>,
    pub wrong_actuations: Vec<String>,
    pub end_time: f64,
    pub finished: bool,
    pub timed_out: bool,
    pub outcome_notes: Vec<String>,
    pub alert_budget_s: f64,
}

impl EpisodeOutput {
    pub fn outcome(&self) -> Outcome {
        self.trace.outcome().expect("outcome assigned at episode end")
    }

    pub fn detection_of(&self, kind: HazardKind) -> Option<&DetectionRecord> {
        self.detections.iter().find(|d| d.kind == kind)
    }
}

/// Noise-free baseline images from every inspection pose, people and fires removed.
pub fn capture_baselines(world: &FacilityWorld) -> BaselineStore {
    let mut quiet = world.clone();
    quiet.persons.clear();
    quiet.fires.clear();
    let t = &quiet.sensor.thermal;
    let mut store = BaselineStore::new(t.width, t.height);
    let mut rng = stream_rng(0, STREAM_THERMAL, 0);
    for ip in &quiet.inspection_points {
        let img = render_thermal(&quiet, &ip.pose, 0.0, &mut rng);
        store
            .insert(ip.id.clone(), img, quiet.clock)
            .expect("rendered images match the camera dimensions");
    }
    store
}

pub struct Episode {
    pub(super) scenario: Scenario,
    pub(super) world: FacilityWorld,
    events: Vec<ScriptEvent>,
    next_event: usize,
    pub(super) memory: MemoryStore,
    pub(super) registry: ToolRegistry,
    pub(super) config: EpisodeConfig,
    pub(super) noise: NoiseConfig,
    pub(super) log: EventLog,
    pub(super) trace: EpisodeTrace,
    pub(super) frame: SensorFrame,
    frame_index: u64,
    inbox: VecDeque<(f64, OperatorDecision)>,
    pub(super) frames: BTreeMap<String, StoredFrame>,
    pub(super) images: BTreeMap<String, StoredImage>,
    pub(super) embeddings: BTreeMap<String, Vec<f64>>,
    pub(super) severity_prev: Option<(f64, f64)>,
    pub(super) severity_first: Option<f64>,
    pub(super) belief: OccupancyGrid,
    pub(super) fire_series: Vec<(f64, f64)>,
    pub(super) profiles: Vec<ProfileRecord>,
    pub(super) nav_legs: Vec<NavLeg>,
    pub(super) wrong_actuations: Vec<String>,
    pub(super) milestones: Milestones,
    pub(super) detections: Vec<DetectionRecord>,
    pub(super) call_index: u64,
    pub(super) nav_ticks: u64,
    pub(super) armed: bool,
    seen_perception: bool,
    seen_reasoning: bool,
    end_time: f64,
    watch_recovery: Option<String>,
}

impl Episode {
    pub fn new(scenario: &Scenario, config: EpisodeConfig, memory: Option<MemoryStore>) -> Result<Self, OrchestraError> {
        if !(config.tick_s > 0.0) {
            return Err(OrchestraError::Config(format!("tick must be positive, got {}", config.tick_s)));
        }
        config
            .mppi
            .validate()
            .map_err(|e| OrchestraError::Config(e.to_string()))?;
        let memory = match memory {
            Some(m) => m,
            None => MemoryStore::new(
                FacilityMapStore::from_world(&scenario.world),
                capture_baselines(&scenario.world),
                PersonnelDb::from_entries(&scenario.personnel)?,
            ),
        };
        let mut registry = build_registry();
        for (name, s) in &config.latency_overrides {
            registry
                .override_latency(name, *s)
                .map_err(|n| OrchestraError::Config(format!("latency override for unknown tool `{n}`")))?;
        }
        let noise = config.noise.unwrap_or(scenario.noise);
        let world = scenario.world.clone();
        let belief = memory.facility.grid.clone();
        let end_time = config.max_duration_s.unwrap_or(scenario.duration_s);
        let frame = SensorFrame {
            timestamp: 0.0,
            detections: Vec::new(),
            thermal: ThermalImage::filled(1, 1, 0.0),
            depth_of: BTreeMap::new(),
        };
        Ok(Self {
            scenario: scenario.clone(),
            world,
            events: scenario.script.events.clone(),
            next_event: 0,
            memory,
            registry,
            config,
            noise,
            log: EventLog::new(),
            trace: EpisodeTrace::new(),
            frame,
            frame_index: 0,
            inbox: VecDeque::new(),
            frames: BTreeMap::new(),
            images: BTreeMap::new(),
            embeddings: BTreeMap::new(),
            severity_prev: None,
            severity_first: None,
            belief,
            fire_series: Vec::new(),
            profiles: Vec::new(),
            nav_legs: Vec::new(),
            wrong_actuations: Vec::new(),
            milestones: Milestones::default(),
            detections: Vec::new(),
            call_index: 0,
            nav_ticks: 0,
            armed: false,
            seen_perception: false,
            seen_reasoning: false,
            end_time,
            watch_recovery: None,
        })
    }

    pub(super) fn clock(&self) -> f64 {
        self.world.clock
    }

    pub(super) fn end_time(&self) -> f64 {
        self.end_time
    }

    pub(super) fn next_tick_time(&self) -> f64 {
        (self.frame_index + 1) as f64 * self.config.tick_s
    }

    fn apply_due_events(&mut self) {
        while let Some(ev) = self.events.get(self.next_event) {
            if ev.t > self.world.clock + EPS {
                break;
            }
            let ev = ev.clone();
            self.next_event += 1;
            match &ev.kind {
                EventKind::OperatorDecision { decision } => {
                    self.inbox.push_back((ev.t, *decision));
                    self.log.push(self.world.clock, Layer::Worldsim, "operator_decision", json!({"decision": decision}));
                }
                _ => match self.world.apply_event(&ev) {
                    Ok(cells) => {
                        self.log.push(
                            self.world.clock,
                            Layer::Worldsim,
                            "event",
                            json!({"kind": ev.kind_name(), "changed_cells": cells.len()}),
                        );
                    }
                    Err(e) => {
                        self.log
                            .push(self.world.clock, Layer::Worldsim, "event_rejected", json!({"kind": ev.kind_name(), "error": e.to_string()}));
                    }
                },
            }
        }
    }

    fn emit_frame(&mut self) {
        let seed = derive_seed(self.config.seed, STREAM_FRAME, self.frame_index);
        self.frame = emit_sensor_frame(&self.world, &self.noise, seed);
        let fire = self.frame.max_confidence(DetectionClass::Fire);
        self.fire_series.push((self.frame.timestamp, fire));
        if self.config.log_frames {
            let persons = self
                .frame
                .detections
                .iter()
                .filter(|d| d.class == DetectionClass::Person)
                .count();
            self.log.push(
                self.frame.timestamp,
                Layer::Perception,
                "frame",
                json!({"index": self.frame_index, "fire_confidence": fire, "persons": persons, "detections": self.frame.detections.len()}),
            );
        }
        if let Some(pipe_id) = &self.watch_recovery {
            if self.milestones.recovered.is_none() {
                if let Some(p) = self.world.pipe(pipe_id) {
                    if p.max_abs_delta() < super::protocols::RECOVERY_BAND_C {
                        self.milestones.recovered = Some(self.world.clock);
                        self.log.push(self.world.clock, Layer::Worldsim, "pipe_recovered", json!({"pipe_id": pipe_id}));
                    }
                }
            }
        }
    }

    pub(super) fn watch_pipe_recovery(&mut self, pipe_id: &str) {
        self.watch_recovery = Some(pipe_id.to_string());
    }

    /// Advance the world to `t`, emitting a frame at every tick boundary and
    /// applying scripted events at their times. Never passes the episode end.
    pub(super) fn advance_to(&mut self, t: f64) {
        let t = t.min(self.end_time);
        while self.world.clock < t - EPS {
            let next_tick = self.next_tick_time();
            let mut target = if next_tick <= t + EPS { next_tick } else { t };
            if let Some(ev) = self.events.get(self.next_event) {
                if ev.t > self.world.clock + EPS && ev.t < target - EPS {
                    target = ev.t;
                }
            }
            let dt = target - self.world.clock;
            self.world.step_mut(dt);
            self.world.clock = target;
            self.apply_due_events();
            if (target - next_tick).abs() <= EPS {
                self.frame_index += 1;
                self.emit_frame();
            }
        }
    }

    pub(super) fn elapse(&mut self, seconds: f64) {
        let t = self.world.clock + seconds.max(0.0);
        self.advance_to(t);
    }

    fn mission(&self) -> Mission {
        Mission {
            scenario_id: self.scenario.id.clone(),
            patrol: self.scenario.patrol.clone(),
            suppression_standoff_m: self.scenario.response.suppression_standoff_m,
            challenge_standoff_m: self.scenario.response.challenge_standoff_m,
        }
    }

    fn snapshot(&self, step: usize, last: Option<LastObservation>, wait: Option<WaitReport>) -> Snapshot {
        Snapshot {
            step,
            sim_time: self.world.clock,
            time_of_day: self.world.time_of_day(),
            robot_pose: self.world.robot.pose,
            mission: self.mission(),
            last,
            wait,
        }
    }

    fn condition_met(&mut self, cond: &WaitCondition) -> Option<Value> {
        match cond {
            WaitCondition::FireCleared { below, frames } => {
                let n = *frames;
                if n == 0 || self.fire_series.len() < n {
                    return None;
                }
                let tail = &self.fire_series[self.fire_series.len() - n..];
                tail.iter()
                    .all(|&(_, c)| c < *below)
                    .then(|| json!({"cleared_at": self.world.clock, "frames": n}))
            }
            WaitCondition::OperatorDecision => self
                .inbox
                .pop_front()
                .map(|(t, d)| json!({"decision": d, "issued_at": t})),
        }
    }

    fn wait_until(&mut self, cond: &WaitCondition, timeout: f64) -> WaitReport {
        let deadline = (self.world.clock + timeout.max(0.0)).min(self.end_time);
        loop {
            if let Some(value) = self.condition_met(cond) {
                if matches!(cond, WaitCondition::FireCleared { .. }) && self.milestones.cleared.is_none() {
                    self.milestones.cleared = Some(self.world.clock);
                }
                return WaitReport { satisfied: true, value };
            }
            if self.world.clock >= deadline - EPS {
                return WaitReport {
                    satisfied: false,
                    value: json!({"timed_out_at": self.world.clock}),
                };
            }
            let next = self.next_tick_time().min(deadline);
            self.advance_to(next);
        }
    }

    /// Dispatch one call: unknown names and precondition-free actuations are
    /// refused without consuming time.
    fn dispatch(&mut self, tool: &str, args: &Value) -> ToolResult {
        let Some(desc) = self.registry.lookup(tool).cloned() else {
            self.log
                .push(self.world.clock, Layer::Orchestra, "protocol_error", json!({"tool": tool, "error": "unknown tool"}));
            return ToolResult::err(None, format!("protocol error: unknown tool `{tool}`"));
        };
        if desc.category == ToolCategory::Actuation && !(self.seen_perception && self.seen_reasoning) {
            self.log.push(
                self.world.clock,
                Layer::Orchestra,
                "actuation_refused",
                json!({"tool": desc.name, "reason": "no prior perception and reasoning"}),
            );
            return ToolResult::err(None, format!("actuation `{}` refused: perceive and reason first", desc.name));
        }
        let args = if args.is_null() { json!({}) } else { args.clone() };
        for p in desc.params.iter().filter(|p| p.required) {
            if args.get(p.name).map_or(true, Value::is_null) {
                return ToolResult::err(Some(desc.name), format!("missing parameter `{}`", p.name));
            }
        }
        self.call_index += 1;
        let result = self.run_tool(&desc, &args);
        if result.ok {
            match desc.category {
                ToolCategory::Perception => self.seen_perception = true,
                ToolCategory::Reasoning => self.seen_reasoning = true,
                _ => {}
            }
        }
        result
    }

    pub fn run(mut self, backend: &mut dyn ReasoningBackend) -> Result<EpisodeOutput, OrchestraError> {
        if self.config.budget == 0 {
            return Err(OrchestraError::Precondition("budget must be at least 1".into()));
        }
        self.log.push(
            0.0,
            Layer::Harness,
            "episode_start",
            json!({"scenario": self.scenario.id, "seed": self.config.seed, "backend": backend.name()}),
        );
        self.apply_due_events();
        self.emit_frame();

        let mut last: Option<LastObservation> = None;
        let mut wait: Option<WaitReport> = None;
        let mut idle = 0.0;
        let mut decisions = 0usize;
        let mut finished = false;
        let mut timed_out = false;
        loop {
            if decisions >= self.config.budget {
                self.trace.budget_exhausted = true;
                break;
            }
            if self.world.clock >= self.end_time - EPS {
                timed_out = true;
                break;
            }
            let snap = self.snapshot(self.trace.steps.len(), last.take(), wait.take());
            let decision = match backend.decide(&snap, &self.registry) {
                Ok(d) => d,
                Err(e) => {
                    self.log
                        .push(self.world.clock, Layer::Orchestra, "backend_error", json!({"error": e.to_string()}));
                    self.trace.final_thought = Some(format!("backend error: {e}"));
                    break;
                }
            };
            decisions += 1;
            match decision {
                Decision::Call { thought, tool, args } => {
                    let t0 = self.world.clock;
                    let observation = self.dispatch(&tool, &args);
                    let t1 = self.world.clock;
                    self.log.push(
                        t1,
                        Layer::Orchestra,
                        "step",
                        json!({"thought": thought, "tool": tool, "args": args, "ok": observation.ok, "latency": t1 - t0, "error": observation.error}),
                    );
                    last = Some(LastObservation {
                        tool: tool.clone(),
                        ok: observation.ok,
                        value: observation.value.clone(),
                        error: observation.error.clone(),
                    });
                    self.trace.steps.push(ReasoningStep {
                        index: self.trace.steps.len(),
                        thought,
                        action: ToolCall { tool, args },
                        observation,
                        sim_time: t1,
                        latency: t1 - t0,
                        idle_before: idle,
                    });
                    idle = 0.0;
                }
                Decision::Wait { thought, seconds } => {
                    let t0 = self.world.clock;
                    self.elapse(if seconds.is_finite() { seconds } else { 0.0 });
                    idle += self.world.clock - t0;
                    self.log
                        .push(self.world.clock, Layer::Orchestra, "wait", json!({"thought": thought, "seconds": seconds}));
                }
                Decision::WaitUntil {
                    thought,
                    condition,
                    timeout_s,
                } => {
                    let t0 = self.world.clock;
                    let report = self.wait_until(&condition, if timeout_s.is_finite() { timeout_s } else { 0.0 });
                    idle += self.world.clock - t0;
                    self.log.push(
                        self.world.clock,
                        Layer::Orchestra,
                        "wait_until",
                        json!({"thought": thought, "condition": condition, "satisfied": report.satisfied}),
                    );
                    wait = Some(report);
                }
                Decision::Finish { thought } => {
                    self.log.push(self.world.clock, Layer::Orchestra, "finish", json!({"thought": thought}));
                    self.trace.final_thought = Some(thought);
                    self.milestones.finished = Some(self.world.clock);
                    finished = true;
                    break;
                }
            }
        }
        backend.end();
        // stop the robot where it is
        self.world.robot.command = Default::default();

        let truth = self.ground_truth();
        let (outcome, notes) = self.classify(&truth, finished, timed_out);
        self.trace
            .set_outcome(outcome)
            .expect("outcome is assigned exactly once");
        self.log.push(
            self.world.clock,
            Layer::Harness,
            "episode_end",
            json!({"outcome": outcome, "notes": notes, "finished": finished, "timed_out": timed_out}),
        );
        Ok(EpisodeOutput {
            scenario_id: self.scenario.id.clone(),
            seed: self.config.seed,
            end_time: self.world.clock,
            trace: self.trace,
            log: self.log,
            world: self.world,
            memory: self.memory,
            milestones: self.milestones,
            fire_series: self.fire_series,
            profiles: self.profiles,
            nav_legs: self.nav_legs,
            truth,
            detections: self.detections,
            wrong_actuations: self.wrong_actuations,
            finished,
            timed_out,
            outcome_notes: notes,
            alert_budget_s: self.scenario.response.alert_budget_s,
        })
    }

    fn ground_truth(&self) -> Vec<TruthHazard> {
        let mut out = Vec::new();
        for ev in self.scenario.script.hazards() {
            let (kind, expects, desc) = match &ev.kind {
                EventKind::IgniteFire { fire_id, .. } => (HazardKind::Fire, true, format!("fire {fire_id}")),
                EventKind::ValveStuck { valve_id, .. } => (HazardKind::Thermal, true, format!("stuck valve {valve_id}")),
                EventKind::HotSpot {
                    pipe_id, duration_s, ..
                } => match duration_s {
                    Some(_) => (HazardKind::Thermal, false, format!("transient hot spot on {pipe_id}")),
                    None => (HazardKind::Thermal, true, format!("sustained hot spot on {pipe_id}")),
                },
                _ => continue,
            };
            if ev.t <= self.end_time {
                out.push(TruthHazard {
                    kind,
                    injected_at: ev.t,
                    expects_alert: expects,
                    description: desc,
                });
            }
        }
        // intruders: unauthorized people inside a restricted zone out of hours
        let map = &self.memory.facility;
        let tod0 = self.scenario.world.time_of_day_start_s;
        for p in &self.scenario.world.persons {
            if p.authorized {
                continue;
            }
            let mut t = 0.0;
            while t <= self.end_time {
                let z = map.zone_status(&p.position_at(t), tod0 + t);
                if super::intruder_alert(z.restricted, z.within_allowed, false) {
                    out.push(TruthHazard {
                        kind: HazardKind::Intruder,
                        injected_at: t,
                        expects_alert: true,
                        description: format!("intruder {}", p.id),
                    });
                    break;
                }
                t += 1.0;
            }
        }
        out.sort_by(|a, b| a.injected_at.total_cmp(&b.injected_at));
        out
    }

    fn resolved(&self, h: &TruthHazard) -> bool {
        match h.kind {
            HazardKind::Fire => self.world.fires.iter().all(|f| {
                f.suppressed_at.is_some() && f.confidence * f.intensity_at(self.world.clock, &self.world.fire_dynamics) < super::protocols::CLEAR_CONFIDENCE
            }),
            HazardKind::Thermal if !h.expects_alert => true,
            HazardKind::Thermal => {
                self.world.valves.iter().all(|v| !v.stuck)
                    && self.world.faults.iter().all(|f| !f.active)
                    && self
                        .world
                        .pipes
                        .iter()
                        .all(|p| p.max_abs_delta() < super::protocols::RECOVERY_BAND_C)
            }
            HazardKind::Intruder => self.milestones.warning.is_some(),
            HazardKind::Spill => false,
        }
    }

    fn classify(&self, truth: &[TruthHazard], finished: bool, timed_out: bool) -> (Outcome, Vec<String>) {
        let mut notes = Vec::new();
        if !self.wrong_actuations.is_empty() {
            notes.extend(self.wrong_actuations.iter().map(|w| format!("wrong actuation: {w}")));
            return (Outcome::Failure, notes);
        }
        for a in &self.trace.alerts {
            if !truth.iter().any(|h| h.kind == a.hazard && h.expects_alert) {
                notes.push(format!("spurious {} alert at {:.2}", a.hazard.as_str(), a.sim_time));
                return (Outcome::Failure, notes);
            }
        }
        let mut partial = false;
        for h in truth {
            let alert = self.trace.alerts.iter().find(|a| a.hazard == h.kind);
            if h.expects_alert {
                let Some(alert) = alert else {
                    notes.push(format!("missed: {}", h.description));
                    return (Outcome::Failure, notes);
                };
                let latency = alert.sim_time - h.injected_at;
                if latency > self.scenario.response.alert_budget_s + EPS {
                    notes.push(format!("alert latency {latency:.2} s over budget for {}", h.description));
                    partial = true;
                }
            }
            if !self.resolved(h) {
                notes.push(format!("unresolved: {}", h.description));
                partial = true;
            }
        }
        for leg in &self.nav_legs {
            if leg.ratio() > 1.5 {
                notes.push(format!("suboptimal path: ratio {:.2}", leg.ratio()));
                partial = true;
            }
            if !leg.arrived {
                notes.push("navigation leg did not arrive".into());
                partial = true;
            }
        }
        if !finished {
            notes.push(if timed_out { "episode timed out".into() } else { "episode stopped before completion".into() });
            partial = true;
        }
        (if partial { Outcome::Partial } else { Outcome::Success }, notes)
    }
}

/// Run one episode of `scenario` under `backend`.
pub fn react_loop(
    scenario: &Scenario,
    backend: &mut dyn ReasoningBackend,
    config: &EpisodeConfig,
) -> Result<EpisodeOutput, OrchestraError> {
    Episode::new(scenario, config.clone(), None)?.run(backend)
}
