//! The deterministic rule-driven policy: patrol, then one graduated response.

use super::backend::{BackendError, Decision, Mission, ReasoningBackend, Snapshot, WaitCondition};
use super::protocols::{fire_protocol, intruder_protocol, thermal_protocol, thermal_resolution, ProtocolAction};
use super::registry::ToolRegistry;
use super::trace::{HazardKind, Priority};
use crate::geometry::{Point2, Pose2};
use crate::memory::{MapItemKind, ZoneStatus};
use crate::perception::{AnomalyRegion, Detection, DEFAULT_MATCH_THRESHOLD, DEFAULT_WARNING_DELTA_C};
use crate::understanding::FireStage;
use serde_json::{json, Value};
use std::collections::VecDeque;

/// Trend window for thermal rate estimation, s.
pub const TREND_WINDOW_S: f64 = 60.0;
/// Pause between thermal monitoring scans, s.
pub const THERMAL_MONITOR_INTERVAL_S: f64 = 10.0;
/// Settling pause after discharge before the first monitoring look, s.
pub const POST_DISCHARGE_WAIT_S: f64 = 5.0;
pub const ROOT_CAUSE_RADIUS_M: f64 = 0.5;
const FIRE_CLEAR_TIMEOUT_S: f64 = 120.0;
const OPERATOR_TIMEOUT_S: f64 = 600.0;
const MAX_MONITOR_ROUNDS: usize = 60;
/// Distance at which the robot counts as standing on an inspection point, m.
const AT_POINT_M: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Purpose {
    Patrol,
    Confirm,
    Monitor,
    Final,
}

#[derive(Debug, Clone, PartialEq)]
enum Step {
    LookupPoint(String),
    MoveTo(String),
    DetectFire(Purpose),
    DetectPerson,
    Baseline(String),
    Scan(String),
    Hazard(String),
    Severity(Purpose),
    Alert(Priority, HazardKind),
    LocalizeFire,
    FireZone,
    IsolatePower,
    Arm,
    Retreat(f64),
    Discharge,
    Pause(f64),
    WaitCleared(f64, usize),
    LocalizePerson,
    Embed,
    Personnel,
    PersonZone,
    Threat,
    Approach(f64),
    Warning,
    AwaitOperator,
    Profile,
    Trend,
    TimeToCritical,
    RootCause,
    Resolve,
    ResetValve,
    MonitorThermal(f64),
    HazardMonitor(String, f64),
    Finish(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Patrol,
    Fire,
    Intruder,
    Thermal,
}

#[derive(Debug, Default)]
struct FireCtx {
    frame_id: Option<String>,
    index: usize,
    det: Option<(f64, f64)>,
    smoke: Option<(f64, f64)>,
    frame_area: f64,
    position: Option<Point2>,
    zone: Option<String>,
    gone: bool,
    localize_planned: bool,
    alerted: bool,
}

#[derive(Debug, Default)]
struct PersonCtx {
    frame_id: Option<String>,
    index: usize,
    det: Option<Detection>,
    position: Option<Point2>,
    embedding_id: Option<String>,
    matched: Option<(String, f64, bool)>,
    zone: Option<ZoneStatus>,
}

#[derive(Debug, Default)]
struct ThermalCtx {
    ip: Option<String>,
    baseline_ok: bool,
    image_id: Option<String>,
    pipe_id: Option<String>,
    limit: f64,
    max_temp: f64,
    peak_s: Option<f64>,
    peak_temp: f64,
    profile: Option<Value>,
    current: Option<f64>,
    rate: Option<f64>,
    cause: Option<(String, MapItemKind)>,
    alerted: bool,
    rounds: usize,
}

/// Finite-state scenario policy. Fresh per episode.
pub struct RulesPolicy {
    queue: VecDeque<Step>,
    awaiting: Option<Step>,
    started: bool,
    mission: Option<Mission>,
    patrol_idx: usize,
    points: std::collections::BTreeMap<String, Pose2>,
    mode: Mode,
    saved: VecDeque<Step>,
    fire: FireCtx,
    person: PersonCtx,
    thermal: ThermalCtx,
    pose: Pose2,
}

impl Default for RulesPolicy {
    fn default() -> Self {
        Self::new()
    }
}

fn num(v: &Value, key: &str) -> Option<f64> {
    v.get(key).and_then(Value::as_f64)
}

fn boolean(v: &Value, key: &str) -> bool {
    v.get(key).and_then(Value::as_bool).unwrap_or(false)
}

fn string(v: &Value, key: &str) -> Option<String> {
    v.get(key).and_then(Value::as_str).map(str::to_string)
}

fn point(v: &Value, key: &str) -> Option<Point2> {
    v.get(key).and_then(|p| serde_json::from_value(p.clone()).ok())
}

fn call(thought: impl Into<String>, tool: &str, args: Value) -> Option<Decision> {
    Some(Decision::Call {
        thought: thought.into(),
        tool: tool.to_string(),
        args,
    })
}

/// Largest-area detection of `class` in a detect-tool result: `(index, detection)`.
fn largest(v: &Value, class: &str) -> Option<(usize, Detection)> {
    let dets = v.get("detections")?.as_array()?;
    let mut best: Option<(usize, Detection)> = None;
    for d in dets {
        if d.get("class").and_then(Value::as_str) != Some(class) {
            continue;
        }
        let index = d.get("index")?.as_u64()? as usize;
        let det: Detection = serde_json::from_value(d.clone()).ok()?;
        if best.as_ref().map_or(true, |(_, b)| det.bbox.area() > b.bbox.area()) {
            best = Some((index, det));
        }
    }
    best
}

/// Point `standoff` from `target` on the robot's side.
fn standoff_goal(robot: Point2, target: Point2, standoff: f64) -> (Point2, f64) {
    let d = robot.distance(&target).max(1e-9);
    let ux = (robot.x - target.x) / d;
    let uy = (robot.y - target.y) / d;
    let goal = Point2::new(target.x + ux * standoff, target.y + uy * standoff);
    let heading = (target.y - goal.y).atan2(target.x - goal.x);
    (goal, heading)
}

impl RulesPolicy {
    pub fn new() -> Self {
        Self {
            queue: VecDeque::new(),
            awaiting: None,
            started: false,
            mission: None,
            patrol_idx: 0,
            points: Default::default(),
            mode: Mode::Patrol,
            saved: VecDeque::new(),
            fire: FireCtx::default(),
            person: PersonCtx::default(),
            thermal: ThermalCtx::default(),
            pose: Pose2::default(),
        }
    }

    fn mission(&self) -> &Mission {
        self.mission.as_ref().expect("mission set on first decision")
    }

    fn queue_stop(&mut self, i: usize) {
        let patrol = self.mission().patrol.clone();
        let Some(ip) = patrol.get(i).cloned() else {
            self.queue.push_back(Step::DetectFire(Purpose::Patrol));
            self.queue.push_back(Step::DetectPerson);
            self.queue.push_back(Step::Finish("single look complete; no hazards".into()));
            return;
        };
        self.queue.extend([
            Step::LookupPoint(ip.clone()),
            Step::DetectFire(Purpose::Patrol),
            Step::DetectPerson,
            Step::Baseline(ip.clone()),
            Step::Scan(ip.clone()),
            Step::Hazard(ip),
        ]);
        match patrol.get(i + 1) {
            Some(next) => {
                self.queue.push_back(Step::LookupPoint(next.clone()));
                self.queue.push_back(Step::MoveTo(next.clone()));
            }
            None => self.queue.push_back(Step::Finish("patrol route complete; no hazards".into())),
        }
    }

    fn at_point(&self, ip: &str) -> bool {
        self.points
            .get(ip)
            .is_some_and(|p| p.position().distance(&self.pose.position()) <= AT_POINT_M)
    }

    fn expand_fire(&mut self, plan: Vec<ProtocolAction>) -> Vec<Step> {
        let mut out = Vec::new();
        let localize = |out: &mut Vec<Step>, fire: &mut FireCtx| {
            if !fire.localize_planned {
                fire.localize_planned = true;
                out.push(Step::LocalizeFire);
            }
        };
        for a in plan {
            match a {
                ProtocolAction::Alert { priority, hazard } => out.push(Step::Alert(priority, hazard)),
                ProtocolAction::IsolatePower => {
                    localize(&mut out, &mut self.fire);
                    out.push(Step::FireZone);
                    out.push(Step::IsolatePower);
                }
                ProtocolAction::PrepareSuppression => {
                    localize(&mut out, &mut self.fire);
                    out.push(Step::Arm);
                }
                ProtocolAction::ConfirmFire => {
                    out.push(Step::DetectFire(Purpose::Confirm));
                    out.push(Step::Severity(Purpose::Confirm));
                }
                ProtocolAction::Suppress { standoff_m } => {
                    localize(&mut out, &mut self.fire);
                    out.push(Step::Retreat(standoff_m));
                    out.push(Step::Discharge);
                }
                ProtocolAction::MonitorFire { below, frames } => {
                    out.push(Step::Pause(POST_DISCHARGE_WAIT_S));
                    out.push(Step::DetectFire(Purpose::Monitor));
                    out.push(Step::Severity(Purpose::Monitor));
                    out.push(Step::WaitCleared(below, frames));
                    out.push(Step::DetectFire(Purpose::Final));
                }
                _ => {}
            }
        }
        out
    }

    fn replace_queue(&mut self, steps: Vec<Step>) {
        self.queue = steps.into();
    }

    fn push_front_all(&mut self, steps: Vec<Step>) {
        for s in steps.into_iter().rev() {
            self.queue.push_front(s);
        }
    }

    /// Fold the observation of `step` into the context and queue follow-ups.
    fn handle(&mut self, step: Step, snap: &Snapshot) {
        if let Some(w) = &snap.wait {
            match step {
                Step::WaitCleared(..) if !w.satisfied => {
                    self.replace_queue(vec![
                        Step::Alert(Priority::P1, HazardKind::Fire),
                        Step::Finish("fire not cleared within the monitoring window; escalated".into()),
                    ]);
                }
                Step::AwaitOperator => {
                    let decision = w.value.get("decision").and_then(Value::as_str).map(str::to_string);
                    match decision.as_deref() {
                        Some("stand_down") => self.replace_queue(vec![Step::Finish("operator stood down".into())]),
                        Some("dispatch_security") => self.replace_queue(vec![
                            Step::Alert(Priority::P2, HazardKind::Intruder),
                            Step::Finish("security dispatched; handing over".into()),
                        ]),
                        _ => self.replace_queue(vec![Step::Finish("no operator decision received".into())]),
                    }
                }
                _ => {}
            }
            return;
        }
        let Some(last) = &snap.last else { return };
        let v = &last.value;
        if !last.ok {
            match step {
                Step::LocalizeFire => self.fire.position = None,
                Step::Discharge | Step::Arm => {
                    self.replace_queue(vec![
                        Step::Alert(Priority::P1, HazardKind::Fire),
                        Step::Finish("suppression unavailable; escalated".into()),
                    ]);
                }
                _ => {}
            }
            return;
        }
        match step {
            Step::LookupPoint(ip) => {
                if let Some(pose) = v.get("pose").and_then(|p| serde_json::from_value::<Pose2>(p.clone()).ok()) {
                    self.points.insert(ip, pose);
                }
            }
            Step::DetectFire(purpose) => {
                let found = largest(v, "fire");
                let frame = string(v, "frame_id");
                self.fire.frame_area = num(v, "frame_area").unwrap_or(self.fire.frame_area);
                match (purpose, found) {
                    (Purpose::Patrol, Some((index, det))) => {
                        self.mode = Mode::Fire;
                        self.fire.frame_id = frame;
                        self.fire.index = index;
                        self.fire.det = Some((det.bbox.area(), det.confidence));
                        self.fire.smoke = largest(v, "smoke").map(|(_, s)| (s.bbox.area(), s.confidence));
                        self.replace_queue(vec![Step::Severity(Purpose::Patrol)]);
                    }
                    (Purpose::Patrol, None) => {}
                    (Purpose::Final, None) => {
                        self.replace_queue(vec![Step::Finish("fire cleared; monitoring complete".into())]);
                    }
                    (Purpose::Final, Some(_)) => {
                        self.replace_queue(vec![
                            Step::Alert(Priority::P1, HazardKind::Fire),
                            Step::Finish("fire still visible after clearance; escalated".into()),
                        ]);
                    }
                    (_, Some((_, det))) => {
                        self.fire.det = Some((det.bbox.area(), det.confidence));
                        self.fire.smoke = largest(v, "smoke").map(|(_, s)| (s.bbox.area(), s.confidence));
                    }
                    (Purpose::Confirm, None) => {
                        self.fire.gone = true;
                        self.fire.det = None;
                    }
                    (Purpose::Monitor, None) => self.fire.det = None,
                }
            }
            Step::Severity(Purpose::Patrol) => {
                let stage: Option<FireStage> = v.get("stage").and_then(|s| serde_json::from_value(s.clone()).ok());
                let standoff = self.mission().suppression_standoff_m;
                let plan = fire_protocol(stage.unwrap_or(FireStage::Incipient), standoff);
                let steps = self.expand_fire(plan);
                self.replace_queue(steps);
            }
            Step::Alert(_, HazardKind::Fire) => self.fire.alerted = true,
            Step::Alert(_, HazardKind::Thermal) => self.thermal.alerted = true,
            Step::LocalizeFire => self.fire.position = point(v, "position"),
            Step::FireZone => self.fire.zone = string(v, "zone_id"),
            Step::DetectPerson => {
                if let Some((index, det)) = largest(v, "person") {
                    self.mode = Mode::Intruder;
                    self.person = PersonCtx {
                        frame_id: string(v, "frame_id"),
                        index,
                        det: Some(det),
                        ..Default::default()
                    };
                    self.saved = std::mem::take(&mut self.queue);
                    self.replace_queue(vec![
                        Step::LocalizePerson,
                        Step::Embed,
                        Step::Personnel,
                        Step::PersonZone,
                        Step::Threat,
                    ]);
                }
            }
            Step::LocalizePerson => self.person.position = point(v, "position"),
            Step::Embed => self.person.embedding_id = string(v, "embedding_id"),
            Step::Personnel => {
                self.person.matched = string(v, "match").map(|id| (id, num(v, "similarity").unwrap_or(0.0), boolean(v, "authorized")));
            }
            Step::PersonZone => {
                self.person.zone = Some(ZoneStatus {
                    zone_id: string(v, "zone_id"),
                    restricted: boolean(v, "restricted"),
                    within_allowed: boolean(v, "within_allowed"),
                });
            }
            Step::Threat => {
                let (Some(det), Some(zone)) = (self.person.det.clone(), self.person.zone.clone()) else {
                    self.resume_patrol();
                    return;
                };
                let matched = self.person.matched.as_ref().map(|(id, s, a)| (id.as_str(), *s, *a));
                let challenge = self.mission().challenge_standoff_m;
                let plan = intruder_protocol(&det, &zone, matched, challenge).unwrap_or_else(|_| vec![ProtocolAction::LogOnly]);
                if plan == [ProtocolAction::LogOnly] {
                    self.resume_patrol();
                    return;
                }
                let mut steps = Vec::new();
                for a in plan {
                    match a {
                        ProtocolAction::Alert { priority, hazard } => steps.push(Step::Alert(priority, hazard)),
                        ProtocolAction::Approach { standoff_m } => steps.push(Step::Approach(standoff_m)),
                        ProtocolAction::VerbalWarning => steps.push(Step::Warning),
                        ProtocolAction::AwaitOperator => steps.push(Step::AwaitOperator),
                        _ => {}
                    }
                }
                self.replace_queue(steps);
            }
            Step::Baseline(ip) => {
                self.thermal.ip = Some(ip);
                self.thermal.baseline_ok = boolean(v, "available");
            }
            Step::Scan(_) => self.thermal.image_id = string(v, "image_id"),
            Step::Hazard(_) => {
                if !boolean(v, "anomaly") {
                    return;
                }
                let regions: Vec<AnomalyRegion> = v
                    .get("regions")
                    .and_then(|r| serde_json::from_value(r.clone()).ok())
                    .unwrap_or_default();
                let Some(region) = regions.iter().max_by(|a, b| a.max_delta.total_cmp(&b.max_delta)) else {
                    return;
                };
                let Ok(plan) = thermal_protocol(region, DEFAULT_WARNING_DELTA_C) else {
                    return;
                };
                self.mode = Mode::Thermal;
                self.saved = std::mem::take(&mut self.queue);
                self.thermal.pipe_id = string(v, "pipe_id");
                self.thermal.limit = num(v, "limit_temp").unwrap_or(f64::INFINITY);
                self.thermal.max_temp = num(v, "max_temp").unwrap_or(0.0);
                let mut steps = Vec::new();
                if boolean(v, "imminent") {
                    steps.push(Step::Alert(Priority::P1, HazardKind::Thermal));
                }
                for a in plan {
                    steps.push(match a {
                        ProtocolAction::ProfilePipe => Step::Profile,
                        ProtocolAction::EstimateTrend => Step::Trend,
                        ProtocolAction::TimeToCritical => Step::TimeToCritical,
                        ProtocolAction::IdentifyRootCause => Step::RootCause,
                        ProtocolAction::ResolveRootCause => Step::Resolve,
                        ProtocolAction::MonitorThermal { band_c } => Step::MonitorThermal(band_c),
                        _ => continue,
                    });
                }
                self.replace_queue(steps);
            }
            Step::Profile => {
                self.thermal.peak_s = num(v, "peak_position");
                self.thermal.peak_temp = num(v, "peak_temp").unwrap_or(0.0);
                self.thermal.profile = Some(json!({
                    "pipe_id": v.get("pipe_id"),
                    "peak_position": v.get("peak_position"),
                    "peak_temp": v.get("peak_temp"),
                }));
            }
            Step::Trend => {
                self.thermal.current = num(v, "t_now");
                self.thermal.rate = num(v, "rate");
            }
            Step::TimeToCritical => {
                let current = self.thermal.current.unwrap_or(0.0);
                let rate = self.thermal.rate.unwrap_or(0.0);
                let imminent = boolean(v, "imminent");
                if rate < 0.0 && current < self.thermal.limit && !self.thermal.alerted {
                    // cooling on its own: a transient, not a fault
                    self.resume_patrol();
                    return;
                }
                if imminent && !self.thermal.alerted {
                    self.queue.push_front(Step::Alert(Priority::P1, HazardKind::Thermal));
                }
            }
            Step::RootCause => {
                self.thermal.cause = v.get("cause").filter(|c| !c.is_null()).and_then(|c| {
                    let id = c.get("id")?.as_str()?.to_string();
                    let kind: MapItemKind = serde_json::from_value(c.get("kind")?.clone()).ok()?;
                    Some((id, kind))
                });
            }
            Step::HazardMonitor(_, band) => {
                let delta = num(v, "max_abs_delta").unwrap_or(f64::INFINITY);
                if delta < band {
                    self.replace_queue(vec![Step::Finish(format!("pipe back within {band} degC of baseline"))]);
                } else {
                    self.thermal.rounds += 1;
                    if self.thermal.rounds < MAX_MONITOR_ROUNDS {
                        self.queue.push_front(Step::MonitorThermal(band));
                    } else {
                        self.replace_queue(vec![Step::Finish("pipe did not recover within the monitoring window".into())]);
                    }
                }
            }
            _ => {}
        }
    }

    fn resume_patrol(&mut self) {
        self.mode = Mode::Patrol;
        self.queue = std::mem::take(&mut self.saved);
    }

    /// Turn a queued step into a decision, or `None` to skip it.
    fn materialize(&mut self, step: &Step, snap: &Snapshot) -> Option<Decision> {
        let robot = snap.robot_pose.position();
        match step {
            Step::LookupPoint(ip) => call(
                format!("Where is inspection point {ip}?"),
                "facility_map",
                json!({"query": "inspection_point", "id": ip}),
            ),
            Step::MoveTo(ip) => {
                self.patrol_idx += 1;
                let pose = *self.points.get(ip)?;
                call(
                    format!("Area clear; walking to inspection point {ip}."),
                    "locomotion",
                    json!({"goal": pose.position(), "heading": pose.theta, "gait": "walk"}),
                )
            }
            Step::DetectFire(purpose) => {
                let thought = match purpose {
                    Purpose::Patrol => "Check the view for fire or smoke.",
                    Purpose::Confirm => "Confirm the fire is still burning before discharge.",
                    Purpose::Monitor => "Look at the fire after discharge.",
                    Purpose::Final => "Final look: is the fire out?",
                };
                call(thought, "fire_smoke", json!({}))
            }
            Step::DetectPerson => call("Check the view for people.", "person_detect", json!({})),
            Step::Baseline(ip) => {
                if !self.at_point(ip) {
                    return None;
                }
                call(
                    format!("Is there a thermal baseline for {ip}?"),
                    "thermal_baselines",
                    json!({"inspection_point": ip}),
                )
            }
            Step::Scan(ip) => {
                if !self.thermal.baseline_ok || !self.at_point(ip) {
                    return None;
                }
                call(format!("Capture a thermal image at {ip}."), "thermal_scan", json!({"inspection_point": ip}))
            }
            Step::Hazard(ip) => {
                let image = self.thermal.image_id.clone().filter(|_| self.thermal.baseline_ok)?;
                call(
                    "Compare the thermal image with its baseline.",
                    "thermal_hazard",
                    json!({"image_id": image, "inspection_point": ip}),
                )
            }
            Step::Severity(purpose) => {
                let (area, conf) = self.fire.det?;
                let mut args = json!({"det_area": area, "frame_area": self.fire.frame_area, "confidence": conf});
                if let Some((sa, sc)) = self.fire.smoke {
                    args["smoke_area"] = json!(sa);
                    args["smoke_confidence"] = json!(sc);
                }
                let thought = match purpose {
                    Purpose::Patrol => "Fire detected. Assess severity and stage.",
                    _ => "Re-assess severity.",
                };
                call(thought, "fire_severity", args)
            }
            Step::Alert(priority, hazard) => {
                let (location, payload) = match hazard {
                    HazardKind::Fire => (self.fire.position, json!({"robot_pose": snap.robot_pose, "fire_gone": self.fire.gone})),
                    HazardKind::Intruder => (
                        self.person.position,
                        json!({"zone": self.person.zone.as_ref().and_then(|z| z.zone_id.clone())}),
                    ),
                    HazardKind::Thermal => (
                        None,
                        json!({
                            "pipe_id": self.thermal.pipe_id,
                            "max_temp": self.thermal.max_temp,
                            "profile": self.thermal.profile,
                            "cause": self.thermal.cause.as_ref().map(|c| &c.0),
                        }),
                    ),
                    HazardKind::Spill => (None, Value::Null),
                };
                call(
                    format!("Notify the control center: {} hazard, priority {}.", hazard.as_str(), priority.as_str()),
                    "alert_center",
                    json!({"priority": priority.as_str(), "hazard": hazard.as_str(), "location": location, "payload": payload}),
                )
            }
            Step::LocalizeFire => {
                let frame = self.fire.frame_id.clone()?;
                call("Locate the fire from depth.", "depth_localize", json!({"frame_id": frame, "index": self.fire.index}))
            }
            Step::FireZone => {
                let p = self.fire.position?;
                call("Which zone is burning?", "facility_map", json!({"query": "zone", "point": p}))
            }
            Step::IsolatePower => {
                let zone = self.fire.zone.clone()?;
                call(format!("Request power isolation for {zone}."), "power_isolation", json!({"zone_id": zone}))
            }
            Step::Arm => {
                let p = self.fire.position?;
                call("Prepare suppression at the fire.", "fire_suppression", json!({"mode": "arm", "target": p}))
            }
            Step::Retreat(standoff) => {
                let fire = self.fire.position.filter(|_| !self.fire.gone)?;
                if robot.distance(&fire) >= standoff - 0.05 {
                    return None;
                }
                let (goal, heading) = standoff_goal(robot, fire, standoff + 0.3);
                call(
                    format!("Too close to discharge; retreat to {standoff} m."),
                    "locomotion",
                    json!({"goal": goal, "heading": heading, "gait": "fast_walk"}),
                )
            }
            Step::Discharge => {
                let p = self.fire.position.filter(|_| !self.fire.gone)?;
                call("Fire persists. Discharge suppression.", "fire_suppression", json!({"mode": "discharge", "target": p}))
            }
            Step::Pause(s) => Some(Decision::Wait {
                thought: format!("Let the suppressant act for {s} s."),
                seconds: *s,
            }),
            Step::WaitCleared(below, frames) => Some(Decision::WaitUntil {
                thought: format!("Monitor until fire confidence stays below {below} for {frames} frames."),
                condition: WaitCondition::FireCleared {
                    below: *below,
                    frames: *frames,
                },
                timeout_s: FIRE_CLEAR_TIMEOUT_S,
            }),
            Step::LocalizePerson => {
                let frame = self.person.frame_id.clone()?;
                call("Person in view. Locate them.", "depth_localize", json!({"frame_id": frame, "index": self.person.index}))
            }
            Step::Embed => {
                let frame = self.person.frame_id.clone()?;
                call("Extract a re-identification embedding.", "reid_embed", json!({"frame_id": frame, "index": self.person.index}))
            }
            Step::Personnel => {
                let id = self.person.embedding_id.clone()?;
                call(
                    "Match against authorized personnel.",
                    "personnel_db",
                    json!({"embedding_id": id, "threshold": DEFAULT_MATCH_THRESHOLD}),
                )
            }
            Step::PersonZone => {
                let p = self.person.position?;
                call("Check the zone schedule at their position.", "zone_schedule", json!({"point": p}))
            }
            Step::Threat => {
                let zone = self.person.zone.clone()?;
                let authorized = self.person.matched.as_ref().is_some_and(|m| m.2);
                call(
                    "Evaluate the access rule.",
                    "intruder_threat",
                    json!({"restricted": zone.restricted, "within_allowed": zone.within_allowed, "authorized": authorized}),
                )
            }
            Step::Approach(standoff) => {
                let p = self.person.position?;
                if robot.distance(&p) <= standoff + 0.1 {
                    return None;
                }
                let (goal, heading) = standoff_goal(robot, p, *standoff);
                call(
                    format!("Approach to {standoff} m for a verbal challenge."),
                    "locomotion",
                    json!({"goal": goal, "heading": heading, "gait": "fast_walk"}),
                )
            }
            Step::Warning => call(
                "Issue the verbal challenge.",
                "verbal_warning",
                json!({"message": "This is a restricted area. Identify yourself and wait for security."}),
            ),
            Step::AwaitOperator => Some(Decision::WaitUntil {
                thought: "Hold position and wait for the operator's decision.".into(),
                condition: WaitCondition::OperatorDecision,
                timeout_s: OPERATOR_TIMEOUT_S,
            }),
            Step::Profile => {
                let pipe = self.thermal.pipe_id.clone()?;
                call(format!("Map the temperature profile along {pipe}."), "thermal_mapping", json!({"pipe_id": pipe}))
            }
            Step::Trend => {
                let pipe = self.thermal.pipe_id.clone()?;
                let s = self.thermal.peak_s?;
                call(
                    "Estimate the temperature trend at the peak.",
                    "thermal_trend",
                    json!({"pipe_id": pipe, "arclength": s, "window_s": TREND_WINDOW_S}),
                )
            }
            Step::TimeToCritical => {
                let current = self.thermal.current?;
                let rate = self.thermal.rate?;
                call(
                    "How long until the limit is reached?",
                    "time_to_critical",
                    json!({"limit": self.thermal.limit, "current": current, "rate": rate}),
                )
            }
            Step::RootCause => {
                let pipe = self.thermal.pipe_id.clone()?;
                let s = self.thermal.peak_s?;
                call(
                    "Find equipment at the hot spot.",
                    "facility_map",
                    json!({"query": "root_cause", "pipe_id": pipe, "arclength": s, "radius": ROOT_CAUSE_RADIUS_M}),
                )
            }
            Step::Resolve => {
                let mut steps = Vec::new();
                let follow = thermal_resolution(self.thermal.cause.as_ref().map(|c| c.1));
                for a in follow {
                    match a {
                        ProtocolAction::ResetValve => {
                            if !self.thermal.alerted {
                                steps.push(Step::Alert(Priority::P2, HazardKind::Thermal));
                            }
                            steps.push(Step::ResetValve);
                        }
                        ProtocolAction::MonitorThermal { band_c } => steps.push(Step::MonitorThermal(band_c)),
                        ProtocolAction::Escalate => {
                            steps.push(Step::Alert(Priority::P2, HazardKind::Thermal));
                            steps.push(Step::Finish("no actuator for this cause; escalated with profile".into()));
                        }
                        _ => {}
                    }
                }
                // the template's own monitor step is superseded by the resolution
                self.queue.retain(|s| !matches!(s, Step::MonitorThermal(_)));
                self.push_front_all(steps);
                None
            }
            Step::ResetValve => {
                let (id, _) = self.thermal.cause.clone()?;
                call(format!("Stuck valve {id} is the cause. Reset it."), "remote_valve", json!({"valve_id": id}))
            }
            Step::MonitorThermal(band) => {
                let ip = self.thermal.ip.clone()?;
                self.push_front_all(vec![
                    Step::Pause(THERMAL_MONITOR_INTERVAL_S),
                    Step::Scan(ip.clone()),
                    Step::HazardMonitor(ip, *band),
                ]);
                None
            }
            Step::HazardMonitor(ip, _) => {
                let image = self.thermal.image_id.clone()?;
                call(
                    "Has the pipe returned to baseline?",
                    "thermal_hazard",
                    json!({"image_id": image, "inspection_point": ip}),
                )
            }
            Step::Finish(reason) => Some(Decision::Finish { thought: reason.clone() }),
        }
    }
}

impl ReasoningBackend for RulesPolicy {
    fn name(&self) -> &str {
        "rules"
    }

    fn decide(&mut self, snapshot: &Snapshot, _registry: &ToolRegistry) -> Result<Decision, BackendError> {
        self.pose = snapshot.robot_pose;
        if !self.started {
            self.started = true;
            self.mission = Some(snapshot.mission.clone());
            self.queue_stop(0);
        }
        if let Some(step) = self.awaiting.take() {
            self.handle(step, snapshot);
        }
        loop {
            let Some(step) = self.queue.pop_front() else {
                if self.mode == Mode::Patrol {
                    let next = self.patrol_idx;
                    if next < self.mission().patrol.len() {
                        self.queue_stop(next);
                        continue;
                    }
                }
                return Ok(Decision::Finish {
                    thought: "nothing left to do".into(),
                });
            };
            if let Some(decision) = self.materialize(&step, snapshot) {
                self.awaiting = Some(step);
                return Ok(decision);
            }
        }
    }
}
