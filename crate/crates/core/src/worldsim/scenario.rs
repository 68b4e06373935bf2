//! Scenario files: JSON documents describing the facility, the robot, and a
//! time-ordered script of hazard injections and operator decisions.

use super::{
    Equipment, FacilityWorld, FireDynamics, InspectionPoint, NoiseConfig, Person, Pipe, SensorConfig, ThermalDynamics,
    TrajectoryPoint, Valve, Zone,
};
use crate::geometry::{polygon_is_simple, Point2, Pose2};
use crate::grid::{OccupancyGrid, Rect};
use crate::locomotion::RobotState;
use crate::rng::unit_vector;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;
pub const EMBEDDING_DIM: usize = 512;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: cannot read scenario: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}:{line}:{column}: at `{field}`: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        field: String,
        message: String,
    },
    #[error("{origin}: {message}")]
    Semantic { origin: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorDecision {
    StandDown,
    DispatchSecurity,
}

fn default_growth() -> f64 {
    0.02
}
fn default_confidence() -> f64 {
    0.92
}
fn default_sigma() -> f64 {
    1.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    IgniteFire {
        fire_id: String,
        position: Point2,
        area_ratio: f64,
        #[serde(default)]
        smoke_ratio: f64,
        #[serde(default = "default_growth")]
        growth_rate: f64,
        #[serde(default = "default_confidence")]
        confidence: f64,
    },
    ValveStuck {
        valve_id: String,
        open_fraction: f64,
        amplitude: f64,
        #[serde(default = "default_sigma")]
        sigma: f64,
        /// Start at the fault's steady state instead of heating up.
        #[serde(default)]
        preheat: bool,
    },
    HotSpot {
        pipe_id: String,
        arclength: f64,
        amplitude: f64,
        #[serde(default = "default_sigma")]
        sigma: f64,
        #[serde(default)]
        duration_s: Option<f64>,
        #[serde(default)]
        preheat: bool,
    },
    BlockCells {
        rect: Rect,
    },
    OperatorDecision {
        decision: OperatorDecision,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEvent {
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl ScriptEvent {
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            EventKind::IgniteFire { .. } => "ignite_fire",
            EventKind::ValveStuck { .. } => "valve_stuck",
            EventKind::HotSpot { .. } => "hot_spot",
            EventKind::BlockCells { .. } => "block_cells",
            EventKind::OperatorDecision { .. } => "operator_decision",
        }
    }

    pub fn is_hazard(&self) -> bool {
        matches!(
            self.kind,
            EventKind::IgniteFire { .. } | EventKind::ValveStuck { .. } | EventKind::HotSpot { .. }
        )
    }
}

/// Events sorted by time; equal times keep file order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventScript {
    pub events: Vec<ScriptEvent>,
}

impl EventScript {
    pub fn new(mut events: Vec<ScriptEvent>) -> Self {
        events.sort_by(|a, b| a.t.total_cmp(&b.t));
        Self { events }
    }

    pub fn hazards(&self) -> impl Iterator<Item = &ScriptEvent> {
        self.events.iter().filter(|e| e.is_hazard())
    }

    pub fn first_hazard_time(&self) -> Option<f64> {
        self.hazards().map(|e| e.t).next()
    }

    pub fn without_hazards(&self) -> EventScript {
        EventScript {
            events: self.events.iter().filter(|e| !e.is_hazard()).cloned().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpec {
    width_m: f64,
    height_m: f64,
    #[serde(default = "default_resolution")]
    resolution_m: f64,
    #[serde(default)]
    obstacles: Vec<Rect>,
}

fn default_resolution() -> f64 {
    0.1
}

fn default_pipe_height() -> f64 {
    1.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PipeSpec {
    id: String,
    polyline: Vec<Point2>,
    baseline_temp: f64,
    limit_temp: f64,
    #[serde(default = "default_pipe_height")]
    height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ValveSpec {
    id: String,
    pipe_id: String,
    arclength_pos: f64,
    setpoint_fraction: f64,
    #[serde(default)]
    open_fraction: Option<f64>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ZoneSpec {
    id: String,
    polygon: Vec<Point2>,
    #[serde(default)]
    restricted: bool,
    #[serde(default)]
    allowed_windows: Vec<(f64, f64)>,
    #[serde(default = "default_true")]
    powered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PersonSpec {
    id: String,
    trajectory: Vec<TrajectoryPoint>,
    #[serde(default)]
    embedding: Option<Vec<f64>>,
    #[serde(default)]
    embedding_seed: Option<u64>,
    #[serde(default)]
    authorized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PersonnelSpec {
    id: String,
    #[serde(default)]
    embedding: Option<Vec<f64>>,
    #[serde(default)]
    embedding_seed: Option<u64>,
    #[serde(default = "default_true")]
    authorized: bool,
}

fn default_robot_radius() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotSpec {
    pose: Pose2,
    #[serde(default = "default_robot_radius")]
    radius: f64,
}

/// Scenario-level response parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResponseConfig {
    /// Time for the suppression system to charge after an arm request, s.
    pub arm_delay_s: f64,
    pub suppression_standoff_m: f64,
    pub challenge_standoff_m: f64,
    /// Alert latency budget measured from hazard injection, s.
    pub alert_budget_s: f64,
}

impl Default for ResponseConfig {
    fn default() -> Self {
        Self {
            arm_delay_s: 10.0,
            suppression_standoff_m: 4.0,
            challenge_standoff_m: 2.0,
            alert_budget_s: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    id: String,
    schema_version: u32,
    #[serde(default)]
    description: String,
    duration_s: f64,
    #[serde(default)]
    time_of_day_start_s: f64,
    grid: GridSpec,
    #[serde(default)]
    equipment: Vec<Equipment>,
    #[serde(default)]
    pipes: Vec<PipeSpec>,
    #[serde(default)]
    valves: Vec<ValveSpec>,
    #[serde(default)]
    zones: Vec<ZoneSpec>,
    #[serde(default)]
    persons: Vec<PersonSpec>,
    #[serde(default)]
    personnel: Vec<PersonnelSpec>,
    robot: RobotSpec,
    #[serde(default)]
    inspection_points: Vec<InspectionPoint>,
    #[serde(default)]
    patrol: Vec<String>,
    #[serde(default)]
    noise: NoiseConfig,
    #[serde(default)]
    sensor: SensorConfig,
    #[serde(default)]
    thermal_dynamics: ThermalDynamics,
    #[serde(default)]
    fire_dynamics: FireDynamics,
    #[serde(default)]
    response: ResponseConfig,
    #[serde(default)]
    events: Vec<ScriptEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonnelEntry {
    pub id: String,
    pub embedding: Vec<f64>,
    pub authorized: bool,
}

/// A loaded scenario: initial world, event script, and the configuration the
/// stack needs to run it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub description: String,
    pub duration_s: f64,
    pub world: FacilityWorld,
    pub script: EventScript,
    pub personnel: Vec<PersonnelEntry>,
    pub patrol: Vec<String>,
    pub noise: NoiseConfig,
    pub response: ResponseConfig,
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text, &path.display().to_string())
}

pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        ScenarioError::Parse {
            origin: origin.to_string(),
            line: inner.line(),
            column: inner.column(),
            field,
            message: inner.to_string(),
        }
    })?;
    build(file, origin)
}

fn embedding_of(id: &str, explicit: &Option<Vec<f64>>, seed: Option<u64>, origin: &str) -> Result<Vec<f64>, ScenarioError> {
    let sem = |message: String| ScenarioError::Semantic {
        origin: origin.to_string(),
        message,
    };
    match (explicit, seed) {
        (Some(v), None) => {
            if v.len() != EMBEDDING_DIM {
                return Err(sem(format!("`{id}`: embedding has {} dimensions, expected {EMBEDDING_DIM}", v.len())));
            }
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(n > 0.0) || !n.is_finite() {
                return Err(sem(format!("`{id}`: embedding must have finite non-zero norm")));
            }
            Ok(v.iter().map(|x| x / n).collect())
        }
        (None, Some(s)) => Ok(unit_vector(s, EMBEDDING_DIM)),
        _ => Err(sem(format!("`{id}`: give exactly one of `embedding` or `embedding_seed`"))),
    }
}

fn unique<'a>(kind: &str, ids: impl Iterator<Item = &'a str>, origin: &str) -> Result<BTreeSet<String>, ScenarioError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id.to_string()) {
            return Err(ScenarioError::Semantic {
                origin: origin.to_string(),
                message: format!("duplicate {kind} id `{id}`"),
            });
        }
    }
    Ok(seen)
}

fn build(f: ScenarioFile, origin: &str) -> Result<Scenario, ScenarioError> {
    let sem = |message: String| ScenarioError::Semantic {
        origin: origin.to_string(),
        message,
    };
    if f.schema_version != SCHEMA_VERSION {
        return Err(sem(format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", f.schema_version)));
    }
    if !(f.duration_s > 0.0) {
        return Err(sem("duration_s must be positive".into()));
    }
    let g = &f.grid;
    if !(g.resolution_m > 0.0 && g.width_m > 0.0 && g.height_m > 0.0) {
        return Err(sem("grid dimensions and resolution must be positive".into()));
    }
    let grid = OccupancyGrid::from_rects(g.width_m, g.height_m, g.resolution_m, &g.obstacles);

    let pipe_ids = unique("pipe", f.pipes.iter().map(|p| p.id.as_str()), origin)?;
    unique("valve", f.valves.iter().map(|v| v.id.as_str()), origin)?;
    let zone_ids = unique("zone", f.zones.iter().map(|z| z.id.as_str()), origin)?;
    unique("equipment", f.equipment.iter().map(|e| e.id.as_str()), origin)?;
    unique("person", f.persons.iter().map(|p| p.id.as_str()), origin)?;
    unique("personnel", f.personnel.iter().map(|p| p.id.as_str()), origin)?;
    let ip_ids = unique("inspection point", f.inspection_points.iter().map(|p| p.id.as_str()), origin)?;

    let mut pipes = Vec::new();
    for p in &f.pipes {
        if p.polyline.len() < 2 {
            return Err(sem(format!("pipe `{}` polyline needs at least 2 vertices", p.id)));
        }
        let pipe = Pipe::new(p.id.clone(), p.polyline.clone(), p.baseline_temp, p.limit_temp, p.height);
        if !(pipe.length() > 0.0) || !p.baseline_temp.is_finite() || !p.limit_temp.is_finite() {
            return Err(sem(format!("pipe `{}` must have positive length and finite temperatures", p.id)));
        }
        pipes.push(pipe);
    }

    let mut valves = Vec::new();
    for v in &f.valves {
        let pipe = pipes
            .iter()
            .find(|p| p.id == v.pipe_id)
            .ok_or_else(|| sem(format!("valve `{}` references undefined pipe `{}`", v.id, v.pipe_id)))?;
        if v.arclength_pos < 0.0 || v.arclength_pos > pipe.length() + 1e-9 {
            return Err(sem(format!("valve `{}` arclength {} outside pipe `{}`", v.id, v.arclength_pos, pipe.id)));
        }
        let open = v.open_fraction.unwrap_or(v.setpoint_fraction);
        if !(0.0..=1.0).contains(&open) || !(0.0..=1.0).contains(&v.setpoint_fraction) {
            return Err(sem(format!("valve `{}` fractions must lie in [0, 1]", v.id)));
        }
        valves.push(Valve {
            id: v.id.clone(),
            pipe_id: v.pipe_id.clone(),
            arclength_pos: v.arclength_pos,
            open_fraction: open,
            setpoint_fraction: v.setpoint_fraction,
            stuck: false,
        });
    }

    let mut zones = Vec::new();
    let mut power_zones = BTreeMap::new();
    for z in &f.zones {
        if z.polygon.len() < 3 || !polygon_is_simple(&z.polygon) {
            return Err(sem(format!("zone `{}` polygon is not simple", z.id)));
        }
        if let Some(w) = z.allowed_windows.iter().find(|(a, b)| !(a < b)) {
            return Err(sem(format!("zone `{}` window {:?} must have start < end", z.id, w)));
        }
        power_zones.insert(z.id.clone(), z.powered);
        zones.push(Zone {
            id: z.id.clone(),
            polygon: z.polygon.clone(),
            restricted: z.restricted,
            allowed_windows: z.allowed_windows.clone(),
        });
    }

    for e in &f.equipment {
        if let Some(zone) = &e.zone {
            if !zone_ids.contains(zone) {
                return Err(sem(format!("equipment `{}` references undefined zone `{zone}`", e.id)));
            }
        }
    }

    let mut persons = Vec::new();
    for p in &f.persons {
        if p.trajectory.is_empty() {
            return Err(sem(format!("person `{}` needs at least one trajectory point", p.id)));
        }
        if p.trajectory.windows(2).any(|w| !(w[0].t <= w[1].t)) {
            return Err(sem(format!("person `{}` trajectory times must be non-decreasing", p.id)));
        }
        let mut person = Person {
            id: p.id.clone(),
            trajectory: p.trajectory.clone(),
            true_embedding: embedding_of(&p.id, &p.embedding, p.embedding_seed, origin)?,
            authorized: p.authorized,
            position: p.trajectory[0].position,
        };
        person.position = person.position_at(0.0);
        persons.push(person);
    }

    let mut personnel = Vec::new();
    for p in &f.personnel {
        personnel.push(PersonnelEntry {
            id: p.id.clone(),
            embedding: embedding_of(&p.id, &p.embedding, p.embedding_seed, origin)?,
            authorized: p.authorized,
        });
    }

    for ip in &f.inspection_points {
        if !pipe_ids.contains(&ip.pipe_id) {
            return Err(sem(format!("inspection point `{}` references undefined pipe `{}`", ip.id, ip.pipe_id)));
        }
    }
    for stop in &f.patrol {
        if !ip_ids.contains(stop) {
            return Err(sem(format!("patrol references undefined inspection point `{stop}`")));
        }
    }

    let start = f.robot.pose.position();
    if grid.occupied_at(&start) {
        return Err(sem("robot start pose must be inside the grid and free".into()));
    }

    let valve_ids: BTreeSet<&str> = valves.iter().map(|v| v.id.as_str()).collect();
    let mut fire_ids = BTreeSet::new();
    for e in &f.events {
        if !(e.t >= 0.0) || !e.t.is_finite() {
            return Err(sem(format!("event `{}` has invalid time {}", e.kind_name(), e.t)));
        }
        match &e.kind {
            EventKind::IgniteFire {
                fire_id,
                area_ratio,
                smoke_ratio,
                confidence,
                ..
            } => {
                if !fire_ids.insert(fire_id.clone()) {
                    return Err(sem(format!("duplicate fire id `{fire_id}`")));
                }
                let unit = 0.0..=1.0;
                if !unit.contains(area_ratio) || !unit.contains(smoke_ratio) || !unit.contains(confidence) {
                    return Err(sem(format!("fire `{fire_id}` ratios and confidence must lie in [0, 1]")));
                }
            }
            EventKind::ValveStuck { valve_id, open_fraction, .. } => {
                if !valve_ids.contains(valve_id.as_str()) {
                    return Err(sem(format!("event references undefined valve `{valve_id}`")));
                }
                if !(0.0..=1.0).contains(open_fraction) {
                    return Err(sem(format!("valve `{valve_id}` stuck fraction must lie in [0, 1]")));
                }
            }
            EventKind::HotSpot { pipe_id, .. } => {
                if !pipe_ids.contains(pipe_id) {
                    return Err(sem(format!("event references undefined pipe `{pipe_id}`")));
                }
            }
            EventKind::BlockCells { .. } | EventKind::OperatorDecision { .. } => {}
        }
    }

    let world = FacilityWorld {
        grid,
        equipment: f.equipment.clone(),
        pipes,
        valves,
        zones,
        persons,
        fires: Vec::new(),
        faults: Vec::new(),
        inspection_points: f.inspection_points.clone(),
        robot: RobotState::at(f.robot.pose),
        robot_radius: f.robot.radius,
        executor: Default::default(),
        clock: 0.0,
        time_of_day_start_s: f.time_of_day_start_s.rem_euclid(86_400.0),
        power_zones,
        thermal_dynamics: f.thermal_dynamics,
        fire_dynamics: f.fire_dynamics,
        sensor: f.sensor,
        robot_collisions: 0,
    };

    Ok(Scenario {
        id: f.id,
        description: f.description,
        duration_s: f.duration_s,
        world,
        script: EventScript::new(f.events),
        personnel,
        patrol: f.patrol,
        noise: f.noise,
        response: f.response,
    })
}
