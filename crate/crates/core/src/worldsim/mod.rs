//! Ground-truth facility world: hazard dynamics, actuation and sensor emulation.
//!
//! Every other layer sees this state only through [`emit_sensor_frame`] and the
//! tool results built on it.

mod scenario;
mod sensors;

pub use scenario::{
    load_scenario, parse_scenario, EventKind, EventScript, OperatorDecision, PersonnelEntry, ResponseConfig, Scenario,
    ScenarioError, ScriptEvent, EMBEDDING_DIM, SCHEMA_VERSION,
};
pub use sensors::{emit_sensor_frame, render_thermal, NoiseConfig, SensorConfig, SensorFrame, ThermalCameraConfig};

use crate::geometry::{point_at_arclength, polyline_length, Point2, Pose2};
use crate::grid::{Cell, OccupancyGrid};
use crate::locomotion::{execute_velocity, ExecutorParams, Gait, RobotState};
use crate::planning::VelocityCommand;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const DEFAULT_PIPE_SAMPLE_STEP: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("command rejected: unknown {kind} `{id}`")]
    CommandRejected { kind: &'static str, id: String },
    #[error("invalid time step {0}")]
    InvalidStep(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equipment {
    pub id: String,
    pub kind: String,
    pub position: Point2,
    #[serde(default)]
    pub zone: Option<String>,
    /// Surface temperature seen by the thermal camera; `None` renders as ambient.
    #[serde(default)]
    pub temp_c: Option<f64>,
    #[serde(default = "default_equipment_radius")]
    pub radius: f64,
}

fn default_equipment_radius() -> f64 {
    0.4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pipe {
    pub id: String,
    pub polyline: Vec<Point2>,
    /// Temperatures at arclength multiples of `sample_step`.
    pub segment_temps: Vec<f64>,
    pub sample_step: f64,
    pub baseline_temp: f64,
    pub limit_temp: f64,
    /// Centerline height above the floor, m.
    pub height: f64,
}

impl Pipe {
    pub fn new(id: impl Into<String>, polyline: Vec<Point2>, baseline_temp: f64, limit_temp: f64, height: f64) -> Self {
        let step = DEFAULT_PIPE_SAMPLE_STEP;
        let n = Self::sample_count(&polyline, step);
        Self {
            id: id.into(),
            polyline,
            segment_temps: vec![baseline_temp; n],
            sample_step: step,
            baseline_temp,
            limit_temp,
            height,
        }
    }

    fn sample_count(polyline: &[Point2], step: f64) -> usize {
        (polyline_length(polyline) / step + 1e-9).floor() as usize + 1
    }

    pub fn length(&self) -> f64 {
        polyline_length(&self.polyline)
    }

    pub fn sample_position(&self, i: usize) -> f64 {
        i as f64 * self.sample_step
    }

    /// Linear interpolation between stored samples, clamped to the pipe ends.
    pub fn temp_at(&self, s: f64) -> f64 {
        let n = self.segment_temps.len();
        if n == 0 {
            return self.baseline_temp;
        }
        let x = (s / self.sample_step).max(0.0);
        let i = x.floor() as usize;
        if i + 1 >= n {
            return self.segment_temps[n - 1];
        }
        let f = x - i as f64;
        if f < 1e-9 {
            return self.segment_temps[i];
        }
        self.segment_temps[i] * (1.0 - f) + self.segment_temps[i + 1] * f
    }

    pub fn point_at(&self, s: f64) -> Point2 {
        point_at_arclength(&self.polyline, s)
    }

    pub fn max_temp(&self) -> f64 {
        self.segment_temps.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_delta(&self) -> f64 {
        self.segment_temps
            .iter()
            .map(|t| (t - self.baseline_temp).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Valve {
    pub id: String,
    pub pipe_id: String,
    pub arclength_pos: f64,
    pub open_fraction: f64,
    pub setpoint_fraction: f64,
    #[serde(default)]
    pub stuck: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: String,
    pub polygon: Vec<Point2>,
    #[serde(default)]
    pub restricted: bool,
    /// Daily `(start_s, end_s)` windows in seconds since midnight.
    #[serde(default)]
    pub allowed_windows: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub position: Point2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Person {
    pub id: String,
    pub trajectory: Vec<TrajectoryPoint>,
    pub true_embedding: Vec<f64>,
    pub authorized: bool,
    pub position: Point2,
}

impl Person {
    /// Piecewise-linear in time; holds the end points outside the trajectory span.
    pub fn position_at(&self, t: f64) -> Point2 {
        let tr = &self.trajectory;
        match tr.len() {
            0 => self.position,
            1 => tr[0].position,
            _ => {
                if t <= tr[0].t {
                    return tr[0].position;
                }
                for w in tr.windows(2) {
                    if t <= w[1].t {
                        let span = w[1].t - w[0].t;
                        let f = if span > 0.0 { (t - w[0].t) / span } else { 1.0 };
                        return w[0].position.lerp(&w[1].position, f);
                    }
                }
                tr[tr.len() - 1].position
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FireDynamics {
    /// Post-suppression exponential decay constant, s.
    pub decay_tau_s: f64,
}

impl Default for FireDynamics {
    fn default() -> Self {
        Self { decay_tau_s: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FireSource {
    pub id: String,
    pub position: Point2,
    /// Current fraction of the camera frame covered at the reference distance.
    pub area_ratio: f64,
    pub smoke_ratio: f64,
    /// Exponential growth rate of the area before suppression, 1/s.
    pub growth_rate: f64,
    /// Detector confidence while the fire is unsuppressed.
    pub confidence: f64,
    pub initial_area: f64,
    pub ignited_at: f64,
    pub suppressed_at: Option<f64>,
}

impl FireSource {
    fn unsuppressed_area(&self, t: f64) -> f64 {
        (self.initial_area * (self.growth_rate * (t - self.ignited_at).max(0.0)).exp()).min(1.0)
    }

    /// Closed-form area at time `t`.
    pub fn area_at(&self, t: f64, dyn_: &FireDynamics) -> f64 {
        match self.suppressed_at {
            Some(ts) if t >= ts => self.unsuppressed_area(ts) * (-(t - ts) / dyn_.decay_tau_s).exp(),
            _ => self.unsuppressed_area(t),
        }
    }

    /// Fraction of the pre-suppression intensity left, in [0, 1].
    pub fn intensity_at(&self, t: f64, dyn_: &FireDynamics) -> f64 {
        match self.suppressed_at {
            Some(ts) if t >= ts => (-(t - ts) / dyn_.decay_tau_s).exp(),
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FaultSource {
    Valve { valve_id: String },
    HotSpot,
}

/// Gaussian temperature bump along a pipe's axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalFault {
    pub id: String,
    pub pipe_id: String,
    pub center_s: f64,
    pub amplitude: f64,
    pub sigma: f64,
    pub source: FaultSource,
    pub active: bool,
    pub expires_at: Option<f64>,
}

impl ThermalFault {
    pub fn bump(&self, s: f64) -> f64 {
        let d = s - self.center_s;
        self.amplitude * (-(d * d) / (2.0 * self.sigma * self.sigma)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalDynamics {
    pub tau_heat_s: f64,
    pub tau_cool_s: f64,
}

impl Default for ThermalDynamics {
    fn default() -> Self {
        // 60.8 * exp(-300 / 87.5) < 2, so a full-size fault clears the 2 degC band in 300 s
        Self {
            tau_heat_s: 120.0,
            tau_cool_s: 87.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectionPoint {
    pub id: String,
    pub pose: Pose2,
    pub pipe_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActuationCommand {
    ValveReset { valve_id: String },
    FireSuppression { fire_id: String },
    PowerIsolation { zone_id: String },
    Velocity { command: VelocityCommand, gait: Gait },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacilityWorld {
    pub grid: OccupancyGrid,
    pub equipment: Vec<Equipment>,
    pub pipes: Vec<Pipe>,
    pub valves: Vec<Valve>,
    pub zones: Vec<Zone>,
    pub persons: Vec<Person>,
    pub fires: Vec<FireSource>,
    pub faults: Vec<ThermalFault>,
    pub inspection_points: Vec<InspectionPoint>,
    pub robot: RobotState,
    pub robot_radius: f64,
    pub executor: ExecutorParams,
    pub clock: f64,
    /// Seconds since midnight at `clock == 0`.
    pub time_of_day_start_s: f64,
    pub power_zones: BTreeMap<String, bool>,
    pub thermal_dynamics: ThermalDynamics,
    pub fire_dynamics: FireDynamics,
    pub sensor: SensorConfig,
    /// Control ticks during which the robot center sat in an occupied cell.
    pub robot_collisions: u64,
}

impl FacilityWorld {
    pub fn empty(grid: OccupancyGrid, robot: Pose2) -> Self {
        Self {
            grid,
            equipment: Vec::new(),
            pipes: Vec::new(),
            valves: Vec::new(),
            zones: Vec::new(),
            persons: Vec::new(),
            fires: Vec::new(),
            faults: Vec::new(),
            inspection_points: Vec::new(),
            robot: RobotState::at(robot),
            robot_radius: 0.3,
            executor: ExecutorParams::default(),
            clock: 0.0,
            time_of_day_start_s: 0.0,
            power_zones: BTreeMap::new(),
            thermal_dynamics: ThermalDynamics::default(),
            fire_dynamics: FireDynamics::default(),
            sensor: SensorConfig::default(),
            robot_collisions: 0,
        }
    }

    pub fn time_of_day(&self) -> f64 {
        (self.time_of_day_start_s + self.clock).rem_euclid(86_400.0)
    }

    pub fn pipe(&self, id: &str) -> Option<&Pipe> {
        self.pipes.iter().find(|p| p.id == id)
    }

    pub fn valve(&self, id: &str) -> Option<&Valve> {
        self.valves.iter().find(|v| v.id == id)
    }

    pub fn fire(&self, id: &str) -> Option<&FireSource> {
        self.fires.iter().find(|f| f.id == id)
    }

    pub fn equipment(&self, id: &str) -> Option<&Equipment> {
        self.equipment.iter().find(|e| e.id == id)
    }

    pub fn inspection_point(&self, id: &str) -> Option<&InspectionPoint> {
        self.inspection_points.iter().find(|p| p.id == id)
    }

    pub fn valve_position(&self, valve: &Valve) -> Option<Point2> {
        self.pipe(&valve.pipe_id).map(|p| p.point_at(valve.arclength_pos))
    }

    pub fn fire_area(&self, fire: &FireSource) -> f64 {
        fire.area_at(self.clock, &self.fire_dynamics)
    }

    /// Pure step: returns the world advanced by `dt`.
    pub fn step(&self, dt: f64) -> FacilityWorld {
        let mut w = self.clone();
        w.step_mut(dt);
        w
    }

    /// Advance by `dt` in place. Thermal faults that expire inside the interval
    /// split it so the relaxation stays exact.
    pub fn step_mut(&mut self, dt: f64) {
        if !(dt > 0.0) {
            return;
        }
        let end = self.clock + dt;
        let mut t = self.clock;
        while t < end {
            let next_expiry = self
                .faults
                .iter()
                .filter(|f| f.active)
                .filter_map(|f| f.expires_at)
                .filter(|&e| e > t && e < end)
                .fold(end, f64::min);
            self.relax_pipes(next_expiry - t);
            t = next_expiry;
            for f in &mut self.faults {
                if f.active && f.expires_at.is_some_and(|e| e <= t) {
                    f.active = false;
                }
            }
        }

        let gait = self.robot.gait;
        let cmd = self.robot.command;
        self.robot = execute_velocity(&self.robot, cmd, dt, gait, &self.executor);
        if self.grid.occupied_at(&self.robot.pose.position()) {
            self.robot_collisions += 1;
        }

        self.clock = end;
        let clock = self.clock;
        for p in &mut self.persons {
            p.position = p.position_at(clock);
        }
        let fd = self.fire_dynamics;
        for f in &mut self.fires {
            f.area_ratio = f.area_at(clock, &fd);
        }
    }

    fn fault_target(&self, pipe: &Pipe, s: f64) -> f64 {
        pipe.baseline_temp
            + self
                .faults
                .iter()
                .filter(|f| f.active && f.pipe_id == pipe.id)
                .map(|f| f.bump(s))
                .sum::<f64>()
    }

    fn targets(&self, pipe: &Pipe) -> Vec<f64> {
        (0..pipe.segment_temps.len())
            .map(|i| self.fault_target(pipe, pipe.sample_position(i)))
            .collect()
    }

    fn relax_pipes(&mut self, h: f64) {
        if !(h > 0.0) {
            return;
        }
        let td = self.thermal_dynamics;
        let heat = (-h / td.tau_heat_s).exp();
        let cool = (-h / td.tau_cool_s).exp();
        for pi in 0..self.pipes.len() {
            let targets = self.targets(&self.pipes[pi]);
            for (temp, target) in self.pipes[pi].segment_temps.iter_mut().zip(targets) {
                let decay = if target >= *temp { heat } else { cool };
                *temp = target + (*temp - target) * decay;
            }
        }
    }

    /// Jump every sample of `pipe_id` to its current fault target.
    pub fn settle_pipe(&mut self, pipe_id: &str) {
        if let Some(pi) = self.pipes.iter().position(|p| p.id == pipe_id) {
            let targets = self.targets(&self.pipes[pi]);
            self.pipes[pi].segment_temps = targets;
        }
    }

    pub fn apply_actuation(&mut self, cmd: &ActuationCommand) -> Result<(), WorldError> {
        match cmd {
            ActuationCommand::ValveReset { valve_id } => {
                let v = self
                    .valves
                    .iter_mut()
                    .find(|v| &v.id == valve_id)
                    .ok_or_else(|| WorldError::CommandRejected {
                        kind: "valve",
                        id: valve_id.clone(),
                    })?;
                v.open_fraction = v.setpoint_fraction;
                v.stuck = false;
                for f in &mut self.faults {
                    if matches!(&f.source, FaultSource::Valve { valve_id: id } if id == valve_id) {
                        f.active = false;
                    }
                }
            }
            ActuationCommand::FireSuppression { fire_id } => {
                let clock = self.clock;
                let fd = self.fire_dynamics;
                let f = self
                    .fires
                    .iter_mut()
                    .find(|f| &f.id == fire_id)
                    .ok_or_else(|| WorldError::CommandRejected {
                        kind: "fire",
                        id: fire_id.clone(),
                    })?;
                if f.suppressed_at.is_none() {
                    f.suppressed_at = Some(clock);
                    f.area_ratio = f.area_at(clock, &fd);
                }
            }
            ActuationCommand::PowerIsolation { zone_id } => {
                let powered = self.power_zones.get_mut(zone_id).ok_or_else(|| WorldError::CommandRejected {
                    kind: "zone",
                    id: zone_id.clone(),
                })?;
                *powered = false;
            }
            ActuationCommand::Velocity { command, gait } => {
                self.robot.command = command.clamped(gait.max_speed(), self.executor.max_yaw_rate);
                self.robot.gait = *gait;
            }
        }
        Ok(())
    }

    /// Apply a scripted hazard injection. Operator decisions are not world state
    /// and are ignored here.
    pub fn apply_event(&mut self, event: &ScriptEvent) -> Result<Vec<Cell>, WorldError> {
        match &event.kind {
            EventKind::IgniteFire {
                fire_id,
                position,
                area_ratio,
                smoke_ratio,
                growth_rate,
                confidence,
            } => {
                self.fires.retain(|f| &f.id != fire_id);
                self.fires.push(FireSource {
                    id: fire_id.clone(),
                    position: *position,
                    area_ratio: *area_ratio,
                    smoke_ratio: *smoke_ratio,
                    growth_rate: *growth_rate,
                    confidence: *confidence,
                    initial_area: *area_ratio,
                    ignited_at: event.t,
                    suppressed_at: None,
                });
                Ok(Vec::new())
            }
            EventKind::ValveStuck {
                valve_id,
                open_fraction,
                amplitude,
                sigma,
                preheat,
            } => {
                let v = self
                    .valves
                    .iter_mut()
                    .find(|v| &v.id == valve_id)
                    .ok_or_else(|| WorldError::CommandRejected {
                        kind: "valve",
                        id: valve_id.clone(),
                    })?;
                v.stuck = true;
                v.open_fraction = *open_fraction;
                let (pipe_id, center) = (v.pipe_id.clone(), v.arclength_pos);
                self.faults.push(ThermalFault {
                    id: format!("fault-{valve_id}"),
                    pipe_id: pipe_id.clone(),
                    center_s: center,
                    amplitude: *amplitude,
                    sigma: *sigma,
                    source: FaultSource::Valve {
                        valve_id: valve_id.clone(),
                    },
                    active: true,
                    expires_at: None,
                });
                if *preheat {
                    self.settle_pipe(&pipe_id);
                }
                Ok(Vec::new())
            }
            EventKind::HotSpot {
                pipe_id,
                arclength,
                amplitude,
                sigma,
                duration_s,
                preheat,
            } => {
                if self.pipe(pipe_id).is_none() {
                    return Err(WorldError::CommandRejected {
                        kind: "pipe",
                        id: pipe_id.clone(),
                    });
                }
                let n = self.faults.len();
                self.faults.push(ThermalFault {
                    id: format!("hotspot-{pipe_id}-{n}"),
                    pipe_id: pipe_id.clone(),
                    center_s: *arclength,
                    amplitude: *amplitude,
                    sigma: *sigma,
                    source: FaultSource::HotSpot,
                    active: true,
                    expires_at: duration_s.map(|d| event.t + d),
                });
                if *preheat {
                    self.settle_pipe(pipe_id);
                }
                Ok(Vec::new())
            }
            EventKind::BlockCells { rect } => Ok(self.grid.fill_rect(rect, true)),
            EventKind::OperatorDecision { .. } => Ok(Vec::new()),
        }
    }

    /// Zone containing `p` (closed boundary); first in declaration order.
    pub fn zone_at(&self, p: &Point2) -> Option<&Zone> {
        self.zones
            .iter()
            .find(|z| crate::geometry::point_in_polygon(p, &z.polygon))
    }
}
