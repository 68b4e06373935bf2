//! The 23-tool registry. Fourteen tools carry the names the decision layer was
//! designed around; the other nine complete the four categories.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolCategory {
    Perception,
    Reasoning,
    Knowledge,
    Actuation,
}

impl ToolCategory {
    pub const ALL: [ToolCategory; 4] = [
        ToolCategory::Perception,
        ToolCategory::Reasoning,
        ToolCategory::Knowledge,
        ToolCategory::Actuation,
    ];

    pub fn prefix(self) -> &'static str {
        match self {
            ToolCategory::Perception => "perception",
            ToolCategory::Reasoning => "reasoning",
            ToolCategory::Knowledge => "knowledge",
            ToolCategory::Actuation => "actuation",
        }
    }
}

/// How much simulated time a call consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum LatencyModel {
    Fixed { seconds: f64 },
    /// Proportional to the length of the pipe being profiled.
    PerMeter { seconds_per_m: f64 },
    /// Equal to the `window_s` argument.
    Window,
    /// Decided by the simulation (navigation time).
    Emergent,
    /// Transmission time depends on the hazard kind.
    PerHazard { fire: f64, thermal: f64, intruder: f64, other: f64 },
    /// Arming takes the scenario's arm delay; discharge is fixed.
    Suppression { discharge: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    String,
    Number,
    Bool,
    Point,
    Object,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: ParamKind,
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolDescriptor {
    pub name: &'static str,
    pub category: ToolCategory,
    pub latency: LatencyModel,
    pub description: &'static str,
    pub params: Vec<ParamSpec>,
    /// Top-level keys of a successful result.
    pub result_keys: Vec<&'static str>,
}

impl ToolDescriptor {
    pub fn qualified_name(&self) -> String {
        format!("{}_{}", self.category.prefix(), self.name)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistryError {
    #[error("tool `{0}` already registered")]
    Duplicate(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ToolRegistry {
    tools: Vec<ToolDescriptor>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
}

impl ToolRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, tool: ToolDescriptor) -> Result<(), RegistryError> {
        let qualified = tool.qualified_name();
        if self.index.contains_key(tool.name) || self.index.contains_key(&qualified) {
            return Err(RegistryError::Duplicate(tool.name.to_string()));
        }
        let i = self.tools.len();
        self.index.insert(tool.name.to_string(), i);
        self.index.insert(qualified, i);
        self.tools.push(tool);
        Ok(())
    }

    /// Accepts the bare name or the category-prefixed form (`perception_fire_smoke`).
    pub fn lookup(&self, name: &str) -> Option<&ToolDescriptor> {
        self.index.get(name).map(|&i| &self.tools[i])
    }

    pub fn tools(&self) -> &[ToolDescriptor] {
        &self.tools
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    pub fn counts(&self) -> BTreeMap<ToolCategory, usize> {
        let mut out: BTreeMap<ToolCategory, usize> = ToolCategory::ALL.iter().map(|c| (*c, 0)).collect();
        for t in &self.tools {
            *out.entry(t.category).or_default() += 1;
        }
        out
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.tools.iter().map(|t| t.name).collect()
    }

    /// Replace a tool's latency with a fixed value. Unknown names are reported back.
    pub fn override_latency(&mut self, name: &str, seconds: f64) -> Result<(), String> {
        let &i = self.index.get(name).ok_or_else(|| name.to_string())?;
        self.tools[i].latency = LatencyModel::Fixed { seconds };
        Ok(())
    }
}

fn p(name: &'static str, kind: ParamKind, required: bool) -> ParamSpec {
    ParamSpec { name, kind, required }
}

fn fixed(seconds: f64) -> LatencyModel {
    LatencyModel::Fixed { seconds }
}

fn tool(
    name: &'static str,
    category: ToolCategory,
    latency: LatencyModel,
    description: &'static str,
    params: Vec<ParamSpec>,
    result_keys: Vec<&'static str>,
) -> ToolDescriptor {
    ToolDescriptor {
        name,
        category,
        latency,
        description,
        params,
        result_keys,
    }
}

/// The full registry in a fixed order.
pub fn build_registry() -> ToolRegistry {
    use ParamKind::*;
    use ToolCategory::*;
    let all = vec![
        tool("fire_smoke", Perception, fixed(0.13), "Fire and smoke detections in the current RGB frame", vec![], vec!["frame_id", "frame_t", "detections", "fire_detected"]),
        tool("thermal_scan", Perception, fixed(0.08), "Capture a thermal image", vec![p("inspection_point", String, false)], vec!["image_id", "max_temp", "frame_t"]),
        tool("depth_localize", Perception, fixed(0.015), "World position of a detection from depth and intrinsics", vec![p("frame_id", String, true), p("index", Number, true)], vec!["position", "range", "camera_xyz"]),
        tool("thermal_mapping", Perception, LatencyModel::PerMeter { seconds_per_m: 0.5 }, "Temperature profile along a pipe axis", vec![p("pipe_id", String, true)], vec!["pipe_id", "positions", "temps", "peak_index", "peak_position", "peak_temp"]),
        tool("thermal_trend", Perception, LatencyModel::Window, "Temperature rate at a pipe location over a window", vec![p("pipe_id", String, true), p("arclength", Number, true), p("window_s", Number, true)], vec!["t_prev", "t_now", "rate", "window"]),
        tool("person_detect", Perception, fixed(0.15), "Person detections in the current RGB frame", vec![], vec!["frame_id", "frame_t", "detections", "person_detected"]),
        tool("reid_embed", Perception, fixed(0.025), "Re-identification embedding of a person detection", vec![p("frame_id", String, true), p("index", Number, true)], vec!["embedding_id", "dim"]),
        tool("obstacle_scan", Perception, fixed(0.05), "Occupancy changes near the robot versus the stored map", vec![p("radius_m", Number, false)], vec!["changed_cells"]),
        tool("fire_severity", Reasoning, fixed(0.85), "Severity score and stage of a fire detection", vec![p("det_area", Number, true), p("frame_area", Number, true), p("confidence", Number, true), p("smoke_area", Number, false), p("smoke_confidence", Number, false)], vec!["score", "smoke_score", "ds_dt", "stage"]),
        tool("thermal_hazard", Reasoning, fixed(1.23), "Baseline difference and anomaly regions of a thermal image", vec![p("image_id", String, true), p("inspection_point", String, true)], vec!["max_delta", "anomaly", "regions", "pipe_id", "max_temp", "limit_temp", "imminent"]),
        tool("spill_hazard", Reasoning, fixed(0.5), "Spill assessment (no model available)", vec![], vec![]),
        tool("intruder_threat", Reasoning, fixed(0.72), "Zone access predicate for a located person", vec![p("restricted", Bool, true), p("within_allowed", Bool, true), p("authorized", Bool, true)], vec!["alert"]),
        tool("time_to_critical", Reasoning, fixed(0.05), "Time until a temperature reaches its limit", vec![p("limit", Number, true), p("current", Number, true), p("rate", Number, true)], vec!["seconds", "imminent"]),
        tool("facility_map", Knowledge, fixed(0.005), "Equipment, zone and root-cause queries against the stored map", vec![p("query", String, true)], vec!["query"]),
        tool("thermal_baselines", Knowledge, fixed(0.005), "Baseline availability for an inspection point", vec![p("inspection_point", String, true)], vec!["available"]),
        tool("personnel_db", Knowledge, fixed(0.005), "Gallery match for an embedding", vec![p("embedding_id", String, true), p("threshold", Number, false)], vec!["match", "similarity", "authorized"]),
        tool("zone_schedule", Knowledge, fixed(0.005), "Zone and access window at a point", vec![p("point", Point, true)], vec!["zone_id", "restricted", "within_allowed", "time_of_day"]),
        tool("remote_valve", Actuation, fixed(3.4), "Reset a valve to its setpoint", vec![p("valve_id", String, true)], vec!["valve_id", "open_fraction"]),
        tool("fire_suppression", Actuation, LatencyModel::Suppression { discharge: 2.5 }, "Arm or discharge the suppression system at a target", vec![p("mode", String, true), p("target", Point, true)], vec!["mode"]),
        tool("locomotion", Actuation, LatencyModel::Emergent, "Navigate to a goal point", vec![p("goal", Point, true), p("gait", String, false)], vec!["arrived", "path_length", "shortest_length", "duration"]),
        tool("alert_center", Actuation, LatencyModel::PerHazard { fire: 0.42, thermal: 0.38, intruder: 0.35, other: 0.40 }, "Send an alert to the control center", vec![p("priority", String, true), p("hazard", String, true), p("location", Object, false), p("payload", Object, false)], vec!["alert_id"]),
        tool("verbal_warning", Actuation, fixed(1.8), "Play a verbal challenge", vec![p("message", String, false)], vec!["delivered"]),
        tool("power_isolation", Actuation, fixed(0.5), "De-energize a zone", vec![p("zone_id", String, true)], vec!["zone_id", "powered"]),
    ];
    let mut r = ToolRegistry::new();
    for t in all {
        r.register(t).expect("built-in tool names are unique");
    }
    r
}
