use crate::geometry::Point2;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Priority {
    P1,
    P2,
    P3,
    P4,
}

impl Priority {
    pub fn parse(s: &str) -> Option<Priority> {
        match s {
            "P1" | "p1" => Some(Priority::P1),
            "P2" | "p2" => Some(Priority::P2),
            "P3" | "p3" => Some(Priority::P3),
            "P4" | "p4" => Some(Priority::P4),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Priority::P1 => "P1",
            Priority::P2 => "P2",
            Priority::P3 => "P3",
            Priority::P4 => "P4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardKind {
    Fire,
    Thermal,
    Intruder,
    Spill,
}

impl HazardKind {
    pub fn parse(s: &str) -> Option<HazardKind> {
        match s {
            "fire" => Some(HazardKind::Fire),
            "thermal" => Some(HazardKind::Thermal),
            "intruder" => Some(HazardKind::Intruder),
            "spill" => Some(HazardKind::Spill),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            HazardKind::Fire => "fire",
            HazardKind::Thermal => "thermal",
            HazardKind::Intruder => "intruder",
            HazardKind::Spill => "spill",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertMessage {
    pub priority: Priority,
    pub hazard: HazardKind,
    pub location: Option<Point2>,
    pub payload: Value,
    /// Delivery time at the control center.
    pub sim_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Success,
    Partial,
    Failure,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::Partial => 1,
            Outcome::Failure => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Success => "Success",
            Outcome::Partial => "Partial",
            Outcome::Failure => "Failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub tool: String,
    pub args: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolResult {
    /// Registered name of the tool that produced this result; `None` for
    /// dispatch failures on unknown names.
    pub tool: Option<String>,
    pub ok: bool,
    pub value: Value,
    pub error: Option<String>,
}

impl ToolResult {
    pub fn ok(tool: &str, value: Value) -> Self {
        Self {
            tool: Some(tool.to_string()),
            ok: true,
            value,
            error: None,
        }
    }

    pub fn err(tool: Option<&str>, message: impl Into<String>) -> Self {
        Self {
            tool: tool.map(str::to_string),
            ok: false,
            value: Value::Null,
            error: Some(message.into()),
        }
    }
}

/// One Thought -> Action -> Observation cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningStep {
    pub index: usize,
    pub thought: String,
    pub action: ToolCall,
    pub observation: ToolResult,
    /// Time the call completed.
    pub sim_time: f64,
    /// Simulated time the call consumed.
    pub latency: f64,
    /// Time spent waiting between the previous step and this call.
    pub idle_before: f64,
}

impl ReasoningStep {
    pub fn started_at(&self) -> f64 {
        self.sim_time - self.latency
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub steps: Vec<ReasoningStep>,
    pub alerts: Vec<AlertMessage>,
    outcome: Option<Outcome>,
    pub final_thought: Option<String>,
    pub budget_exhausted: bool,
}

impl Default for EpisodeTrace {
    fn default() -> Self {
        Self::new()
    }
}

impl EpisodeTrace {
    pub fn new() -> Self {
        Self {
            steps: Vec::new(),
            alerts: Vec::new(),
            outcome: None,
            final_thought: None,
            budget_exhausted: false,
        }
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    /// Assign the outcome; a second assignment is a logic error and is refused.
    pub fn set_outcome(&mut self, outcome: Outcome) -> Result<(), Outcome> {
        match self.outcome {
            Some(existing) => Err(existing),
            None => {
                self.outcome = Some(outcome);
                Ok(())
            }
        }
    }

    pub fn calls_of<'a>(&'a self, tool: &'a str) -> impl Iterator<Item = &'a ReasoningStep> + 'a {
        self.steps.iter().filter(move |s| s.observation.tool.as_deref() == Some(tool))
    }
}
