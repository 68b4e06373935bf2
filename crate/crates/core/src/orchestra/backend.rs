//! Reasoning backends. The built-in rules policy runs in process; any other
//! decision maker can be attached as a child process speaking JSON lines.
//!
//! Wire schema, one JSON object per line:
//!
//! ```text
//! runner -> backend  {"type":"decide","snapshot":{...},"tools":[...]}   tools only on the first request
//! backend -> runner  {"decision":"call","thought":"...","tool":"fire_smoke","args":{}}
//!                    {"decision":"wait","thought":"...","seconds":5.0}
//!                    {"decision":"wait_until","thought":"...","condition":{"kind":"fire_cleared","below":0.05,"frames":10},"timeout_s":120.0}
//!                    {"decision":"finish","thought":"..."}
//! runner -> backend  {"type":"end"}                                      once, at episode end
//! ```

use super::registry::{ToolDescriptor, ToolRegistry};
use crate::geometry::Pose2;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("backend protocol: {0}")]
    Protocol(String),
    #[error("unknown backend `{0}` (expected `rules` or `process:<command>`)")]
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WaitCondition {
    /// `frames` consecutive perception frames with fire confidence below `below`.
    FireCleared { below: f64, frames: usize },
    /// A scripted operator decision has arrived.
    OperatorDecision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum Decision {
    Call { thought: String, tool: String, args: Value },
    Wait { thought: String, seconds: f64 },
    WaitUntil { thought: String, condition: WaitCondition, timeout_s: f64 },
    Finish { thought: String },
}

impl Decision {
    pub fn thought(&self) -> &str {
        match self {
            Decision::Call { thought, .. }
            | Decision::Wait { thought, .. }
            | Decision::WaitUntil { thought, .. }
            | Decision::Finish { thought } => thought,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mission {
    pub scenario_id: String,
    /// Inspection point ids in visiting order.
    pub patrol: Vec<String>,
    pub suppression_standoff_m: f64,
    pub challenge_standoff_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LastObservation {
    pub tool: String,
    pub ok: bool,
    pub value: Value,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaitReport {
    pub satisfied: bool,
    pub value: Value,
}

/// What the decision layer sees before each decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    pub sim_time: f64,
    pub time_of_day: f64,
    pub robot_pose: Pose2,
    pub mission: Mission,
    /// Observation of the previous call, if the previous decision was a call.
    pub last: Option<LastObservation>,
    /// Outcome of the previous decision, if it was a conditional wait.
    pub wait: Option<WaitReport>,
}

pub trait ReasoningBackend {
    fn name(&self) -> &str;
    fn decide(&mut self, snapshot: &Snapshot, registry: &ToolRegistry) -> Result<Decision, BackendError>;
    /// Called once when the episode ends.
    fn end(&mut self) {}
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Request<'a> {
    Decide {
        snapshot: &'a Snapshot,
        #[serde(skip_serializing_if = "Option::is_none")]
        tools: Option<&'a [ToolDescriptor]>,
    },
    End,
}

/// A child process that answers one decision line per request line.
pub struct ProcessBackend {
    command: String,
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    sent_tools: bool,
}

impl ProcessBackend {
    pub fn spawn(command: &str) -> Result<Self, BackendError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().ok_or_else(|| BackendError::Protocol("no stdin".into()))?;
        let stdout = BufReader::new(child.stdout.take().ok_or_else(|| BackendError::Protocol("no stdout".into()))?);
        Ok(Self {
            command: command.to_string(),
            child,
            stdin,
            stdout,
            sent_tools: false,
        })
    }

    fn send(&mut self, req: &Request) -> Result<(), BackendError> {
        let line = serde_json::to_string(req).map_err(|e| BackendError::Protocol(e.to_string()))?;
        self.stdin.write_all(line.as_bytes())?;
        self.stdin.write_all(b"\n")?;
        self.stdin.flush()?;
        Ok(())
    }
}

impl ReasoningBackend for ProcessBackend {
    fn name(&self) -> &str {
        &self.command
    }

    fn decide(&mut self, snapshot: &Snapshot, registry: &ToolRegistry) -> Result<Decision, BackendError> {
        let tools = (!self.sent_tools).then(|| registry.tools());
        self.send(&Request::Decide { snapshot, tools })?;
        self.sent_tools = true;
        let mut line = String::new();
        if self.stdout.read_line(&mut line)? == 0 {
            return Err(BackendError::Protocol("backend closed its output".into()));
        }
        serde_json::from_str(line.trim()).map_err(|e| BackendError::Protocol(format!("bad decision line: {e}")))
    }

    fn end(&mut self) {
        let _ = self.send(&Request::End);
    }
}

impl Drop for ProcessBackend {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// `rules` selects the built-in policy; `process:<command>` spawns an external one.
pub fn backend_from_spec(spec: &str) -> Result<Box<dyn ReasoningBackend>, BackendError> {
    if spec == "rules" {
        Ok(Box::new(super::policy::RulesPolicy::new()))
    } else if let Some(cmd) = spec.strip_prefix("process:") {
        Ok(Box::new(ProcessBackend::spawn(cmd)?))
    } else {
        Err(BackendError::Unknown(spec.to_string()))
    }
}
