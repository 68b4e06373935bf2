//! Layer L4: the ReAct loop, the tool registry, the alert predicate and the
//! graduated-response policies.

mod backend;
mod episode;
mod navigation;
mod policy;
mod protocols;
mod registry;
mod tools;
mod trace;

pub use backend::{
    backend_from_spec, BackendError, Decision, LastObservation, Mission, ProcessBackend, ReasoningBackend, Snapshot,
    WaitCondition, WaitReport,
};
pub use episode::{
    capture_baselines, react_loop, DetectionRecord, Episode, EpisodeConfig, EpisodeOutput, Milestones, NavLeg,
    ProfileRecord, TruthHazard,
};
pub use policy::{RulesPolicy, POST_DISCHARGE_WAIT_S, ROOT_CAUSE_RADIUS_M, THERMAL_MONITOR_INTERVAL_S, TREND_WINDOW_S};
pub use protocols::{
    fire_protocol, intruder_protocol, thermal_protocol, thermal_resolution, ProtocolAction, CLEAR_CONFIDENCE,
    CLEAR_FRAMES, RECOVERY_BAND_C,
};
pub use registry::{
    build_registry, LatencyModel, ParamKind, ParamSpec, RegistryError, ToolCategory, ToolDescriptor, ToolRegistry,
};
pub use trace::{AlertMessage, EpisodeTrace, HazardKind, Outcome, Priority, ReasoningStep, ToolCall, ToolResult};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OrchestraError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Memory(#[from] crate::memory::MemoryError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Alert iff the zone is restricted, the time is outside its allowed windows
/// and the person is not authorized.
pub fn intruder_alert(restricted: bool, within_allowed: bool, authorized: bool) -> bool {
    restricted && !within_allowed && !authorized
}
