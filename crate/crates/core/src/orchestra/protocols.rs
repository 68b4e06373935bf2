//! Graduated-response templates. Each protocol returns an abstract plan; the
//! rules policy expands the steps into tool calls against live observations.

use super::trace::{HazardKind, Priority};
use super::OrchestraError;
use crate::memory::{MapItemKind, ZoneStatus};
use crate::perception::{AnomalyRegion, Detection, DetectionClass};
use crate::understanding::FireStage;
use serde::{Deserialize, Serialize};

/// Fire confidence below which a frame counts toward clearance.
pub const CLEAR_CONFIDENCE: f64 = 0.05;
/// Consecutive sub-threshold frames that declare a fire cleared.
pub const CLEAR_FRAMES: usize = 10;
/// |dT| band around the baseline that ends thermal monitoring, degC.
pub const RECOVERY_BAND_C: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum ProtocolAction {
    Alert { priority: Priority, hazard: HazardKind },
    IsolatePower,
    PrepareSuppression,
    ConfirmFire,
    /// Back off to at least `standoff_m` from the fire, then discharge.
    Suppress { standoff_m: f64 },
    MonitorFire { below: f64, frames: usize },
    ProfilePipe,
    EstimateTrend,
    TimeToCritical,
    IdentifyRootCause,
    /// Placeholder replaced by [`thermal_resolution`] once the cause is known.
    ResolveRootCause,
    ResetValve,
    /// Alert with the temperature profile attached; no actuator can help.
    Escalate,
    MonitorThermal { band_c: f64 },
    LogOnly,
    Approach { standoff_m: f64 },
    VerbalWarning,
    AwaitOperator,
}

impl ProtocolAction {
    pub fn is_suppression(&self) -> bool {
        matches!(self, ProtocolAction::Suppress { .. })
    }
}

/// Growth-or-less fires get alert, isolation and a prepared (not fired)
/// suppression that is only discharged after confirmation. Fully developed
/// and decaying fires are suppressed first.
pub fn fire_protocol(stage: FireStage, standoff_m: f64) -> Vec<ProtocolAction> {
    use ProtocolAction::*;
    let monitor = MonitorFire {
        below: CLEAR_CONFIDENCE,
        frames: CLEAR_FRAMES,
    };
    match stage {
        FireStage::Incipient | FireStage::Growth => vec![
            Alert {
                priority: if stage == FireStage::Growth { Priority::P2 } else { Priority::P3 },
                hazard: HazardKind::Fire,
            },
            IsolatePower,
            PrepareSuppression,
            ConfirmFire,
            Suppress { standoff_m },
            monitor,
        ],
        FireStage::FullyDeveloped | FireStage::Decay => vec![
            Suppress { standoff_m },
            Alert {
                priority: Priority::P1,
                hazard: HazardKind::Fire,
            },
            IsolatePower,
            monitor,
        ],
    }
}

pub fn thermal_protocol(anomaly: &AnomalyRegion, warning_c: f64) -> Result<Vec<ProtocolAction>, OrchestraError> {
    if !(anomaly.max_delta > warning_c) {
        return Err(OrchestraError::Precondition(format!(
            "anomaly max dT {} does not exceed the warning threshold {warning_c}",
            anomaly.max_delta
        )));
    }
    use ProtocolAction::*;
    Ok(vec![
        ProfilePipe,
        EstimateTrend,
        TimeToCritical,
        IdentifyRootCause,
        ResolveRootCause,
        MonitorThermal {
            band_c: RECOVERY_BAND_C,
        },
    ])
}

/// Follow-up for a located root cause: a stuck valve is reset and monitored,
/// anything else is escalated with the profile attached.
pub fn thermal_resolution(cause: Option<MapItemKind>) -> Vec<ProtocolAction> {
    match cause {
        Some(MapItemKind::Valve) => vec![
            ProtocolAction::ResetValve,
            ProtocolAction::MonitorThermal {
                band_c: RECOVERY_BAND_C,
            },
        ],
        _ => vec![ProtocolAction::Escalate],
    }
}

/// `matched` is the gallery result: `(id, similarity, authorized)`.
pub fn intruder_protocol(
    detection: &Detection,
    zone: &ZoneStatus,
    matched: Option<(&str, f64, bool)>,
    challenge_standoff_m: f64,
) -> Result<Vec<ProtocolAction>, OrchestraError> {
    if detection.class != DetectionClass::Person {
        return Err(OrchestraError::Precondition(format!(
            "intruder protocol needs a person detection, got {:?}",
            detection.class
        )));
    }
    let authorized = matched.is_some_and(|(_, _, a)| a);
    if !super::intruder_alert(zone.restricted, zone.within_allowed, authorized) {
        return Ok(vec![ProtocolAction::LogOnly]);
    }
    Ok(vec![
        ProtocolAction::Alert {
            priority: Priority::P2,
            hazard: HazardKind::Intruder,
        },
        ProtocolAction::Approach {
            standoff_m: challenge_standoff_m,
        },
        ProtocolAction::VerbalWarning,
        ProtocolAction::AwaitOperator,
    ])
}
