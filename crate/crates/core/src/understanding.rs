//! Layer L2: staging, trend, projection, time-to-critical and root cause.

use crate::memory::{FacilityMapStore, MapItemKind};
use crate::perception::ThermalProfile;
use crate::worldsim::Pipe;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// S_fire at or above which a fire is fully developed.
pub const FULLY_DEVELOPED_SCORE: f64 = 0.10;
/// S_fire at or above which a fire is growing.
pub const GROWTH_SCORE: f64 = 0.02;
/// dS/dt below which a fire is decaying, 1/s.
pub const DECAY_RATE: f64 = -0.001;

#[derive(Debug, Error, PartialEq)]
pub enum UnderstandingError {
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FireStage {
    Incipient = 1,
    Growth = 2,
    FullyDeveloped = 3,
    Decay = 4,
}

impl FireStage {
    pub fn number(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendEstimate {
    pub rate: f64,
    pub window: f64,
    pub t_now: f64,
    pub t_prev: f64,
}

impl TrendEstimate {
    pub fn new(t_now: f64, t_prev: f64, window: f64) -> Result<Self, UnderstandingError> {
        Ok(Self {
            rate: temp_rate(t_now, t_prev, window)?,
            window,
            t_now,
            t_prev,
        })
    }
}

pub fn temp_rate(t_now: f64, t_prev: f64, window: f64) -> Result<f64, UnderstandingError> {
    if !(window > 0.0) {
        return Err(UnderstandingError::Domain(format!("trend window must be positive, got {window}")));
    }
    Ok((t_now - t_prev) / window)
}

pub fn project_temp(t: f64, rate: f64, horizon: f64) -> f64 {
    t + rate * horizon
}

/// `Some(0)` once at or past the limit, `None` when not heating.
pub fn time_to_critical(limit: f64, current: f64, rate: f64) -> Option<f64> {
    if current >= limit {
        Some(0.0)
    } else if rate > 0.0 {
        Some((limit - current) / rate)
    } else {
        None
    }
}

/// Decay whenever the score is falling faster than [`DECAY_RATE`]; otherwise by
/// S_fire thresholds. Smoke alone never lifts a fire past Incipient.
pub fn fire_stage(s_fire: f64, _s_smoke: f64, ds_dt: f64, _duration: f64) -> FireStage {
    if ds_dt < DECAY_RATE {
        FireStage::Decay
    } else if s_fire >= FULLY_DEVELOPED_SCORE {
        FireStage::FullyDeveloped
    } else if s_fire >= GROWTH_SCORE {
        FireStage::Growth
    } else {
        FireStage::Incipient
    }
}

/// Equipment or valve nearest the profile peak's world position, within `radius`.
pub fn root_cause(
    profile: &ThermalProfile,
    pipe: &Pipe,
    map: &FacilityMapStore,
    radius: f64,
) -> Result<Option<(String, MapItemKind)>, UnderstandingError> {
    if !(radius > 0.0) {
        return Err(UnderstandingError::Domain(format!("radius must be positive, got {radius}")));
    }
    if profile.temps.is_empty() {
        return Ok(None);
    }
    let peak = pipe.point_at(profile.peak_position());
    Ok(map
        .equipment_near(&peak, radius)
        .into_iter()
        .next()
        .map(|(id, _, kind)| (id, kind)))
}
