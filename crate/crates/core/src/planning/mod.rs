//! Layer L5: global grid planning and local trajectory optimization.

mod cost;
mod dstar;
mod mppi;

pub use cost::PathCost;
pub use dstar::{edge_cost, plan, GridPath, GridPlanner};
pub use mppi::{mppi_step, rollout, shift_nominal, MppiOutput, MppiParams, TrajectoryCost, WaypointCost, COLLISION_PENALTY};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanningError {
    #[error("invalid endpoint: {0}")]
    InvalidEndpoint(String),
    #[error("goal unreachable")]
    Unreachable,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Body-frame velocity command `[vx, vy, omega]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VelocityCommand {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

impl VelocityCommand {
    pub fn new(vx: f64, vy: f64, omega: f64) -> Self {
        Self { vx, vy, omega }
    }

    pub fn planar_speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    /// Planar speed scaled down to `max_speed`, yaw rate clipped to `max_yaw`.
    /// Non-finite components become zero.
    pub fn clamped(&self, max_speed: f64, max_yaw: f64) -> Self {
        let fin = |x: f64| if x.is_finite() { x } else { 0.0 };
        let (mut vx, mut vy) = (fin(self.vx), fin(self.vy));
        let speed = vx.hypot(vy);
        if speed > max_speed {
            let s = max_speed / speed;
            vx *= s;
            vy *= s;
        }
        Self {
            vx,
            vy,
            omega: fin(self.omega).clamp(-max_yaw, max_yaw),
        }
    }
}
