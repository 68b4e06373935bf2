use crate::geometry::{wrap_angle, Pose2};
use crate::planning::VelocityCommand;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const MAX_SUBSTEP_S: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gait {
    #[default]
    Walk,
    FastWalk,
    Run,
}

impl Gait {
    /// Upper bound of the gait's planar speed band, m/s.
    pub fn max_speed(self) -> f64 {
        match self {
            Gait::Walk => 1.0,
            Gait::FastWalk => 1.5,
            Gait::Run => 2.0,
        }
    }

    /// Slowest gait whose band covers `speed`.
    pub fn for_speed(speed: f64) -> Gait {
        if speed <= 1.0 {
            Gait::Walk
        } else if speed <= 1.5 {
            Gait::FastWalk
        } else {
            Gait::Run
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExecutorParams {
    /// First-order lag between commanded and realized velocity, s.
    pub lag_tau_s: f64,
    /// Fractional forward-speed dip at the trough of each stride.
    pub stride_dip: f64,
    pub stride_hz: f64,
    pub max_yaw_rate: f64,
}

impl Default for ExecutorParams {
    fn default() -> Self {
        Self {
            lag_tau_s: 0.15,
            stride_dip: 0.08,
            stride_hz: 1.8,
            max_yaw_rate: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotState {
    pub pose: Pose2,
    /// Lagged body-frame velocity (before the stride dip).
    pub velocity: VelocityCommand,
    /// Last realized body-frame velocity.
    pub realized: VelocityCommand,
    /// Command held until the next actuation.
    pub command: VelocityCommand,
    pub gait: Gait,
    /// Stride phase in cycles.
    pub stride_phase: f64,
}

impl RobotState {
    pub fn at(pose: Pose2) -> Self {
        Self {
            pose,
            ..Default::default()
        }
    }
}

/// Advance the robot by `dt` under `cmd`. The planar speed is clamped to the
/// gait's band, realized velocity lags the command, and each stride shaves a
/// little forward speed off. Realized speed never exceeds the lagged speed.
pub fn execute_velocity(robot: &RobotState, cmd: VelocityCommand, dt: f64, gait: Gait, params: &ExecutorParams) -> RobotState {
    let mut out = *robot;
    out.gait = gait;
    let cmd = cmd.clamped(gait.max_speed(), params.max_yaw_rate);
    out.command = cmd;
    if !(dt > 0.0) {
        return out;
    }
    let n = (dt / MAX_SUBSTEP_S).ceil().max(1.0) as usize;
    let h = dt / n as f64;
    let alpha = 1.0 - (-h / params.lag_tau_s).exp();
    for _ in 0..n {
        let v = &mut out.velocity;
        v.vx += alpha * (cmd.vx - v.vx);
        v.vy += alpha * (cmd.vy - v.vy);
        v.omega += alpha * (cmd.omega - v.omega);

        let speed = v.vx.hypot(v.vy);
        if speed > 1e-9 {
            out.stride_phase = (out.stride_phase + params.stride_hz * h).fract();
        }
        let dip = params.stride_dip * 0.5 * (1.0 + (2.0 * PI * out.stride_phase).sin());
        let scale = 1.0 - dip;
        out.realized = VelocityCommand {
            vx: v.vx * scale,
            vy: v.vy * scale,
            omega: v.omega,
        };
        let (s, c) = out.pose.theta.sin_cos();
        let r = out.realized;
        out.pose.x += (r.vx * c - r.vy * s) * h;
        out.pose.y += (r.vx * s + r.vy * c) * h;
        out.pose.theta = wrap_angle(out.pose.theta + r.omega * h);
    }
    out
}
