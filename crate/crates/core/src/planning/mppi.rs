//! Sampling-based local trajectory optimization over body-frame velocity sequences.

use super::{PlanningError, VelocityCommand};
use crate::geometry::{wrap_angle, Point2, Pose2};
use crate::grid::OccupancyGrid;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub const COLLISION_PENALTY: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MppiParams {
    pub horizon: usize,
    pub dt: f64,
    pub samples: usize,
    /// Per-channel std of the (vx, vy, omega) perturbations.
    pub noise_std: [f64; 3],
    /// AR(1) correlation of the perturbations between consecutive steps; 0 is
    /// white noise. The marginal std stays `noise_std` for any value in [0, 1).
    pub noise_corr: f64,
    pub lambda: f64,
    pub w_goal: f64,
    pub w_obstacle: f64,
    pub w_effort: f64,
    pub max_speed: f64,
    pub max_yaw_rate: f64,
    /// Keep the incoming nominal when the weighted update rolls out worse.
    pub monotone: bool,
}

impl Default for MppiParams {
    fn default() -> Self {
        Self {
            horizon: 20,
            dt: 0.1,
            samples: 256,
            noise_std: [0.4, 0.4, 0.3],
            noise_corr: 0.95,
            lambda: 5.0,
            w_goal: 10.0,
            w_obstacle: 1.0,
            w_effort: 0.05,
            max_speed: 2.0,
            max_yaw_rate: 2.0,
            monotone: true,
        }
    }
}

impl MppiParams {
    pub fn validate(&self) -> Result<(), PlanningError> {
        if self.horizon == 0 || self.samples == 0 {
            return Err(PlanningError::InvalidParams("horizon and samples must be at least 1".into()));
        }
        if !(self.lambda > 0.0) || !(self.dt > 0.0) {
            return Err(PlanningError::InvalidParams("lambda and dt must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.noise_corr) {
            return Err(PlanningError::InvalidParams("noise correlation must lie in [0, 1)".into()));
        }
        if self.noise_std.iter().any(|s| !(*s >= 0.0)) {
            return Err(PlanningError::InvalidParams("noise std must be non-negative".into()));
        }
        if !(self.max_speed > 0.0 && self.max_speed <= 2.0) {
            return Err(PlanningError::InvalidParams("max speed must lie in (0, 2] m/s".into()));
        }
        Ok(())
    }
}

/// Unicycle kinematics with lateral velocity. Returns `controls.len() + 1` poses,
/// the first being `start`.
pub fn rollout(start: Pose2, controls: &[VelocityCommand], dt: f64) -> Vec<Pose2> {
    let mut out = Vec::with_capacity(controls.len() + 1);
    let mut p = start;
    out.push(p);
    for u in controls {
        let (s, c) = p.theta.sin_cos();
        p = Pose2::new(
            p.x + (u.vx * c - u.vy * s) * dt,
            p.y + (u.vx * s + u.vy * c) * dt,
            wrap_angle(p.theta + u.omega * dt),
        );
        out.push(p);
    }
    out
}

pub trait TrajectoryCost {
    fn cost(&self, trajectory: &[Pose2], controls: &[VelocityCommand], dt: f64) -> f64;
}

impl<F> TrajectoryCost for F
where
    F: Fn(&[Pose2], &[VelocityCommand], f64) -> f64,
{
    fn cost(&self, trajectory: &[Pose2], controls: &[VelocityCommand], dt: f64) -> f64 {
        self(trajectory, controls, dt)
    }
}

/// Terminal distance to a waypoint, per-step collision penalty and control effort.
#[derive(Debug, Clone, Copy)]
pub struct WaypointCost<'a> {
    pub grid: &'a OccupancyGrid,
    pub waypoint: Point2,
    pub w_goal: f64,
    pub w_obstacle: f64,
    pub w_effort: f64,
}

impl<'a> WaypointCost<'a> {
    pub fn new(grid: &'a OccupancyGrid, waypoint: Point2, params: &MppiParams) -> Self {
        Self {
            grid,
            waypoint,
            w_goal: params.w_goal,
            w_obstacle: params.w_obstacle,
            w_effort: params.w_effort,
        }
    }
}

impl TrajectoryCost for WaypointCost<'_> {
    fn cost(&self, trajectory: &[Pose2], controls: &[VelocityCommand], dt: f64) -> f64 {
        let end = trajectory.last().map(|p| p.position()).unwrap_or(self.waypoint);
        let collisions = trajectory
            .iter()
            .skip(1)
            .filter(|p| self.grid.occupied_at(&p.position()))
            .count();
        let effort: f64 = controls
            .iter()
            .map(|u| (u.vx * u.vx + u.vy * u.vy + u.omega * u.omega) * dt)
            .sum();
        self.w_goal * end.distance(&self.waypoint)
            + self.w_obstacle * COLLISION_PENALTY * collisions as f64
            + self.w_effort * effort
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MppiOutput {
    pub command: VelocityCommand,
    pub nominal: Vec<VelocityCommand>,
    /// Normalized sample weights, sample 0 being the unperturbed nominal.
    pub weights: Vec<f64>,
    pub sample_costs: Vec<f64>,
    pub nominal_cost: f64,
    pub updated_cost: f64,
}

/// One MPPI iteration. `nominal` is padded with zeros or truncated to the horizon.
pub fn mppi_step<C: TrajectoryCost + ?Sized>(
    pose: Pose2,
    nominal: &[VelocityCommand],
    cost: &C,
    params: &MppiParams,
    seed: u64,
) -> Result<MppiOutput, PlanningError> {
    params.validate()?;
    let h = params.horizon;
    let clamp = |u: VelocityCommand| u.clamped(params.max_speed, params.max_yaw_rate);
    let base: Vec<VelocityCommand> = (0..h)
        .map(|i| clamp(nominal.get(i).copied().unwrap_or_default()))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normals: Vec<Normal<f64>> = params
        .noise_std
        .iter()
        .map(|&s| Normal::new(0.0, s).expect("validated std"))
        .collect();

    // Effective perturbations after clamping, so the update stays inside the envelope.
    let mut eps: Vec<Vec<[f64; 3]>> = Vec::with_capacity(params.samples);
    let mut costs = Vec::with_capacity(params.samples);
    let rho = params.noise_corr;
    let innovation = (1.0 - rho * rho).sqrt();
    for k in 0..params.samples {
        let mut seq = Vec::with_capacity(h);
        let mut e = Vec::with_capacity(h);
        let mut raw = [0.0; 3];
        for (t, u0) in base.iter().enumerate() {
            let u = if k == 0 {
                *u0
            } else {
                for (c, n) in normals.iter().enumerate() {
                    let z = n.sample(&mut rng);
                    raw[c] = if t == 0 { z } else { rho * raw[c] + innovation * z };
                }
                clamp(VelocityCommand::new(u0.vx + raw[0], u0.vy + raw[1], u0.omega + raw[2]))
            };
            e.push([u.vx - u0.vx, u.vy - u0.vy, u.omega - u0.omega]);
            seq.push(u);
        }
        let traj = rollout(pose, &seq, params.dt);
        costs.push(cost.cost(&traj, &seq, params.dt));
        eps.push(e);
    }

    let min = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut weights: Vec<f64> = costs.iter().map(|s| (-(s - min) / params.lambda).exp()).collect();
    let z: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= z;
    }

    let mut updated = base.clone();
    for (t, u) in updated.iter_mut().enumerate() {
        let mut d = [0.0; 3];
        for (w, e) in weights.iter().zip(&eps) {
            for c in 0..3 {
                d[c] += w * e[t][c];
            }
        }
        *u = clamp(VelocityCommand::new(u.vx + d[0], u.vy + d[1], u.omega + d[2]));
    }

    let nominal_cost = costs[0];
    let mut updated_cost = cost.cost(&rollout(pose, &updated, params.dt), &updated, params.dt);
    if params.monotone && updated_cost > nominal_cost {
        updated = base;
        updated_cost = nominal_cost;
    }
    Ok(MppiOutput {
        command: updated[0],
        nominal: updated,
        weights,
        sample_costs: costs,
        nominal_cost,
        updated_cost,
    })
}

/// Shift a nominal sequence forward one step, repeating the last command.
pub fn shift_nominal(nominal: &[VelocityCommand]) -> Vec<VelocityCommand> {
    if nominal.is_empty() {
        return Vec::new();
    }
    let mut out: Vec<VelocityCommand> = nominal[1..].to_vec();
    out.push(*nominal.last().expect("non-empty"));
    out
}
