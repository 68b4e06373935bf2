//! Locomotion MDP terms as plain functions: observation layout, PD torque,
//! discounted return and the three reward groups.

use super::LocomotionError;
use serde::{Deserialize, Serialize};

pub const NUM_JOINTS: usize = 29;
pub const DEFAULT_ACTION_HISTORY: usize = 6;
/// Observation length without action history: 3 + 29 + 29 + 3.
pub const OBS_BASE_DIM: usize = 3 + NUM_JOINTS + NUM_JOINTS + 3;

pub fn obs_dim(history: usize) -> usize {
    OBS_BASE_DIM + NUM_JOINTS * history
}

fn check_len(what: &'static str, v: &[f64], expected: usize) -> Result<(), LocomotionError> {
    if v.len() != expected {
        return Err(LocomotionError::Shape {
            what,
            expected,
            actual: v.len(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    pub qddot: Vec<f64>,
    pub q_default: Vec<f64>,
}

impl JointState {
    pub fn new(q: Vec<f64>, qdot: Vec<f64>, qddot: Vec<f64>, q_default: Vec<f64>) -> Result<Self, LocomotionError> {
        let s = Self {
            q,
            qdot,
            qddot,
            q_default,
        };
        s.validate()?;
        Ok(s)
    }

    /// Standing at the default pose.
    pub fn at_rest(q_default: Vec<f64>) -> Result<Self, LocomotionError> {
        Self::new(
            q_default.clone(),
            vec![0.0; NUM_JOINTS],
            vec![0.0; NUM_JOINTS],
            q_default,
        )
    }

    pub fn validate(&self) -> Result<(), LocomotionError> {
        check_len("q", &self.q, NUM_JOINTS)?;
        check_len("qdot", &self.qdot, NUM_JOINTS)?;
        check_len("qddot", &self.qddot, NUM_JOINTS)?;
        check_len("q_default", &self.q_default, NUM_JOINTS)?;
        let all = self.q.iter().chain(&self.qdot).chain(&self.qddot).chain(&self.q_default);
        if all.into_iter().any(|x| !x.is_finite()) {
            return Err(LocomotionError::NonFinite);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSet {
    pub kp: Vec<f64>,
    pub kd: Vec<f64>,
    pub action_scale: f64,
}

impl GainSet {
    pub fn uniform(kp: f64, kd: f64, action_scale: f64) -> Self {
        Self {
            kp: vec![kp; NUM_JOINTS],
            kd: vec![kd; NUM_JOINTS],
            action_scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub w_v: f64,
    pub w_omega: f64,
    pub sigma_v: f64,
    pub sigma_omega: f64,
    pub w_torque: f64,
    pub w_qddot: f64,
    pub w_slip: f64,
    pub w_upright: f64,
    pub w_feet: f64,
    pub gamma: f64,
    pub h_target: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            w_v: 1.5,
            w_omega: 0.5,
            sigma_v: 0.25,
            sigma_omega: 0.25,
            w_torque: 2.5e-5,
            w_qddot: 2.5e-7,
            w_slip: 0.25,
            w_upright: 1.0,
            w_feet: 0.5,
            gamma: 0.99,
            h_target: 0.08,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<(), LocomotionError> {
        if !(self.sigma_v > 0.0 && self.sigma_omega > 0.0) {
            return Err(LocomotionError::Domain("reward sharpness must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(LocomotionError::Domain(format!("discount {} outside (0, 1)", self.gamma)));
        }
        Ok(())
    }
}

/// `[v_cmd, q, qdot, gravity, a_{t-1} .. a_{t-H}]`, most recent action first.
pub fn assemble_obs(
    v_cmd: [f64; 3],
    joints: &JointState,
    gravity: [f64; 3],
    history: &[Vec<f64>],
) -> Result<Vec<f64>, LocomotionError> {
    joints.validate()?;
    for a in history {
        check_len("action history entry", a, NUM_JOINTS)?;
    }
    let mut obs = Vec::with_capacity(obs_dim(history.len()));
    obs.extend_from_slice(&v_cmd);
    obs.extend_from_slice(&joints.q);
    obs.extend_from_slice(&joints.qdot);
    obs.extend_from_slice(&gravity);
    for a in history {
        obs.extend_from_slice(a);
    }
    Ok(obs)
}

/// `tau = Kp (a * s + q_default - q) - Kd qdot`, elementwise.
pub fn pd_torque(action: &[f64], joints: &JointState, gains: &GainSet) -> Result<Vec<f64>, LocomotionError> {
    check_len("action", action, NUM_JOINTS)?;
    check_len("kp", &gains.kp, NUM_JOINTS)?;
    check_len("kd", &gains.kd, NUM_JOINTS)?;
    joints.validate()?;
    Ok((0..NUM_JOINTS)
        .map(|i| {
            gains.kp[i] * (action[i] * gains.action_scale + joints.q_default[i] - joints.q[i])
                - gains.kd[i] * joints.qdot[i]
        })
        .collect())
}

pub fn discounted_return(rewards: &[f64], gamma: f64) -> Result<f64, LocomotionError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(LocomotionError::Domain(format!("discount {gamma} outside (0, 1)")));
    }
    // Horner from the tail: r_0 + g (r_1 + g (r_2 + ...))
    Ok(rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc))
}

pub fn reward_track(v_xy: [f64; 2], v_cmd_xy: [f64; 2], omega: f64, omega_cmd: f64, w: &RewardWeights) -> f64 {
    let dv2 = (v_xy[0] - v_cmd_xy[0]).powi(2) + (v_xy[1] - v_cmd_xy[1]).powi(2);
    let dw2 = (omega - omega_cmd).powi(2);
    w.w_v * (-dv2 / w.sigma_v).exp() + w.w_omega * (-dw2 / w.sigma_omega).exp()
}

pub fn reward_reg(
    torque: &[f64],
    qddot: &[f64],
    foot_speeds: &[f64],
    contacts: &[bool],
    w: &RewardWeights,
) -> Result<f64, LocomotionError> {
    check_len("torque", torque, NUM_JOINTS)?;
    check_len("qddot", qddot, NUM_JOINTS)?;
    if foot_speeds.len() != contacts.len() {
        return Err(LocomotionError::Shape {
            what: "contacts",
            expected: foot_speeds.len(),
            actual: contacts.len(),
        });
    }
    let tau2: f64 = torque.iter().map(|t| t * t).sum();
    let acc2: f64 = qddot.iter().map(|a| a * a).sum();
    let slip: f64 = foot_speeds
        .iter()
        .zip(contacts)
        .filter(|(_, &c)| c)
        .map(|(v, _)| v * v)
        .sum();
    Ok(-w.w_torque * tau2 - w.w_qddot * acc2 - w.w_slip * slip)
}

/// Upright term uses the convention that projected gravity z is -1 when upright.
pub fn reward_style(g_z: f64, feet_heights: &[f64], h_target: f64, w: &RewardWeights) -> f64 {
    let err2: f64 = feet_heights.iter().map(|h| (h - h_target).powi(2)).sum();
    w.w_upright * (g_z + 1.0) + w.w_feet * (-err2).exp()
}

pub fn total_reward(track: f64, reg: f64, style: f64) -> f64 {
    track + reg + style
}
