//! Layer L6: the locomotion reward formulation plus the kinematic velocity
//! executor the simulator uses in place of a learned policy.

mod executor;
mod rewards;

pub use executor::{execute_velocity, ExecutorParams, Gait, RobotState};
pub use rewards::{
    assemble_obs, discounted_return, obs_dim, pd_torque, reward_reg, reward_style, reward_track,
    total_reward, GainSet, JointState, RewardWeights, DEFAULT_ACTION_HISTORY, NUM_JOINTS,
    OBS_BASE_DIM,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LocomotionError {
    #[error("{what}: expected length {expected}, got {actual}")]
    Shape {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite joint value")]
    NonFinite,
    #[error("domain error: {0}")]
    Domain(String),
}
