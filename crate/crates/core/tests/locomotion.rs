mod common;

use common::oracles::{
    oracle_pd, oracle_reg, oracle_return, oracle_style, oracle_track, random_joints, tracking_rmse, vec_of,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safeguard_core::geometry::Pose2;
use safeguard_core::locomotion::{
    assemble_obs, discounted_return, execute_velocity, obs_dim, pd_torque, reward_reg, reward_style, reward_track,
    ExecutorParams, GainSet, Gait, JointState, RewardWeights, RobotState, NUM_JOINTS,
};
use safeguard_core::planning::VelocityCommand;

const TOL: f64 = 1e-12;

#[test]
fn perfect_tracking_earns_both_weights() {
    let w = RewardWeights::default();
    assert_eq!(reward_track([0.7, -0.2], [0.7, -0.2], 0.3, 0.3, &w), 2.0);
}

#[test]
fn three_step_return() {
    let g = discounted_return(&[1.0, 1.0, 1.0], 0.99).unwrap();
    assert!((g - 2.9701).abs() <= TOL, "{g}");
    assert_eq!(discounted_return(&[], 0.99).unwrap(), 0.0);
    assert!(discounted_return(&[1.0], 1.0).is_err());
    assert!(discounted_return(&[1.0], 0.0).is_err());
}

#[test]
fn rewards_match_scalar_oracles_on_random_states() {
    let w = RewardWeights::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let v = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let c = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let (om, omc) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        assert!((reward_track(v, c, om, omc, &w) - oracle_track(v, c, om, omc, &w)).abs() <= TOL);

        let tau = vec_of(&mut rng, NUM_JOINTS, 80.0);
        let acc = vec_of(&mut rng, NUM_JOINTS, 200.0);
        let fv = vec_of(&mut rng, 2, 1.0);
        let ct: Vec<bool> = (0..2).map(|_| rng.random_bool(0.5)).collect();
        let reg = reward_reg(&tau, &acc, &fv, &ct, &w).unwrap();
        assert!((reg - oracle_reg(&tau, &acc, &fv, &ct, &w)).abs() <= TOL);

        let gz = rng.random_range(-1.0..0.0);
        let feet = vec_of(&mut rng, 2, 0.2);
        let st = reward_style(gz, &feet, w.h_target, &w);
        assert!((st - oracle_style(gz, &feet, w.h_target, &w)).abs() <= TOL);

        let j = random_joints(&mut rng);
        let a = vec_of(&mut rng, NUM_JOINTS, 1.0);
        let g = GainSet {
            kp: vec_of(&mut rng, NUM_JOINTS, 100.0).iter().map(|x| x.abs()).collect(),
            kd: vec_of(&mut rng, NUM_JOINTS, 5.0).iter().map(|x| x.abs()).collect(),
            action_scale: rng.random_range(0.1..1.0),
        };
        let tau = pd_torque(&a, &j, &g).unwrap();
        for (x, y) in tau.iter().zip(oracle_pd(&a, &j, &g)) {
            assert!((x - y).abs() <= TOL);
        }

        let rs = vec_of(&mut rng, 50, 3.0);
        let gamma = rng.random_range(0.5..0.999);
        assert!((discounted_return(&rs, gamma).unwrap() - oracle_return(&rs, gamma)).abs() <= 1e-12);
    }
}

/// PD torque is affine in the action: tau(a + b) - tau(a) = Kp * s * b.
#[test]
fn pd_torque_is_affine_in_action() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let j = random_joints(&mut rng);
        let g = GainSet::uniform(rng.random_range(1.0..100.0), rng.random_range(0.1..5.0), 0.25);
        let a = vec_of(&mut rng, NUM_JOINTS, 1.0);
        let b = vec_of(&mut rng, NUM_JOINTS, 1.0);
        let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let (ta, tab) = (pd_torque(&a, &j, &g).unwrap(), pd_torque(&ab, &j, &g).unwrap());
        for i in 0..NUM_JOINTS {
            let expect = g.kp[i] * g.action_scale * b[i];
            assert!((tab[i] - ta[i] - expect).abs() <= 1e-12 * (1.0 + ta[i].abs()), "joint {i}");
        }
    }
}

#[test]
fn shape_errors_are_reported() {
    let j = JointState::at_rest(vec![0.0; NUM_JOINTS]).unwrap();
    let g = GainSet::uniform(20.0, 0.5, 0.25);
    assert!(pd_torque(&[0.0; 3], &j, &g).is_err());
    assert!(JointState::at_rest(vec![0.0; 3]).is_err());
    assert!(reward_reg(&[0.0; 2], &[0.0; NUM_JOINTS], &[], &[], &RewardWeights::default()).is_err());
    assert!(reward_reg(&[0.0; NUM_JOINTS], &[0.0; NUM_JOINTS], &[1.0], &[], &RewardWeights::default()).is_err());
}

#[test]
fn observation_layout() {
    let j = JointState::at_rest(vec![0.2; NUM_JOINTS]).unwrap();
    let hist = vec![vec![1.0; NUM_JOINTS], vec![2.0; NUM_JOINTS]];
    let obs = assemble_obs([0.5, 0.0, 0.1], &j, [0.0, 0.0, -1.0], &hist).unwrap();
    assert_eq!(obs.len(), obs_dim(2));
    assert_eq!(&obs[..3], &[0.5, 0.0, 0.1]);
    assert_eq!(obs[3 + 2 * NUM_JOINTS + 2], -1.0);
    assert_eq!(obs[3 + 2 * NUM_JOINTS + 3], 1.0);
    assert_eq!(*obs.last().unwrap(), 2.0);
}

#[test]
fn velocity_tracking_rmse_within_bound() {
    let rmse = tracking_rmse(30.0, 2.0);
    assert!(rmse <= 0.08, "rmse {rmse}");
    assert!(rmse > 0.0);
}

#[test]
fn gait_clamps_speed() {
    let params = ExecutorParams::default();
    let mut robot = RobotState::at(Pose2::new(0.0, 0.0, 0.0));
    for _ in 0..300 {
        robot = execute_velocity(&robot, VelocityCommand::new(5.0, 0.0, 0.0), 0.01, Gait::Walk, &params);
        assert!(robot.realized.planar_speed() <= Gait::Walk.max_speed() + 1e-12);
    }
    assert_eq!(Gait::for_speed(1.2), Gait::FastWalk);
    assert_eq!(Gait::for_speed(1.8), Gait::Run);
}
