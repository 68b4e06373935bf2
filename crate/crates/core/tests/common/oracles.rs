//! Independent reference implementations shared by the test targets.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use safeguard_core::geometry::Pose2;
use safeguard_core::grid::{Cell, OccupancyGrid};
use safeguard_core::locomotion::{execute_velocity, ExecutorParams, GainSet, Gait, JointState, RewardWeights, RobotState, NUM_JOINTS};
use safeguard_core::planning::{PathCost, VelocityCommand};
use std::collections::BinaryHeap;

/// Textbook Dijkstra over the same lattice rules, costs kept as (axis, diag) counts.
pub fn dijkstra(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Option<(i64, i64)> {
    let (w, h) = (grid.width() as i64, grid.height() as i64);
    let free = |c: i64, r: i64| c >= 0 && r >= 0 && c < w && r < h && !grid.is_occupied(Cell::new(c as usize, r as usize));
    let idx = |c: i64, r: i64| (r * w + c) as usize;
    let mut best: Vec<Option<(i64, i64)>> = vec![None; (w * h) as usize];
    #[derive(PartialEq)]
    struct Item(f64, i64, i64, i64, i64);
    impl Eq for Item {}
    impl PartialOrd for Item {
        fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for Item {
        fn cmp(&self, o: &Self) -> std::cmp::Ordering {
            o.0.total_cmp(&self.0)
        }
    }
    let mut heap = BinaryHeap::new();
    let (sc, sr) = (start.col as i64, start.row as i64);
    best[idx(sc, sr)] = Some((0, 0));
    heap.push(Item(0.0, 0, 0, sc, sr));
    while let Some(Item(d, a, b, c, r)) = heap.pop() {
        if let Some((ba, bb)) = best[idx(c, r)] {
            if (ba as f64 + bb as f64 * 2f64.sqrt()) < d - 1e-12 {
                continue;
            }
        }
        if c == goal.col as i64 && r == goal.row as i64 {
            return Some((a, b));
        }
        for dc in -1..=1 {
            for dr in -1..=1 {
                if dc == 0 && dr == 0 {
                    continue;
                }
                let (nc, nr) = (c + dc, r + dr);
                if !free(nc, nr) {
                    continue;
                }
                let diag = dc != 0 && dr != 0;
                if diag && (!free(c + dc, r) || !free(c, r + dr)) {
                    continue;
                }
                let (na, nb) = if diag { (a, b + 1) } else { (a + 1, b) };
                let nd = na as f64 + nb as f64 * 2f64.sqrt();
                let better = match best[idx(nc, nr)] {
                    None => true,
                    Some((oa, ob)) => nd < oa as f64 + ob as f64 * 2f64.sqrt() - 1e-12,
                };
                if better {
                    best[idx(nc, nr)] = Some((na, nb));
                    heap.push(Item(nd, na, nb, nc, nr));
                }
            }
        }
    }
    None
}

pub fn random_grid(rng: &mut ChaCha8Rng) -> (OccupancyGrid, Cell, Cell) {
    let w = rng.random_range(2..=20);
    let h = rng.random_range(2..=20);
    let density = rng.random_range(0.0..0.4);
    let mut g = OccupancyGrid::new(w, h, 0.1);
    for r in 0..h {
        for c in 0..w {
            if rng.random::<f64>() < density {
                g.set_occupied(Cell::new(c, r), true);
            }
        }
    }
    let start = Cell::new(rng.random_range(0..w), rng.random_range(0..h));
    let goal = Cell::new(rng.random_range(0..w), rng.random_range(0..h));
    g.set_occupied(start, false);
    g.set_occupied(goal, false);
    (g, start, goal)
}

pub fn pair(c: PathCost) -> Option<(i64, i64)> {
    match c {
        PathCost::Finite { axis, diag } => Some((axis, diag)),
        PathCost::Infinite => None,
    }
}

pub fn vec_of(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

pub fn random_joints(rng: &mut ChaCha8Rng) -> JointState {
    JointState::new(
        vec_of(rng, NUM_JOINTS, 1.5),
        vec_of(rng, NUM_JOINTS, 5.0),
        vec_of(rng, NUM_JOINTS, 50.0),
        vec_of(rng, NUM_JOINTS, 0.5),
    )
    .unwrap()
}

// Scalar-loop oracles, written index by index with no iterator adapters.

pub fn oracle_track(v: [f64; 2], c: [f64; 2], w: f64, wc: f64, p: &RewardWeights) -> f64 {
    let mut e = 0.0;
    let mut i = 0;
    while i < 2 {
        let d = v[i] - c[i];
        e += d * d;
        i += 1;
    }
    let dw = w - wc;
    p.w_v * f64::exp(-e / p.sigma_v) + p.w_omega * f64::exp(-(dw * dw) / p.sigma_omega)
}

pub fn oracle_reg(tau: &[f64], acc: &[f64], fv: &[f64], ct: &[bool], p: &RewardWeights) -> f64 {
    let mut t2 = 0.0;
    let mut a2 = 0.0;
    let mut s = 0.0;
    for i in 0..tau.len() {
        t2 += tau[i] * tau[i];
    }
    for i in 0..acc.len() {
        a2 += acc[i] * acc[i];
    }
    for i in 0..fv.len() {
        if ct[i] {
            s += fv[i] * fv[i];
        }
    }
    -p.w_torque * t2 - p.w_qddot * a2 - p.w_slip * s
}

pub fn oracle_style(gz: f64, feet: &[f64], h: f64, p: &RewardWeights) -> f64 {
    let mut e = 0.0;
    for i in 0..feet.len() {
        e += (feet[i] - h) * (feet[i] - h);
    }
    p.w_upright * (gz + 1.0) + p.w_feet * f64::exp(-e)
}

pub fn oracle_pd(a: &[f64], j: &JointState, g: &GainSet) -> Vec<f64> {
    let mut out = vec![0.0; NUM_JOINTS];
    for i in 0..NUM_JOINTS {
        let target = a[i] * g.action_scale + j.q_default[i];
        out[i] = g.kp[i] * (target - j.q[i]) - g.kd[i] * j.qdot[i];
    }
    out
}

pub fn oracle_return(r: &[f64], gamma: f64) -> f64 {
    let mut g = 0.0;
    let mut k = 1.0;
    for x in r {
        g += k * x;
        k *= gamma;
    }
    g
}

/// Steady-state forward-speed error under a held 1 m/s command.
pub fn tracking_rmse(seconds: f64, warmup: f64) -> f64 {
    let params = ExecutorParams::default();
    let dt = 0.01;
    let cmd = VelocityCommand::new(1.0, 0.0, 0.0);
    let mut robot = RobotState::at(Pose2::new(0.0, 0.0, 0.0));
    let (mut se, mut n) = (0.0, 0usize);
    let steps = (seconds / dt).round() as usize;
    for k in 0..steps {
        robot = execute_velocity(&robot, cmd, dt, Gait::Walk, &params);
        if k as f64 * dt >= warmup {
            se += (robot.realized.vx - 1.0).powi(2) + robot.realized.vy.powi(2);
            n += 1;
        }
    }
    (se / n as f64).sqrt()
}

