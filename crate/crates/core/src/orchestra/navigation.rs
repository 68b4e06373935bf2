//! Goal-directed walking: D* Lite on the inflated belief grid for the route,
//! MPPI for the velocity command, one command per perception tick.

use super::episode::{Episode, NavLeg};
use crate::eventlog::Layer;
use crate::geometry::{wrap_angle, Point2};
use crate::grid::{Cell, OccupancyGrid};
use crate::locomotion::Gait;
use crate::planning::{mppi_step, shift_nominal, GridPlanner, MppiParams, VelocityCommand, WaypointCost};
use crate::rng::{derive_seed, STREAM_MPPI};
use crate::worldsim::ActuationCommand;
use serde_json::json;

pub(super) const SENSE_RADIUS_M: f64 = 3.0;
pub(super) const ARRIVAL_TOLERANCE_M: f64 = 0.25;
const HEADING_TOLERANCE: f64 = 0.05;
const SETTLE_SPEED: f64 = 0.02;
const SETTLE_TICKS: usize = 20;
const HEADING_GAIN: f64 = 2.0;

#[derive(Debug, Clone)]
pub(super) struct NavResult {
    pub leg: NavLeg,
    pub error: Option<String>,
}

/// Cells whose occupancy differs between `a` and `b`, with `b`'s value.
fn grid_diff(a: &OccupancyGrid, b: &OccupancyGrid) -> Vec<(Cell, bool)> {
    (0..a.len())
        .map(|i| a.cell_at(i))
        .filter(|&c| a.is_occupied(c) != b.is_occupied(c))
        .map(|c| (c, b.is_occupied(c)))
        .collect()
}

impl Episode {
    /// Copy world occupancy into the belief grid for cells within `radius` of
    /// the robot. Returns the changed cells.
    pub(super) fn sense_obstacles(&mut self, radius: f64) -> Vec<(Cell, bool)> {
        let grid = &self.world.grid;
        let res = grid.resolution();
        let p = self.world.robot.pose.position();
        let r = (radius / res).ceil() as i64;
        let Some(c0) = grid.cell_of(&p) else {
            return Vec::new();
        };
        let mut changed = Vec::new();
        for dr in -r..=r {
            for dc in -r..=r {
                let (c, rr) = (c0.col as i64 + dc, c0.row as i64 + dr);
                if !grid.in_bounds(c, rr) {
                    continue;
                }
                let cell = Cell::new(c as usize, rr as usize);
                if grid.cell_center(cell).distance(&p) > radius {
                    continue;
                }
                let occ = grid.is_occupied(cell);
                if self.belief.is_occupied(cell) != occ {
                    self.belief.set_occupied(cell, occ);
                    changed.push((cell, occ));
                }
            }
        }
        changed
    }

    /// Walk to `goal`, then turn to `heading`. Time advances tick by tick.
    pub(super) fn navigate(&mut self, goal: Point2, heading: Option<f64>, gait: Gait) -> NavResult {
        let started_at = self.clock();
        let radius = self.world.robot_radius;
        let mut inflated = self.belief.inflate(radius);
        let fail = |msg: String, t: f64| NavResult {
            leg: NavLeg {
                started_at,
                finished_at: t,
                arrived: false,
                path_length: 0.0,
                shortest_length: 0.0,
                replans: 0,
            },
            error: Some(msg),
        };
        let (Some(sc), Some(gc)) = (inflated.cell_of(&self.world.robot.pose.position()), inflated.cell_of(&goal)) else {
            return fail("start or goal outside the map".into(), started_at);
        };
        let (Some(sc), Some(gc)) = (inflated.nearest_free(sc), inflated.nearest_free(gc)) else {
            return fail("no free cell near start or goal".into(), started_at);
        };
        let goal_free = gc == inflated.cell_of(&goal).expect("checked above");
        let goal_point = if goal_free { goal } else { inflated.cell_center(gc) };
        let mut planner = match GridPlanner::new(inflated.clone(), sc, gc) {
            Ok(p) => p,
            Err(e) => return fail(e.to_string(), started_at),
        };
        planner.compute();
        let mut path = match planner.path() {
            Ok(p) => p,
            Err(e) => return fail(e.to_string(), started_at),
        };
        let res = inflated.resolution();
        let shortest = path.length_m(res);

        let params = MppiParams {
            max_speed: gait.max_speed(),
            ..self.config.mppi
        };
        let lookahead = params.max_speed * params.horizon as f64 * params.dt;
        let timeout = started_at + 3.0 * shortest / params.max_speed + 30.0;
        let mut nominal: Vec<VelocityCommand> = vec![VelocityCommand::default(); params.horizon];
        let mut travelled = 0.0;
        let mut replans = 0usize;
        let mut arrived = false;
        let mut error = None;

        loop {
            let pose = self.world.robot.pose;
            let pos = pose.position();
            if pos.distance(&goal_point) <= ARRIVAL_TOLERANCE_M {
                arrived = true;
                break;
            }
            if self.clock() >= timeout.min(self.end_time()) - 1e-9 {
                error = Some("navigation timed out".into());
                break;
            }
            let raw = self.sense_obstacles(SENSE_RADIUS_M);
            if !raw.is_empty() {
                let next = self.belief.inflate(radius);
                let diffs = grid_diff(&inflated, &next);
                inflated = next;
                if !diffs.is_empty() {
                    replans += 1;
                    self.log.push(
                        self.clock(),
                        Layer::Planning,
                        "replan",
                        json!({"changed_cells": raw.len(), "inflated_changes": diffs.len()}),
                    );
                }
                if let Some(c) = inflated.cell_of(&pos).and_then(|c| inflated.nearest_free(c)) {
                    planner.set_start(c);
                }
                match planner.update_and_replan(&diffs) {
                    Ok(p) => path = p,
                    Err(e) => {
                        error = Some(format!("replanning failed: {e}"));
                        break;
                    }
                }
            } else if let Some(c) = inflated.cell_of(&pos).and_then(|c| inflated.nearest_free(c)) {
                if c != planner.start() {
                    planner.set_start(c);
                    planner.compute();
                    if let Ok(p) = planner.path() {
                        path = p;
                    }
                }
            }

            let waypoint = if pos.distance(&goal_point) <= lookahead {
                goal_point
            } else {
                path.cells
                    .iter()
                    .map(|&c| inflated.cell_center(c))
                    .take_while(|p| p.distance(&pos) <= lookahead)
                    .last()
                    .unwrap_or_else(|| inflated.cell_center(*path.cells.get(1).unwrap_or(&path.cells[0])))
            };
            let cost = WaypointCost::new(&inflated, waypoint, &params);
            let seed = derive_seed(self.config.seed, STREAM_MPPI, self.nav_ticks);
            self.nav_ticks += 1;
            let out = match mppi_step(pose, &nominal, &cost, &params, seed) {
                Ok(o) => o,
                Err(e) => {
                    error = Some(e.to_string());
                    break;
                }
            };
            self.world
                .apply_actuation(&ActuationCommand::Velocity { command: out.command, gait })
                .expect("velocity commands are always accepted");
            nominal = shift_nominal(&out.nominal);
            let before = self.world.robot.pose.position();
            let t = self.next_tick_time();
            self.advance_to(t);
            travelled += before.distance(&self.world.robot.pose.position());
        }

        if arrived {
            if let Some(h) = heading {
                while self.clock() < self.end_time() - 1e-9 {
                    let err = wrap_angle(h - self.world.robot.pose.theta);
                    if err.abs() < HEADING_TOLERANCE {
                        break;
                    }
                    let omega = (HEADING_GAIN * err).clamp(-self.world.executor.max_yaw_rate, self.world.executor.max_yaw_rate);
                    self.world
                        .apply_actuation(&ActuationCommand::Velocity {
                            command: VelocityCommand::new(0.0, 0.0, omega),
                            gait,
                        })
                        .expect("velocity commands are always accepted");
                    let t = self.next_tick_time();
                    self.advance_to(t);
                }
            }
        }
        self.world
            .apply_actuation(&ActuationCommand::Velocity {
                command: VelocityCommand::default(),
                gait,
            })
            .expect("velocity commands are always accepted");
        for _ in 0..SETTLE_TICKS {
            let v = self.world.robot.realized;
            if v.planar_speed() < SETTLE_SPEED && v.omega.abs() < SETTLE_SPEED {
                break;
            }
            if self.clock() >= self.end_time() - 1e-9 {
                break;
            }
            let before = self.world.robot.pose.position();
            let t = self.next_tick_time();
            self.advance_to(t);
            travelled += before.distance(&self.world.robot.pose.position());
        }

        let leg = NavLeg {
            started_at,
            finished_at: self.clock(),
            arrived,
            path_length: travelled,
            shortest_length: shortest,
            replans,
        };
        self.log.push(
            self.clock(),
            Layer::Locomotion,
            "nav_leg",
            json!({"arrived": arrived, "path_length": travelled, "shortest_length": shortest, "replans": replans, "duration": leg.duration()}),
        );
        self.nav_legs.push(leg.clone());
        NavResult { leg, error }
    }
}
