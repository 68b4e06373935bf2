//! Tool implementations. Each reads its inputs at call start, consumes its
//! latency, then applies its effect at completion time.

use super::episode::{DetectionRecord, Episode, ProfileRecord, StoredFrame, StoredImage};
use super::navigation::SENSE_RADIUS_M;
use super::registry::{LatencyModel, ToolDescriptor};
use super::trace::{AlertMessage, HazardKind, Priority, ToolResult};
use crate::eventlog::Layer;
use crate::geometry::{Point2, Pose2};
use crate::locomotion::Gait;
use crate::perception::{
    anomaly_regions, backproject, fire_severity, match_person, thermal_diff, thermal_profile, DetectionClass,
    ThermalProfile,
};
use crate::rng::{stream_rng, STREAM_EMBEDDING, STREAM_THERMAL};
use crate::understanding::{fire_stage, root_cause, temp_rate, time_to_critical};
use crate::worldsim::{render_thermal, ActuationCommand, Pipe};
use rand_distr::{Distribution, Normal};
use serde_json::{json, Value};

/// Registered thermal scans need the robot this close to the inspection pose.
pub(super) const SCAN_REGISTRATION_M: f64 = 0.5;
/// Discharge reaches fires this close to the requested target.
const SUPPRESSION_REACH_M: f64 = 2.0;
const IMMINENT_TTC_S: f64 = 300.0;

type ToolOutcome = Result<Value, String>;

fn arg_str<'a>(args: &'a Value, key: &str) -> Result<&'a str, String> {
    args.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| format!("`{key}` must be a string"))
}

fn arg_f64(args: &Value, key: &str) -> Result<f64, String> {
    args.get(key)
        .and_then(Value::as_f64)
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("`{key}` must be a finite number"))
}

fn opt_f64(args: &Value, key: &str) -> Option<f64> {
    args.get(key).and_then(Value::as_f64).filter(|x| x.is_finite())
}

fn arg_bool(args: &Value, key: &str) -> Result<bool, String> {
    args.get(key)
        .and_then(Value::as_bool)
        .ok_or_else(|| format!("`{key}` must be a boolean"))
}

fn arg_point(args: &Value, key: &str) -> Result<Point2, String> {
    args.get(key)
        .and_then(|v| serde_json::from_value::<Point2>(v.clone()).ok())
        .filter(Point2::is_finite)
        .ok_or_else(|| format!("`{key}` must be a point [x, y]"))
}

fn fixed_latency(desc: &ToolDescriptor) -> f64 {
    match desc.latency {
        LatencyModel::Fixed { seconds } => seconds,
        _ => 0.0,
    }
}

impl Episode {
    pub(super) fn run_tool(&mut self, desc: &ToolDescriptor, args: &Value) -> ToolResult {
        let out = match desc.name {
            "fire_smoke" => self.tool_detect(desc, &[DetectionClass::Fire, DetectionClass::Smoke]),
            "person_detect" => self.tool_detect(desc, &[DetectionClass::Person]),
            "depth_localize" => self.tool_depth_localize(desc, args),
            "reid_embed" => self.tool_reid(desc, args),
            "obstacle_scan" => self.tool_obstacle_scan(desc, args),
            "thermal_scan" => self.tool_thermal_scan(desc, args),
            "thermal_mapping" => self.tool_thermal_mapping(desc, args),
            "thermal_trend" => self.tool_thermal_trend(args),
            "fire_severity" => self.tool_fire_severity(desc, args),
            "thermal_hazard" => self.tool_thermal_hazard(desc, args),
            "spill_hazard" => {
                self.elapse(fixed_latency(desc));
                Err("no spill model is available in this facility".into())
            }
            "intruder_threat" => self.tool_intruder_threat(desc, args),
            "time_to_critical" => self.tool_time_to_critical(desc, args),
            "facility_map" => self.tool_facility_map(desc, args),
            "thermal_baselines" => self.tool_baselines(desc, args),
            "personnel_db" => self.tool_personnel(desc, args),
            "zone_schedule" => self.tool_zone_schedule(desc, args),
            "remote_valve" => self.tool_remote_valve(desc, args),
            "fire_suppression" => self.tool_suppression(desc, args),
            "locomotion" => self.tool_locomotion(args),
            "alert_center" => self.tool_alert(desc, args),
            "verbal_warning" => self.tool_verbal_warning(desc, args),
            "power_isolation" => self.tool_power_isolation(desc, args),
            other => Err(format!("tool `{other}` has no implementation")),
        };
        match out {
            Ok(v) => ToolResult::ok(desc.name, v),
            Err(e) => ToolResult::err(Some(desc.name), e),
        }
    }

    fn record_detection(&mut self, kind: HazardKind, frame_t: f64, tool: &str) {
        if self.detections.iter().any(|d| d.kind == kind) {
            return;
        }
        let completed_at = self.clock();
        self.detections.push(DetectionRecord {
            kind,
            frame_t,
            completed_at,
            tool: tool.to_string(),
        });
        if self.milestones.detection.is_none() {
            self.milestones.detection = Some(frame_t);
            self.milestones.detection_complete = Some(completed_at);
        }
        self.log.push(
            completed_at,
            Layer::Perception,
            "hazard_detected",
            json!({"kind": kind, "frame_t": frame_t, "tool": tool}),
        );
    }

    fn tool_detect(&mut self, desc: &ToolDescriptor, classes: &[DetectionClass]) -> ToolOutcome {
        let frame = self.frame.clone();
        let pose = self.world.robot.pose;
        let frame_area = self.world.sensor.frame_area();
        self.elapse(fixed_latency(desc));
        let id = format!("frm-{}", self.call_index);
        let dets: Vec<Value> = frame
            .detections
            .iter()
            .enumerate()
            .filter(|(_, d)| classes.contains(&d.class))
            .map(|(i, d)| json!({"index": i, "class": d.class, "bbox": d.bbox, "confidence": d.confidence}))
            .collect();
        let found = |c: DetectionClass| frame.detections.iter().any(|d| d.class == c);
        let mut v = json!({
            "frame_id": id,
            "frame_t": frame.timestamp,
            "frame_area": frame_area,
            "detections": dets,
        });
        if classes.contains(&DetectionClass::Fire) {
            v["fire_detected"] = json!(found(DetectionClass::Fire));
            let real = frame.detections.iter().any(|d| {
                d.class == DetectionClass::Fire
                    && d.source_id.as_deref().is_some_and(|s| self.world.fire(s).is_some())
            });
            if real {
                self.record_detection(HazardKind::Fire, frame.timestamp, desc.name);
            }
        }
        if classes.contains(&DetectionClass::Person) {
            v["person_detected"] = json!(found(DetectionClass::Person));
            let tod = self.world.time_of_day_start_s + frame.timestamp;
            let intruder = frame.detections.iter().any(|d| {
                d.class == DetectionClass::Person
                    && d.source_id
                        .as_deref()
                        .and_then(|s| self.world.persons.iter().find(|p| p.id == s))
                        .is_some_and(|p| {
                            let z = self.memory.facility.zone_status(&p.position_at(frame.timestamp), tod);
                            super::intruder_alert(z.restricted, z.within_allowed, p.authorized)
                        })
            });
            if intruder {
                self.record_detection(HazardKind::Intruder, frame.timestamp, desc.name);
            }
        }
        self.frames.insert(
            id,
            StoredFrame {
                pose,
                frame,
            },
        );
        Ok(v)
    }

    fn stored_detection(&self, args: &Value) -> Result<(&StoredFrame, usize), String> {
        let id = arg_str(args, "frame_id")?;
        let frame = self.frames.get(id).ok_or_else(|| format!("unknown frame `{id}`"))?;
        let index = args
            .get("index")
            .and_then(Value::as_u64)
            .ok_or("`index` must be a non-negative integer")? as usize;
        if index >= frame.frame.detections.len() {
            return Err(format!("frame `{id}` has no detection {index}"));
        }
        Ok((frame, index))
    }

    fn tool_depth_localize(&mut self, desc: &ToolDescriptor, args: &Value) -> ToolOutcome {
        let (stored, index) = self.stored_detection(args)?;
        let det = &stored.frame.detections[index];
        let depth = *stored.frame.depth_of.get(&index).ok_or("no depth for detection")?;
        let (u, v) = det.bbox.center();
        let k = self.world.sensor.intrinsics();
        let xyz = backproject(u, v, depth, &k).map_err(|e| e.to_string())?;
        let world = stored.pose.to_world(xyz[2], -xyz[0]);
        let range = stored.pose.position().distance(&world);
        self.elapse(fixed_latency(desc));
        Ok(json!({"position": world, "range": range, "camera_xyz": xyz}))
    }

    fn tool_reid(&mut self, desc: &ToolDescriptor, args: &Value) -> ToolOutcome {
        let (stored, index) = self.stored_detection(args)?;
        let det = &stored.frame.detections[index];
        if det.class != DetectionClass::Person {
            return Err("re-identification needs a person detection".into());
        }
        let truth = det
            .source_id
            .as_deref()
            .and_then(|s| self.world.persons.iter().find(|p| p.id == s))
            .map(|p| p.true_embedding.clone())
            .ok_or("detection does not correspond to a visible person")?;
        let std = self.noise.embedding_std;
        let mut rng = stream_rng(self.config.seed, STREAM_EMBEDDING, self.call_index);
        let mut e: Vec<f64> = if std > 0.0 {
            let n = Normal::new(0.0, std).map_err(|e| e.to_string())?;
            truth.iter().map(|x| x + n.sample(&mut rng)).collect()
        } else {
            truth
        };
        let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            e.iter_mut().for_each(|x| *x /= norm);
        }
        self.elapse(fixed_latency(desc));
        let id = format!("emb-{}", self.call_index);
        let dim = e.len();
        self.embeddings.insert(id.clone(), e);
        Ok(json!({"embedding_id": id, "dim": dim}))
    }

    fn tool_obstacle_scan(&mut self, desc: &ToolDescriptor, args: &Value) -> ToolOutcome {
        let radius = opt_f64(args, "radius_m").unwrap_or(SENSE_RADIUS_M);
        if !(radius > 0.0) {
            return Err("`radius_m` must be positive".into());
        }
        let changed = self.sense_obstacles(radius);
        self.elapse(fixed_latency(desc));
        let cells: Vec<Value> = changed.iter().map(|(c, occ)| json!([c.col, c.row, occ])).collect();
        Ok(json!({"changed_cells": changed.len(), "cells": cells}))
    }

    fn tool_thermal_scan(&mut self, desc: &ToolDescriptor, args: &Value) -> ToolOutcome {
        let ip = args.get("inspection_point").and_then(Value::as_str).map(str::to_string);
        let (image, frame_t) = match &ip {
            Some(id) => {
                let pose = self
                    .memory
                    .facility
                    .inspection_points
                    .get(id)
                    .map(|e| e.pose)
                    .ok_or_else(|| format!("unknown inspection point `{id}`"))?;
                let d = pose.position().distance(&self.world.robot.pose.position());
                if d > SCAN_REGISTRATION_M {
                    return Err(format!("robot is {d:.2} m from `{id}`; registered scans need {SCAN_REGISTRATION_M} m"));
                }
                let mut rng = stream_rng(self.config.seed, STREAM_THERMAL, self.call_index);
                (render_thermal(&self.world, &pose, self.noise.thermal_std, &mut rng), self.clock())
            }
            None => (self.frame.thermal.clone(), self.frame.timestamp),
        };
        let max_temp = image.max();
        let hot = ip
            .as_deref()
            .and_then(|id| self.memory.baselines.get(id))
            .and_then(|b| thermal_diff(&image, &b.image).ok())
            .is_some_and(|d| d.max() > self.config.warning_delta_c);
        self.elapse(fixed_latency(desc));
        if hot {
            self.record_detection(HazardKind::Thermal, frame_t, desc.name);
        }
        let id = format!("img-{}", self.call_index);
        self.images.insert(id.clone(), StoredImage { image });
        Ok(json!({"image_id": id, "max_temp": max_temp, "frame_t": frame_t, "inspection_point": ip}))
    }

    fn tool_thermal_hazard(&mut self, desc: &ToolDescriptor, args: &Value) -> ToolOutcome {
        let image_id = arg_str(args, "image_id")?;
        let ip = arg_str(args, "inspection_point")?;
        let image = &self
            .images
            .get(image_id)
            .ok_or_else(|| format!("unknown image `{image_id}`"))?
            .image;
        let baseline = &self
            .memory
            .baselines
            .get(ip)
            .ok_or_else(|| format!("no baseline for `{ip}`"))?
            .image;
        let delta = thermal_diff(image, baseline).map_err(|e| e.to_string())?;
        let regions = anomaly_regions(&delta, self.config.warning_delta_c).map_err(|e| e.to_string())?;
        let pipe_id = self
            .memory
            .facility
            .inspection_points
            .get(ip)
            .map(|e| e.pipe_id.clone())
            .ok_or_else(|| format!("unknown inspection point `{ip}`"))?;
        let limit = self.memory.facility.pipes.get(&pipe_id).map(|p| p.limit_temp);
        let largest = regions.iter().max_by_key(|r| r.pixels.len());
        let max_temp = match largest {
            Some(r) => image.get(r.peak_pixel.0, r.peak_pixel.1),
            None => image.max(),
        };
        let v = json!({
            "max_delta": delta.max(),
            "max_abs_delta": delta.max_abs(),
            "anomaly": !regions.is_empty(),
            "regions": regions,
            "pipe_id": pipe_id,
            "max_temp": max_temp,
            "limit_temp": limit,
            "imminent": limit.is_some_and(|l| max_temp >= l),
        });
        self.elapse(fixed_latency(desc));
        Ok(v)
    }

    fn tool_thermal_mapping(&mut self, desc: &ToolDescriptor, args: &Value) -> ToolOutcome {
        let pipe_id = arg_str(args, "pipe_id")?;
        let pipe = self.world.pipe(pipe_id).ok_or_else(|| format!("unknown pipe `{pipe_id}`"))?;
        let profile = thermal_profile(pipe, crate::worldsim::DEFAULT_PIPE_SAMPLE_STEP).map_err(|e| e.to_string())?;
        let per_m = match desc.latency {
            LatencyModel::PerMeter { seconds_per_m } => seconds_per_m,
            _ => 0.0,
        };
        let latency = match desc.latency {
            LatencyModel::Fixed { seconds } => seconds,
            _ => per_m * pipe.length(),
        };
        let t0 = self.clock();
        let v = json!({
            "pipe_id": pipe_id,
            "positions": profile.positions,
            "temps": profile.temps,
            "peak_index": profile.peak_index,
            "peak_position": profile.peak_position(),
            "peak_temp": profile.peak_temp(),
        });
        self.profiles.push(ProfileRecord {
            t: t0,
            pipe_id: pipe_id.to_string(),
            profile,
        });
        self.elapse(latency);
        Ok(v)
    }

    fn tool_thermal_trend(&mut self, args: &Value) -> ToolOutcome {
        let pipe_id = arg_str(args, "pipe_id")?.to_string();
        let s = arg_f64(args, "arclength")?;
        let window = match self.registry.lookup("thermal_trend").map(|d| d.latency.clone()) {
            Some(LatencyModel::Fixed { seconds }) => seconds,
            _ => arg_f64(args, "window_s")?,
        };
        if !(window > 0.0) {
            return Err("`window_s` must be positive".into());
        }
        let pipe = self.world.pipe(&pipe_id).ok_or_else(|| format!("unknown pipe `{pipe_id}`"))?;
        let t_prev = pipe.temp_at(s);
        self.elapse(window);
        let t_now = self.world.pipe(&pipe_id).expect("pipes are never removed").temp_at(s);
        let rate = temp_rate(t_now, t_prev, window).map_err(|e| e.to_string())?;
        let kind = if rate < 0.0 { "trend_negative" } else { "trend" };
        self.log
            .push(self.clock(), Layer::Understanding, kind, json!({"pipe_id": pipe_id, "arclength": s, "rate": rate}));
        Ok(json!({"t_prev": t_prev, "t_now": t_now, "rate": rate, "window": window}))
    }

    fn tool_fire_severity(&mut self, desc: &ToolDescriptor, args: &Value) -> ToolOutcome {
        let area = arg_f64(args, "det_area")?;
        let frame_area = arg_f64(args, "frame_area")?;
        let conf = arg_f64(args, "confidence")?;
        let score = fire_severity(area, frame_area, conf).map_err(|e| e.to_string())?;
        let smoke = match (opt_f64(args, "smoke_area"), opt_f64(args, "smoke_confidence")) {
            (Some(a), Some(c)) => fire_severity(a, frame_area, c).map_err(|e| e.to_string())?,
            _ => 0.0,
        };
        let t0 = self.clock();
        let ds_dt = match self.severity_prev {
            Some((tp, sp)) if t0 > tp => (score - sp) / (t0 - tp),
            _ => 0.0,
        };
        let first = *self.severity_first.get_or_insert(t0);
        self.severity_prev = Some((t0, score));
        let stage = fire_stage(score, smoke, ds_dt, t0 - first);
        self.elapse(fixed_latency(desc));
        Ok(json!({
            "score": score,
            "smoke_score": smoke,
            "ds_dt": ds_dt,
            "stage": stage,
            "stage_number": stage.number(),
        }))
    }

    fn tool_intruder_threat(&mut self, desc: &ToolDescriptor, args: &Value) -> ToolOutcome {
        let alert = super::intruder_alert(
            arg_bool(args, "restricted")?,
            arg_bool(args, "within_allowed")?,
            arg_bool(args, "authorized")?,
        );
        self.elapse(fixed_latency(desc));
        Ok(json!({"alert": alert}))
    }

    fn tool_time_to_critical(&mut self, desc: &ToolDescriptor, args: &Value) -> ToolOutcome {
        let ttc = time_to_critical(arg_f64(args, "limit")?, arg_f64(args, "current")?, arg_f64(args, "rate")?);
        self.elapse(fixed_latency(desc));
        Ok(json!({"seconds": ttc, "imminent": ttc.is_some_and(|s| s < IMMINENT_TTC_S)}))
    }

    fn tool_facility_map(&mut self, desc: &ToolDescriptor, args: &Value) -> ToolOutcome {
        let map = &self.memory.facility;
        let v = match arg_str(args, "query")? {
            "inspection_point" => {
                let id = arg_str(args, "id")?;
                let e = map
                    .inspection_points
                    .get(id)
                    .ok_or_else(|| format!("unknown inspection point `{id}`"))?;
                json!({"id": id, "pose": e.pose, "pipe_id": e.pipe_id})
            }
            "zone" => {
                let p = arg_point(args, "point")?;
                json!({"zone_id": map.zone_status(&p, self.world.time_of_day()).zone_id})
            }
            "near" => {
                let p = arg_point(args, "point")?;
                let r = arg_f64(args, "radius")?;
                let items: Vec<Value> = map
                    .equipment_near(&p, r)
                    .into_iter()
                    .map(|(id, d, kind)| json!({"id": id, "distance": d, "kind": kind}))
                    .collect();
                json!({"items": items})
            }
            "root_cause" => {
                let pipe_id = arg_str(args, "pipe_id")?;
                let s = arg_f64(args, "arclength")?;
                let r = arg_f64(args, "radius")?;
                let entry = map.pipes.get(pipe_id).ok_or_else(|| format!("unknown pipe `{pipe_id}`"))?;
                let pipe = Pipe::new(pipe_id, entry.polyline.clone(), entry.baseline_temp, entry.limit_temp, 0.0);
                let profile = ThermalProfile {
                    positions: vec![s],
                    temps: vec![entry.baseline_temp],
                    peak_index: 0,
                };
                let position = pipe.point_at(s);
                let cause = root_cause(&profile, &pipe, map, r).map_err(|e| e.to_string())?;
                let cause = cause.map(|(id, kind)| {
                    let d = map.position_of(&id).map_or(0.0, |q| q.distance(&position));
                    json!({"id": id, "kind": kind, "distance": d})
                });
                json!({"cause": cause, "position": position})
            }
            "equipment" => {
                let id = arg_str(args, "id")?;
                if let Some(e) = map.equipment.get(id) {
                    json!({"id": id, "kind": e.kind, "position": e.position, "zone": e.zone})
                } else if let Some(v) = map.valves.get(id) {
                    json!({"id": id, "kind": "valve", "position": v.position, "pipe_id": v.pipe_id})
                } else {
                    return Err(format!("unknown equipment `{id}`"));
                }
            }
            other => return Err(format!("unknown facility_map query `{other}`")),
        };
        self.elapse(fixed_latency(desc));
        Ok(v)
    }

    fn tool_baselines(&mut self, desc: &ToolDescriptor, args: &Value) -> ToolOutcome {
        let ip = arg_str(args, "inspection_point")?;
        let v = match self.memory.baselines.get(ip) {
            Some(b) => json!({"available": true, "captured_at": b.captured_at, "width": b.image.width, "height": b.image.height}),
            None => json!({"available": false, "captured_at": null, "width": null, "height": null}),
        };
        self.elapse(fixed_latency(desc));
        Ok(v)
    }

    fn tool_personnel(&mut self, desc: &ToolDescriptor, args: &Value) -> ToolOutcome {
        let id = arg_str(args, "embedding_id")?;
        let threshold = opt_f64(args, "threshold").unwrap_or(crate::perception::DEFAULT_MATCH_THRESHOLD);
        let e = self.embeddings.get(id).ok_or_else(|| format!("unknown embedding `{id}`"))?;
        let m = match_person(e, &self.memory.personnel, threshold).map_err(|e| e.to_string())?;
        let v = match m {
            Some((pid, sim)) => {
                let authorized = self.memory.personnel.get(&pid).is_some_and(|r| r.authorized);
                json!({"match": pid, "similarity": sim, "authorized": authorized})
            }
            None => json!({"match": null, "similarity": null, "authorized": false}),
        };
        self.elapse(fixed_latency(desc));
        Ok(v)
    }

    fn tool_zone_schedule(&mut self, desc: &ToolDescriptor, args: &Value) -> ToolOutcome {
        let p = arg_point(args, "point")?;
        let tod = self.world.time_of_day();
        let z = self.memory.facility.zone_status(&p, tod);
        self.elapse(fixed_latency(desc));
        Ok(json!({"zone_id": z.zone_id, "restricted": z.restricted, "within_allowed": z.within_allowed, "time_of_day": tod}))
    }

    fn tool_remote_valve(&mut self, desc: &ToolDescriptor, args: &Value) -> ToolOutcome {
        let id = arg_str(args, "valve_id")?.to_string();
        if self.world.valve(&id).is_none() {
            return Err(format!("unknown valve `{id}`"));
        }
        self.elapse(fixed_latency(desc));
        let was_stuck = self.world.valve(&id).is_some_and(|v| v.stuck);
        self.world
            .apply_actuation(&ActuationCommand::ValveReset { valve_id: id.clone() })
            .map_err(|e| e.to_string())?;
        if was_stuck {
            if self.milestones.valve_reset.is_none() {
                self.milestones.valve_reset = Some(self.clock());
            }
            let pipe = self.world.valve(&id).map(|v| v.pipe_id.clone()).expect("checked above");
            self.watch_pipe_recovery(&pipe);
        } else {
            self.wrong_actuations.push(format!("reset of valve {id} that was not stuck"));
        }
        let open = self.world.valve(&id).map(|v| v.open_fraction);
        self.log
            .push(self.clock(), Layer::Worldsim, "valve_reset", json!({"valve_id": id, "was_stuck": was_stuck}));
        Ok(json!({"valve_id": id, "open_fraction": open}))
    }

    fn tool_suppression(&mut self, desc: &ToolDescriptor, args: &Value) -> ToolOutcome {
        let mode = arg_str(args, "mode")?.to_string();
        let target = arg_point(args, "target")?;
        let (arm, discharge) = match desc.latency {
            LatencyModel::Suppression { discharge } => (self.scenario.response.arm_delay_s, discharge),
            LatencyModel::Fixed { seconds } => (seconds, seconds),
            _ => (0.0, 0.0),
        };
        match mode.as_str() {
            "arm" => {
                self.elapse(arm);
                self.armed = true;
                Ok(json!({"mode": "arm", "armed": true, "target": target}))
            }
            "discharge" => {
                if !self.armed {
                    return Err("suppression system is not armed".into());
                }
                self.elapse(discharge);
                self.armed = false;
                let hit = self
                    .world
                    .fires
                    .iter()
                    .filter(|f| f.suppressed_at.is_none())
                    .map(|f| (f.position.distance(&target), f.id.clone()))
                    .filter(|(d, _)| *d <= SUPPRESSION_REACH_M)
                    .min_by(|a, b| a.0.total_cmp(&b.0));
                match hit {
                    Some((_, fire_id)) => {
                        self.world
                            .apply_actuation(&ActuationCommand::FireSuppression { fire_id: fire_id.clone() })
                            .map_err(|e| e.to_string())?;
                        if self.milestones.suppression.is_none() {
                            self.milestones.suppression = Some(self.clock());
                        }
                        self.log
                            .push(self.clock(), Layer::Worldsim, "fire_suppressed", json!({"fire_id": fire_id}));
                        Ok(json!({"mode": "discharge", "discharged": true, "target": target}))
                    }
                    None => {
                        self.wrong_actuations
                            .push(format!("discharge at ({:.2}, {:.2}) with no fire in reach", target.x, target.y));
                        Ok(json!({"mode": "discharge", "discharged": true, "target": target}))
                    }
                }
            }
            other => Err(format!("unknown suppression mode `{other}`")),
        }
    }

    fn tool_locomotion(&mut self, args: &Value) -> ToolOutcome {
        let goal = arg_point(args, "goal")?;
        let heading = opt_f64(args, "heading");
        let gait = match args.get("gait").and_then(Value::as_str).unwrap_or("walk") {
            "walk" => Gait::Walk,
            "fast_walk" => Gait::FastWalk,
            other => return Err(format!("unsupported gait `{other}`")),
        };
        let t0 = self.clock();
        let fixed = match self.registry.lookup("locomotion").map(|d| d.latency.clone()) {
            Some(LatencyModel::Fixed { seconds }) => Some(seconds),
            _ => None,
        };
        if let Some(seconds) = fixed {
            // teleport semantics for fixed-latency ablations
            self.elapse(seconds);
            let theta = heading.unwrap_or(self.world.robot.pose.theta);
            let shortest = self.world.robot.pose.position().distance(&goal);
            self.world.robot.pose = Pose2::new(goal.x, goal.y, theta);
            return Ok(json!({"arrived": true, "path_length": shortest, "shortest_length": shortest, "duration": self.clock() - t0, "replans": 0}));
        }
        let r = self.navigate(goal, heading, gait);
        if let Some(e) = r.error.filter(|_| !r.leg.arrived) {
            return Err(e);
        }
        Ok(json!({
            "arrived": r.leg.arrived,
            "path_length": r.leg.path_length,
            "shortest_length": r.leg.shortest_length,
            "duration": r.leg.duration(),
            "replans": r.leg.replans,
        }))
    }

    fn tool_alert(&mut self, desc: &ToolDescriptor, args: &Value) -> ToolOutcome {
        let priority = Priority::parse(arg_str(args, "priority")?).ok_or("`priority` must be one of P1..P4")?;
        let hazard = HazardKind::parse(arg_str(args, "hazard")?).ok_or("unknown `hazard`")?;
        let location = args.get("location").and_then(|v| serde_json::from_value::<Point2>(v.clone()).ok());
        let payload = args.get("payload").cloned().unwrap_or(Value::Null);
        let latency = match desc.latency {
            LatencyModel::PerHazard {
                fire,
                thermal,
                intruder,
                other,
            } => match hazard {
                HazardKind::Fire => fire,
                HazardKind::Thermal => thermal,
                HazardKind::Intruder => intruder,
                HazardKind::Spill => other,
            },
            LatencyModel::Fixed { seconds } => seconds,
            _ => 0.0,
        };
        self.elapse(latency);
        let t = self.clock();
        let id = format!("alert-{}", self.trace.alerts.len() + 1);
        self.trace.alerts.push(AlertMessage {
            priority,
            hazard,
            location,
            payload,
            sim_time: t,
        });
        if self.milestones.alert.is_none() {
            self.milestones.alert = Some(t);
        }
        self.log.push(
            t,
            Layer::Orchestra,
            "alert",
            json!({"alert_id": id, "priority": priority.as_str(), "hazard": hazard.as_str(), "location": location}),
        );
        Ok(json!({"alert_id": id, "delivered_at": t}))
    }

    fn tool_verbal_warning(&mut self, desc: &ToolDescriptor, args: &Value) -> ToolOutcome {
        let message = arg_str(args, "message")?.to_string();
        self.elapse(fixed_latency(desc));
        if self.milestones.warning.is_none() {
            self.milestones.warning = Some(self.clock());
        }
        self.log
            .push(self.clock(), Layer::Locomotion, "verbal_warning", json!({"message": message}));
        Ok(json!({"delivered": true}))
    }

    fn tool_power_isolation(&mut self, desc: &ToolDescriptor, args: &Value) -> ToolOutcome {
        let zone = arg_str(args, "zone_id")?.to_string();
        if !self.world.power_zones.contains_key(&zone) {
            return Err(format!("unknown power zone `{zone}`"));
        }
        self.elapse(fixed_latency(desc));
        self.world
            .apply_actuation(&ActuationCommand::PowerIsolation { zone_id: zone.clone() })
            .map_err(|e| e.to_string())?;
        Ok(json!({"zone_id": zone, "powered": false}))
    }
}
