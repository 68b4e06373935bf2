//! Emulated RGB-D detector and thermal camera.

use super::FacilityWorld;
use crate::geometry::{Point2, Pose2};
use crate::perception::{BBox, CameraIntrinsics, Detection, DetectionClass, ThermalImage};
use crate::rng::{stream_rng, STREAM_FRAME};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub detection_prob: f64,
    /// Std of additive detector confidence noise.
    pub confidence_jitter: f64,
    pub depth_std: f64,
    pub thermal_std: f64,
    /// Per-dimension std of re-identification embedding noise.
    pub embedding_std: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            detection_prob: 1.0,
            confidence_jitter: 0.0,
            depth_std: 0.0,
            thermal_std: 0.0,
            embedding_std: 0.02,
        }
    }
}

impl NoiseConfig {
    pub fn zero() -> Self {
        Self {
            embedding_std: 0.0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThermalCameraConfig {
    pub width: usize,
    pub height: usize,
    pub hfov_deg: f64,
    pub range_m: f64,
    pub ambient_c: f64,
    pub camera_height: f64,
    pub quantization_c: f64,
    pub pipe_radius: f64,
    pub fire_temp_c: f64,
    pub person_temp_c: f64,
    pub equipment_height: f64,
}

impl Default for ThermalCameraConfig {
    fn default() -> Self {
        Self {
            width: 160,
            height: 120,
            hfov_deg: 57.0,
            range_m: 10.0,
            ambient_c: 22.0,
            camera_height: 1.2,
            quantization_c: 0.1,
            pipe_radius: 0.05,
            fire_temp_c: 300.0,
            person_temp_c: 34.0,
            equipment_height: 1.5,
        }
    }
}

impl ThermalCameraConfig {
    pub fn focal(&self) -> f64 {
        (self.width as f64 / 2.0) / (self.hfov_deg.to_radians() / 2.0).tan()
    }

    pub fn quantize(&self, t: f64) -> f64 {
        if self.quantization_c > 0.0 {
            (t / self.quantization_c).round() * self.quantization_c
        } else {
            t
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    pub hfov_deg: f64,
    pub image_width: usize,
    pub image_height: usize,
    pub camera_height: f64,
    pub fire_range_m: f64,
    pub person_range_m: f64,
    /// Distance at which a fire's `area_ratio` is its apparent frame fraction.
    pub reference_distance_m: f64,
    /// Detections below this confidence are dropped.
    pub min_confidence: f64,
    pub person_height: f64,
    pub person_width: f64,
    pub person_confidence: f64,
    pub smoke_confidence: f64,
    /// Portion of the sight line next to a fire that may be occluded (the burning equipment itself).
    pub fire_los_tail_m: f64,
    pub thermal: ThermalCameraConfig,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            hfov_deg: 87.0,
            image_width: 1280,
            image_height: 720,
            camera_height: 1.2,
            fire_range_m: 10.0,
            person_range_m: 6.0,
            reference_distance_m: 6.2,
            min_confidence: 0.05,
            person_height: 1.7,
            person_width: 0.5,
            person_confidence: 0.9,
            smoke_confidence: 0.85,
            fire_los_tail_m: 1.0,
            thermal: ThermalCameraConfig::default(),
        }
    }
}

impl SensorConfig {
    pub fn intrinsics(&self) -> CameraIntrinsics {
        let f = (self.image_width as f64 / 2.0) / (self.hfov_deg.to_radians() / 2.0).tan();
        CameraIntrinsics {
            fx: f,
            fy: f,
            cx: self.image_width as f64 / 2.0,
            cy: self.image_height as f64 / 2.0,
        }
    }

    pub fn frame_area(&self) -> f64 {
        (self.image_width * self.image_height) as f64
    }

    fn in_fov(&self, forward: f64, left: f64) -> bool {
        forward > 0.0 && left.atan2(forward).abs() <= self.hfov_deg.to_radians() / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    pub timestamp: f64,
    pub detections: Vec<Detection>,
    pub thermal: ThermalImage,
    /// Detection index to forward range, m.
    pub depth_of: BTreeMap<usize, f64>,
}

impl SensorFrame {
    pub fn max_confidence(&self, class: DetectionClass) -> f64 {
        self.detections
            .iter()
            .filter(|d| d.class == class)
            .map(|d| d.confidence)
            .fold(0.0, f64::max)
    }
}

/// One frame from the robot's current pose. The RNG stream is keyed by `seed`
/// alone, so equal `(world, noise, seed)` give equal frames.
pub fn emit_sensor_frame(world: &FacilityWorld, noise: &NoiseConfig, seed: u64) -> SensorFrame {
    let mut rng = stream_rng(seed, STREAM_FRAME, 0);
    let cfg = &world.sensor;
    let k = cfg.intrinsics();
    let pose = world.robot.pose;
    let here = pose.position();
    let (w, h) = (cfg.image_width as f64, cfg.image_height as f64);
    let mut detections = Vec::new();
    let mut depth_of = BTreeMap::new();

    let mut push = |det: Detection, depth: f64, rng: &mut rand_chacha::ChaCha8Rng| {
        let z: f64 = StandardNormal.sample(rng);
        let d = (depth + noise.depth_std * z).max(0.05);
        depth_of.insert(detections.len(), d);
        detections.push(det);
    };

    for fire in &world.fires {
        let keep: f64 = rng.random();
        let j1: f64 = StandardNormal.sample(&mut rng);
        let j2: f64 = StandardNormal.sample(&mut rng);
        let (fwd, left) = pose.to_local(&fire.position);
        let dist = here.distance(&fire.position);
        if !cfg.in_fov(fwd, left) || dist > cfg.fire_range_m || keep >= noise.detection_prob {
            continue;
        }
        if !world.grid.line_of_sight(&here, &fire.position, cfg.fire_los_tail_m) {
            continue;
        }
        let intensity = fire.intensity_at(world.clock, &world.fire_dynamics);
        let scale = (cfg.reference_distance_m / dist.max(0.1)).powi(2);
        let u_c = k.fx * (-left) / fwd + k.cx;

        let apparent = (world.fire_area(fire) * scale).min(1.0);
        let conf = (fire.confidence * intensity + noise.confidence_jitter * j1).clamp(0.0, 1.0);
        if conf >= cfg.min_confidence {
            let bw = apparent.sqrt() * w;
            let bh = apparent.sqrt() * h;
            if let Some(bbox) = (BBox { u: u_c - bw / 2.0, v: k.cy - bh / 2.0, w: bw, h: bh }).clip(w, h) {
                push(
                    Detection {
                        class: DetectionClass::Fire,
                        bbox,
                        confidence: conf,
                        source_id: Some(fire.id.clone()),
                    },
                    fwd,
                    &mut rng,
                );
            }
        }

        let smoke = (fire.smoke_ratio * world.fire_area(fire) / fire.initial_area.max(1e-9) * scale).min(1.0);
        let sconf = (cfg.smoke_confidence * intensity + noise.confidence_jitter * j2).clamp(0.0, 1.0);
        if smoke > 0.0 && sconf >= cfg.min_confidence {
            let bw = smoke.sqrt() * w;
            let bh = smoke.sqrt() * h;
            // smoke sits above the flames
            if let Some(bbox) = (BBox { u: u_c - bw / 2.0, v: k.cy - bh, w: bw, h: bh }).clip(w, h) {
                push(
                    Detection {
                        class: DetectionClass::Smoke,
                        bbox,
                        confidence: sconf,
                        source_id: Some(fire.id.clone()),
                    },
                    fwd,
                    &mut rng,
                );
            }
        }
    }

    for person in &world.persons {
        let keep: f64 = rng.random();
        let j: f64 = StandardNormal.sample(&mut rng);
        let (fwd, left) = pose.to_local(&person.position);
        let dist = here.distance(&person.position);
        if !cfg.in_fov(fwd, left) || dist > cfg.person_range_m || keep >= noise.detection_prob {
            continue;
        }
        if !world.grid.line_of_sight(&here, &person.position, 0.0) {
            continue;
        }
        let conf = (cfg.person_confidence + noise.confidence_jitter * j).clamp(0.0, 1.0);
        if conf < cfg.min_confidence {
            continue;
        }
        let u_c = k.fx * (-left) / fwd + k.cx;
        let bh = k.fy * cfg.person_height / fwd;
        let bw = k.fx * cfg.person_width / fwd;
        let top = k.cy - k.fy * (cfg.person_height - cfg.camera_height) / fwd;
        if let Some(bbox) = (BBox { u: u_c - bw / 2.0, v: top, w: bw, h: bh }).clip(w, h) {
            push(
                Detection {
                    class: DetectionClass::Person,
                    bbox,
                    confidence: conf,
                    source_id: Some(person.id.clone()),
                },
                fwd,
                &mut rng,
            );
        }
    }

    let thermal = render_thermal(world, &pose, noise.thermal_std, &mut rng);
    SensorFrame {
        timestamp: world.clock,
        detections,
        thermal,
        depth_of,
    }
}

struct Canvas<'a> {
    img: ThermalImage,
    depth: Vec<f64>,
    cfg: &'a ThermalCameraConfig,
    focal: f64,
}

/// Depth ties within this band keep the hotter surface.
const DEPTH_TIE_M: f64 = 0.05;

impl Canvas<'_> {
    fn paint(&mut self, u0: f64, u1: f64, v0: f64, v1: f64, depth: f64, temp: f64) {
        let (wd, ht) = (self.img.width as i64, self.img.height as i64);
        let c0 = (u0.floor() as i64).max(0);
        let c1 = (u1.floor() as i64).min(wd - 1);
        let r0 = (v0.floor() as i64).max(0);
        let r1 = (v1.floor() as i64).min(ht - 1);
        for r in r0..=r1 {
            for c in c0..=c1 {
                let i = (r * wd + c) as usize;
                let d = self.depth[i];
                if depth < d - DEPTH_TIE_M {
                    self.depth[i] = depth;
                    self.img.temps[i] = temp;
                } else if depth <= d + DEPTH_TIE_M && temp > self.img.temps[i] {
                    self.depth[i] = self.depth[i].min(depth);
                    self.img.temps[i] = temp;
                }
            }
        }
    }

    fn column(&self, fwd: f64, left: f64) -> f64 {
        self.img.width as f64 / 2.0 - self.focal * left / fwd
    }

    fn row(&self, fwd: f64, z: f64) -> f64 {
        self.img.height as f64 / 2.0 - self.focal * (z - self.cfg.camera_height) / fwd
    }

    fn visible(&self, fwd: f64, left: f64) -> bool {
        fwd > 0.1
            && fwd.hypot(left) <= self.cfg.range_m
            && left.atan2(fwd).abs() <= self.cfg.hfov_deg.to_radians() / 2.0 + 1e-9
    }
}

/// Thermal image from `pose`. Pipes render as thin horizontal strips sampled along
/// their axis, equipment, fires and people as upright boxes. Walls occlude.
pub fn render_thermal<R: Rng>(world: &FacilityWorld, pose: &Pose2, noise_std: f64, rng: &mut R) -> ThermalImage {
    let cfg = &world.sensor.thermal;
    let mut canvas = Canvas {
        img: ThermalImage::filled(cfg.width, cfg.height, cfg.ambient_c),
        depth: vec![f64::INFINITY; cfg.width * cfg.height],
        cfg,
        focal: cfg.focal(),
    };
    let eye = pose.position();
    let seen = |p: &Point2, tail: f64| world.grid.line_of_sight(&eye, p, tail);

    const OFFSETS: [f64; 5] = [-0.04, -0.02, 0.0, 0.02, 0.04];
    for pipe in &world.pipes {
        let len = pipe.length();
        for (i, &temp) in pipe.segment_temps.iter().enumerate() {
            let s0 = pipe.sample_position(i);
            for o in OFFSETS {
                let s = s0 + o;
                if s < 0.0 || s > len {
                    continue;
                }
                let p = pipe.point_at(s);
                let (fwd, left) = pose.to_local(&p);
                if !canvas.visible(fwd, left) || !seen(&p, 0.05) {
                    continue;
                }
                let u = canvas.column(fwd, left);
                let v0 = canvas.row(fwd, pipe.height + cfg.pipe_radius);
                let v1 = canvas.row(fwd, pipe.height - cfg.pipe_radius);
                canvas.paint(u, u, v0, v1, fwd, temp);
            }
        }
    }

    let mut boxes: Vec<(Point2, f64, f64, f64)> = Vec::new();
    for e in &world.equipment {
        if let Some(t) = e.temp_c {
            boxes.push((e.position, e.radius, cfg.equipment_height, t));
        }
    }
    for p in &world.persons {
        boxes.push((p.position, world.sensor.person_width / 2.0, world.sensor.person_height, cfg.person_temp_c));
    }
    for f in &world.fires {
        let area = world.fire_area(f);
        let half = (0.5 * (area / 0.03).sqrt()).min(3.0);
        let intensity = f.intensity_at(world.clock, &world.fire_dynamics);
        let t = cfg.ambient_c + (cfg.fire_temp_c - cfg.ambient_c) * intensity;
        boxes.push((f.position, half, 2.0 * half, t));
    }
    for (center, half, height, temp) in boxes {
        let (fwd, left) = pose.to_local(&center);
        if !canvas.visible(fwd, left) || !seen(&center, half + 0.1) {
            continue;
        }
        let u0 = canvas.column(fwd, left + half);
        let u1 = canvas.column(fwd, left - half);
        let v0 = canvas.row(fwd, height);
        let v1 = canvas.row(fwd, 0.0);
        canvas.paint(u0, u1, v0, v1, fwd, temp);
    }

    let mut img = canvas.img;
    for t in &mut img.temps {
        if noise_std > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            *t += noise_std * z;
        }
        *t = cfg.quantize(*t);
    }
    img
}
