//! Layer L1 math: fire severity, thermal differencing, anomaly regioning,
//! pinhole back-projection, pipe-axis profiling and re-identification matching.
//!
//! Everything here is a pure function of its inputs.

use crate::geometry::polyline_length;
use crate::memory::PersonnelDb;
use crate::worldsim::Pipe;
use base64::Engine;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use thiserror::Error;

/// Default over-baseline temperature that triggers an anomaly, °C.
pub const DEFAULT_WARNING_DELTA_C: f64 = 15.0;
/// Default cosine-similarity acceptance threshold for re-identification.
pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.7;

#[derive(Debug, Error, PartialEq)]
pub enum PerceptionError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape mismatch: {left:?} vs {right:?}")]
    Shape {
        left: (usize, usize),
        right: (usize, usize),
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionClass {
    Fire,
    Smoke,
    Person,
}

/// Pixel bounding box: top-left corner plus extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.u + self.w / 2.0, self.v + self.h / 2.0)
    }

    /// Intersection with the `[0,width]x[0,height]` frame, if non-empty.
    pub fn clip(&self, width: f64, height: f64) -> Option<BBox> {
        let u0 = self.u.max(0.0);
        let v0 = self.v.max(0.0);
        let u1 = (self.u + self.w).min(width);
        let v1 = (self.v + self.h).min(height);
        (u1 > u0 && v1 > v0).then(|| BBox {
            u: u0,
            v: v0,
            w: u1 - u0,
            h: v1 - v0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class: DetectionClass,
    pub bbox: BBox,
    pub confidence: f64,
    /// Ground-truth entity the emulated detector saw. Never read by the decision layer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_id: Option<String>,
}

/// Row-major temperature image in °C.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalImage {
    pub width: usize,
    pub height: usize,
    pub temps: Vec<f64>,
}

impl ThermalImage {
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            temps: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, temps: Vec<f64>) -> Result<Self, PerceptionError> {
        if width == 0 || height == 0 || temps.len() != width * height {
            return Err(PerceptionError::Shape {
                left: (width, height),
                right: (temps.len(), 1),
            });
        }
        if temps.iter().any(|t| !t.is_finite()) {
            return Err(PerceptionError::Domain("non-finite temperature".into()));
        }
        Ok(Self {
            width,
            height,
            temps,
        })
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.temps[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.temps[y * self.width + x] = value;
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn max(&self) -> f64 {
        self.temps.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.temps.iter().fold(0.0_f64, |m, t| m.max(t.abs()))
    }

    fn encode_temps(&self) -> String {
        let mut bytes = Vec::with_capacity(self.temps.len() * 8);
        for t in &self.temps {
            bytes.extend_from_slice(&t.to_le_bytes());
        }
        base64::engine::general_purpose::STANDARD.encode(bytes)
    }
}

#[derive(Serialize, Deserialize)]
struct ThermalImageRepr {
    width: usize,
    height: usize,
    /// base64 of little-endian f64 values, row-major
    temps_f64le: String,
}

impl Serialize for ThermalImage {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ThermalImageRepr {
            width: self.width,
            height: self.height,
            temps_f64le: self.encode_temps(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ThermalImage {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = ThermalImageRepr::deserialize(d)?;
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(repr.temps_f64le.as_bytes())
            .map_err(D::Error::custom)?;
        if bytes.len() % 8 != 0 {
            return Err(D::Error::custom("thermal payload is not a whole number of f64 values"));
        }
        let temps = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        ThermalImage::from_vec(repr.width, repr.height, temps).map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Default for CameraIntrinsics {
    /// 1280x720 colour stream.
    fn default() -> Self {
        Self {
            fx: 640.0,
            fy: 640.0,
            cx: 640.0,
            cy: 360.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalProfile {
    pub positions: Vec<f64>,
    pub temps: Vec<f64>,
    pub peak_index: usize,
}

impl ThermalProfile {
    pub fn peak_position(&self) -> f64 {
        self.positions[self.peak_index]
    }

    pub fn peak_temp(&self) -> f64 {
        self.temps[self.peak_index]
    }
}

/// A 4-connected set of above-threshold pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyRegion {
    /// (x, y) pixel coordinates in scan order.
    pub pixels: Vec<(usize, usize)>,
    pub centroid: (f64, f64),
    pub max_delta: f64,
    /// Pixel holding `max_delta` (first in scan order).
    pub peak_pixel: (usize, usize),
}

/// Area-ratio severity: `(det_area / frame_area) * confidence`.
pub fn fire_severity(det_area: f64, frame_area: f64, confidence: f64) -> Result<f64, PerceptionError> {
    if !(frame_area > 0.0) {
        return Err(PerceptionError::Domain(format!("frame area must be positive, got {frame_area}")));
    }
    if !(0.0..=frame_area).contains(&det_area) {
        return Err(PerceptionError::Domain(format!(
            "detection area {det_area} outside [0, {frame_area}]"
        )));
    }
    if !(0.0..=1.0).contains(&confidence) {
        return Err(PerceptionError::Domain(format!("confidence {confidence} outside [0, 1]")));
    }
    Ok(det_area / frame_area * confidence)
}

pub fn thermal_diff(current: &ThermalImage, baseline: &ThermalImage) -> Result<ThermalImage, PerceptionError> {
    if current.dims() != baseline.dims() {
        return Err(PerceptionError::Shape {
            left: current.dims(),
            right: baseline.dims(),
        });
    }
    let temps = current
        .temps
        .iter()
        .zip(&baseline.temps)
        .map(|(c, b)| c - b)
        .collect();
    Ok(ThermalImage {
        width: current.width,
        height: current.height,
        temps,
    })
}

/// Connected components of `{ΔT > warning}`, largest peak first.
pub fn anomaly_regions(delta: &ThermalImage, warning: f64) -> Result<Vec<AnomalyRegion>, PerceptionError> {
    if !(warning > 0.0) {
        return Err(PerceptionError::Domain(format!("warning threshold must be positive, got {warning}")));
    }
    let (w, h) = delta.dims();
    let hot = |x: usize, y: usize| delta.get(x, y) > warning;
    let mut seen = vec![false; w * h];
    let mut regions = Vec::new();
    let mut queue = VecDeque::new();

    for y in 0..h {
        for x in 0..w {
            if seen[y * w + x] || !hot(x, y) {
                continue;
            }
            seen[y * w + x] = true;
            queue.push_back((x, y));
            let mut pixels = Vec::new();
            while let Some((px, py)) = queue.pop_front() {
                pixels.push((px, py));
                let mut visit = |nx: usize, ny: usize| {
                    let i = ny * w + nx;
                    if !seen[i] && hot(nx, ny) {
                        seen[i] = true;
                        queue.push_back((nx, ny));
                    }
                };
                if px > 0 {
                    visit(px - 1, py);
                }
                if px + 1 < w {
                    visit(px + 1, py);
                }
                if py > 0 {
                    visit(px, py - 1);
                }
                if py + 1 < h {
                    visit(px, py + 1);
                }
            }
            pixels.sort_by_key(|&(px, py)| (py, px));
            let n = pixels.len() as f64;
            let (sx, sy) = pixels
                .iter()
                .fold((0.0, 0.0), |(sx, sy), &(px, py)| (sx + px as f64, sy + py as f64));
            let mut peak_pixel = pixels[0];
            let mut max_delta = delta.get(peak_pixel.0, peak_pixel.1);
            for &(px, py) in &pixels[1..] {
                let d = delta.get(px, py);
                if d > max_delta {
                    max_delta = d;
                    peak_pixel = (px, py);
                }
            }
            regions.push(AnomalyRegion {
                pixels,
                centroid: (sx / n, sy / n),
                max_delta,
                peak_pixel,
            });
        }
    }
    // stable: equal peaks keep scan order
    regions.sort_by(|a, b| b.max_delta.total_cmp(&a.max_delta));
    Ok(regions)
}

/// Pixel plus depth to camera-frame point: `Z * K^-1 [u v 1]^T`.
pub fn backproject(u: f64, v: f64, depth: f64, k: &CameraIntrinsics) -> Result<[f64; 3], PerceptionError> {
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(PerceptionError::Domain(format!("depth must be positive, got {depth}")));
    }
    Ok([depth * (u - k.cx) / k.fx, depth * (v - k.cy) / k.fy, depth])
}

/// Camera-frame point to pixel; inverse of [`backproject`].
pub fn project(point: [f64; 3], k: &CameraIntrinsics) -> Result<(f64, f64), PerceptionError> {
    let [x, y, z] = point;
    if !(z > 0.0) {
        return Err(PerceptionError::Domain(format!("point behind camera (Z = {z})")));
    }
    Ok((k.fx * x / z + k.cx, k.fy * y / z + k.cy))
}

/// Samples the pipe's segment temperatures at every multiple of `step` along its
/// axis, interpolating linearly between stored samples.
pub fn thermal_profile(pipe: &Pipe, step: f64) -> Result<ThermalProfile, PerceptionError> {
    if !(step > 0.0) {
        return Err(PerceptionError::Domain(format!("profile step must be positive, got {step}")));
    }
    let length = polyline_length(&pipe.polyline);
    let n = (length / step + 1e-9).floor() as usize + 1;
    let mut positions = Vec::with_capacity(n);
    let mut temps = Vec::with_capacity(n);
    for k in 0..n {
        let s = k as f64 * step;
        positions.push(s);
        temps.push(pipe.temp_at(s));
    }
    let mut peak_index = 0;
    for (i, t) in temps.iter().enumerate() {
        if *t > temps[peak_index] {
            peak_index = i;
        }
    }
    Ok(ThermalProfile {
        positions,
        temps,
        peak_index,
    })
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, PerceptionError> {
    if a.len() != b.len() {
        return Err(PerceptionError::Shape {
            left: (a.len(), 1),
            right: (b.len(), 1),
        });
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(PerceptionError::Domain("zero-norm embedding".into()));
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Best gallery match at or above `threshold`; ties go to the smaller id.
pub fn match_person(query: &[f64], db: &PersonnelDb, threshold: f64) -> Result<Option<(String, f64)>, PerceptionError> {
    let mut best: Option<(&str, f64)> = None;
    for (id, record) in db.iter() {
        let sim = cosine_similarity(query, &record.embedding)?;
        // BTreeMap order: a later id only wins on strictly higher similarity
        if best.map_or(true, |(_, s)| sim > s) {
            best = Some((id, sim));
        }
    }
    Ok(best
        .filter(|&(_, s)| s >= threshold)
        .map(|(id, s)| (id.to_string(), s)))
}
