//! Planar geometry shared by the world model, memory and planners.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A point in facility coordinates, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(&self, other: &Point2, t: f64) -> Point2 {
        Point2::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Point2::new(v[0], v[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// Planar pose: position plus heading (radians, CCW from +x).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub const fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// Express a world point in this pose's frame: (forward, left).
    pub fn to_local(&self, p: &Point2) -> (f64, f64) {
        let dx = p.x - self.x;
        let dy = p.y - self.y;
        let (s, c) = self.theta.sin_cos();
        (c * dx + s * dy, -s * dx + c * dy)
    }

    /// Inverse of [`Pose2::to_local`].
    pub fn to_world(&self, forward: f64, left: f64) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        Point2::new(
            self.x + c * forward - s * left,
            self.y + s * forward + c * left,
        )
    }
}

impl From<[f64; 3]> for Pose2 {
    fn from(v: [f64; 3]) -> Self {
        Pose2::new(v[0], v[1], v[2])
    }
}

impl From<Pose2> for [f64; 3] {
    fn from(p: Pose2) -> Self {
        [p.x, p.y, p.theta]
    }
}

/// Wrap an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a % (2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r
}

pub fn polyline_length(points: &[Point2]) -> f64 {
    points.windows(2).map(|w| w[0].distance(&w[1])).sum()
}

/// Point at arclength `s` along a polyline; clamps to the ends.
pub fn point_at_arclength(points: &[Point2], s: f64) -> Point2 {
    if points.is_empty() {
        return Point2::default();
    }
    if s <= 0.0 {
        return points[0];
    }
    let mut remaining = s;
    for w in points.windows(2) {
        let seg = w[0].distance(&w[1]);
        if remaining <= seg && seg > 0.0 {
            return w[0].lerp(&w[1], remaining / seg);
        }
        remaining -= seg;
    }
    *points.last().unwrap()
}

/// Closed point-in-polygon test: points on an edge or vertex count as inside.
pub fn point_in_polygon(p: &Point2, polygon: &[Point2]) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        if point_on_segment(p, &polygon[i], &polygon[(i + 1) % n]) {
            return true;
        }
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (&polygon[i], &polygon[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn cross(o: &Point2, a: &Point2, b: &Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

const ON_SEGMENT_EPS: f64 = 1e-9;

fn point_on_segment(p: &Point2, a: &Point2, b: &Point2) -> bool {
    let len = a.distance(b).max(1.0);
    if cross(a, b, p).abs() > ON_SEGMENT_EPS * len {
        return false;
    }
    p.x >= a.x.min(b.x) - ON_SEGMENT_EPS
        && p.x <= a.x.max(b.x) + ON_SEGMENT_EPS
        && p.y >= a.y.min(b.y) - ON_SEGMENT_EPS
        && p.y <= a.y.max(b.y) + ON_SEGMENT_EPS
}

fn segments_intersect(a: &Point2, b: &Point2, c: &Point2, d: &Point2) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && point_on_segment(a, c, d))
        || (d2 == 0.0 && point_on_segment(b, c, d))
        || (d3 == 0.0 && point_on_segment(c, a, b))
        || (d4 == 0.0 && point_on_segment(d, a, b))
}

/// True when no two non-adjacent edges of the closed polygon touch.
pub fn polygon_is_simple(polygon: &[Point2]) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (&polygon[i], &polygon[(i + 1) % n]);
        for j in (i + 1)..n {
            // adjacent edges share a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (&polygon[j], &polygon[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}
