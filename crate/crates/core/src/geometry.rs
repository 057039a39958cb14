//! Planar primitives: points, lines in Hesse normal form, convex bodies.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

/// Angle comparisons after reduction mod pi use this tolerance.
pub const ANGLE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// An un-sensed line in Hesse normal form: `{x : x . (cos phi, sin phi) = r}`
/// with normal angle `phi` in `[0, pi)` and signed offset `r`. The direction
/// vector is `(-sin phi, cos phi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub phi: f64,
    pub r: f64,
}

impl Line {
    /// Construct a line, reducing the normal angle mod pi. A half-turn of
    /// the normal flips the sign of the offset.
    pub fn new(phi: f64, r: f64) -> Result<Line> {
        if !phi.is_finite() || !r.is_finite() {
            return Err(Error::invalid_geometry("line parameters must be finite"));
        }
        let k = (phi / PI).floor();
        let mut phi = phi - k * PI;
        let mut r = if (k as i64) % 2 == 0 { r } else { -r };
        // Round the near-pi remainder down to zero (same line, flipped normal).
        if phi >= PI - ANGLE_TOL {
            phi = 0.0;
            r = -r;
        }
        if phi < 0.0 {
            phi = 0.0;
        }
        Ok(Line { phi, r })
    }

    /// Line through two distinct points.
    pub fn through(a: Point, b: Point) -> Result<Line> {
        let d = b - a;
        if d.norm() == 0.0 {
            return Err(Error::invalid_geometry("points coincide"));
        }
        // Normal is the direction rotated by -90 degrees.
        let phi = d.y.atan2(d.x) + std::f64::consts::FRAC_PI_2;
        let line = Line::new(phi, 0.0)?;
        let r = a.dot(line.normal());
        Ok(Line { r, ..line })
    }

    #[inline]
    pub fn normal(&self) -> Point {
        Point::new(self.phi.cos(), self.phi.sin())
    }

    #[inline]
    pub fn direction(&self) -> Point {
        Point::new(-self.phi.sin(), self.phi.cos())
    }

    /// Point with arclength parameter `t` (t = 0 is the foot of the origin).
    #[inline]
    pub fn point_at(&self, t: f64) -> Point {
        self.normal() * self.r + self.direction() * t
    }

    /// Arclength parameter of the orthogonal projection of `p`.
    #[inline]
    pub fn param_of(&self, p: Point) -> f64 {
        p.dot(self.direction())
    }

    #[inline]
    pub fn signed_distance(&self, p: Point) -> f64 {
        p.dot(self.normal()) - self.r
    }

    #[inline]
    pub fn distance(&self, p: Point) -> f64 {
        self.signed_distance(p).abs()
    }

    /// Orthogonal projection of `p` onto the line.
    pub fn foot(&self, p: Point) -> Point {
        self.point_at(self.param_of(p))
    }

    /// Intersection point, `None` for (near-)parallel lines.
    pub fn intersect(&self, other: &Line) -> Option<Point> {
        let det = (other.phi - self.phi).sin();
        if det.abs() < ANGLE_TOL {
            return None;
        }
        let n1 = self.normal();
        let n2 = other.normal();
        let x = (self.r * n2.y - other.r * n1.y) / det;
        let y = (other.r * n1.x - self.r * n2.x) / det;
        Some(Point::new(x, y))
    }

    /// Chord parameters `(t0, t1)` of the intersection with a disk, `None`
    /// if the line misses it.
    pub fn chord_in_disk(&self, disk: &Disk) -> Option<(f64, f64)> {
        let h = self.signed_distance(disk.center);
        if h.abs() > disk.radius {
            return None;
        }
        let half = (disk.radius * disk.radius - h * h).max(0.0).sqrt();
        let tc = self.param_of(disk.center);
        Some((tc - half, tc + half))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Point, radius: f64) -> Result<Disk> {
        if !(radius > 0.0) || !center.is_finite() || !radius.is_finite() {
            return Err(Error::invalid_geometry("disk needs a finite positive radius"));
        }
        Ok(Disk { center, radius })
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        self.center.dist(p) <= self.radius + tol
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Result<Segment> {
        if a == b {
            return Err(Error::invalid_geometry("segment endpoints coincide"));
        }
        Ok(Segment { a, b })
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    /// Proper or touching intersection test (shared endpoints count).
    pub fn intersects(&self, other: &Segment) -> bool {
        fn orient(a: Point, b: Point, c: Point) -> f64 {
            (b - a).cross(c - a)
        }
        fn on_segment(a: Point, b: Point, p: Point) -> bool {
            orient(a, b, p) == 0.0
                && p.x >= a.x.min(b.x)
                && p.x <= a.x.max(b.x)
                && p.y >= a.y.min(b.y)
                && p.y <= a.y.max(b.y)
        }
        let (p1, q1, p2, q2) = (self.a, self.b, other.a, other.b);
        let d1 = orient(p2, q2, p1);
        let d2 = orient(p2, q2, q1);
        let d3 = orient(p1, q1, p2);
        let d4 = orient(p1, q1, q2);
        if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
            && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
        {
            return true;
        }
        on_segment(p2, q2, p1) || on_segment(p2, q2, q1) || on_segment(p1, q1, p2) || on_segment(p1, q1, q2)
    }

    /// Distance from `p` to the closest point of the segment.
    pub fn distance_to_point(&self, p: Point) -> f64 {
        let d = self.b - self.a;
        let len2 = d.dot(d);
        if len2 == 0.0 {
            return self.a.dist(p);
        }
        let t = ((p - self.a).dot(d) / len2).clamp(0.0, 1.0);
        (self.a + d * t).dist(p)
    }
}

/// Convex body variants accepted by the hitting-measure computations.
#[derive(Clone, Debug, PartialEq)]
pub enum ConvexBody {
    Disk(Disk),
    /// Convex polygon, vertices in counter-clockwise order. A flat (zero
    /// area) polygon is allowed; its perimeter degenerates to twice the
    /// extent, which is exactly the segment rule.
    Polygon(Vec<Point>),
    Segment(Segment),
}

impl ConvexBody {
    pub fn disk(center: Point, radius: f64) -> Result<ConvexBody> {
        Ok(ConvexBody::Disk(Disk::new(center, radius)?))
    }

    pub fn segment(a: Point, b: Point) -> Result<ConvexBody> {
        Ok(ConvexBody::Segment(Segment::new(a, b)?))
    }

    pub fn polygon(vertices: Vec<Point>) -> Result<ConvexBody> {
        if vertices.len() < 3 {
            return Err(Error::invalid_geometry("polygon needs at least 3 vertices"));
        }
        let n = vertices.len();
        let scale: f64 = vertices
            .iter()
            .map(|p| p.norm())
            .fold(1.0f64, f64::max);
        let tol = 1e-12 * scale * scale;
        let mut signed_area = 0.0;
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if (b - a).cross(c - b) < -tol {
                return Err(Error::invalid_geometry("polygon is not convex CCW"));
            }
            signed_area += a.cross(b);
        }
        if signed_area < -tol {
            return Err(Error::invalid_geometry("polygon winds clockwise"));
        }
        Ok(ConvexBody::Polygon(vertices))
    }

    pub fn perimeter(&self) -> f64 {
        match self {
            ConvexBody::Disk(d) => 2.0 * PI * d.radius,
            ConvexBody::Polygon(vs) => {
                let n = vs.len();
                (0..n).map(|i| vs[i].dist(vs[(i + 1) % n])).sum()
            }
            // A segment is a flat body: its boundary is traversed twice.
            ConvexBody::Segment(s) => 2.0 * s.length(),
        }
    }

    /// Interval of signed offsets `r` for which the line with normal `n`
    /// hits the body: the support projection onto `n`.
    pub fn offset_interval(&self, n: Point) -> (f64, f64) {
        match self {
            ConvexBody::Disk(d) => {
                let c = d.center.dot(n);
                (c - d.radius, c + d.radius)
            }
            ConvexBody::Polygon(vs) => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for p in vs {
                    let v = p.dot(n);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                (lo, hi)
            }
            ConvexBody::Segment(s) => {
                let (u, v) = (s.a.dot(n), s.b.dot(n));
                (u.min(v), u.max(v))
            }
        }
    }

    /// Whether a line hits the body.
    pub fn hit_by(&self, line: &Line) -> bool {
        let (lo, hi) = self.offset_interval(line.normal());
        line.r >= lo && line.r <= hi
    }
}
