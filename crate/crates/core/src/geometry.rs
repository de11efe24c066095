//! Planar geometry on convex polygons in map coordinates (meters).
//!
//! Map frame: `x` grows with raster column, `y` grows with raster row, and a
//! pixel `(row, col)` covers `[col, col+1] x [row, row+1]` scaled by the cell
//! size. Rings are stored counter-clockwise in this frame (positive signed
//! area by the shoelace formula).

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Point2 { x: v[0], y: v[1] }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn dist_sq(self, o: Point2) -> f64 {
        let d = self - o;
        d.dot(d)
    }

    pub fn midpoint(self, o: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

/// Compass bearing in degrees `[0, 360)` of the direction `d`, with 0 = north
/// (decreasing `y`) and 90 = east (increasing `x`).
pub fn compass_bearing(d: Point2) -> f64 {
    let deg = d.x.atan2(-d.y).to_degrees();
    let wrapped = deg.rem_euclid(360.0);
    if wrapped >= 360.0 {
        0.0
    } else {
        wrapped
    }
}

/// Axis-aligned bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Point2,
    pub max: Point2,
}

impl BBox {
    pub fn intersects(&self, o: &BBox, tol: f64) -> bool {
        self.min.x <= o.max.x + tol && o.min.x <= self.max.x + tol && self.min.y <= o.max.y + tol && o.min.y <= self.max.y + tol
    }

    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        p.x >= self.min.x - tol && p.x <= self.max.x + tol && p.y >= self.min.y - tol && p.y <= self.max.y + tol
    }
}

/// A closed half-plane `{p : n·p <= offset}`.
#[derive(Debug, Clone, Copy)]
pub struct HalfPlane {
    pub normal: Point2,
    pub offset: f64,
}

impl HalfPlane {
    /// Points at least as close to `a` as to `b`.
    pub fn closer_to(a: Point2, b: Point2) -> Self {
        let normal = b - a;
        let mid = a.midpoint(b);
        HalfPlane { normal, offset: normal.dot(mid) }
    }

    fn eval(&self, p: Point2) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// A convex polygon stored as a counter-clockwise vertex ring without the
/// closing repeat.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConvexPolygon {
    pub vertices: Vec<Point2>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Point2>) -> Self {
        let mut poly = ConvexPolygon { vertices };
        if poly.signed_area() < 0.0 {
            poly.vertices.reverse();
        }
        poly
    }

    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        ConvexPolygon { vertices: vec![Point2::new(x0, y0), Point2::new(x1, y0), Point2::new(x1, y1), Point2::new(x0, y1)] }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() < 3
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        if self.vertices.len() < 3 {
            return 0.0;
        }
        0.5 * self.edges().map(|(a, b)| a.cross(b)).sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Area centroid; falls back to the vertex mean for degenerate rings.
    pub fn centroid(&self) -> Point2 {
        let n = self.vertices.len();
        if n == 0 {
            return Point2::default();
        }
        // Shift to the first vertex so large map offsets do not cancel.
        let o = self.vertices[0];
        let mut a2 = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for (p, q) in self.edges() {
            let (p, q) = (p - o, q - o);
            let w = p.cross(q);
            a2 += w;
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        if a2.abs() <= f64::EPSILON * self.perimeter().powi(2) {
            let s = self.vertices.iter().fold(Point2::default(), |acc, &p| acc + p);
            return s * (1.0 / n as f64);
        }
        Point2::new(o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2))
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.dist(b)).sum()
    }

    pub fn bbox(&self) -> BBox {
        let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        BBox { min, max }
    }

    /// Convexity test: every turn of consecutive edges has cross product
    /// `>= -eps`, the ring has positive area, and it winds exactly once.
    pub fn is_convex(&self, eps: f64) -> bool {
        let n = self.vertices.len();
        if n < 3 || self.signed_area() <= 0.0 {
            return false;
        }
        let mut turning = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            let e1 = b - a;
            let e2 = c - b;
            if e1.cross(e2) < -eps {
                return false;
            }
            if e1.norm() > 0.0 && e2.norm() > 0.0 {
                turning += e1.cross(e2).atan2(e1.dot(e2));
            }
        }
        (turning - std::f64::consts::TAU).abs() < 1e-6
    }

    /// Point-in-polygon for a counter-clockwise convex ring; points within
    /// `tol` of the boundary count as inside.
    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        if self.vertices.len() < 3 {
            return false;
        }
        self.edges().all(|(a, b)| {
            let e = b - a;
            let len = e.norm();
            len == 0.0 || e.cross(p - a) >= -tol * len
        })
    }

    /// Euclidean distance from `p` to the polygon (0 inside).
    pub fn distance_to(&self, p: Point2) -> f64 {
        if self.contains(p, 0.0) {
            return 0.0;
        }
        self.edges().map(|(a, b)| point_segment_distance(p, a, b)).fold(f64::INFINITY, f64::min)
    }

    /// Sutherland–Hodgman clip against one half-plane.
    pub fn clip_halfplane(&self, hp: &HalfPlane) -> ConvexPolygon {
        let n = self.vertices.len();
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let fa = hp.eval(a);
            let fb = hp.eval(b);
            if fa <= 0.0 {
                out.push(a);
            }
            if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
                let t = fa / (fa - fb);
                out.push(a + (b - a) * t);
            }
        }
        ConvexPolygon { vertices: dedup_ring(out) }
    }

    /// Keep the part with `lo <= x <= hi` and `lo <= y <= hi` per axis.
    /// Infinite bounds are skipped.
    pub fn clip_rect(&self, x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> ConvexPolygon {
        let mut poly = self.clone();
        let planes = [
            (x_lo.is_finite(), HalfPlane { normal: Point2::new(-1.0, 0.0), offset: -x_lo }),
            (x_hi.is_finite(), HalfPlane { normal: Point2::new(1.0, 0.0), offset: x_hi }),
            (y_lo.is_finite(), HalfPlane { normal: Point2::new(0.0, -1.0), offset: -y_lo }),
            (y_hi.is_finite(), HalfPlane { normal: Point2::new(0.0, 1.0), offset: y_hi }),
        ];
        for (active, hp) in planes {
            if active && !poly.is_empty() {
                poly = poly.clip_halfplane(&hp);
            }
        }
        poly
    }

    /// Intersection of two convex polygons.
    pub fn intersect(&self, other: &ConvexPolygon) -> ConvexPolygon {
        let mut poly = self.clone();
        for (a, b) in other.edges() {
            if poly.is_empty() {
                break;
            }
            // Left of a->b is inside for a counter-clockwise ring.
            let e = b - a;
            let normal = Point2::new(e.y, -e.x);
            poly = poly.clip_halfplane(&HalfPlane { normal, offset: normal.dot(a) });
        }
        poly
    }

    pub fn translate(&self, d: Point2) -> ConvexPolygon {
        ConvexPolygon { vertices: self.vertices.iter().map(|&p| p + d).collect() }
    }

    pub fn scale(&self, s: f64) -> ConvexPolygon {
        ConvexPolygon { vertices: self.vertices.iter().map(|&p| p * s).collect() }
    }
}

/// Intersection-over-union of two convex polygons.
pub fn polygon_iou(a: &ConvexPolygon, b: &ConvexPolygon) -> f64 {
    let inter = a.intersect(b).area();
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let e = b - a;
    let len2 = e.dot(e);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(e) / len2).clamp(0.0, 1.0);
    p.dist(a + e * t)
}

/// Length of the collinear overlap of segments `p1p2` and `q1q2`, with the
/// midpoint of the overlap. `tol` bounds the perpendicular offset.
pub fn collinear_overlap(p1: Point2, p2: Point2, q1: Point2, q2: Point2, tol: f64) -> Option<(f64, Point2)> {
    let e = p2 - p1;
    let len = e.norm();
    if len == 0.0 {
        return None;
    }
    let u = e * (1.0 / len);
    let off1 = u.cross(q1 - p1);
    let off2 = u.cross(q2 - p1);
    if off1.abs() > tol || off2.abs() > tol {
        return None;
    }
    let t1 = u.dot(q1 - p1);
    let t2 = u.dot(q2 - p1);
    let lo = t1.min(t2).max(0.0);
    let hi = t1.max(t2).min(len);
    if hi <= lo {
        return None;
    }
    let mid = p1 + u * (0.5 * (lo + hi));
    Some((hi - lo, mid))
}

fn dedup_ring(mut pts: Vec<Point2>) -> Vec<Point2> {
    let scale = pts.iter().fold(0.0f64, |m, p| m.max(p.x.abs()).max(p.y.abs())).max(1.0);
    let tol = 1e-12 * scale;
    pts.dedup_by(|b, a| a.dist(*b) <= tol);
    while pts.len() > 1 && pts[0].dist(pts[pts.len() - 1]) <= tol {
        pts.pop();
    }
    if pts.len() < 3 {
        pts.clear();
    }
    pts
}
