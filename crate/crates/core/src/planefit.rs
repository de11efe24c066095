//! Recursive least-squares plane fitting with median quadrant splits.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{ClearError, Result};
use crate::geometry::{compass_bearing, ConvexPolygon, Point2};
use crate::raster::{ClassId, ClassTable};

/// `z = a*x + b*y + c` in map meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Plane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Plane {
    pub fn horizontal(z: f64) -> Self {
        Plane { a: 0.0, b: 0.0, c: z }
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.a * x + self.b * y + self.c
    }

    /// Rise over run, as a fraction.
    pub fn grade(&self) -> f64 {
        self.a.hypot(self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }
}

/// Ordinary least squares plane and its RMSE. Fewer than three points or a
/// rank-deficient design (all points collinear) gives the horizontal plane
/// at the mean height.
pub fn fit_plane(points: &[Point3]) -> Result<(Plane, f64)> {
    if points.is_empty() {
        return Err(ClearError::Empty("plane fit needs at least one point"));
    }
    let plane = solve_centered(points);
    Ok((plane, rmse_of(&plane, points)))
}

fn solve_centered(points: &[Point3]) -> Plane {
    let n = points.len() as f64;
    let (mut mx, mut my, mut mz) = (0.0, 0.0, 0.0);
    for p in points {
        mx += p.x;
        my += p.y;
        mz += p.z;
    }
    mx /= n;
    my /= n;
    mz /= n;
    if points.len() < 3 {
        return Plane::horizontal(mz);
    }
    let (mut sxx, mut sxy, mut syy, mut sxz, mut syz) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy, dz) = (p.x - mx, p.y - my, p.z - mz);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
        sxz += dx * dz;
        syz += dy * dz;
    }
    let det = sxx * syy - sxy * sxy;
    let scale = sxx + syy;
    if scale == 0.0 || det <= 1e-12 * scale * scale {
        return Plane::horizontal(mz);
    }
    let a = (syy * sxz - sxy * syz) / det;
    let b = (sxx * syz - sxy * sxz) / det;
    Plane { a, b, c: mz - a * mx - b * my }
}

pub fn rmse_of(plane: &Plane, points: &[Point3]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let ss: f64 = points
        .iter()
        .map(|p| {
            let r = p.z - plane.eval(p.x, p.y);
            r * r
        })
        .sum();
    (ss / points.len() as f64).sqrt()
}

/// Axis-aligned bounds of a split node; infinite sides are open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Bounds {
    pub const UNBOUNDED: Bounds = Bounds { x_lo: f64::NEG_INFINITY, x_hi: f64::INFINITY, y_lo: f64::NEG_INFINITY, y_hi: f64::INFINITY };

    pub fn clip(&self, poly: &ConvexPolygon) -> ConvexPolygon {
        poly.clip_rect(self.x_lo, self.x_hi, self.y_lo, self.y_hi)
    }
}

/// One child of a median split: indices into the split input and the
/// child's bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrant {
    pub indices: Vec<usize>,
    pub bounds: Bounds,
}

/// Split coordinate for one axis: the upper median, bumped to the next
/// distinct value when it equals the minimum so that both sides are
/// non-empty. `None` when all values coincide. Returns the threshold and
/// the separating line halfway between the two sides.
fn split_value(mut v: Vec<f64>) -> Option<(f64, f64)> {
    v.sort_by(f64::total_cmp);
    let min = v[0];
    let mut m = v[v.len() / 2];
    if m == min {
        m = *v.iter().find(|&&x| x > min)?;
    }
    let below = v.iter().copied().filter(|&x| x < m).fold(f64::NEG_INFINITY, f64::max);
    Some((m, 0.5 * (below + m)))
}

/// Partition points by `x < x_m` / `x >= x_m` crossed with the same rule on
/// `y`. Empty quadrants are dropped and their area handed to the quadrant
/// sharing their x-half. `None` signals that no axis separates the points.
pub fn quadrant_split(points: &[Point3], parent: Bounds) -> Option<Vec<Quadrant>> {
    if points.len() < 2 {
        return None;
    }
    let xs = split_value(points.iter().map(|p| p.x).collect());
    let ys = split_value(points.iter().map(|p| p.y).collect());
    if xs.is_none() && ys.is_none() {
        return None;
    }
    let mut cells: [Vec<usize>; 4] = Default::default();
    for (i, p) in points.iter().enumerate() {
        let hx = xs.is_some_and(|(m, _)| p.x >= m) as usize;
        let hy = ys.is_some_and(|(m, _)| p.y >= m) as usize;
        cells[hy * 2 + hx].push(i);
    }
    let x_band = |hx: usize| match (xs, hx) {
        (None, _) => (parent.x_lo, parent.x_hi),
        (Some((_, line)), 0) => (parent.x_lo, line),
        (Some((_, line)), _) => (line, parent.x_hi),
    };
    let y_band = |hy: usize| match (ys, hy) {
        (None, _) => (parent.y_lo, parent.y_hi),
        (Some((_, line)), 0) => (parent.y_lo, line),
        (Some((_, line)), _) => (line, parent.y_hi),
    };
    let empty = cells.each_ref().map(|c| c.is_empty());
    let mut out = Vec::with_capacity(4);
    for hy in 0..2 {
        for hx in 0..2 {
            let slot = hy * 2 + hx;
            if empty[slot] {
                continue;
            }
            let (x_lo, x_hi) = x_band(hx);
            // The y-partner in this x-half is empty: take the whole half.
            let (y_lo, y_hi) = if ys.is_some() && empty[(1 - hy) * 2 + hx] { (parent.y_lo, parent.y_hi) } else { y_band(hy) };
            let indices = std::mem::take(&mut cells[slot]);
            out.push(Quadrant { indices, bounds: Bounds { x_lo, x_hi, y_lo, y_hi } });
        }
    }
    (out.len() > 1).then_some(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    /// RMSE tolerance in meters.
    pub epsilon: f64,
    /// Leaves with fewer pixels than this stop splitting.
    pub a_min: usize,
}

impl Default for FitParams {
    fn default() -> Self {
        FitParams { epsilon: 10.0, a_min: 4 }
    }
}

/// An accepted leaf of the recursive fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    /// Indices into the input point list.
    pub indices: Vec<usize>,
    pub plane: Plane,
    pub rmse: f64,
    pub polygon: ConvexPolygon,
    /// Split depth; the input cell is depth 0.
    pub depth: usize,
    pub split_failed: bool,
}

/// Breadth-first recursive fit of one cell. Each leaf's polygon is the parent
/// polygon restricted to the leaf's split bounds, so leaves partition the
/// parent and stay convex.
pub fn recursive_fit(points: &[Point3], parent: &ConvexPolygon, params: &FitParams) -> Result<Vec<Leaf>> {
    if points.is_empty() {
        return Err(ClearError::Empty("recursive fit needs at least one point"));
    }
    if params.epsilon.is_nan() || params.epsilon <= 0.0 || params.a_min < 1 {
        return Err(ClearError::invalid("epsilon must be > 0 and a_min >= 1"));
    }
    let mut leaves = Vec::new();
    let mut queue = VecDeque::new();
    queue.push_back(((0..points.len()).collect::<Vec<_>>(), Bounds::UNBOUNDED, 0usize));
    let mut scratch = Vec::new();
    while let Some((indices, bounds, depth)) = queue.pop_front() {
        scratch.clear();
        scratch.extend(indices.iter().map(|&i| points[i]));
        let (plane, rmse) = fit_plane(&scratch)?;
        let mut split_failed = false;
        if rmse > params.epsilon && indices.len() >= params.a_min {
            match quadrant_split(&scratch, bounds) {
                Some(children) => {
                    for q in children {
                        let sub = q.indices.iter().map(|&j| indices[j]).collect();
                        queue.push_back((sub, q.bounds, depth + 1));
                    }
                    continue;
                }
                None => split_failed = true,
            }
        }
        let polygon = bounds.clip(parent);
        debug_assert!(!polygon.is_empty(), "leaf polygon vanished");
        leaves.push(Leaf { indices, plane, rmse, polygon, depth, split_failed });
    }
    Ok(leaves)
}

/// A planar terrain region with its encoded attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: usize,
    pub plane: Plane,
    pub polygon: ConvexPolygon,
    pub centroid: Point2,
    /// Dominant landcover class.
    pub landcover: ClassId,
    pub grade_pct: f64,
    /// Compass bearing of steepest descent; 0 when `flat`.
    pub aspect_deg: f64,
    pub flat: bool,
    pub elev_min: f64,
    pub elev_mean: f64,
    pub elev_max: f64,
    pub pixel_count: usize,
    pub rmse: f64,
    pub traversable: bool,
}

/// Most frequent label; ties go to the smallest class id.
pub fn dominant_label(labels: impl IntoIterator<Item = ClassId>) -> Option<ClassId> {
    let mut counts = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_insert(0usize) += 1;
    }
    let mut best: Option<(ClassId, usize)> = None;
    for (l, c) in counts {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((l, c));
        }
    }
    best.map(|(l, _)| l)
}

/// Grades at or below this are treated as horizontal; least-squares round-off
/// on constant heights leaves gradients many orders of magnitude smaller.
pub const FLAT_GRADE: f64 = 1e-12;

/// Downslope compass bearing of a plane, `None` when horizontal.
pub fn aspect_of(plane: &Plane) -> Option<f64> {
    if plane.grade() <= FLAT_GRADE {
        None
    } else {
        Some(compass_bearing(Point2::new(-plane.a, -plane.b)))
    }
}

impl Region {
    /// Builds a region from its member pixel heights and labels.
    #[allow(clippy::too_many_arguments)]
    pub fn from_members(
        id: usize,
        plane: Plane,
        rmse: f64,
        polygon: ConvexPolygon,
        heights: &[f64],
        labels: &[ClassId],
        classes: &ClassTable,
        s_max: f64,
    ) -> Region {
        let count = heights.len();
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for &z in heights {
            lo = lo.min(z);
            hi = hi.max(z);
            sum += z;
        }
        let mean = if count > 0 { sum / count as f64 } else { plane.c };
        if count == 0 {
            lo = mean;
            hi = mean;
        }
        let mut region = Region {
            id,
            plane,
            centroid: polygon.centroid(),
            polygon,
            landcover: dominant_label(labels.iter().copied()).unwrap_or(0),
            grade_pct: 0.0,
            aspect_deg: 0.0,
            flat: true,
            elev_min: lo,
            elev_mean: mean,
            elev_max: hi,
            pixel_count: count,
            rmse,
            traversable: false,
        };
        region_attributes(&mut region, classes, s_max);
        region
    }

    pub fn grade_fraction(&self) -> f64 {
        self.plane.grade()
    }
}

/// Recomputes grade, aspect and traversability from the plane and class.
pub fn region_attributes(region: &mut Region, classes: &ClassTable, s_max: f64) {
    region.grade_pct = 100.0 * region.plane.grade();
    match aspect_of(&region.plane) {
        Some(a) => {
            region.aspect_deg = a;
            region.flat = false;
        }
        None => {
            region.aspect_deg = 0.0;
            region.flat = true;
        }
    }
    region.traversable = region.plane.grade() <= s_max && classes.is_traversable(region.landcover);
}
