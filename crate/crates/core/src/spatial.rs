//! Bucketed point-location over a set of convex polygons.

use crate::error::{ClearError, Result};
use crate::geometry::{ConvexPolygon, Point2};

/// Uniform bucket grid over polygon bounding boxes. Polygon order is the id
/// order; lookups prefer the lowest index.
#[derive(Debug, Clone)]
pub struct PolygonIndex {
    polys: Vec<ConvexPolygon>,
    origin: Point2,
    size: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
    tol: f64,
}

impl PolygonIndex {
    /// `tol` is both the containment slack and the gap a point may fall into
    /// and still snap to its nearest polygon.
    pub fn new(polys: Vec<ConvexPolygon>, tol: f64) -> Self {
        let (mut lo, mut hi) = (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in &polys {
            let b = p.bbox();
            lo = Point2::new(lo.x.min(b.min.x), lo.y.min(b.min.y));
            hi = Point2::new(hi.x.max(b.max.x), hi.y.max(b.max.y));
        }
        if polys.is_empty() || !lo.x.is_finite() {
            return PolygonIndex { polys, origin: Point2::new(0.0, 0.0), size: 1.0, nx: 1, ny: 1, buckets: vec![Vec::new()], tol };
        }
        let w = (hi.x - lo.x).max(tol);
        let h = (hi.y - lo.y).max(tol);
        let size = (w * h / polys.len() as f64).sqrt().max(w.max(h) / 4096.0);
        let nx = ((w / size).ceil() as usize).max(1);
        let ny = ((h / size).ceil() as usize).max(1);
        let mut idx = PolygonIndex { polys, origin: lo, size, nx, ny, buckets: vec![Vec::new(); nx * ny], tol };
        for i in 0..idx.polys.len() {
            let b = idx.polys[i].bbox();
            let (c0, r0) = idx.cell_of(Point2::new(b.min.x - tol, b.min.y - tol));
            let (c1, r1) = idx.cell_of(Point2::new(b.max.x + tol, b.max.y + tol));
            for r in r0..=r1 {
                for c in c0..=c1 {
                    idx.buckets[r * nx + c].push(i);
                }
            }
        }
        idx
    }

    fn cell_of(&self, p: Point2) -> (usize, usize) {
        let fx = ((p.x - self.origin.x) / self.size).floor();
        let fy = ((p.y - self.origin.y) / self.size).floor();
        let c = if fx.is_nan() { 0.0 } else { fx.clamp(0.0, (self.nx - 1) as f64) };
        let r = if fy.is_nan() { 0.0 } else { fy.clamp(0.0, (self.ny - 1) as f64) };
        (c as usize, r as usize)
    }

    fn candidates(&self, p: Point2) -> &[usize] {
        let (c, r) = self.cell_of(p);
        &self.buckets[r * self.nx + c]
    }

    /// Lowest-index polygon containing `p`, else the nearest one within the
    /// snap tolerance.
    pub fn locate(&self, p: Point2) -> Option<usize> {
        let cands = self.candidates(p);
        if let Some(&i) = cands.iter().filter(|&&i| self.polys[i].contains(p, 1e-3 * self.tol)).min() {
            return Some(i);
        }
        let mut best: Option<(f64, usize)> = None;
        for &i in cands {
            let d = self.polys[i].distance_to(p);
            if d <= self.tol && best.is_none_or(|(bd, bi)| d < bd || (d == bd && i < bi)) {
                best = Some((d, i));
            }
        }
        best.map(|(_, i)| i)
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    /// Nearest polygon by boundary distance, scanning everything.
    pub fn nearest(&self, p: Point2) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (i, poly) in self.polys.iter().enumerate() {
            let d = poly.distance_to(p);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
        best.map(|(_, i)| i)
    }
}

/// Pixel-to-polygon ownership for a tile.
pub struct Ownership {
    /// Row-major polygon index per pixel.
    pub owner: Vec<usize>,
    /// Pixels whose centers fell in no polygon and were filled from the
    /// nearest one.
    pub gaps: usize,
}

impl Ownership {
    pub fn gap_fraction(&self) -> f64 {
        if self.owner.is_empty() {
            0.0
        } else {
            self.gaps as f64 / self.owner.len() as f64
        }
    }
}

/// Assigns every pixel center of a `w x h` raster to the polygon containing
/// it (lowest index on shared boundaries); uncovered pixels go to the
/// nearest polygon.
pub fn pixel_ownership(w: usize, h: usize, cs: f64, polys: &[&ConvexPolygon]) -> Result<Ownership> {
    if polys.is_empty() {
        return Err(ClearError::Empty("no polygons to rasterize"));
    }
    let tol = 1e-9 * cs;
    let center = |r: usize, c: usize| Point2::new((c as f64 + 0.5) * cs, (r as f64 + 0.5) * cs);
    let mut owner = vec![usize::MAX; w * h];
    for (i, poly) in polys.iter().enumerate() {
        let b = poly.bbox();
        let c0 = ((b.min.x / cs - 0.5).ceil().max(0.0)) as usize;
        let r0 = ((b.min.y / cs - 0.5).ceil().max(0.0)) as usize;
        let c1 = (b.max.x / cs - 0.5).floor();
        let r1 = (b.max.y / cs - 0.5).floor();
        if c1 < 0.0 || r1 < 0.0 {
            continue;
        }
        let c1 = (c1 as usize).min(w.saturating_sub(1));
        let r1 = (r1 as usize).min(h.saturating_sub(1));
        for r in r0..=r1 {
            for c in c0..=c1 {
                let k = r * w + c;
                if owner[k] == usize::MAX && poly.contains(center(r, c), tol) {
                    owner[k] = i;
                }
            }
        }
    }
    let mut gaps = 0;
    let index = PolygonIndex::new(polys.iter().map(|&p| p.clone()).collect(), cs);
    for r in 0..h {
        for c in 0..w {
            let k = r * w + c;
            if owner[k] == usize::MAX {
                gaps += 1;
                let p = center(r, c);
                owner[k] = index.locate(p).or_else(|| index.nearest(p)).expect("polygons are non-empty");
            }
        }
    }
    Ok(Ownership { owner, gaps })
}
