//! Boundary-seeded decomposition: seed placement over flat ground and
//! landcover boundaries, then a Voronoi tessellation clipped to the tile.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{ClearError, Result};
use crate::geometry::{ConvexPolygon, HalfPlane, Point2};
use crate::raster::{boundary_mask, flat_threshold, local_entropy, StatGrid, TerrainTile};

/// `(row, col)` raster coordinate.
pub type Pixel = (usize, usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedParams {
    /// Target seed count.
    pub n: usize,
    /// Share of seeds reserved for landcover boundaries, in `[0, 1]`.
    pub alpha_bdy: f64,
    /// Minimum spacing between sampled seeds, in pixels.
    pub r_min: f64,
    /// Window size for the entropy and spread statistics.
    pub k: usize,
    /// Apply `r_min` to boundary seeds first, then fill without it.
    pub space_boundary: bool,
}

impl Default for SeedParams {
    fn default() -> Self {
        SeedParams { n: 200, alpha_bdy: 1.0, r_min: 3.0, k: 3, space_boundary: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSet {
    pub seeds: Vec<Pixel>,
    pub n_requested: usize,
    /// Seeds accepted by the spaced flat scan.
    pub n_sampled: usize,
    /// Seeds placed by the flat scan plus flat-component centroids.
    pub n_flat: usize,
    pub alpha_bdy: f64,
    pub r_min: f64,
    pub k: usize,
    /// Fewer distinct pixels than requested seeds.
    pub underfilled: bool,
}

/// Acceptance test for "no seed closer than `r_min`", bucketed by `r_min`.
struct Spacing {
    r_min: f64,
    bucket: f64,
    bw: usize,
    buckets: Vec<Vec<Pixel>>,
}

impl Spacing {
    fn new(width: usize, height: usize, r_min: f64) -> Self {
        let bucket = r_min.max(1.0);
        let bw = (width as f64 / bucket).ceil() as usize + 1;
        let bh = (height as f64 / bucket).ceil() as usize + 1;
        Spacing { r_min, bucket, bw, buckets: vec![Vec::new(); bw * bh] }
    }

    fn key(&self, p: Pixel) -> (usize, usize) {
        ((p.0 as f64 / self.bucket) as usize, (p.1 as f64 / self.bucket) as usize)
    }

    fn accepts(&self, p: Pixel) -> bool {
        if self.r_min <= 0.0 {
            return true;
        }
        let (br, bc) = self.key(p);
        let bh = self.buckets.len() / self.bw;
        let r2 = self.r_min * self.r_min;
        for rr in br.saturating_sub(1)..(br + 2).min(bh) {
            for cc in bc.saturating_sub(1)..(bc + 2).min(self.bw) {
                for q in &self.buckets[rr * self.bw + cc] {
                    let dr = p.0 as f64 - q.0 as f64;
                    let dc = p.1 as f64 - q.1 as f64;
                    if dr * dr + dc * dc < r2 {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn insert(&mut self, p: Pixel) {
        let (br, bc) = self.key(p);
        self.buckets[br * self.bw + bc].push(p);
    }
}

struct SeedBuilder {
    width: usize,
    chosen: Vec<bool>,
    seeds: Vec<Pixel>,
    spacing: Spacing,
}

impl SeedBuilder {
    fn try_add(&mut self, idx: usize, spaced: bool) -> bool {
        let p = (idx / self.width, idx % self.width);
        if self.chosen[idx] || (spaced && !self.spacing.accepts(p)) {
            return false;
        }
        self.chosen[idx] = true;
        self.seeds.push(p);
        self.spacing.insert(p);
        true
    }

    /// Append from `order` until `target` seeds are held.
    fn fill(&mut self, order: &[usize], target: usize, spaced: bool) {
        for &idx in order {
            if self.seeds.len() >= target {
                break;
            }
            self.try_add(idx, spaced);
        }
    }
}

/// Seed placement: a spaced scan of the flattest pixels, centroids of flat
/// single-class components, then boundary pixels by descending landcover
/// entropy. All ties break by `(row, col)`.
pub fn select_seeds(tile: &TerrainTile, sigma: &StatGrid, params: &SeedParams) -> Result<SeedSet> {
    let SeedParams { n, alpha_bdy, r_min, k, space_boundary } = *params;
    if n == 0 {
        return Err(ClearError::invalid("seed count must be >= 1"));
    }
    if !(0.0..=1.0).contains(&alpha_bdy) {
        return Err(ClearError::invalid(format!("alpha_bdy must lie in [0, 1], got {alpha_bdy}")));
    }
    if !(r_min.is_finite() && r_min >= 0.0) {
        return Err(ClearError::invalid(format!("r_min must be >= 0, got {r_min}")));
    }
    let (w, h) = (tile.width(), tile.height());
    if sigma.width != w || sigma.height != h {
        return Err(ClearError::DimensionMismatch {
            left_name: "tile",
            left_rows: h,
            left_cols: w,
            right_name: "sigma",
            right_rows: sigma.height,
            right_cols: sigma.width,
        });
    }
    let entropy = local_entropy(tile, k)?;
    let boundary = boundary_mask(tile);
    let tau = flat_threshold(sigma)?;

    let n_boundary = (alpha_bdy * n as f64 + 0.5).floor() as usize;
    let n_f = n - n_boundary.min(n);

    let mut flat_order: Vec<usize> = (0..w * h).collect();
    flat_order.sort_by(|&a, &b| sigma.values[a].total_cmp(&sigma.values[b]).then(a.cmp(&b)));

    let mut b = SeedBuilder { width: w, chosen: vec![false; w * h], seeds: Vec::with_capacity(n), spacing: Spacing::new(w, h, r_min) };

    b.fill(&flat_order, n_f, true);
    let n_sampled = b.seeds.len();

    if b.seeds.len() < n_f {
        for centroid in flat_component_centroids(tile, sigma, tau) {
            if b.seeds.len() >= n_f {
                break;
            }
            b.try_add(centroid, false);
        }
    }
    let n_flat = b.seeds.len();

    let mut ranked: Vec<usize> = (0..w * h).filter(|&i| boundary.values[i]).collect();
    ranked.sort_by(|&a, &c| entropy.values[c].total_cmp(&entropy.values[a]).then(a.cmp(&c)));
    if space_boundary {
        b.fill(&ranked, n, true);
    }
    b.fill(&ranked, n, false);

    // Boundary pixels exhausted: continue the flat scan, spaced then not.
    b.fill(&flat_order, n, true);
    b.fill(&flat_order, n, false);

    b.seeds.truncate(n);
    Ok(SeedSet { underfilled: b.seeds.len() < n, seeds: b.seeds, n_requested: n, n_sampled, n_flat, alpha_bdy, r_min, k })
}

/// Centroid pixels of 4-connected components of `{sigma <= tau}` sharing one
/// class, in order of each component's first pixel in raster order.
fn flat_component_centroids(tile: &TerrainTile, sigma: &StatGrid, tau: f64) -> Vec<usize> {
    let (w, h) = (tile.width(), tile.height());
    let flat: Vec<bool> = sigma.values.iter().map(|&s| s <= tau).collect();
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    let mut members = Vec::new();
    for start in 0..w * h {
        if seen[start] || !flat[start] {
            continue;
        }
        let class = tile.landcover()[start];
        seen[start] = true;
        stack.push(start);
        members.clear();
        while let Some(i) = stack.pop() {
            members.push(i);
            let (r, c) = (i / w, i % w);
            let mut visit = |j: usize| {
                if !seen[j] && flat[j] && tile.landcover()[j] == class {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if r > 0 {
                visit(i - w);
            }
            if r + 1 < h {
                visit(i + w);
            }
            if c > 0 {
                visit(i - 1);
            }
            if c + 1 < w {
                visit(i + 1);
            }
        }
        let cnt = members.len() as f64;
        let mr = members.iter().map(|&i| (i / w) as f64).sum::<f64>() / cnt;
        let mc = members.iter().map(|&i| (i % w) as f64).sum::<f64>() / cnt;
        let (rr, rc) = (mr.round() as usize, mc.round() as usize);
        let rounded = rr.min(h - 1) * w + rc.min(w - 1);
        let pick = if members.contains(&rounded) {
            rounded
        } else {
            // Non-convex component: nearest member pixel, ties by raster order.
            *members
                .iter()
                .min_by(|&&a, &&b| {
                    let da = ((a / w) as f64 - mr).powi(2) + ((a % w) as f64 - mc).powi(2);
                    let db = ((b / w) as f64 - mr).powi(2) + ((b % w) as f64 - mc).powi(2);
                    da.total_cmp(&db).then(a.cmp(&b))
                })
                .expect("component is non-empty")
        };
        out.push(pick);
    }
    out
}

/// A Voronoi cell clipped to the tile rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexCell {
    pub id: usize,
    pub seed: Pixel,
    pub vertices: ConvexPolygon,
}

/// Uniform bucket grid over seed pixels for nearest-site queries.
pub(crate) struct SiteIndex<'a> {
    sites: &'a [Pixel],
    bucket: usize,
    bw: usize,
    bh: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a> SiteIndex<'a> {
    pub(crate) fn new(sites: &'a [Pixel], width: usize, height: usize) -> Self {
        let per = ((width * height) as f64 / sites.len().max(1) as f64).sqrt();
        let bucket = (per.ceil() as usize).max(1);
        let bw = width.div_ceil(bucket).max(1);
        let bh = height.div_ceil(bucket).max(1);
        let mut buckets = vec![Vec::new(); bw * bh];
        for (i, &(r, c)) in sites.iter().enumerate() {
            buckets[(r / bucket).min(bh - 1) * bw + (c / bucket).min(bw - 1)].push(i);
        }
        SiteIndex { sites, bucket, bw, bh, buckets }
    }

    fn home(&self, p: Pixel) -> (usize, usize) {
        ((p.0 / self.bucket).min(self.bh - 1), (p.1 / self.bucket).min(self.bw - 1))
    }

    /// Visit sites in Chebyshev bucket rings of growing radius around `p`.
    /// `visit` returns `false` to stop once a ring's lower distance bound
    /// (in pixels) is reached.
    fn rings(&self, p: Pixel, mut visit: impl FnMut(usize, f64) -> bool) {
        let (hr, hc) = self.home(p);
        let max_ring = self.bw.max(self.bh);
        for ring in 0..=max_ring {
            let bound = (ring.saturating_sub(1) * self.bucket) as f64;
            let r0 = hr as isize - ring as isize;
            let r1 = hr as isize + ring as isize;
            let c0 = hc as isize - ring as isize;
            let c1 = hc as isize + ring as isize;
            for br in r0..=r1 {
                if br < 0 || br >= self.bh as isize {
                    continue;
                }
                for bc in c0..=c1 {
                    if bc < 0 || bc >= self.bw as isize {
                        continue;
                    }
                    let on_ring = br == r0 || br == r1 || bc == c0 || bc == c1;
                    if !on_ring {
                        continue;
                    }
                    for &s in &self.buckets[br as usize * self.bw + bc as usize] {
                        if !visit(s, bound) {
                            return;
                        }
                    }
                }
            }
            if !visit(usize::MAX, bound) {
                return;
            }
        }
    }

    /// Index of the nearest site to pixel `p`; equal distances go to the
    /// lower site index.
    pub(crate) fn nearest(&self, p: Pixel) -> usize {
        let mut best = usize::MAX;
        let mut best_d = i64::MAX;
        self.rings(p, |s, bound| {
            if s == usize::MAX {
                // End of ring: stop once nothing farther can win.
                return !(best != usize::MAX && bound * bound > best_d as f64);
            }
            let q = self.sites[s];
            let dr = p.0 as i64 - q.0 as i64;
            let dc = p.1 as i64 - q.1 as i64;
            let d = dr * dr + dc * dc;
            if d < best_d || (d == best_d && s < best) {
                best_d = d;
                best = s;
            }
            true
        });
        best
    }
}

/// Nearest-seed label for every pixel (row-major), ties to the lower seed
/// index.
pub fn assign_pixels(seeds: &[Pixel], width: usize, height: usize) -> Vec<usize> {
    let index = SiteIndex::new(seeds, width, height);
    let mut labels = Vec::with_capacity(width * height);
    for r in 0..height {
        for c in 0..width {
            labels.push(index.nearest((r, c)));
        }
    }
    labels
}

/// Voronoi cells of the seed pixel centers clipped to the tile rectangle,
/// one per seed in seed order.
pub fn voronoi_partition(seeds: &[Pixel], tile: &TerrainTile) -> Result<Vec<ConvexCell>> {
    if seeds.is_empty() {
        return Err(ClearError::Empty("no seeds"));
    }
    let mut seen = HashSet::with_capacity(seeds.len());
    for &s in seeds {
        if s.0 >= tile.height() || s.1 >= tile.width() {
            return Err(ClearError::invalid(format!("seed {s:?} outside the tile")));
        }
        if !seen.insert(s) {
            return Err(ClearError::invalid(format!("duplicate seed {s:?}")));
        }
    }
    let cs = tile.cell_size();
    let index = SiteIndex::new(seeds, tile.width(), tile.height());
    let bounds = tile.bounds();
    let center = |p: Pixel| tile.pixel_center(p.0, p.1);

    let mut cells = Vec::with_capacity(seeds.len());
    for (i, &s) in seeds.iter().enumerate() {
        let site = center(s);
        let mut poly = bounds.clone();
        let mut reach = max_reach(&poly, site);
        index.rings(s, |j, bound| {
            if j == usize::MAX {
                // Sites beyond twice the farthest vertex cannot cut the cell.
                return bound * cs <= 2.0 * reach;
            }
            if j != i {
                let other = center(seeds[j]);
                if site.dist(other) <= 2.0 * reach {
                    poly = poly.clip_halfplane(&HalfPlane::closer_to(site, other));
                    reach = max_reach(&poly, site);
                }
            }
            true
        });
        cells.push(ConvexCell { id: i, seed: s, vertices: poly });
    }
    Ok(cells)
}

fn max_reach(poly: &ConvexPolygon, site: Point2) -> f64 {
    poly.vertices.iter().map(|v| v.dist(site)).fold(0.0, f64::max)
}
