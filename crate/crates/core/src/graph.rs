//! Region adjacency graph with terrain-aware directed edge costs.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{collinear_overlap, compass_bearing, Point2};
use crate::planefit::{region_attributes, Region};
use crate::raster::{ClassId, ClassTable};
use crate::spatial::PolygonIndex;

/// How the heading penalty treats the angle between travel and downslope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadingMode {
    /// Penalty grows with the angle to the downslope bearing.
    #[default]
    Literal,
    /// Penalty is lowest when crossing the slope at right angles.
    Perpendicular,
}

/// Which friction coefficient an edge uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrictionMode {
    #[default]
    Destination,
    Average,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub w_f: f64,
    pub w_s: f64,
    pub w_r: f64,
    pub w_theta: f64,
    /// Maximum traversable grade as a fraction.
    pub s_max: f64,
    pub heading_mode: HeadingMode,
    pub friction_mode: FrictionMode,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            w_f: 1.0,
            w_s: 1.0,
            w_r: 1.0,
            w_theta: 0.1,
            s_max: 0.35,
            heading_mode: HeadingMode::Literal,
            friction_mode: FrictionMode::Destination,
        }
    }
}

impl CostWeights {
    /// All terrain terms off: edge cost is plain distance.
    pub fn distance_only() -> Self {
        CostWeights { w_f: 0.0, w_s: 0.0, w_r: 0.0, w_theta: 0.0, ..CostWeights::default() }
    }
}

/// Wrap-around absolute difference of two bearings, in `[0, 180]`.
pub fn heading_delta(theta_head: f64, theta_slope: f64) -> f64 {
    let d = (theta_head - theta_slope).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Terrain attributes of the cell being entered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Terrain {
    pub friction: f64,
    pub roughness: f64,
    /// Grade as a fraction.
    pub grade: f64,
    /// Downslope bearing, `None` on level ground.
    pub aspect: Option<f64>,
}

/// Cost of moving `d` meters along `heading` into terrain `to`, with
/// friction `mu` already resolved for the friction mode.
pub fn step_cost(d: f64, heading: f64, mu: f64, to: &Terrain, w: &CostWeights) -> f64 {
    let base = d * (1.0 + w.w_f * mu + w.w_s * to.grade.abs() + w.w_r * to.roughness);
    let angle = match to.aspect {
        // Level ground has no slope to align with.
        None => 0.0,
        Some(aspect) => {
            let delta = heading_delta(heading, aspect);
            match w.heading_mode {
                HeadingMode::Literal => delta,
                HeadingMode::Perpendicular => (90.0 - delta).abs() * 2.0,
            }
        }
    };
    base + w.w_theta * angle / 180.0 * d
}

fn terrain_of(r: &Region, classes: &ClassTable) -> Terrain {
    Terrain {
        friction: classes.friction(r.landcover),
        roughness: classes.roughness(r.landcover),
        grade: r.grade_fraction(),
        aspect: if r.flat { None } else { Some(r.aspect_deg) },
    }
}

fn edge_friction(from: ClassId, to: ClassId, classes: &ClassTable, mode: FrictionMode) -> f64 {
    match mode {
        FrictionMode::Destination => classes.friction(to),
        FrictionMode::Average => 0.5 * (classes.friction(from) + classes.friction(to)),
    }
}

/// Directed cost from region `from` to adjacent region `to`, centroid to
/// centroid.
pub fn edge_cost(from: &Region, to: &Region, weights: &CostWeights, classes: &ClassTable) -> f64 {
    let delta = to.centroid - from.centroid;
    let d = delta.norm();
    let mu = edge_friction(from.landcover, to.landcover, classes, weights.friction_mode);
    step_cost(d, compass_bearing(delta), mu, &terrain_of(to, classes), weights)
}

/// Recomputes `traversable` (and grade/aspect) for every region.
pub fn mark_traversability(regions: &mut [Region], classes: &ClassTable, s_max: f64) {
    for r in regions {
        region_attributes(r, classes, s_max);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub from: usize,
    pub to: usize,
    pub cost: f64,
    /// Total length of the shared boundary in meters.
    pub boundary_length: f64,
    /// Midpoint of the longest shared boundary segment.
    pub crossing: Point2,
}

/// Adjacency pair found by [`find_adjacency`], with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adjacency {
    pub a: usize,
    pub b: usize,
    pub length: f64,
    pub crossing: Point2,
}

/// Pairs of regions whose polygons share boundary of total length above
/// `length_tol`, ordered by `(a, b)`.
pub fn find_adjacency(regions: &[Region], length_tol: f64) -> Vec<Adjacency> {
    if regions.is_empty() {
        return Vec::new();
    }
    let boxes: Vec<_> = regions.iter().map(|r| r.polygon.bbox()).collect();
    let (mut lo, mut hi) = (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for b in &boxes {
        lo = Point2::new(lo.x.min(b.min.x), lo.y.min(b.min.y));
        hi = Point2::new(hi.x.max(b.max.x), hi.y.max(b.max.y));
    }
    let span = (hi.x - lo.x).max(hi.y - lo.y).max(length_tol);
    let size = ((hi.x - lo.x).max(length_tol) * (hi.y - lo.y).max(length_tol) / regions.len() as f64).sqrt().max(span / 2048.0);
    let key = |v: f64, o: f64| ((v - o) / size).floor() as i64;
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, b) in boxes.iter().enumerate() {
        for gy in key(b.min.y - length_tol, lo.y)..=key(b.max.y + length_tol, lo.y) {
            for gx in key(b.min.x - length_tol, lo.x)..=key(b.max.x + length_tol, lo.x) {
                buckets.entry((gx, gy)).or_default().push(i);
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for ids in buckets.values() {
        for (x, &i) in ids.iter().enumerate() {
            for &j in &ids[x + 1..] {
                pairs.push((i.min(j), i.max(j)));
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();

    let mut out = Vec::new();
    for (a, b) in pairs {
        if !boxes[a].intersects(&boxes[b], length_tol) {
            continue;
        }
        let mut total = 0.0;
        let mut longest = (0.0, Point2::new(0.0, 0.0));
        for (p1, p2) in regions[a].polygon.edges() {
            for (q1, q2) in regions[b].polygon.edges() {
                if let Some((len, mid)) = collinear_overlap(p1, p2, q1, q2, length_tol) {
                    total += len;
                    if len > longest.0 {
                        longest = (len, mid);
                    }
                }
            }
        }
        if total > length_tol {
            out.push(Adjacency { a, b, length: total, crossing: longest.1 });
        }
    }
    out
}

/// Directed graph over regions; edges only join traversable neighbors.
#[derive(Debug, Clone)]
pub struct RegionGraph {
    pub regions: Vec<Region>,
    pub weights: CostWeights,
    pub cell_size: f64,
    /// Sorted by `(from, to)`.
    pub edges: Vec<GraphEdge>,
    offsets: Vec<usize>,
    index: PolygonIndex,
}

impl RegionGraph {
    /// Detects shared boundaries and prices both directions of every
    /// traversable adjacency. Region traversability is refreshed against
    /// `weights.s_max`. Regions must be indexed by id.
    pub fn build(mut regions: Vec<Region>, classes: &ClassTable, weights: &CostWeights, cell_size: f64) -> Self {
        mark_traversability(&mut regions, classes, weights.s_max);
        let mut edges = Vec::new();
        for adj in find_adjacency(&regions, 1e-6 * cell_size) {
            let (ra, rb) = (&regions[adj.a], &regions[adj.b]);
            if !(ra.traversable && rb.traversable) {
                continue;
            }
            for (from, to) in [(ra, rb), (rb, ra)] {
                edges.push(GraphEdge {
                    from: from.id,
                    to: to.id,
                    cost: edge_cost(from, to, weights, classes),
                    boundary_length: adj.length,
                    crossing: adj.crossing,
                });
            }
        }
        Self::from_edges(regions, edges, *weights, cell_size)
    }

    /// Graph over given regions and precomputed edges.
    pub fn from_edges(regions: Vec<Region>, mut edges: Vec<GraphEdge>, weights: CostWeights, cell_size: f64) -> Self {
        edges.sort_by_key(|x| (x.from, x.to));
        let mut offsets = vec![0; regions.len() + 1];
        for e in &edges {
            offsets[e.from + 1] += 1;
        }
        for i in 0..regions.len() {
            offsets[i + 1] += offsets[i];
        }
        let index = PolygonIndex::new(regions.iter().map(|r| r.polygon.clone()).collect(), 1e-6 * cell_size);
        RegionGraph { regions, weights, cell_size, edges, offsets, index }
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn neighbors(&self, id: usize) -> &[GraphEdge] {
        &self.edges[self.offsets[id]..self.offsets[id + 1]]
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<&GraphEdge> {
        self.neighbors(from).iter().find(|e| e.to == to)
    }

    /// Region containing `p`: lowest id on shared boundaries, else the
    /// nearest region within `1e-6 * cell_size`.
    pub fn locate(&self, p: Point2) -> Option<usize> {
        self.index.locate(p)
    }
}
