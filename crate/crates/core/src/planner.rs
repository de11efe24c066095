//! Shortest paths over the region graph and over raw raster pixels.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{ClearError, Result};
use crate::geometry::{compass_bearing, Point2};
use crate::graph::{step_cost, CostWeights, FrictionMode, RegionGraph, Terrain};
use crate::planefit::{aspect_of, Plane, Region};
use crate::raster::TerrainTile;
use crate::spatial::PolygonIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Dijkstra,
    #[default]
    AStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanQuery {
    pub start: Point2,
    pub goal: Point2,
    pub algorithm: Algorithm,
}

impl PlanQuery {
    pub fn new(start: Point2, goal: Point2) -> Self {
        PlanQuery { start, goal, algorithm: Algorithm::AStar }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    /// Start, visited region centroids (or pixel centers), goal.
    pub path: Vec<Point2>,
    /// Region ids, or row-major pixel indices for the grid planner.
    pub visited_region_ids: Vec<usize>,
    pub total_cost: f64,
    pub length_m: f64,
    pub expanded_nodes: usize,
    pub plan_time_s: f64,
}

fn polyline_length(path: &[Point2]) -> f64 {
    path.windows(2).map(|w| w[0].dist(w[1])).sum()
}

#[derive(Clone, Copy)]
struct Entry {
    f: f64,
    g: f64,
    node: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Max-heap order: smallest f first, then largest g, then smallest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other.f.total_cmp(&self.f).then(self.g.total_cmp(&other.g)).then(other.node.cmp(&self.node))
    }
}

/// Best-first search from a virtual source to a virtual sink. `sources`
/// and `sinks` list `(node, cost)` attachments; `expand` yields the outgoing
/// edges of a node. Returns the cost, node chain and expansion count.
fn search(
    n: usize,
    sources: &[(usize, f64)],
    sinks: &[(usize, f64)],
    heuristic: impl Fn(usize) -> f64,
    mut expand: impl FnMut(usize, &mut Vec<(usize, f64)>),
) -> Option<(f64, Vec<usize>, usize)> {
    // Node `n` is the sink.
    let sink = n;
    let mut dist = vec![f64::INFINITY; n + 1];
    let mut prev = vec![usize::MAX; n + 1];
    let mut closed = vec![false; n + 1];
    let mut sink_cost = vec![f64::NAN; n];
    for &(v, c) in sinks {
        sink_cost[v] = c;
    }
    let mut heap = BinaryHeap::new();
    for &(v, c) in sources {
        if c < dist[v] {
            dist[v] = c;
            heap.push(Entry { f: c + heuristic(v), g: c, node: v });
        }
    }
    let mut expanded = 0;
    let mut buf = Vec::new();
    while let Some(Entry { g, node, .. }) = heap.pop() {
        if closed[node] || g > dist[node] {
            continue;
        }
        closed[node] = true;
        if node == sink {
            let mut chain = Vec::new();
            let mut v = prev[sink];
            while v != usize::MAX {
                chain.push(v);
                v = prev[v];
            }
            chain.reverse();
            return Some((g, chain, expanded));
        }
        expanded += 1;
        if !sink_cost[node].is_nan() {
            let ng = g + sink_cost[node];
            if ng < dist[sink] {
                dist[sink] = ng;
                prev[sink] = node;
                heap.push(Entry { f: ng, g: ng, node: sink });
            }
        }
        buf.clear();
        expand(node, &mut buf);
        for &(to, c) in &buf {
            let ng = g + c;
            if !closed[to] && ng < dist[to] {
                dist[to] = ng;
                prev[to] = node;
                heap.push(Entry { f: ng + heuristic(to), g: ng, node: to });
            }
        }
    }
    None
}

/// Region containing `p` per [`RegionGraph::locate`], as an error when the
/// point lies outside every region.
pub fn locate(graph: &RegionGraph, p: Point2) -> Result<usize> {
    graph.locate(p).ok_or(ClearError::OutsideRegions { x: p.x, y: p.y })
}

/// Region id containing `p`, built from a plain region list.
pub fn locate_in(regions: &[Region], p: Point2, cell_size: f64) -> Result<usize> {
    PolygonIndex::new(regions.iter().map(|r| r.polygon.clone()).collect(), 1e-6 * cell_size)
        .locate(p)
        .ok_or(ClearError::OutsideRegions { x: p.x, y: p.y })
}

/// Optimal path over the region graph. Start and goal attach to their
/// containing regions' centroids at plain distance cost; interior legs use
/// the graph's edge costs. A* uses the straight-line distance to the goal.
pub fn plan_region(graph: &RegionGraph, query: &PlanQuery) -> Result<PlanResult> {
    let s = locate(graph, query.start)?;
    let t = locate(graph, query.goal)?;
    for (which, id) in [("start", s), ("goal", t)] {
        if !graph.regions[id].traversable {
            return Err(ClearError::NonTraversable { which, region: id });
        }
    }
    if query.start == query.goal {
        return Ok(PlanResult {
            path: vec![query.start],
            visited_region_ids: vec![s],
            total_cost: 0.0,
            length_m: 0.0,
            expanded_nodes: 0,
            plan_time_s: 0.0,
        });
    }
    let centroid = |id: usize| graph.regions[id].centroid;
    let timer = Instant::now();
    let found = if s == t {
        Some((query.start.dist(query.goal), vec![s], 1))
    } else {
        let goal = query.goal;
        let h: Box<dyn Fn(usize) -> f64> = match query.algorithm {
            Algorithm::AStar => Box::new(move |v: usize| if v < graph.len() { centroid(v).dist(goal) } else { 0.0 }),
            Algorithm::Dijkstra => Box::new(|_| 0.0),
        };
        search(graph.len(), &[(s, query.start.dist(centroid(s)))], &[(t, centroid(t).dist(goal))], h, |v, out| {
            out.extend(graph.neighbors(v).iter().map(|e| (e.to, e.cost)))
        })
    };
    let plan_time_s = timer.elapsed().as_secs_f64();
    let (total_cost, chain, expanded_nodes) = found.ok_or(ClearError::Unreachable { from: s, to: t })?;
    let mut path = vec![query.start];
    if s != t {
        path.extend(chain.iter().map(|&v| centroid(v)));
    }
    path.push(query.goal);
    Ok(PlanResult { length_m: polyline_length(&path), path, visited_region_ids: chain, total_cost, expanded_nodes, plan_time_s })
}

/// Waypoints of a region plan routed through the midpoint of each shared
/// boundary: start, centroid, crossing, centroid, ..., goal. Every leg runs
/// from a point of a convex region to another point of the same region, so
/// the polyline never leaves the visited regions.
pub fn crossing_waypoints(graph: &RegionGraph, result: &PlanResult) -> Vec<Point2> {
    let ids = &result.visited_region_ids;
    if result.path.len() <= 2 || ids.len() < 2 {
        return result.path.clone();
    }
    let mut out = vec![result.path[0], graph.regions[ids[0]].centroid];
    for w in ids.windows(2) {
        if let Some(e) = graph.edge(w[0], w[1]) {
            out.push(e.crossing);
        }
        out.push(graph.regions[w[1]].centroid);
    }
    out.push(result.path[result.path.len() - 1]);
    out
}

/// Per-pixel terrain for the raw-grid planner: grade and aspect from
/// central differences (one-sided at the border), class coefficients, and
/// the grade/class traversability mask.
pub struct PixelTerrain {
    pub terrain: Vec<Terrain>,
    pub traversable: Vec<bool>,
}

impl PixelTerrain {
    pub fn new(tile: &TerrainTile, s_max: f64) -> Self {
        let (w, h) = (tile.width(), tile.height());
        let cs = tile.cell_size();
        let z = |r: usize, c: usize| tile.elev(r, c);
        let mut terrain = Vec::with_capacity(w * h);
        let mut traversable = Vec::with_capacity(w * h);
        for r in 0..h {
            for c in 0..w {
                let (c0, c1) = (c.saturating_sub(1), (c + 1).min(w - 1));
                let (r0, r1) = (r.saturating_sub(1), (r + 1).min(h - 1));
                let a = if c1 > c0 { (z(r, c1) - z(r, c0)) / ((c1 - c0) as f64 * cs) } else { 0.0 };
                let b = if r1 > r0 { (z(r1, c) - z(r0, c)) / ((r1 - r0) as f64 * cs) } else { 0.0 };
                let plane = Plane { a, b, c: 0.0 };
                let class = tile.class_at(r, c);
                let classes = tile.classes();
                let grade = plane.grade();
                terrain.push(Terrain {
                    friction: classes.friction(class),
                    roughness: classes.roughness(class),
                    grade,
                    aspect: aspect_of(&plane),
                });
                traversable.push(grade <= s_max && classes.is_traversable(class));
            }
        }
        PixelTerrain { terrain, traversable }
    }
}

/// 8-connected A* (or Dijkstra) over raster pixels with the same cost model
/// as the region graph, using destination-pixel attributes.
pub fn plan_grid(tile: &TerrainTile, query: &PlanQuery, weights: &CostWeights) -> Result<PlanResult> {
    let pix = PixelTerrain::new(tile, weights.s_max);
    plan_grid_with(tile, &pix, query, weights)
}

/// [`plan_grid`] with precomputed pixel terrain.
pub fn plan_grid_with(tile: &TerrainTile, pix: &PixelTerrain, query: &PlanQuery, weights: &CostWeights) -> Result<PlanResult> {
    let (w, h) = (tile.width(), tile.height());
    let cs = tile.cell_size();
    let cell = |p: Point2| tile.pixel_at(p).ok_or(ClearError::OutsideRegions { x: p.x, y: p.y });
    let (sr, sc) = cell(query.start)?;
    let (tr, tc) = cell(query.goal)?;
    let (s, t) = (sr * w + sc, tr * w + tc);
    for (which, id) in [("start", s), ("goal", t)] {
        if !pix.traversable[id] {
            return Err(ClearError::NonTraversable { which, region: id });
        }
    }
    if query.start == query.goal {
        return Ok(PlanResult {
            path: vec![query.start],
            visited_region_ids: vec![s],
            total_cost: 0.0,
            length_m: 0.0,
            expanded_nodes: 0,
            plan_time_s: 0.0,
        });
    }
    let center = |k: usize| tile.pixel_center(k / w, k % w);
    let goal = query.goal;
    let astar = query.algorithm == Algorithm::AStar;
    const STEPS: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];
    // Bearing of each step in map coordinates (y grows with row).
    let bearings: Vec<f64> = STEPS.iter().map(|&(dr, dc)| compass_bearing(Point2::new(dc as f64, dr as f64))).collect();
    let timer = Instant::now();
    let found = if s == t {
        Some((query.start.dist(goal), vec![s], 1))
    } else {
        search(
            w * h,
            &[(s, query.start.dist(center(s)))],
            &[(t, center(t).dist(goal))],
            |v| if astar && v < w * h { center(v).dist(goal) } else { 0.0 },
            |v, out| {
                let (r, c) = ((v / w) as isize, (v % w) as isize);
                for (i, &(dr, dc)) in STEPS.iter().enumerate() {
                    let (nr, nc) = (r + dr, c + dc);
                    if nr < 0 || nc < 0 || nr >= h as isize || nc >= w as isize {
                        continue;
                    }
                    let k = nr as usize * w + nc as usize;
                    if !pix.traversable[k] {
                        continue;
                    }
                    let d = if dr != 0 && dc != 0 { std::f64::consts::SQRT_2 * cs } else { cs };
                    let to = &pix.terrain[k];
                    let mu = match weights.friction_mode {
                        FrictionMode::Destination => to.friction,
                        FrictionMode::Average => 0.5 * (pix.terrain[v].friction + to.friction),
                    };
                    out.push((k, step_cost(d, bearings[i], mu, to, weights)));
                }
            },
        )
    };
    let plan_time_s = timer.elapsed().as_secs_f64();
    let (total_cost, chain, expanded_nodes) = found.ok_or(ClearError::Unreachable { from: s, to: t })?;
    let mut path = vec![query.start];
    if s != t {
        path.extend(chain.iter().map(|&k| center(k)));
    }
    path.push(goal);
    Ok(PlanResult { length_m: polyline_length(&path), path, visited_region_ids: chain, total_cost, expanded_nodes, plan_time_s })
}
