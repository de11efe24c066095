//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use clear_core::bsd::Pixel;
use clear_core::decompose::{decompose_to_budget, DecomposeParams, Method};
use clear_core::graph::{CostWeights, FrictionMode, HeadingMode, RegionGraph};
use clear_core::planefit::{Point3, Region};
use clear_core::planner::PlanResult;
use clear_core::raster::{synth_tile, SynthSpec};
use clear_core::{ClassTable, Point2, TerrainTile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Least-squares plane `[a, b, c]` from the uncentered 3x3 normal equations,
/// solved by Gaussian elimination with partial pivoting.
pub fn plane_oracle(pts: &[Point3]) -> [f64; 3] {
    let mut m = [[0.0f64; 4]; 3];
    for p in pts {
        let row = [p.x, p.y, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
            m[i][3] += row[i] * p.z;
        }
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, piv);
        for r in 0..3 {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..4 {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    [m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]]
}

/// Single-source distances by |V|-1 rounds of relaxation over every edge.
/// `sources` seed initial distances.
pub fn bellman_ford(n: usize, edges: &[(usize, usize, f64)], sources: &[(usize, f64)]) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; n];
    for &(v, c) in sources {
        d[v] = d[v].min(c);
    }
    for _ in 0..n {
        let mut changed = false;
        for &(u, v, c) in edges {
            if d[u] + c < d[v] {
                d[v] = d[u] + c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    d
}

/// Nearest seed to `p` by full scan, and whether a second seed is equally
/// near (within a relative 1e-12).
pub fn nearest_seed(p: Point2, seeds: &[Point2]) -> (usize, bool) {
    let d: Vec<f64> = seeds.iter().map(|s| s.dist_sq(p)).collect();
    let best = (0..d.len()).min_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap();
    let tie = (0..d.len()).any(|j| j != best && (d[j] - d[best]).abs() <= 1e-12 * d[best].max(1.0));
    (best, tie)
}

/// Distinct random seed pixels.
pub fn random_seeds(r: &mut ChaCha8Rng, w: usize, h: usize, n: usize) -> Vec<Pixel> {
    let mut seen = std::collections::BTreeSet::new();
    while seen.len() < n.min(w * h) {
        seen.insert((r.gen_range(0..h), r.gen_range(0..w)));
    }
    let mut v: Vec<Pixel> = seen.into_iter().collect();
    // Shuffle so seed order is not raster order.
    for i in (1..v.len()).rev() {
        v.swap(i, r.gen_range(0..=i));
    }
    v
}

const KINDS: [&str; 6] = ["ramp", "hills", "step", "diagonal", "checkerboard", "fractal"];

/// Synthetic fixture of a random kind.
pub fn random_fixture(seed: u64, w: usize, h: usize, cell_size: f64) -> TerrainTile {
    let kind = KINDS[(seed % KINDS.len() as u64) as usize];
    synth_tile(&SynthSpec::named(kind, w, h, cell_size).unwrap(), seed).unwrap()
}

/// Random region graph with at most `max_regions` vertices: a random
/// decomposition of a random fractal tile under random cost weights.
pub fn random_region_graph(seed: u64, max_regions: usize) -> (TerrainTile, RegionGraph) {
    let mut r = rng(seed);
    let (w, h) = (r.gen_range(12..60), r.gen_range(12..60));
    let cs = [1.0, 10.0, 30.0][r.gen_range(0..3)];
    let tile = synth_tile(&SynthSpec::named("fractal", w, h, cs).unwrap(), seed).unwrap();
    let method = Method::ALL[r.gen_range(0..4)];
    let budget = r.gen_range(2..=(max_regions * 9 / 10).min(w * h));
    let d = decompose_to_budget(&tile, method, budget, &DecomposeParams::default()).unwrap();
    assert!(d.regions.len() <= max_regions, "{} regions", d.regions.len());
    let weights = CostWeights {
        w_f: r.gen_range(0.0..2.0),
        w_s: r.gen_range(0.0..2.0),
        w_r: r.gen_range(0.0..2.0),
        w_theta: r.gen_range(0.0..0.5),
        s_max: r.gen_range(0.1..=0.35),
        heading_mode: if r.gen_bool(0.5) { HeadingMode::Literal } else { HeadingMode::Perpendicular },
        friction_mode: if r.gen_bool(0.5) { FrictionMode::Destination } else { FrictionMode::Average },
    };
    let g = RegionGraph::build(d.regions, tile.classes(), &weights, cs);
    (tile, g)
}

/// Region containing `p` by linear scan: lowest id whose polygon contains
/// it, else the nearest within `tol`.
pub fn locate_linear(regions: &[Region], p: Point2, tol: f64) -> Option<usize> {
    if let Some(i) = regions.iter().position(|r| r.polygon.contains(p, 1e-3 * tol)) {
        return Some(i);
    }
    let (i, d) = regions.iter().enumerate().map(|(i, r)| (i, r.polygon.distance_to(p))).min_by(|a, b| a.1.total_cmp(&b.1))?;
    (d <= tol).then_some(i)
}

/// Random point inside a traversable region, with that region's id.
pub fn traversable_point(r: &mut ChaCha8Rng, tile: &TerrainTile, g: &RegionGraph) -> Option<(Point2, usize)> {
    for _ in 0..1000 {
        let p = Point2::new(r.gen_range(0.0..tile.map_width()), r.gen_range(0.0..tile.map_height()));
        if let Some(id) = locate_linear(&g.regions, p, 1e-6 * g.cell_size) {
            if g.regions[id].traversable {
                return Some((p, id));
            }
        }
    }
    None
}

/// Fails if a region plan visits a region whose fitted grade exceeds
/// `s_max` or whose class is not traversable, with both recomputed from the
/// raw plane and class table.
pub fn audit_region_path(regions: &[Region], classes: &ClassTable, s_max: f64, res: &PlanResult) -> Result<(), String> {
    for &id in &res.visited_region_ids {
        let r = &regions[id];
        let grade = (r.plane.a * r.plane.a + r.plane.b * r.plane.b).sqrt();
        if grade > s_max {
            return Err(format!("region {id} grade {grade:.4} > {s_max}"));
        }
        let class = classes.classes().iter().find(|c| c.id == r.landcover).ok_or(format!("region {id} unknown class"))?;
        if !class.traversable {
            return Err(format!("region {id} class {} not traversable", class.name));
        }
    }
    Ok(())
}

/// Fails if a grid plan visits a pixel whose central-difference grade
/// exceeds `s_max` or whose class is not traversable.
pub fn audit_grid_path(tile: &TerrainTile, s_max: f64, res: &PlanResult) -> Result<(), String> {
    let (w, h, cs) = (tile.width(), tile.height(), tile.cell_size());
    let z = |r: usize, c: usize| tile.elevation()[r * w + c];
    for &k in &res.visited_region_ids {
        let (r, c) = (k / w, k % w);
        let (c0, c1) = (c.saturating_sub(1), (c + 1).min(w - 1));
        let (r0, r1) = (r.saturating_sub(1), (r + 1).min(h - 1));
        let gx = if c1 > c0 { (z(r, c1) - z(r, c0)) / ((c1 - c0) as f64 * cs) } else { 0.0 };
        let gy = if r1 > r0 { (z(r1, c) - z(r0, c)) / ((r1 - r0) as f64 * cs) } else { 0.0 };
        let grade = (gx * gx + gy * gy).sqrt();
        if grade > s_max {
            return Err(format!("pixel ({r},{c}) grade {grade:.4} > {s_max}"));
        }
        let id = tile.landcover()[k];
        let class = tile.classes().classes().iter().find(|cl| cl.id == id).ok_or(format!("pixel {k} unknown class"))?;
        if !class.traversable {
            return Err(format!("pixel ({r},{c}) class {} not traversable", class.name));
        }
    }
    Ok(())
}

/// Fails if a sample along `waypoints` falls outside every listed region.
pub fn audit_polyline_inside(regions: &[Region], ids: &[usize], waypoints: &[Point2], tol: f64) -> Result<(), String> {
    for seg in waypoints.windows(2) {
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            let p = Point2::new(seg[0].x + t * (seg[1].x - seg[0].x), seg[0].y + t * (seg[1].y - seg[0].y));
            if !ids.iter().any(|&id| regions[id].polygon.contains(p, tol)) {
                return Err(format!("waypoint sample ({:.3}, {:.3}) outside visited regions", p.x, p.y));
            }
        }
    }
    Ok(())
}
