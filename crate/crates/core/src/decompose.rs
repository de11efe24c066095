//! End-to-end decomposition of a tile into fitted regions, for CLEAR and the
//! baselines, with region-budget matching.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{cells_to_regions, grid_decompose, hex_decompose, quadtree_regions};
use crate::bsd::{assign_pixels, select_seeds, voronoi_partition, ConvexCell, SeedParams, SeedSet};
use crate::error::{ClearError, Result};
use crate::planefit::{recursive_fit, FitParams, Point3, Region};
use crate::raster::{local_std, TerrainTile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Clear,
    Grid,
    Hex,
    Quadtree,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Clear, Method::Grid, Method::Hex, Method::Quadtree];

    pub fn name(self) -> &'static str {
        match self {
            Method::Clear => "clear",
            Method::Grid => "grid",
            Method::Hex => "hex",
            Method::Quadtree => "quadtree",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = ClearError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| ClearError::invalid(format!("unknown method `{s}` (expected clear, grid, hex or quadtree)")))
    }
}

/// Parameters shared by every method; each method reads the ones it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeParams {
    pub seeds: SeedParams,
    pub fit: FitParams,
    pub s_max: f64,
    /// Quadtree minimum node area in pixels.
    pub min_area: usize,
}

impl Default for DecomposeParams {
    fn default() -> Self {
        DecomposeParams { seeds: SeedParams::default(), fit: FitParams::default(), s_max: 0.35, min_area: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub method: Method,
    pub regions: Vec<Region>,
    /// Voronoi, grid or hex cells before fitting; empty for the quadtree.
    pub cells: Vec<ConvexCell>,
    pub seeds: Option<SeedSet>,
    /// Region id of every pixel, row-major.
    pub owner: Vec<usize>,
    /// The method's resolution knob as used: seed count, grid side in
    /// pixels, hex circumradius in meters or quadtree epsilon.
    pub resolution: f64,
}

/// CLEAR: boundary-seeded Voronoi cells, each refined by recursive plane
/// fitting. Region ids run over cells in order, leaves in fit order.
pub fn clear_decompose(tile: &TerrainTile, seed_params: &SeedParams, fit: &FitParams, s_max: f64) -> Result<Decomposition> {
    let sigma = local_std(tile, seed_params.k)?;
    let seeds = select_seeds(tile, &sigma, seed_params)?;
    let cells = voronoi_partition(&seeds.seeds, tile)?;
    let labels = assign_pixels(&seeds.seeds, tile.width(), tile.height());
    let members = crate::baselines::group_members(&labels, cells.len());

    let w = tile.width();
    let mut regions = Vec::with_capacity(cells.len());
    let mut owner = vec![usize::MAX; tile.len()];
    let mut pts = Vec::new();
    let mut heights = Vec::new();
    let mut lcs = Vec::new();
    for (cell, pix) in cells.iter().zip(&members) {
        pts.clear();
        pts.extend(pix.iter().map(|&k| {
            let p = tile.pixel_center(k / w, k % w);
            Point3::new(p.x, p.y, tile.elevation()[k])
        }));
        for leaf in recursive_fit(&pts, &cell.vertices, fit)? {
            let id = regions.len();
            heights.clear();
            lcs.clear();
            for &i in &leaf.indices {
                let k = pix[i];
                owner[k] = id;
                heights.push(tile.elevation()[k]);
                lcs.push(tile.landcover()[k]);
            }
            regions.push(Region::from_members(id, leaf.plane, leaf.rmse, leaf.polygon, &heights, &lcs, tile.classes(), s_max));
        }
    }
    let resolution = seed_params.n as f64;
    Ok(Decomposition { method: Method::Clear, regions, cells, seeds: Some(seeds), owner, resolution })
}

pub fn grid(tile: &TerrainTile, target: usize, s_max: f64) -> Result<Decomposition> {
    let cells = grid_decompose(tile, target);
    let side = crate::baselines::grid_side(tile.width(), tile.height(), target);
    let (regions, owner) = cells_to_regions(tile, &cells, s_max)?;
    Ok(Decomposition { method: Method::Grid, regions, cells, seeds: None, owner, resolution: side as f64 })
}

pub fn hex(tile: &TerrainTile, target: usize, s_max: f64) -> Result<Decomposition> {
    let cells = hex_decompose(tile, target);
    // Circumradius recovered from the widest interior cell.
    let side = cells
        .iter()
        .map(|c| {
            let b = c.vertices.bbox();
            (b.max.y - b.min.y) / 2.0
        })
        .fold(0.0, f64::max);
    let (regions, owner) = cells_to_regions(tile, &cells, s_max)?;
    Ok(Decomposition { method: Method::Hex, regions, cells, seeds: None, owner, resolution: side })
}

pub fn quadtree(tile: &TerrainTile, epsilon: f64, min_area: usize, s_max: f64) -> Result<Decomposition> {
    let (regions, owner) = quadtree_regions(tile, epsilon, min_area, s_max)?;
    Ok(Decomposition { method: Method::Quadtree, regions, cells: Vec::new(), seeds: None, owner, resolution: epsilon })
}

/// Runs `method` with its resolution knob chosen so the region count is as
/// close to `budget` as the search finds. CLEAR searches the seed count with
/// the given fit tolerance; the quadtree searches epsilon with the given
/// minimum area.
pub fn decompose_to_budget(tile: &TerrainTile, method: Method, budget: usize, params: &DecomposeParams) -> Result<Decomposition> {
    if budget == 0 {
        return Err(ClearError::invalid("region budget must be >= 1"));
    }
    match method {
        Method::Grid => grid(tile, budget, params.s_max),
        Method::Hex => hex(tile, budget, params.s_max),
        Method::Clear => clear_to_budget(tile, budget, params),
        Method::Quadtree => quadtree_to_budget(tile, budget, params),
    }
}

fn closer(a: &Decomposition, b: &Decomposition, budget: usize) -> bool {
    a.regions.len().abs_diff(budget) < b.regions.len().abs_diff(budget)
}

fn clear_to_budget(tile: &TerrainTile, budget: usize, params: &DecomposeParams) -> Result<Decomposition> {
    let run = |n: usize| {
        let seeds = SeedParams { n, ..params.seeds.clone() };
        clear_decompose(tile, &seeds, &params.fit, params.s_max)
    };
    let max_n = budget.min(tile.len());
    // Largest n whose region count stays within budget.
    let (mut lo, mut hi) = (1usize, max_n);
    let mut best = run(1)?;
    if best.regions.len() < budget {
        while lo < hi {
            let mid = lo + (hi - lo).div_ceil(2);
            let d = run(mid)?;
            if d.regions.len() <= budget {
                lo = mid;
                if !closer(&best, &d, budget) {
                    best = d;
                }
            } else {
                hi = mid - 1;
                if closer(&d, &best, budget) {
                    best = d;
                }
            }
        }
        if lo < max_n {
            let d = run(lo + 1)?;
            if closer(&d, &best, budget) {
                best = d;
            }
        }
    }
    Ok(best)
}

fn quadtree_to_budget(tile: &TerrainTile, budget: usize, params: &DecomposeParams) -> Result<Decomposition> {
    let run = |eps: f64| quadtree(tile, eps, params.min_area, params.s_max);
    let (lo_z, hi_z) = tile.elevation().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &z| (a.min(z), b.max(z)));
    // Epsilon above the elevation range keeps the root; the search runs in
    // log space down to a tiny fraction of it.
    let mut hi = (hi_z - lo_z).max(1e-9) * 2.0;
    let mut lo = hi * 1e-9;
    let mut best = run(hi)?;
    let finest = run(lo)?;
    if closer(&finest, &best, budget) {
        best = finest;
    }
    for _ in 0..60 {
        if best.regions.len() == budget {
            break;
        }
        let mid = (lo * hi).sqrt();
        let d = run(mid)?;
        let n = d.regions.len();
        if closer(&d, &best, budget) || (n.abs_diff(budget) == best.regions.len().abs_diff(budget) && mid > best.resolution) {
            best = d;
        }
        if n > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}
