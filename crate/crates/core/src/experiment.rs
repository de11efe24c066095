//! Side-by-side comparison of decomposition methods at matched region
//! budgets: reconstruction metrics plus planning over shared query pairs.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::decompose::{decompose_to_budget, Decomposition, Method};
use crate::error::{ClearError, Result};
use crate::geometry::Point2;
use crate::graph::RegionGraph;
use crate::metrics::evaluate;
use crate::planefit::Region;
use crate::planner::{plan_grid_with, plan_region, PixelTerrain, PlanQuery, PlanResult};
use crate::raster::TerrainTile;

/// Row label of the raw-pixel planning reference.
pub const RAW_GRID: &str = "raw_grid";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSpec {
    pub methods: Vec<Method>,
    pub budgets: Vec<usize>,
    pub pairs: usize,
    /// Minimum straight-line start-goal distance in meters; defaults to a
    /// quarter of the shorter tile side.
    pub min_pair_dist_m: Option<f64>,
    /// Add a row for A* over raw pixels on the same pairs.
    pub reference: bool,
}

impl Default for CompareSpec {
    fn default() -> Self {
        CompareSpec { methods: Method::ALL.to_vec(), budgets: vec![50, 100, 200], pairs: 10, min_pair_dist_m: None, reference: true }
    }
}

/// One CSV row per (method, budget). Missing values are left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub method: String,
    pub budget: usize,
    pub region_count: Option<usize>,
    pub rmse: Option<f64>,
    pub miou: Option<f64>,
    pub jsd_retention: Option<f64>,
    pub mean_cost: Option<f64>,
    pub mean_len: Option<f64>,
    pub p_time: Option<f64>,
    pub a_time: Option<f64>,
    /// Pairs planned successfully out of the shared set.
    pub planned: usize,
    pub error: String,
}

impl CompareRow {
    fn failed(method: &str, budget: usize, err: &ClearError) -> Self {
        CompareRow {
            method: method.to_string(),
            budget,
            region_count: None,
            rmse: None,
            miou: None,
            jsd_retention: None,
            mean_cost: None,
            mean_len: None,
            p_time: None,
            a_time: None,
            planned: 0,
            error: err.to_string(),
        }
    }
}

/// One planned (or failed) query of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub method: String,
    pub budget: usize,
    pub pair: usize,
    pub cost: Option<f64>,
    pub length: Option<f64>,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct CellOutput {
    pub method: Method,
    pub budget: usize,
    pub regions: Vec<Region>,
    pub plans: Vec<Option<PlanResult>>,
}

#[derive(Debug, Clone)]
pub struct CompareOutput {
    pub rows: Vec<CompareRow>,
    pub pair_rows: Vec<PairRow>,
    pub pairs: Vec<(Point2, Point2)>,
    pub cells: Vec<CellOutput>,
    /// Raw-grid plans over the pairs, in pair order.
    pub reference_plans: Vec<PlanResult>,
}

/// Draws `n` start-goal pairs from traversable pixel centers at least
/// `min_dist` apart that the raw-grid planner connects. Stops early after
/// `200 n` attempts. Returns the pairs with their raw-grid plans.
pub fn sample_pairs(tile: &TerrainTile, pix: &PixelTerrain, cfg: &RunConfig, n: usize, min_dist: f64) -> Vec<(Point2, Point2, PlanResult)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let w = tile.width();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n && attempts < 200 * n.max(1) {
        attempts += 1;
        let (a, b) = (rng.gen_range(0..tile.len()), rng.gen_range(0..tile.len()));
        if !(pix.traversable[a] && pix.traversable[b]) {
            continue;
        }
        let (s, g) = (tile.pixel_center(a / w, a % w), tile.pixel_center(b / w, b % w));
        if s.dist(g) < min_dist {
            continue;
        }
        if let Ok(r) = plan_grid_with(tile, pix, &PlanQuery::new(s, g), &cfg.weights) {
            out.push((s, g, r));
        }
    }
    out
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Runs every (method, budget) cell on `tile` with the shared pair set.
/// Cell failures land in the row's `error` column; only bad specs fail the
/// whole run.
pub fn run_compare(tile: &TerrainTile, cfg: &RunConfig, spec: &CompareSpec) -> Result<CompareOutput> {
    if spec.methods.is_empty() {
        return Err(ClearError::invalid("compare needs at least one method"));
    }
    if spec.budgets.is_empty() || spec.budgets.contains(&0) {
        return Err(ClearError::invalid("compare needs region budgets >= 1"));
    }
    cfg.validate()?;
    let clock = |t: Instant| if cfg.record_timing { t.elapsed().as_secs_f64() } else { 0.0 };
    let cs = tile.cell_size();

    let t0 = Instant::now();
    let pix = PixelTerrain::new(tile, cfg.weights.s_max);
    let pix_time = clock(t0);
    let min_dist = spec.min_pair_dist_m.unwrap_or(0.25 * tile.width().min(tile.height()) as f64 * cs);
    let sampled = sample_pairs(tile, &pix, cfg, spec.pairs, min_dist);
    let pairs: Vec<(Point2, Point2)> = sampled.iter().map(|(s, g, _)| (*s, *g)).collect();
    let reference_plans: Vec<PlanResult> = sampled.into_iter().map(|(_, _, r)| r).collect();

    let params = cfg.decompose_params();
    let mut rows = Vec::new();
    let mut pair_rows = Vec::new();
    let mut cells = Vec::new();
    for &method in &spec.methods {
        for &budget in &spec.budgets {
            let t = Instant::now();
            let built = decompose_to_budget(tile, method, budget, &params)
                .map(|d: Decomposition| RegionGraph::build(d.regions, tile.classes(), &cfg.weights, cs));
            let graph = match built {
                Ok(g) => g,
                Err(e) => {
                    rows.push(CompareRow::failed(method.name(), budget, &e));
                    continue;
                }
            };
            let a_time = clock(t);
            let report = match evaluate(tile, &graph.regions, a_time) {
                Ok(r) => r,
                Err(e) => {
                    rows.push(CompareRow::failed(method.name(), budget, &e));
                    continue;
                }
            };
            let (mut costs, mut lens, mut times, mut plans) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for (i, &(s, g)) in pairs.iter().enumerate() {
                let res = plan_region(&graph, &PlanQuery::new(s, g));
                pair_rows.push(PairRow {
                    method: method.name().to_string(),
                    budget,
                    pair: i,
                    cost: res.as_ref().ok().map(|r| r.total_cost),
                    length: res.as_ref().ok().map(|r| r.length_m),
                    error: res.as_ref().err().map(|e| e.to_string()).unwrap_or_default(),
                });
                if let Ok(r) = &res {
                    costs.push(r.total_cost);
                    lens.push(r.length_m);
                    times.push(if cfg.record_timing { r.plan_time_s } else { 0.0 });
                }
                plans.push(res.ok());
            }
            rows.push(CompareRow {
                method: method.name().to_string(),
                budget,
                region_count: Some(report.region_count),
                rmse: Some(report.rmse_m),
                miou: Some(report.miou),
                jsd_retention: Some(report.jsd_retention),
                mean_cost: mean(&costs),
                mean_len: mean(&lens),
                p_time: mean(&times),
                a_time: Some(a_time),
                planned: costs.len(),
                error: String::new(),
            });
            cells.push(CellOutput { method, budget, regions: graph.regions, plans });
        }
    }

    if spec.reference {
        let budget = tile.len();
        for (i, r) in reference_plans.iter().enumerate() {
            pair_rows.push(PairRow {
                method: RAW_GRID.to_string(),
                budget,
                pair: i,
                cost: Some(r.total_cost),
                length: Some(r.length_m),
                error: String::new(),
            });
        }
        let costs: Vec<f64> = reference_plans.iter().map(|r| r.total_cost).collect();
        let lens: Vec<f64> = reference_plans.iter().map(|r| r.length_m).collect();
        let times: Vec<f64> = reference_plans.iter().map(|r| if cfg.record_timing { r.plan_time_s } else { 0.0 }).collect();
        rows.push(CompareRow {
            method: RAW_GRID.to_string(),
            budget,
            region_count: Some(tile.len()),
            rmse: Some(0.0),
            miou: Some(1.0),
            jsd_retention: Some(1.0),
            mean_cost: mean(&costs),
            mean_len: mean(&lens),
            p_time: mean(&times),
            a_time: Some(pix_time),
            planned: costs.len(),
            error: String::new(),
        });
    }
    Ok(CompareOutput { rows, pair_rows, pairs, cells, reference_plans })
}
