//! Subcommand bodies. Each resolves its config, does the work, writes its
//! files into the run directory and finishes with the manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clear_core::config::RunConfig;
use clear_core::decompose::{clear_decompose, decompose_to_budget, quadtree, Decomposition, Method};
use clear_core::experiment::{run_compare, CompareSpec};
use clear_core::export::{
    edges_csv, read_json, render_ppm, render_svg, rows_csv, to_json, waypoints_csv, CellDocument, GraphDocument, RegionDocument,
};
use clear_core::graph::RegionGraph;
use clear_core::metrics::{evaluate, rasterize, Reconstruction};
use clear_core::planefit::Region;
use clear_core::planner::{crossing_waypoints, plan_grid, plan_region, PlanQuery, PlanResult};
use clear_core::raster::{load_tile, synth_tile, write_ascii_grid, write_tile, AsciiGrid, SynthSpec};
use clear_core::{ClearError, TerrainTile};
use serde_json::{json, Value};

use crate::args::{CompareArgs, DecomposeArgs, EvalArgs, PlanArgs, SynthArgs, TileArgs};
use crate::UsageError;

/// Run directory that remembers what was written, for the manifest.
struct RunDir {
    root: PathBuf,
    outputs: Vec<String>,
    started: Instant,
}

impl RunDir {
    fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(RunDir { root: root.to_path_buf(), outputs: Vec::new(), started: Instant::now() })
    }

    fn path(&mut self, name: &str) -> Result<PathBuf> {
        let p = self.root.join(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        self.outputs.push(name.to_string());
        Ok(p)
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.path(name)?;
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
    }

    fn bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path(name)?;
        fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))
    }

    fn json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.text(name, &to_json(value)?)
    }

    fn grid(&mut self, name: &str, tile: &TerrainTile, values: Vec<f64>) -> Result<()> {
        let origin = tile.origin();
        let grid = AsciiGrid {
            ncols: tile.width(),
            nrows: tile.height(),
            xll: origin.x,
            yll: origin.y,
            cell_size: tile.cell_size(),
            nodata: None,
            values,
        };
        let p = self.path(name)?;
        Ok(write_ascii_grid(&p, &grid)?)
    }

    /// Writes `manifest.json`. The config is recorded with `out_dir` as "."
    /// so identical runs into different directories match.
    fn finish(mut self, command: &str, cfg: &RunConfig, inputs: Value, extra: Value) -> Result<()> {
        let mut recorded = cfg.clone();
        recorded.out_dir = PathBuf::from(".");
        self.outputs.sort();
        let wall = if cfg.record_timing { self.started.elapsed().as_secs_f64() } else { 0.0 };
        let manifest = json!({
            "tool": "clear",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config": recorded,
            "inputs": inputs,
            "outputs": self.outputs,
            "summary": extra,
            "wall_time_s": wall,
        });
        let p = self.root.join("manifest.json");
        fs::write(&p, to_json(&manifest)?).with_context(|| format!("writing {}", p.display()))
    }
}

fn clock(cfg: &RunConfig, t: Instant) -> f64 {
    if cfg.record_timing {
        t.elapsed().as_secs_f64()
    } else {
        0.0
    }
}

/// Loads or synthesizes the tile, returning it with a manifest description.
fn load(tile: &TileArgs, cfg: &RunConfig) -> Result<(TerrainTile, Value)> {
    if let Some(kind) = &tile.synth {
        let spec = SynthSpec::named(kind, tile.width, tile.height, tile.cell_size)?;
        let t = synth_tile(&spec, cfg.rng_seed)?;
        return Ok((t, json!({ "synth": spec, "rng_seed": cfg.rng_seed })));
    }
    let (Some(e), Some(l), Some(c)) = (&cfg.elevation, &cfg.landcover, &cfg.classes) else {
        return Err(UsageError("need --elevation, --landcover and --classes (or --synth KIND)".into()).into());
    };
    let t = load_tile(e, l, c)?;
    Ok((t, json!({ "elevation": e, "landcover": l, "classes": c })))
}

fn decompose_tile(tile: &TerrainTile, method: Method, budget: Option<usize>, cfg: &RunConfig) -> Result<Decomposition> {
    let params = cfg.decompose_params();
    Ok(match (method, budget) {
        (_, Some(b)) => decompose_to_budget(tile, method, b, &params)?,
        (Method::Clear, None) => clear_decompose(tile, &params.seeds, &params.fit, params.s_max)?,
        (Method::Quadtree, None) => quadtree(tile, params.fit.epsilon, params.min_area, params.s_max)?,
        (m, None) => return Err(UsageError(format!("method {m} needs --budget")).into()),
    })
}

fn region_doc(tile: &TerrainTile, regions: &[Region]) -> RegionDocument {
    RegionDocument { width: tile.width(), height: tile.height(), cell_size: tile.cell_size(), regions: regions.to_vec() }
}

fn write_reconstruction(run: &mut RunDir, tile: &TerrainTile, rec: Reconstruction) -> Result<()> {
    run.grid("recon_elevation.asc", tile, rec.elevation)?;
    run.grid("recon_landcover.asc", tile, rec.landcover.iter().map(|&c| c as f64).collect())
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let cfg = a.cfg.resolve()?;
    let spec = match &a.spec {
        Some(p) => read_json::<SynthSpec>(p)?,
        None => SynthSpec::named(&a.kind, a.width, a.height, a.cell_size)?,
    };
    let tile = synth_tile(&spec, cfg.rng_seed)?;
    let mut run = RunDir::create(&cfg.out_dir)?;
    let (e, l, c) = (run.path("elevation.asc")?, run.path("landcover.asc")?, run.path("classes.json")?);
    write_tile(&tile, &e, &l, &c)?;
    run.json("spec.json", &spec)?;
    let ppm = render_ppm(tile.landcover(), tile.width(), tile.height(), tile.classes(), None, None, tile.cell_size());
    run.bytes("landcover.ppm", &ppm)?;
    println!("wrote {}x{} tile to {}", tile.width(), tile.height(), cfg.out_dir.display());
    run.finish("synth", &cfg, json!({ "spec": spec }), json!({ "width": tile.width(), "height": tile.height() }))
}

pub fn decompose(a: &DecomposeArgs) -> Result<()> {
    let cfg = a.cfg.resolve()?;
    let (tile, inputs) = load(&a.tile, &cfg)?;
    let t0 = Instant::now();
    let d = decompose_tile(&tile, a.method, a.budget, &cfg)?;
    let g = RegionGraph::build(d.regions, tile.classes(), &cfg.weights, tile.cell_size());
    let a_time = clock(&cfg, t0);
    let report = evaluate(&tile, &g.regions, a_time)?;
    let rec = rasterize(&g.regions, tile.width(), tile.height(), tile.cell_size())?;

    let mut run = RunDir::create(&cfg.out_dir)?;
    run.json("regions.json", &region_doc(&tile, &g.regions))?;
    if !d.cells.is_empty() {
        let cells = CellDocument { width: tile.width(), height: tile.height(), cell_size: tile.cell_size(), cells: d.cells };
        run.json("cells.json", &cells)?;
    }
    if let Some(seeds) = &d.seeds {
        run.json("seeds.json", seeds)?;
    }
    run.json("graph.json", &GraphDocument::from_graph(&g))?;
    run.text("edges.csv", &edges_csv(&g.edges)?)?;
    let gap = rec.gap_fraction;
    write_reconstruction(&mut run, &tile, rec)?;
    let metrics = json!({ "method": a.method, "resolution": d.resolution, "gap_fraction": gap, "report": report });
    run.json("metrics.json", &metrics)?;
    run.text("regions.svg", &render_svg(tile.map_width(), tile.map_height(), &g.regions, tile.classes(), None))?;
    let ppm = render_ppm(tile.landcover(), tile.width(), tile.height(), tile.classes(), Some(&d.owner), None, tile.cell_size());
    run.bytes("regions.ppm", &ppm)?;

    println!(
        "{}: {} regions, rmse {:.3} m, miou {:.4}, jsd retention {:.4}",
        a.method, report.region_count, report.rmse_m, report.miou, report.jsd_retention
    );
    let summary = json!({ "method": a.method, "budget": a.budget, "regions": report.region_count, "edges": g.edges.len() });
    run.finish("decompose", &cfg, inputs, summary)
}

fn plan_json(
    a: &PlanArgs,
    status: &str,
    result: Option<&PlanResult>,
    crossings: Option<&[clear_core::Point2]>,
    err: Option<&anyhow::Error>,
) -> Value {
    let reason = err.map(|e| {
        let kind = match e.downcast_ref::<ClearError>() {
            Some(ClearError::Unreachable { .. }) => "unreachable",
            Some(ClearError::NonTraversable { .. }) => "non_traversable",
            Some(ClearError::OutsideRegions { .. }) => "outside_regions",
            _ => "error",
        };
        json!({ "kind": kind, "message": format!("{e:#}") })
    });
    json!({
        "status": status,
        "method": a.method,
        "algorithm": a.algorithm,
        "start": a.start,
        "goal": a.goal,
        "result": result,
        "crossing_waypoints": crossings,
        "reason": reason,
    })
}

pub fn plan(a: &PlanArgs) -> Result<()> {
    let cfg = a.cfg.resolve()?;
    let (tile, mut inputs) = load(&a.tile, &cfg)?;
    let query = PlanQuery { start: a.start, goal: a.goal, algorithm: a.algorithm };
    let mut run = RunDir::create(&cfg.out_dir)?;

    let (outcome, graph) = if a.method == "grid-astar" {
        (plan_grid(&tile, &query, &cfg.weights).map_err(anyhow::Error::from), None)
    } else {
        let g = if let Some(p) = &a.graph {
            inputs["graph"] = json!(p);
            read_json::<GraphDocument>(p)?.into_graph()
        } else if let Some(p) = &a.regions {
            inputs["regions"] = json!(p);
            let doc: RegionDocument = read_json(p)?;
            RegionGraph::build(doc.regions, tile.classes(), &cfg.weights, doc.cell_size)
        } else {
            let method: Method = a.method.parse().map_err(|e: ClearError| UsageError(format!("{e}; or grid-astar")))?;
            let d = decompose_tile(&tile, method, a.budget, &cfg)?;
            RegionGraph::build(d.regions, tile.classes(), &cfg.weights, tile.cell_size())
        };
        (plan_region(&g, &query).map_err(anyhow::Error::from), Some(g))
    };

    let mut result = match outcome {
        Ok(r) => r,
        Err(e) => {
            run.json("plan.json", &plan_json(a, "failed", None, None, Some(&e)))?;
            run.finish("plan", &cfg, inputs, json!({ "status": "failed" }))?;
            return Err(e.context("planning failed"));
        }
    };
    if !cfg.record_timing {
        result.plan_time_s = 0.0;
    }
    run.text("waypoints.csv", &waypoints_csv(&result)?)?;
    let crossings = graph.as_ref().map(|g| crossing_waypoints(g, &result));
    if let Some(c) = &crossings {
        let routed = PlanResult { path: c.clone(), ..result.clone() };
        run.text("crossings.csv", &waypoints_csv(&routed)?)?;
    }
    run.json("plan.json", &plan_json(a, "ok", Some(&result), crossings.as_deref(), None))?;
    let regions: &[Region] = graph.as_ref().map(|g| g.regions.as_slice()).unwrap_or(&[]);
    let drawn = crossings.as_deref().unwrap_or(&result.path);
    run.text("plan.svg", &render_svg(tile.map_width(), tile.map_height(), regions, tile.classes(), Some(drawn)))?;
    let ppm = render_ppm(tile.landcover(), tile.width(), tile.height(), tile.classes(), None, Some(drawn), tile.cell_size());
    run.bytes("plan.ppm", &ppm)?;

    println!("{}: cost {:.3}, length {:.1} m, {} expansions", a.method, result.total_cost, result.length_m, result.expanded_nodes);
    let summary = json!({ "status": "ok", "cost": result.total_cost, "length_m": result.length_m });
    run.finish("plan", &cfg, inputs, summary)
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let cfg = a.cfg.resolve()?;
    let (tile, mut inputs) = load(&a.tile, &cfg)?;
    inputs["regions"] = json!(a.regions);
    let doc: RegionDocument = read_json(&a.regions)?;
    if (doc.width, doc.height) != (tile.width(), tile.height()) || doc.cell_size != tile.cell_size() {
        return Err(ClearError::DimensionMismatch {
            left_name: "tile",
            left_rows: tile.height(),
            left_cols: tile.width(),
            right_name: "regions",
            right_rows: doc.height,
            right_cols: doc.width,
        }
        .into());
    }
    let report = evaluate(&tile, &doc.regions, 0.0)?;
    let rec = rasterize(&doc.regions, tile.width(), tile.height(), tile.cell_size())?;
    let mut run = RunDir::create(&cfg.out_dir)?;
    let gap = rec.gap_fraction;
    write_reconstruction(&mut run, &tile, rec)?;
    run.json("metrics.json", &json!({ "gap_fraction": gap, "report": report }))?;
    println!("{} regions, rmse {:.3} m, miou {:.4}", report.region_count, report.rmse_m, report.miou);
    run.finish("eval", &cfg, inputs, json!({ "regions": report.region_count }))
}

pub fn compare(a: &CompareArgs) -> Result<()> {
    let cfg = a.cfg.resolve()?;
    let (tile, inputs) = load(&a.tile, &cfg)?;
    let spec = CompareSpec {
        methods: a.methods.clone(),
        budgets: a.budgets.clone(),
        pairs: a.pairs,
        min_pair_dist_m: a.min_pair_dist,
        reference: !a.no_reference,
    };
    let out = run_compare(&tile, &cfg, &spec)?;
    let mut run = RunDir::create(&cfg.out_dir)?;
    run.text("compare.csv", &rows_csv(&out.rows)?)?;
    run.text("pairs.csv", &rows_csv(&out.pair_rows)?)?;
    run.json("pair_points.json", &out.pairs)?;
    for cell in &out.cells {
        run.json(&format!("regions/{}_{}.json", cell.method, cell.budget), &region_doc(&tile, &cell.regions))?;
    }
    for r in &out.rows {
        let cost = r.mean_cost.map_or("-".to_string(), |c| format!("{c:.2}"));
        let regions = r.region_count.map_or("-".to_string(), |n| n.to_string());
        println!(
            "{:<9} budget {:>6}: {:>6} regions, mean cost {cost}, planned {}/{}",
            r.method,
            r.budget,
            regions,
            r.planned,
            out.pairs.len()
        );
    }
    let summary = json!({ "spec": spec, "pairs_sampled": out.pairs.len(), "rows": out.rows.len() });
    run.finish("compare", &cfg, inputs, summary)
}
