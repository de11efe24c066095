//! Command-line flags. Config precedence: defaults, then `--config`, then
//! individual flags.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use clear_core::config::RunConfig;
use clear_core::decompose::Method;
use clear_core::export::read_json;
use clear_core::graph::{FrictionMode, HeadingMode};
use clear_core::planner::Algorithm;
use clear_core::Point2;

use crate::UsageError;

#[derive(Parser, Debug)]
#[command(name = "clear", version, about = "Terrain abstraction into convex planar regions, and planning over them")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic elevation/landcover tile and its class table.
    Synth(SynthArgs),
    /// Decompose a tile into regions and evaluate the reconstruction.
    Decompose(DecomposeArgs),
    /// Plan a path over a region graph or the raw pixel grid.
    Plan(PlanArgs),
    /// Evaluate a saved region set against its tile.
    Eval(EvalArgs),
    /// Run every method at every budget on one tile and tabulate the results.
    Compare(CompareArgs),
}

// Enum flags parse through their config-file (snake_case) names.
fn parse_heading(s: &str) -> std::result::Result<HeadingMode, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|e| e.to_string())
}

fn parse_friction(s: &str) -> std::result::Result<FrictionMode, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|e| e.to_string())
}

fn parse_algorithm(s: &str) -> std::result::Result<Algorithm, String> {
    match s {
        "astar" | "a_star" => Ok(Algorithm::AStar),
        "dijkstra" => Ok(Algorithm::Dijkstra),
        _ => Err(format!("unknown algorithm `{s}` (expected astar or dijkstra)")),
    }
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: clear_core::ClearError| e.to_string())
}

/// `x,y` in map meters.
fn parse_point(s: &str) -> std::result::Result<Point2, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected x,y but got `{s}`"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("`{v}` is not a number"));
    Ok(Point2::new(num(x)?, num(y)?))
}

/// Flags shared by every command; each mirrors a config field.
#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// JSON config file; flags given alongside override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Elevation ESRI ASCII grid.
    #[arg(long)]
    pub elevation: Option<PathBuf>,
    /// Landcover ESRI ASCII grid of class ids.
    #[arg(long)]
    pub landcover: Option<PathBuf>,
    /// Class table JSON.
    #[arg(long)]
    pub classes: Option<PathBuf>,
    #[arg(long)]
    pub n_seeds: Option<usize>,
    #[arg(long)]
    pub alpha_bdy: Option<f64>,
    /// Minimum seed spacing in pixels.
    #[arg(long)]
    pub r_min: Option<f64>,
    /// Statistics window size (odd, >= 3).
    #[arg(long)]
    pub k: Option<usize>,
    /// Plane-fit RMSE tolerance in meters.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Minimum leaf size in pixels.
    #[arg(long)]
    pub a_min: Option<usize>,
    /// Quadtree minimum node area in pixels.
    #[arg(long)]
    pub min_area: Option<usize>,
    #[arg(long)]
    pub space_boundary: Option<bool>,
    #[arg(long)]
    pub w_f: Option<f64>,
    #[arg(long)]
    pub w_s: Option<f64>,
    #[arg(long)]
    pub w_r: Option<f64>,
    #[arg(long)]
    pub w_theta: Option<f64>,
    /// Maximum traversable grade as a fraction.
    #[arg(long)]
    pub s_max: Option<f64>,
    /// literal or perpendicular.
    #[arg(long, value_parser = parse_heading)]
    pub heading_mode: Option<HeadingMode>,
    /// destination or average.
    #[arg(long, value_parser = parse_friction)]
    pub friction_mode: Option<FrictionMode>,
    #[arg(long)]
    pub rng_seed: Option<u64>,
    /// Run directory for every output.
    #[arg(long, short = 'o')]
    pub out_dir: Option<PathBuf>,
    /// Write every wall time as 0 so reruns match byte for byte.
    #[arg(long)]
    pub no_timing: bool,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c: RunConfig = match &self.config {
            // A bad config file is a config error, not a data error.
            Some(p) => read_json(p).map_err(|e| UsageError(format!("config {}: {e}", p.display())))?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field.clone() { $target = v.into(); })*
            };
        }
        set! {
            elevation => c.elevation,
            landcover => c.landcover,
            classes => c.classes,
            n_seeds => c.n_seeds,
            alpha_bdy => c.alpha_bdy,
            r_min => c.r_min,
            k => c.k,
            epsilon => c.epsilon,
            a_min => c.a_min,
            min_area => c.min_area,
            space_boundary => c.space_boundary,
            w_f => c.weights.w_f,
            w_s => c.weights.w_s,
            w_r => c.weights.w_r,
            w_theta => c.weights.w_theta,
            s_max => c.weights.s_max,
            heading_mode => c.weights.heading_mode,
            friction_mode => c.weights.friction_mode,
            rng_seed => c.rng_seed,
            out_dir => c.out_dir,
        }
        if self.no_timing {
            c.record_timing = false;
        }
        c.validate()?;
        Ok(c)
    }
}

/// Where the input tile comes from: raster files in the config, or a named
/// synthetic kind generated from `rng_seed`.
#[derive(Args, Debug, Clone, Default)]
pub struct TileArgs {
    /// Generate the tile instead of loading rasters: ramp, hills, step,
    /// diagonal, checkerboard or fractal.
    #[arg(long)]
    pub synth: Option<String>,
    #[arg(long, default_value_t = 100)]
    pub width: usize,
    #[arg(long, default_value_t = 100)]
    pub height: usize,
    /// Pixel size in meters.
    #[arg(long, default_value_t = 30.0)]
    pub cell_size: f64,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Named kind, as for `--synth`.
    #[arg(long, default_value = "fractal")]
    pub kind: String,
    /// Full generator spec as JSON; replaces kind and size flags.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub width: usize,
    #[arg(long, default_value_t = 100)]
    pub height: usize,
    #[arg(long, default_value_t = 30.0)]
    pub cell_size: f64,
    #[command(flatten)]
    pub cfg: ConfigArgs,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    /// clear, grid, hex or quadtree.
    #[arg(long, default_value = "clear", value_parser = parse_method)]
    pub method: Method,
    /// Target region count; without it CLEAR and the quadtree use the
    /// configured parameters directly.
    #[arg(long)]
    pub budget: Option<usize>,
    #[command(flatten)]
    pub tile: TileArgs,
    #[command(flatten)]
    pub cfg: ConfigArgs,
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    /// Start as x,y in map meters from the tile's top-left corner.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub start: Point2,
    /// Goal as x,y in map meters.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub goal: Point2,
    /// clear, grid, hex, quadtree or grid-astar (raw pixels).
    #[arg(long, default_value = "clear")]
    pub method: String,
    #[arg(long)]
    pub budget: Option<usize>,
    /// Saved graph JSON to plan over instead of decomposing.
    #[arg(long, conflicts_with = "regions")]
    pub graph: Option<PathBuf>,
    /// Saved region JSON; the graph is rebuilt with the configured weights.
    #[arg(long)]
    pub regions: Option<PathBuf>,
    /// astar or dijkstra.
    #[arg(long, default_value = "astar", value_parser = parse_algorithm)]
    pub algorithm: Algorithm,
    #[command(flatten)]
    pub tile: TileArgs,
    #[command(flatten)]
    pub cfg: ConfigArgs,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Region JSON written by `decompose`.
    #[arg(long)]
    pub regions: PathBuf,
    #[command(flatten)]
    pub tile: TileArgs,
    #[command(flatten)]
    pub cfg: ConfigArgs,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',', default_value = "clear,grid,hex,quadtree", value_parser = parse_method)]
    pub methods: Vec<Method>,
    /// Comma-separated region budgets.
    #[arg(long, value_delimiter = ',', default_value = "50,100,200")]
    pub budgets: Vec<usize>,
    /// Start-goal pairs shared by every cell.
    #[arg(long, default_value_t = 10)]
    pub pairs: usize,
    /// Minimum start-goal distance in meters; defaults to a quarter of the
    /// shorter tile side.
    #[arg(long)]
    pub min_pair_dist: Option<f64>,
    /// Skip the raw-grid reference row.
    #[arg(long)]
    pub no_reference: bool,
    #[command(flatten)]
    pub tile: TileArgs,
    #[command(flatten)]
    pub cfg: ConfigArgs,
}
