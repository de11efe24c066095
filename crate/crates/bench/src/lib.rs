//! Shared fixtures for the pipeline benchmarks.

use clear_core::config::RunConfig;
use clear_core::experiment::sample_pairs;
use clear_core::planner::PixelTerrain;
use clear_core::raster::{synth_tile, SynthSpec};
use clear_core::{Point2, TerrainTile};

/// Square fractal tile with mixed landcover at 30 m pixels.
pub fn fractal_tile(side: usize, seed: u64) -> TerrainTile {
    synth_tile(&SynthSpec::named("fractal", side, side, 30.0).expect("known kind"), seed).expect("valid spec")
}

/// Start-goal pairs the raw-grid planner can connect, at least a quarter
/// of the tile apart.
pub fn query_pairs(tile: &TerrainTile, n: usize) -> Vec<(Point2, Point2)> {
    let cfg = RunConfig::default();
    let pix = PixelTerrain::new(tile, cfg.weights.s_max);
    sample_pairs(tile, &pix, &cfg, n, 0.25 * tile.map_width()).into_iter().map(|(s, g, _)| (s, g)).collect()
}
