//! Terrain abstraction into convex, landcover-coherent planar regions.
//!
//! The pipeline runs elevation/landcover rasters ([`raster`]) through
//! boundary-seeded Voronoi decomposition ([`bsd`]) and recursive plane
//! fitting ([`planefit`]), encodes the resulting regions as a terrain-aware
//! adjacency graph ([`graph`]) and plans over it ([`planner`]). Grid, hex and
//! quadtree decompositions ([`baselines`]) and the evaluation metrics
//! ([`metrics`]) support side-by-side comparison ([`experiment`]).

pub mod baselines;
pub mod bsd;
pub mod config;
pub mod decompose;
pub mod error;
pub mod experiment;
pub mod export;
pub mod geometry;
pub mod graph;
pub mod metrics;
pub mod planefit;
pub mod planner;
pub mod raster;
pub mod spatial;

pub use error::{ClearError, Result};
pub use geometry::{ConvexPolygon, Point2};
pub use raster::{ClassId, ClassTable, LandcoverClass, StatGrid, TerrainTile};
