//! Run configuration shared by every command.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bsd::SeedParams;
use crate::decompose::DecomposeParams;
use crate::error::{ClearError, Result};
use crate::graph::CostWeights;
use crate::planefit::FitParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub elevation: Option<PathBuf>,
    pub landcover: Option<PathBuf>,
    pub classes: Option<PathBuf>,
    pub n_seeds: usize,
    pub alpha_bdy: f64,
    /// Pixels.
    pub r_min: f64,
    pub k: usize,
    /// Plane-fit RMSE tolerance in meters.
    pub epsilon: f64,
    /// Pixels.
    pub a_min: usize,
    /// Quadtree minimum node area in pixels.
    pub min_area: usize,
    pub space_boundary: bool,
    /// Cost weights, grade limit and heading mode.
    pub weights: CostWeights,
    pub rng_seed: u64,
    pub out_dir: PathBuf,
    /// When false every wall-time field is written as 0 so reruns match
    /// byte for byte.
    pub record_timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let seeds = SeedParams::default();
        let fit = FitParams::default();
        RunConfig {
            elevation: None,
            landcover: None,
            classes: None,
            n_seeds: seeds.n,
            alpha_bdy: seeds.alpha_bdy,
            r_min: seeds.r_min,
            k: seeds.k,
            epsilon: fit.epsilon,
            a_min: fit.a_min,
            min_area: 1,
            space_boundary: seeds.space_boundary,
            weights: CostWeights::default(),
            rng_seed: 0,
            out_dir: PathBuf::from("run"),
            record_timing: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ClearError::InvalidParameter(msg));
        if self.n_seeds == 0 {
            return bad("n_seeds must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.alpha_bdy) {
            return bad(format!("alpha_bdy {} outside [0, 1]", self.alpha_bdy));
        }
        if !(self.r_min >= 0.0 && self.r_min.is_finite()) {
            return bad(format!("r_min {} must be finite and >= 0", self.r_min));
        }
        if self.k < 3 || self.k.is_multiple_of(2) {
            return bad(format!("k {} must be odd and >= 3", self.k));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon {} must be finite and > 0", self.epsilon));
        }
        if self.a_min == 0 || self.min_area == 0 {
            return bad("a_min and min_area must be >= 1".into());
        }
        let w = &self.weights;
        for (name, v) in [("w_f", w.w_f), ("w_s", w.w_s), ("w_r", w.w_r), ("w_theta", w.w_theta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} {v} must be finite and >= 0"));
            }
        }
        if !(w.s_max > 0.0 && w.s_max.is_finite()) {
            return bad(format!("s_max {} must be finite and > 0", w.s_max));
        }
        Ok(())
    }

    pub fn seed_params(&self) -> SeedParams {
        SeedParams { n: self.n_seeds, alpha_bdy: self.alpha_bdy, r_min: self.r_min, k: self.k, space_boundary: self.space_boundary }
    }

    pub fn fit_params(&self) -> FitParams {
        FitParams { epsilon: self.epsilon, a_min: self.a_min }
    }

    pub fn decompose_params(&self) -> DecomposeParams {
        DecomposeParams { seeds: self.seed_params(), fit: self.fit_params(), s_max: self.weights.s_max, min_area: self.min_area }
    }
}
