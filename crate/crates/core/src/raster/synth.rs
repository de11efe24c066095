//! Deterministic synthetic terrain fixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{quantile, ClassId, ClassTable, LandcoverClass, TerrainTile};
use crate::error::{ClearError, Result};

/// Legend used by synthetic tiles. Ids 4 and 5 are not traversable.
pub fn default_legend() -> Vec<LandcoverClass> {
    let c =
        |id, name: &str, friction, roughness, traversable| LandcoverClass { id, name: name.to_string(), friction, roughness, traversable };
    vec![
        c(0, "grassland", 0.2, 0.1, true),
        c(1, "forest", 0.5, 0.4, true),
        c(2, "shrubland", 0.3, 0.3, true),
        c(3, "urban", 0.1, 0.05, true),
        c(4, "water", 0.0, 0.0, false),
        c(5, "snow_ice", 0.1, 0.1, false),
    ]
}

const WATER: ClassId = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hill {
    pub row: f64,
    pub col: f64,
    pub amplitude: f64,
    pub sigma_px: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SynthKind {
    /// `z = a*col + b*row + c`.
    Ramp { a: f64, b: f64, c: f64 },
    /// Sum of Gaussian bumps over a constant base; `random_hills` extra
    /// bumps are drawn from the rng.
    GaussianHills {
        base: f64,
        #[serde(default)]
        hills: Vec<Hill>,
        #[serde(default)]
        random_hills: usize,
    },
    /// `low` left of `col`, `high` from `col` on.
    Step { col: usize, low: f64, high: f64 },
    /// Class 0 above the top-left to bottom-right diagonal, class 1 on and
    /// below it; elevation is the ramp `a*col + b*row + c`.
    DiagonalBoundary {
        #[serde(default)]
        a: f64,
        #[serde(default)]
        b: f64,
        #[serde(default)]
        c: f64,
    },
    /// Two classes alternating in `block x block` squares on flat ground.
    Checkerboard { block: usize, elevation: f64 },
    /// Multi-octave value noise with noise-driven landcover. The lowest
    /// `water_fraction` of the terrain becomes water.
    FractalNoise {
        amplitude: f64,
        scale_px: f64,
        octaves: u32,
        persistence: f64,
        classes: usize,
        #[serde(default)]
        water_fraction: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
    #[serde(flatten)]
    pub kind: SynthKind,
}

impl SynthSpec {
    /// Spec with default parameters for a named kind.
    pub fn named(name: &str, width: usize, height: usize, cell_size: f64) -> Result<Self> {
        let kind = match name {
            "ramp" => SynthKind::Ramp { a: 0.1, b: 0.0, c: 5.0 },
            "gaussian_hills" | "hills" => SynthKind::GaussianHills {
                base: 0.0,
                hills: vec![Hill {
                    row: height as f64 / 2.0,
                    col: width as f64 / 2.0,
                    amplitude: 300.0,
                    sigma_px: width.min(height) as f64 / 5.0,
                }],
                random_hills: 0,
            },
            "step" => SynthKind::Step { col: width / 2, low: 0.0, high: 50.0 },
            "diagonal_boundary" | "diagonal" => SynthKind::DiagonalBoundary { a: 0.0, b: 0.0, c: 0.0 },
            "checkerboard" => SynthKind::Checkerboard { block: 1, elevation: 0.0 },
            "fractal_noise" | "fractal" => SynthKind::FractalNoise {
                amplitude: 200.0,
                scale_px: width.max(height) as f64 / 2.0,
                octaves: 4,
                persistence: 0.5,
                classes: 4,
                water_fraction: 0.05,
            },
            other => return Err(ClearError::UnknownSynth(other.to_string())),
        };
        Ok(SynthSpec { width, height, cell_size, kind })
    }
}

pub fn synth_tile(spec: &SynthSpec, rng_seed: u64) -> Result<TerrainTile> {
    let (w, h) = (spec.width, spec.height);
    if w == 0 || h == 0 {
        return Err(ClearError::Empty("synthetic tile with zero size"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let legend = default_legend();
    let n = w * h;
    let grid = |f: &dyn Fn(usize, usize) -> f64| -> Vec<f64> { (0..n).map(|i| f(i / w, i % w)).collect() };
    let (elevation, landcover): (Vec<f64>, Vec<ClassId>) = match &spec.kind {
        SynthKind::Ramp { a, b, c } => (grid(&|r, col| a * col as f64 + b * r as f64 + c), vec![0; n]),
        SynthKind::GaussianHills { base, hills, random_hills } => {
            let mut all = hills.clone();
            for _ in 0..*random_hills {
                all.push(Hill {
                    row: rng.gen_range(0.0..h as f64),
                    col: rng.gen_range(0.0..w as f64),
                    amplitude: rng.gen_range(50.0..300.0),
                    sigma_px: rng.gen_range(0.05..0.2) * w.min(h) as f64,
                });
            }
            let elev = grid(&|r, c| {
                let (y, x) = (r as f64 + 0.5, c as f64 + 0.5);
                base + all
                    .iter()
                    .map(|hl| {
                        let d2 = (x - hl.col).powi(2) + (y - hl.row).powi(2);
                        hl.amplitude * (-d2 / (2.0 * hl.sigma_px * hl.sigma_px)).exp()
                    })
                    .sum::<f64>()
            });
            (elev, vec![0; n])
        }
        SynthKind::Step { col, low, high } => (grid(&|_, c| if c < *col { *low } else { *high }), vec![0; n]),
        SynthKind::DiagonalBoundary { a, b, c } => {
            let elev = grid(&|r, col| a * col as f64 + b * r as f64 + c);
            // Pixel-center test against the corner-to-corner line.
            let lc = (0..n)
                .map(|i| {
                    let (r, col) = (i / w, i % w);
                    let above = (col as f64 + 0.5) * h as f64 > (r as f64 + 0.5) * w as f64;
                    if above {
                        0
                    } else {
                        1
                    }
                })
                .collect();
            (elev, lc)
        }
        SynthKind::Checkerboard { block, elevation } => {
            let b = (*block).max(1);
            let lc = (0..n).map(|i| (((i / w) / b + (i % w) / b) % 2) as ClassId).collect();
            (vec![*elevation; n], lc)
        }
        SynthKind::FractalNoise { amplitude, scale_px, octaves, persistence, classes, water_fraction } => {
            if *classes == 0 || *classes > 4 {
                return Err(ClearError::invalid("fractal_noise supports 1..=4 land classes"));
            }
            let raw = value_noise(&mut rng, w, h, *scale_px, *octaves, *persistence);
            let (lo, hi) = raw.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            let span = if hi > lo { hi - lo } else { 1.0 };
            let elev: Vec<f64> = raw.iter().map(|v| amplitude * (v - lo) / span).collect();

            let cover = value_noise(&mut rng, w, h, scale_px * 0.6, 3, 0.5);
            let cuts: Vec<f64> = (1..*classes).map(|k| quantile(&cover, k as f64 / *classes as f64)).collect();
            let mut lc: Vec<ClassId> = cover.iter().map(|v| cuts.iter().filter(|&&cut| *v > cut).count() as ClassId).collect();
            if *water_fraction > 0.0 {
                let level = quantile(&elev, water_fraction.clamp(0.0, 1.0));
                for (l, &z) in lc.iter_mut().zip(&elev) {
                    if z <= level {
                        *l = WATER;
                    }
                }
            }
            (elev, lc)
        }
    };

    let mut used: Vec<ClassId> = landcover.clone();
    used.sort_unstable();
    used.dedup();
    let max_used = *used.last().unwrap_or(&0);
    // Keep the legend contiguous up to the largest id in use (so a two-class
    // fixture has a two-class legend) plus water when it occurs.
    let classes = ClassTable::new(legend.into_iter().filter(|c| c.id <= max_used.min(3) || used.contains(&c.id)).collect())?;
    TerrainTile::new(w, h, spec.cell_size, elevation, landcover, classes)
}

/// Sum of bilinear value-noise octaves; each octave halves the lattice
/// spacing and scales by `persistence`.
fn value_noise(rng: &mut ChaCha8Rng, w: usize, h: usize, scale_px: f64, octaves: u32, persistence: f64) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    let mut amp = 1.0;
    let mut spacing = scale_px.max(1.0);
    for _ in 0..octaves.max(1) {
        let lw = (w as f64 / spacing).ceil() as usize + 2;
        let lh = (h as f64 / spacing).ceil() as usize + 2;
        let lattice: Vec<f64> = (0..lw * lh).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for r in 0..h {
            let fy = (r as f64 + 0.5) / spacing;
            let y0 = fy.floor() as usize;
            let ty = smooth(fy - y0 as f64);
            for c in 0..w {
                let fx = (c as f64 + 0.5) / spacing;
                let x0 = fx.floor() as usize;
                let tx = smooth(fx - x0 as f64);
                let at = |yy: usize, xx: usize| lattice[yy * lw + xx];
                let top = at(y0, x0) * (1.0 - tx) + at(y0, x0 + 1) * tx;
                let bot = at(y0 + 1, x0) * (1.0 - tx) + at(y0 + 1, x0 + 1) * tx;
                out[r * w + c] += amp * (top * (1.0 - ty) + bot * ty);
            }
        }
        amp *= persistence;
        spacing = (spacing / 2.0).max(1.0);
    }
    out
}

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}
