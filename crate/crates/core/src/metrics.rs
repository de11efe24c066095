//! Reconstruction, semantic and repeatability metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{ClearError, Result};
use crate::geometry::{polygon_iou, ConvexPolygon, Point2};
use crate::planefit::Region;
use crate::raster::{ClassId, TerrainTile};
use crate::spatial::pixel_ownership;

/// Largest tolerated share of pixels outside every region.
pub const MAX_GAP_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rmse_m: f64,
    pub miou: f64,
    pub per_class_iou: BTreeMap<ClassId, f64>,
    pub jsd_retention: f64,
    pub complexity_psi: f64,
    pub region_count: usize,
    pub abstraction_time_s: f64,
}

/// Reconstructed elevation and landcover rasters.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub elevation: Vec<f64>,
    pub landcover: Vec<ClassId>,
    pub gap_fraction: f64,
}

/// Evaluates each pixel against the region containing its center (lowest id
/// on shared edges); uncovered pixels take the nearest region.
pub fn rasterize(regions: &[Region], width: usize, height: usize, cell_size: f64) -> Result<Reconstruction> {
    let polys: Vec<&ConvexPolygon> = regions.iter().map(|r| &r.polygon).collect();
    let own = pixel_ownership(width, height, cell_size, &polys)?;
    let gap_fraction = own.gap_fraction();
    if gap_fraction > MAX_GAP_FRACTION {
        return Err(ClearError::CoverageGap { fraction: gap_fraction });
    }
    let mut elevation = Vec::with_capacity(own.owner.len());
    let mut landcover = Vec::with_capacity(own.owner.len());
    for (k, &o) in own.owner.iter().enumerate() {
        let p = Point2::new(((k % width) as f64 + 0.5) * cell_size, ((k / width) as f64 + 0.5) * cell_size);
        let r = &regions[o];
        elevation.push(r.plane.eval(p.x, p.y));
        landcover.push(r.landcover);
    }
    Ok(Reconstruction { elevation, landcover, gap_fraction })
}

fn same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(ClearError::DimensionMismatch {
            left_name: "truth",
            left_rows: a,
            left_cols: 1,
            right_name: "estimate",
            right_rows: b,
            right_cols: 1,
        });
    }
    Ok(())
}

pub fn rmse(truth: &[f64], estimate: &[f64]) -> Result<f64> {
    same_len(truth.len(), estimate.len())?;
    if truth.is_empty() {
        return Ok(0.0);
    }
    let se: f64 = truth.iter().zip(estimate).map(|(t, e)| (t - e) * (t - e)).sum();
    Ok((se / truth.len() as f64).sqrt())
}

/// Mean IoU over the classes present in `truth`, with the per-class values.
pub fn miou(truth: &[ClassId], estimate: &[ClassId]) -> Result<(f64, BTreeMap<ClassId, f64>)> {
    same_len(truth.len(), estimate.len())?;
    let mut inter: BTreeMap<ClassId, usize> = BTreeMap::new();
    let mut t_count: BTreeMap<ClassId, usize> = BTreeMap::new();
    let mut e_count: BTreeMap<ClassId, usize> = BTreeMap::new();
    for (&t, &e) in truth.iter().zip(estimate) {
        *t_count.entry(t).or_default() += 1;
        *e_count.entry(e).or_default() += 1;
        if t == e {
            *inter.entry(t).or_default() += 1;
        }
    }
    let per: BTreeMap<ClassId, f64> = t_count
        .iter()
        .map(|(&c, &tc)| {
            let i = inter.get(&c).copied().unwrap_or(0);
            let u = tc + e_count.get(&c).copied().unwrap_or(0) - i;
            (c, i as f64 / u as f64)
        })
        .collect();
    let mean = if per.is_empty() { 1.0 } else { per.values().sum::<f64>() / per.len() as f64 };
    Ok((mean, per))
}

fn kl2(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).filter(|(&a, _)| a > 0.0).map(|(&a, &b)| a * (a / b).log2()).sum()
}

/// Jensen-Shannon divergence in bits, in `[0, 1]`.
pub fn jsd(p: &[f64], q: &[f64]) -> f64 {
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    (0.5 * kl2(p, &m) + 0.5 * kl2(q, &m)).clamp(0.0, 1.0)
}

fn distributions(a: &[ClassId], b: &[ClassId]) -> (Vec<f64>, Vec<f64>) {
    let mut counts: BTreeMap<ClassId, (usize, usize)> = BTreeMap::new();
    for &x in a {
        counts.entry(x).or_default().0 += 1;
    }
    for &x in b {
        counts.entry(x).or_default().1 += 1;
    }
    let (na, nb) = (a.len().max(1) as f64, b.len().max(1) as f64);
    counts.values().map(|&(x, y)| (x as f64 / na, y as f64 / nb)).unzip()
}

/// `1 - JSD` between the class distributions of two label maps.
pub fn jsd_retention(truth: &[ClassId], estimate: &[ClassId]) -> Result<f64> {
    same_len(truth.len(), estimate.len())?;
    let (p, q) = distributions(truth, estimate);
    Ok(1.0 - jsd(&p, &q))
}

/// `alpha * sqrt(JSD(p || u)) + (1 - alpha) * F`, where `u` is uniform over
/// the tile's legend and `F` is the mean share of differing labels among
/// each pixel's `k x k` neighbors, normalized by `k^2 - 1`.
pub fn complexity_psi(tile: &TerrainTile, alpha: f64, k: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ClearError::invalid(format!("alpha {alpha} outside [0, 1]")));
    }
    if k.is_multiple_of(2) || k < 3 {
        return Err(ClearError::InvalidWindow { k, max: tile.width().min(tile.height()) });
    }
    let classes = tile.classes();
    let mut counts = vec![0usize; classes.len()];
    for &l in tile.landcover() {
        counts[classes.index_of(l).expect("tile labels are in the legend")] += 1;
    }
    let n = tile.len() as f64;
    let p: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let u = vec![1.0 / classes.len() as f64; classes.len()];
    let jsd_norm = jsd(&p, &u).sqrt();

    let (w, h) = (tile.width() as isize, tile.height() as isize);
    let half = (k / 2) as isize;
    let norm = (k * k - 1) as f64;
    let mut f = 0.0;
    for r in 0..h {
        for c in 0..w {
            let me = tile.class_at(r as usize, c as usize);
            let mut diff = 0usize;
            for rr in (r - half).max(0)..=(r + half).min(h - 1) {
                for cc in (c - half).max(0)..=(c + half).min(w - 1) {
                    if tile.class_at(rr as usize, cc as usize) != me {
                        diff += 1;
                    }
                }
            }
            f += diff as f64 / norm;
        }
    }
    f /= n;
    Ok(alpha * jsd_norm + (1.0 - alpha) * f)
}

/// Region polygons of one patch with the patch size in pixels.
#[derive(Debug, Clone, Copy)]
pub struct Patch<'a> {
    pub polygons: &'a [ConvexPolygon],
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Repeatability {
    pub mean_best_iou: f64,
    pub repeat_ratio: f64,
    /// Polygons of `a` that survive clipping to the overlap.
    pub compared: usize,
}

/// Best-match IoU of `a`'s polygons against `b`'s inside the window where
/// the patches overlap. `offset` is the `(row, col)` of `b`'s origin in
/// `a`'s pixel frame.
pub fn repeatability(a: &Patch, b: &Patch, offset: (isize, isize), cell_size: f64, iou_threshold: f64) -> Result<Repeatability> {
    let shift = Point2::new(offset.1 as f64 * cell_size, offset.0 as f64 * cell_size);
    let x_lo = shift.x.max(0.0);
    let y_lo = shift.y.max(0.0);
    let x_hi = (a.width as f64 * cell_size).min(shift.x + b.width as f64 * cell_size);
    let y_hi = (a.height as f64 * cell_size).min(shift.y + b.height as f64 * cell_size);
    if x_hi <= x_lo || y_hi <= y_lo {
        return Err(ClearError::EmptyOverlap);
    }
    let min_area = 1e-9 * cell_size * cell_size;
    let clip = |polys: &[ConvexPolygon], d: Point2| -> Vec<ConvexPolygon> {
        polys.iter().map(|p| p.translate(d).clip_rect(x_lo, x_hi, y_lo, y_hi)).filter(|p| p.area() > min_area).collect()
    };
    let pa = clip(a.polygons, Point2::new(0.0, 0.0));
    let pb = clip(b.polygons, shift);
    if pa.is_empty() {
        return Err(ClearError::EmptyOverlap);
    }
    let boxes: Vec<_> = pb.iter().map(|p| p.bbox()).collect();
    let mut sum = 0.0;
    let mut hits = 0usize;
    for p in &pa {
        let bb = p.bbox();
        let best = pb.iter().zip(&boxes).filter(|(_, b)| b.intersects(&bb, 0.0)).map(|(q, _)| polygon_iou(p, q)).fold(0.0, f64::max);
        sum += best;
        if best >= iou_threshold {
            hits += 1;
        }
    }
    Ok(Repeatability { mean_best_iou: sum / pa.len() as f64, repeat_ratio: hits as f64 / pa.len() as f64, compared: pa.len() })
}

/// Full report for a decomposition of `tile`; complexity uses alpha 0.5
/// and a 5x5 window.
pub fn evaluate(tile: &TerrainTile, regions: &[Region], abstraction_time_s: f64) -> Result<EvalReport> {
    if regions.is_empty() {
        return Err(ClearError::Empty("no regions to evaluate"));
    }
    let rec = rasterize(regions, tile.width(), tile.height(), tile.cell_size())?;
    let (miou, per_class_iou) = miou(tile.landcover(), &rec.landcover)?;
    let k = if tile.width().min(tile.height()) >= 5 { 5 } else { 3 };
    Ok(EvalReport {
        rmse_m: rmse(tile.elevation(), &rec.elevation)?,
        miou,
        per_class_iou,
        jsd_retention: jsd_retention(tile.landcover(), &rec.landcover)?,
        complexity_psi: complexity_psi(tile, 0.5, k)?,
        region_count: regions.len(),
        abstraction_time_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planefit::Plane;
    use crate::raster::{default_legend, synth_tile, ClassTable, SynthKind, SynthSpec};

    fn legend() -> ClassTable {
        ClassTable::new(default_legend()).unwrap()
    }

    #[test]
    fn rmse_cases() {
        let t = [1.0, 2.0, 3.0];
        assert_eq!(rmse(&t, &t).unwrap(), 0.0);
        assert!((rmse(&t, &[3.0, 4.0, 5.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!(rmse(&t, &[1.0]).is_err());
    }

    #[test]
    fn miou_crafted() {
        // Class 0: 9 hits over a union of 15 -> 0.6. Class 1: 1 hit over 5 -> 0.2.
        let truth = [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        let est = [0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 2, 0, 0, 0, 0, 1];
        let (m, per) = miou(&truth, &est).unwrap();
        assert!((per[&0] - 0.6).abs() < 1e-15);
        assert!((per[&1] - 0.2).abs() < 1e-15);
        assert!(!per.contains_key(&2));
        assert!((m - 0.4).abs() < 1e-15);
        assert_eq!(miou(&truth, &truth).unwrap().0, 1.0);
        assert_eq!(miou(&[3, 3], &[1, 1]).unwrap().1[&3], 0.0);
    }

    #[test]
    fn jsd_bounds() {
        assert_eq!(jsd_retention(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert!(jsd_retention(&[0, 0], &[1, 1]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn rasterize_half_tiles() {
        let l = legend();
        let left = Region::from_members(0, Plane::horizontal(1.0), 0.0, ConvexPolygon::rect(0.0, 0.0, 2.0, 4.0), &[1.0], &[0], &l, 0.35);
        let right =
            Region::from_members(1, Plane { a: 1.0, b: 0.0, c: 0.0 }, 0.0, ConvexPolygon::rect(2.0, 0.0, 4.0, 4.0), &[3.0], &[1], &l, 0.35);
        let rec = rasterize(&[left, right], 4, 4, 1.0).unwrap();
        for r in 0..4 {
            assert_eq!(&rec.elevation[r * 4..r * 4 + 4], &[1.0, 1.0, 2.5, 3.5]);
            assert_eq!(&rec.landcover[r * 4..r * 4 + 4], &[0, 0, 1, 1]);
        }
        let small = Region::from_members(0, Plane::horizontal(0.0), 0.0, ConvexPolygon::rect(0.0, 0.0, 1.0, 1.0), &[0.0], &[0], &l, 0.35);
        assert!(matches!(rasterize(&[small], 4, 4, 1.0), Err(ClearError::CoverageGap { .. })));
    }

    #[test]
    fn checkerboard_psi() {
        let spec = SynthSpec { width: 10, height: 10, cell_size: 1.0, kind: SynthKind::Checkerboard { block: 1, elevation: 0.0 } };
        let t = synth_tile(&spec, 0).unwrap();
        assert_eq!(t.classes().len(), 2);
        // Interior: 4 of 8 neighbors differ. Edge: 3 of 5 in bounds. Corner:
        // 2 of 3. All divided by 8.
        let f = (64.0 * 4.0 + 32.0 * 3.0 + 4.0 * 2.0) / 8.0 / 100.0;
        let psi = complexity_psi(&t, 0.5, 3).unwrap();
        assert!((psi - 0.5 * f).abs() < 1e-12, "{psi}");
        assert!((complexity_psi(&t, 0.0, 3).unwrap() - f).abs() < 1e-12);
    }

    #[test]
    fn psi_constant_map() {
        let t = TerrainTile::new(4, 4, 1.0, vec![0.0; 16], vec![0; 16], legend()).unwrap();
        let n = legend().len() as f64;
        let mut p = vec![0.0; legend().len()];
        p[0] = 1.0;
        let expect = jsd(&p, &vec![1.0 / n; legend().len()]).sqrt();
        assert!((complexity_psi(&t, 1.0, 3).unwrap() - expect).abs() < 1e-15);
        assert_eq!(complexity_psi(&t, 0.0, 3).unwrap(), 0.0);
    }

    #[test]
    fn repeatability_cases() {
        let sq = [ConvexPolygon::rect(0.0, 0.0, 2.0, 2.0), ConvexPolygon::rect(2.0, 0.0, 4.0, 2.0)];
        let a = Patch { polygons: &sq, width: 4, height: 2 };
        let r = repeatability(&a, &a, (0, 0), 1.0, 0.5).unwrap();
        assert_eq!((r.mean_best_iou, r.repeat_ratio), (1.0, 1.0));
        // Same square shifted by half its side: IoU 1/3.
        let one = [ConvexPolygon::rect(0.0, 0.0, 2.0, 2.0)];
        let shifted = [ConvexPolygon::rect(1.0, 0.0, 3.0, 2.0)];
        let pa = Patch { polygons: &one, width: 4, height: 2 };
        let pb = Patch { polygons: &shifted, width: 4, height: 2 };
        let r = repeatability(&pa, &pb, (0, 0), 1.0, 0.5).unwrap();
        assert!((r.mean_best_iou - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.repeat_ratio, 0.0);
        let far = [ConvexPolygon::rect(3.0, 0.0, 4.0, 2.0)];
        let r = repeatability(&pa, &Patch { polygons: &far, ..pb }, (0, 0), 1.0, 0.5).unwrap();
        assert_eq!((r.mean_best_iou, r.repeat_ratio), (0.0, 0.0));
        assert!(matches!(repeatability(&pa, &pb, (0, 10), 1.0, 0.5), Err(ClearError::EmptyOverlap)));
    }
}
