//! Grid, hexagonal and quadtree decompositions used as comparison baselines.

use std::collections::VecDeque;

use crate::bsd::{ConvexCell, Pixel};
use crate::error::Result;
use crate::geometry::{ConvexPolygon, Point2};
use crate::planefit::{fit_plane, Point3, Region};
use crate::raster::TerrainTile;
use crate::spatial::pixel_ownership;

pub const DEFAULT_S_MAX: f64 = 0.35;

fn seed_pixel(tile: &TerrainTile, poly: &ConvexPolygon) -> Pixel {
    let c = poly.centroid();
    tile.pixel_at(c).unwrap_or((tile.height() - 1, tile.width() - 1))
}

/// Square cells of side `ceil(sqrt(W*H/target))` pixels in row-major order;
/// the last row and column are truncated at the tile edge.
pub fn grid_decompose(tile: &TerrainTile, target: usize) -> Vec<ConvexCell> {
    let side = grid_side(tile.width(), tile.height(), target);
    grid_cells(tile, side)
}

pub fn grid_side(width: usize, height: usize, target: usize) -> usize {
    let side = ((width * height) as f64 / target.max(1) as f64).sqrt().ceil() as usize;
    side.max(1)
}

pub fn grid_cells(tile: &TerrainTile, side: usize) -> Vec<ConvexCell> {
    let cs = tile.cell_size();
    let (w, h) = (tile.width(), tile.height());
    let mut cells = Vec::new();
    for r0 in (0..h).step_by(side) {
        for c0 in (0..w).step_by(side) {
            let r1 = (r0 + side).min(h);
            let c1 = (c0 + side).min(w);
            let poly = ConvexPolygon::rect(c0 as f64 * cs, r0 as f64 * cs, c1 as f64 * cs, r1 as f64 * cs);
            cells.push(ConvexCell { id: cells.len(), seed: ((r0 + r1 - 1) / 2, (c0 + c1 - 1) / 2), vertices: poly });
        }
    }
    cells
}

/// Pointy-top hexagons of circumradius `side` (map meters) centered on the
/// tile center, clipped to the tile rectangle.
pub fn hex_cells(tile: &TerrainTile, side: f64) -> Vec<ConvexCell> {
    let (mw, mh) = (tile.map_width(), tile.map_height());
    let dx = 3f64.sqrt() * side;
    let dy = 1.5 * side;
    let center = Point2::new(0.5 * mw, 0.5 * mh);
    let jr = (0.5 * mh / dy).ceil() as i64 + 1;
    let ir = (0.5 * mw / dx).ceil() as i64 + 1;
    let min_area = 1e-12 * mw * mh;
    let template: Vec<Point2> = (0..6)
        .map(|k| {
            let a = std::f64::consts::PI / 180.0 * (60.0 * k as f64 + 30.0);
            Point2::new(side * a.cos(), side * a.sin())
        })
        .collect();
    let mut cells = Vec::new();
    for j in -jr..=jr {
        let shift = if j.rem_euclid(2) == 1 { 0.5 * dx } else { 0.0 };
        for i in -ir..=ir {
            let c = center + Point2::new(i as f64 * dx + shift, j as f64 * dy);
            let hex = ConvexPolygon::new(template.iter().map(|&v| c + v).collect());
            let clipped = hex.clip_rect(0.0, mw, 0.0, mh);
            if clipped.area() > min_area {
                let seed = seed_pixel(tile, &clipped);
                cells.push(ConvexCell { id: cells.len(), seed, vertices: clipped });
            }
        }
    }
    cells
}

/// Hexagonal tiling whose clipped cell count is nearest `target`.
pub fn hex_decompose(tile: &TerrainTile, target: usize) -> Vec<ConvexCell> {
    let target = target.max(1);
    let area = tile.map_width() * tile.map_height();
    let s0 = (2.0 * area / (3.0 * 3f64.sqrt() * target as f64)).sqrt();
    let mut best: Option<(usize, f64, Vec<ConvexCell>)> = None;
    const STEPS: usize = 64;
    for k in 0..=STEPS {
        // Sweep the circumradius over [0.5, 2] x the area-matched value.
        let s = s0 * 2f64.powf(-1.0 + 2.0 * k as f64 / STEPS as f64);
        let cells = hex_cells(tile, s);
        let diff = cells.len().abs_diff(target);
        let dev = (s / s0).ln().abs();
        if best.as_ref().is_none_or(|(bd, bdev, _)| diff < *bd || (diff == *bd && dev < *bdev)) {
            best = Some((diff, dev, cells));
        }
    }
    best.expect("sweep is non-empty").2
}

/// One fitted region per cell. Pixels belong to the lowest-id cell whose
/// polygon contains their center; a cell with no pixel center is fitted to
/// the pixel under its centroid.
pub fn cells_to_regions(tile: &TerrainTile, cells: &[ConvexCell], s_max: f64) -> Result<(Vec<Region>, Vec<usize>)> {
    let polys: Vec<&ConvexPolygon> = cells.iter().map(|c| &c.vertices).collect();
    let own = pixel_ownership(tile.width(), tile.height(), tile.cell_size(), &polys)?;
    let members = group_members(&own.owner, cells.len());
    let mut regions = Vec::with_capacity(cells.len());
    for (id, cell) in cells.iter().enumerate() {
        let pix = &members[id];
        let fallback;
        let pix: &[usize] = if pix.is_empty() {
            let (r, c) = seed_pixel(tile, &cell.vertices);
            fallback = [tile.index(r, c)];
            &fallback
        } else {
            pix
        };
        let mut region = region_from_pixels(tile, id, pix, cell.vertices.clone(), s_max)?;
        if members[id].is_empty() {
            region.pixel_count = 0;
        }
        regions.push(region);
    }
    Ok((regions, own.owner))
}

pub(crate) fn group_members(owner: &[usize], n: usize) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); n];
    for (k, &o) in owner.iter().enumerate() {
        members[o].push(k);
    }
    members
}

/// Fits a plane to the given pixel indices and builds the region.
pub(crate) fn region_from_pixels(tile: &TerrainTile, id: usize, pixels: &[usize], polygon: ConvexPolygon, s_max: f64) -> Result<Region> {
    let w = tile.width();
    let pts: Vec<Point3> = pixels
        .iter()
        .map(|&k| {
            let p = tile.pixel_center(k / w, k % w);
            Point3::new(p.x, p.y, tile.elevation()[k])
        })
        .collect();
    let (plane, rmse) = fit_plane(&pts)?;
    let heights: Vec<f64> = pts.iter().map(|p| p.z).collect();
    let labels: Vec<_> = pixels.iter().map(|&k| tile.landcover()[k]).collect();
    Ok(Region::from_members(id, plane, rmse, polygon, &heights, &labels, tile.classes(), s_max))
}

/// Quadtree over the bounding power-of-two square. A node splits while its
/// plane-fit RMSE exceeds `epsilon` and its area exceeds `min_area` pixels;
/// nodes with no in-bounds pixels are discarded and straddling leaves are
/// clipped to the tile.
pub fn quadtree_decompose(tile: &TerrainTile, epsilon: f64, min_area: usize) -> Result<Vec<Region>> {
    Ok(quadtree_regions(tile, epsilon, min_area, DEFAULT_S_MAX)?.0)
}

/// Like [`quadtree_decompose`], also returning the per-pixel region id.
pub fn quadtree_regions(tile: &TerrainTile, epsilon: f64, min_area: usize, s_max: f64) -> Result<(Vec<Region>, Vec<usize>)> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(crate::error::ClearError::invalid("quadtree epsilon must be > 0"));
    }
    let (w, h) = (tile.width(), tile.height());
    let cs = tile.cell_size();
    let root = w.max(h).next_power_of_two();
    let mut queue = VecDeque::from([(0usize, 0usize, root)]);
    let mut regions = Vec::new();
    let mut owner = vec![usize::MAX; w * h];
    let mut pts = Vec::new();
    while let Some((r0, c0, size)) = queue.pop_front() {
        if r0 >= h || c0 >= w {
            continue;
        }
        let r1 = (r0 + size).min(h);
        let c1 = (c0 + size).min(w);
        pts.clear();
        for r in r0..r1 {
            for c in c0..c1 {
                let p = tile.pixel_center(r, c);
                pts.push(Point3::new(p.x, p.y, tile.elev(r, c)));
            }
        }
        let (_, rmse) = fit_plane(&pts)?;
        if rmse > epsilon && size * size > min_area && size > 1 {
            let half = size / 2;
            for (dr, dc) in [(0, 0), (0, half), (half, 0), (half, half)] {
                queue.push_back((r0 + dr, c0 + dc, half));
            }
            continue;
        }
        let id = regions.len();
        let mut pixels = Vec::with_capacity((r1 - r0) * (c1 - c0));
        for r in r0..r1 {
            for c in c0..c1 {
                let k = r * w + c;
                owner[k] = id;
                pixels.push(k);
            }
        }
        let poly = ConvexPolygon::rect(c0 as f64 * cs, r0 as f64 * cs, c1 as f64 * cs, r1 as f64 * cs);
        regions.push(region_from_pixels(tile, id, &pixels, poly, s_max)?);
    }
    Ok((regions, owner))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{synth_tile, SynthKind, SynthSpec};

    fn flat(w: usize, h: usize) -> TerrainTile {
        synth_tile(&SynthSpec { width: w, height: h, cell_size: 1.0, kind: SynthKind::Ramp { a: 0.0, b: 0.0, c: 1.0 } }, 0).unwrap()
    }

    fn area_sum(cells: &[ConvexCell]) -> f64 {
        cells.iter().map(|c| c.vertices.area()).sum()
    }

    #[test]
    fn grid_counts() {
        assert_eq!(grid_decompose(&flat(20, 20), 400).len(), 400);
        let g = grid_decompose(&flat(10, 10), 4);
        assert_eq!(g.len(), 4);
        assert!(g.iter().all(|c| (c.vertices.area() - 25.0).abs() < 1e-12));
        // ceil(sqrt(100/9)) = 4: a 3x3 layout with truncated last row/col.
        let g = grid_decompose(&flat(10, 10), 9);
        assert_eq!(g.len(), 9);
        assert_eq!(grid_cells(&flat(10, 10), 3).len(), 16);
        assert!((area_sum(&g) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn hex_budget_and_area() {
        let t = flat(20, 20);
        let cells = hex_decompose(&t, 448);
        let n = cells.len() as f64;
        assert!((n - 448.0).abs() <= 44.8, "{n}");
        assert!((area_sum(&cells) - 400.0).abs() < 400.0 * 1e-6);
        assert!(cells.iter().all(|c| c.vertices.is_convex(1e-9)));
        assert!(!hex_decompose(&t, 1).is_empty());
    }

    #[test]
    fn quadtree_planar_is_one_leaf() {
        let t =
            synth_tile(&SynthSpec { width: 12, height: 7, cell_size: 2.0, kind: SynthKind::Ramp { a: 0.3, b: -0.2, c: 4.0 } }, 0).unwrap();
        let q = quadtree_decompose(&t, 1e-6, 1).unwrap();
        assert_eq!(q.len(), 1);
        assert!((q[0].polygon.area() - 24.0 * 14.0).abs() < 1e-9);
    }

    #[test]
    fn quadtree_corner_block() {
        // 8x8 flat tile with a raised 2x2 block in the top-left corner.
        let mut elev = vec![0.0; 64];
        for r in 0..2 {
            for c in 0..2 {
                elev[r * 8 + c] = 5.0;
            }
        }
        let t = TerrainTile::new(8, 8, 1.0, elev, vec![0; 64], crate::ClassTable::new(crate::raster::default_legend()).unwrap()).unwrap();
        // Root splits, the top-left 4x4 splits into 2x2 blocks which are
        // each exact: 3 + 4 leaves.
        let q = quadtree_decompose(&t, 0.01, 1).unwrap();
        assert_eq!(q.len(), 7);
        assert!(q.iter().all(|r| r.rmse <= 0.01));
        let q = quadtree_decompose(&t, 0.01, 16).unwrap();
        assert_eq!(q.len(), 4);
    }

    #[test]
    fn cells_to_regions_covers_pixels() {
        let t = flat(10, 10);
        let (regions, owner) = cells_to_regions(&t, &hex_decompose(&t, 12), 0.35).unwrap();
        assert_eq!(regions.iter().map(|r| r.pixel_count).sum::<usize>(), 100);
        assert!(owner.iter().all(|&o| o < regions.len()));
    }
}
