//! Co-registered elevation and landcover rasters and the local statistics
//! used by seed selection.

mod io;
mod synth;

pub use io::{load_class_table, load_tile, read_ascii_grid, write_ascii_grid, write_class_table, write_tile, AsciiGrid};
pub use synth::{default_legend, synth_tile, Hill, SynthKind, SynthSpec};

use serde::{Deserialize, Serialize};

use crate::error::{ClearError, Result};
use crate::geometry::{ConvexPolygon, Point2};

pub type ClassId = u16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandcoverClass {
    pub id: ClassId,
    pub name: String,
    pub friction: f64,
    pub roughness: f64,
    pub traversable: bool,
}

/// Landcover legend keyed by class id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ClassTableFile", into = "ClassTableFile")]
pub struct ClassTable {
    classes: Vec<LandcoverClass>,
    lookup: Vec<Option<usize>>,
}

/// On-disk shape of a class table: `{"classes": [...]}`.
#[derive(Serialize, Deserialize)]
struct ClassTableFile {
    classes: Vec<LandcoverClass>,
}

impl TryFrom<ClassTableFile> for ClassTable {
    type Error = ClearError;
    fn try_from(f: ClassTableFile) -> Result<Self> {
        ClassTable::new(f.classes)
    }
}

impl From<ClassTable> for ClassTableFile {
    fn from(t: ClassTable) -> Self {
        ClassTableFile { classes: t.classes }
    }
}

impl ClassTable {
    pub fn new(mut classes: Vec<LandcoverClass>) -> Result<Self> {
        classes.sort_by_key(|c| c.id);
        for w in classes.windows(2) {
            if w[0].id == w[1].id {
                return Err(ClearError::invalid(format!("duplicate class id {}", w[0].id)));
            }
        }
        for c in &classes {
            if !(c.friction.is_finite() && c.friction >= 0.0) || !(c.roughness.is_finite() && c.roughness >= 0.0) {
                return Err(ClearError::invalid(format!("class {} has negative or non-finite coefficients", c.id)));
            }
        }
        let mut table = ClassTable { classes, lookup: Vec::new() };
        table.rebuild_lookup();
        Ok(table)
    }

    fn rebuild_lookup(&mut self) {
        let max = self.classes.iter().map(|c| c.id as usize + 1).max().unwrap_or(0);
        self.lookup = vec![None; max];
        for (i, c) in self.classes.iter().enumerate() {
            self.lookup[c.id as usize] = Some(i);
        }
    }

    pub fn classes(&self) -> &[LandcoverClass] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Dense position of `id` in `0..len()`.
    pub fn index_of(&self, id: ClassId) -> Option<usize> {
        self.lookup.get(id as usize).copied().flatten()
    }

    pub fn get(&self, id: ClassId) -> Option<&LandcoverClass> {
        self.index_of(id).map(|i| &self.classes[i])
    }

    pub fn is_traversable(&self, id: ClassId) -> bool {
        self.get(id).is_some_and(|c| c.traversable)
    }

    pub fn friction(&self, id: ClassId) -> f64 {
        self.get(id).map_or(0.0, |c| c.friction)
    }

    pub fn roughness(&self, id: ClassId) -> f64 {
        self.get(id).map_or(0.0, |c| c.roughness)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerrainTile {
    width: usize,
    height: usize,
    cell_size: f64,
    /// Lower-left corner of the grid, carried through for georeferencing.
    origin: Point2,
    elevation: Vec<f64>,
    landcover: Vec<ClassId>,
    classes: ClassTable,
}

impl TerrainTile {
    pub fn new(
        width: usize,
        height: usize,
        cell_size: f64,
        elevation: Vec<f64>,
        landcover: Vec<ClassId>,
        classes: ClassTable,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(ClearError::Empty("tile has zero width or height"));
        }
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(ClearError::invalid(format!("cell_size must be positive, got {cell_size}")));
        }
        if elevation.len() != width * height {
            return Err(ClearError::DimensionMismatch {
                left_name: "declared",
                left_rows: height,
                left_cols: width,
                right_name: "elevation",
                right_rows: elevation.len() / width,
                right_cols: width,
            });
        }
        if landcover.len() != width * height {
            return Err(ClearError::DimensionMismatch {
                left_name: "declared",
                left_rows: height,
                left_cols: width,
                right_name: "landcover",
                right_rows: landcover.len() / width,
                right_cols: width,
            });
        }
        if let Some(i) = elevation.iter().position(|z| !z.is_finite()) {
            return Err(ClearError::NonFiniteElevation { row: i / width, col: i % width });
        }
        if let Some(i) = landcover.iter().position(|&l| classes.index_of(l).is_none()) {
            return Err(ClearError::UnknownClass { id: landcover[i], row: i / width, col: i % width });
        }
        Ok(TerrainTile { width, height, cell_size, origin: Point2::default(), elevation, landcover, classes })
    }

    pub fn with_origin(mut self, origin: Point2) -> Self {
        self.origin = origin;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn classes(&self) -> &ClassTable {
        &self.classes
    }

    pub fn elevation(&self) -> &[f64] {
        &self.elevation
    }

    pub fn landcover(&self) -> &[ClassId] {
        &self.landcover
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    #[inline]
    pub fn elev(&self, row: usize, col: usize) -> f64 {
        self.elevation[self.index(row, col)]
    }

    #[inline]
    pub fn class_at(&self, row: usize, col: usize) -> ClassId {
        self.landcover[self.index(row, col)]
    }

    /// Pixel center in map meters.
    #[inline]
    pub fn pixel_center(&self, row: usize, col: usize) -> Point2 {
        Point2::new((col as f64 + 0.5) * self.cell_size, (row as f64 + 0.5) * self.cell_size)
    }

    /// Pixel containing a map point, if inside the tile. Points on the far
    /// edges map to the last row/column.
    pub fn pixel_at(&self, p: Point2) -> Option<(usize, usize)> {
        let c = p.x / self.cell_size;
        let r = p.y / self.cell_size;
        if !(c >= 0.0 && r >= 0.0 && c <= self.width as f64 && r <= self.height as f64) {
            return None;
        }
        let col = (c.floor() as usize).min(self.width - 1);
        let row = (r.floor() as usize).min(self.height - 1);
        Some((row, col))
    }

    pub fn map_width(&self) -> f64 {
        self.width as f64 * self.cell_size
    }

    pub fn map_height(&self) -> f64 {
        self.height as f64 * self.cell_size
    }

    pub fn bounds(&self) -> ConvexPolygon {
        ConvexPolygon::rect(0.0, 0.0, self.map_width(), self.map_height())
    }

    /// Sub-tile of `rows x cols` pixels starting at `(row0, col0)`.
    pub fn crop(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Result<TerrainTile> {
        if row0 + rows > self.height || col0 + cols > self.width || rows == 0 || cols == 0 {
            return Err(ClearError::invalid(format!("crop {rows}x{cols} at ({row0},{col0}) exceeds {}x{} tile", self.height, self.width)));
        }
        let mut elevation = Vec::with_capacity(rows * cols);
        let mut landcover = Vec::with_capacity(rows * cols);
        for r in row0..row0 + rows {
            let start = self.index(r, col0);
            elevation.extend_from_slice(&self.elevation[start..start + cols]);
            landcover.extend_from_slice(&self.landcover[start..start + cols]);
        }
        TerrainTile::new(cols, rows, self.cell_size, elevation, landcover, self.classes.clone())
    }

    /// Copy with landcover ids remapped through `f` and the legend replaced.
    pub fn relabeled(&self, f: impl Fn(ClassId) -> ClassId, classes: ClassTable) -> Result<TerrainTile> {
        let landcover = self.landcover.iter().map(|&l| f(l)).collect();
        TerrainTile::new(self.width, self.height, self.cell_size, self.elevation.clone(), landcover, classes)
    }
}

/// Per-pixel statistic with the same shape as its source tile.
#[derive(Debug, Clone, PartialEq)]
pub struct StatGrid {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl StatGrid {
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }
}

/// Boolean per-pixel mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub values: Vec<bool>,
}

impl Mask {
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.values[row * self.width + col]
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&b| b).count()
    }
}

fn check_window(tile: &TerrainTile, k: usize) -> Result<()> {
    let max = tile.width.min(tile.height);
    if k.is_multiple_of(2) || k < 3 || k > max {
        return Err(ClearError::InvalidWindow { k, max });
    }
    Ok(())
}

/// Clamped window bounds `[lo, hi)` around `i` on an axis of length `n`.
#[inline]
fn window(i: usize, half: usize, n: usize) -> (usize, usize) {
    (i.saturating_sub(half), (i + half + 1).min(n))
}

/// Population standard deviation of elevation over a `k x k` window
/// clamped to the tile.
pub fn local_std(tile: &TerrainTile, k: usize) -> Result<StatGrid> {
    check_window(tile, k)?;
    let half = k / 2;
    let (w, h) = (tile.width, tile.height);
    let mut values = Vec::with_capacity(w * h);
    for r in 0..h {
        let (r0, r1) = window(r, half, h);
        for c in 0..w {
            let (c0, c1) = window(c, half, w);
            let n = ((r1 - r0) * (c1 - c0)) as f64;
            let mut sum = 0.0;
            for rr in r0..r1 {
                sum += tile.elevation[rr * w + c0..rr * w + c1].iter().sum::<f64>();
            }
            let mean = sum / n;
            let mut ss = 0.0;
            for rr in r0..r1 {
                for &z in &tile.elevation[rr * w + c0..rr * w + c1] {
                    ss += (z - mean) * (z - mean);
                }
            }
            values.push((ss / n).sqrt());
        }
    }
    Ok(StatGrid { width: w, height: h, values })
}

/// Shannon entropy (nats) of the landcover histogram in a clamped `k x k`
/// window.
pub fn local_entropy(tile: &TerrainTile, k: usize) -> Result<StatGrid> {
    check_window(tile, k)?;
    let half = k / 2;
    let (w, h) = (tile.width, tile.height);
    let dense: Vec<usize> = tile.landcover.iter().map(|&l| tile.classes.index_of(l).expect("validated tile")).collect();
    let mut counts = vec![0u32; tile.classes.len()];
    let mut nonzero = Vec::with_capacity(k * k);
    let mut values = Vec::with_capacity(w * h);
    for r in 0..h {
        let (r0, r1) = window(r, half, h);
        for c in 0..w {
            let (c0, c1) = window(c, half, w);
            counts.iter_mut().for_each(|x| *x = 0);
            for rr in r0..r1 {
                for &d in &dense[rr * w + c0..rr * w + c1] {
                    counts[d] += 1;
                }
            }
            let n = ((r1 - r0) * (c1 - c0)) as f64;
            // Summation over sorted counts keeps the result independent of
            // class numbering.
            nonzero.clear();
            nonzero.extend(counts.iter().copied().filter(|&x| x > 0));
            nonzero.sort_unstable();
            let ent: f64 = nonzero
                .iter()
                .map(|&x| {
                    let p = x as f64 / n;
                    -p * p.ln()
                })
                .sum();
            values.push(ent.max(0.0));
        }
    }
    Ok(StatGrid { width: w, height: h, values })
}

/// Linear-interpolation (type 7) quantile of a non-empty sample.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of empty sample");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// 25th percentile of the local elevation spread: pixels at or below it are
/// "flat".
pub fn flat_threshold(sigma: &StatGrid) -> Result<f64> {
    if sigma.values.is_empty() {
        return Err(ClearError::Empty("sigma grid"));
    }
    Ok(quantile(&sigma.values, 0.25))
}

/// True where any in-bounds 4-neighbor carries a different class.
pub fn boundary_mask(tile: &TerrainTile) -> Mask {
    let (w, h) = (tile.width, tile.height);
    let mut values = vec![false; w * h];
    for r in 0..h {
        for c in 0..w {
            let l = tile.class_at(r, c);
            let differs = (r > 0 && tile.class_at(r - 1, c) != l)
                || (r + 1 < h && tile.class_at(r + 1, c) != l)
                || (c > 0 && tile.class_at(r, c - 1) != l)
                || (c + 1 < w && tile.class_at(r, c + 1) != l);
            values[r * w + c] = differs;
        }
    }
    Mask { width: w, height: h, values }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(n: u16) -> ClassTable {
        ClassTable::new(
            (0..n).map(|id| LandcoverClass { id, name: format!("c{id}"), friction: 0.1, roughness: 0.1, traversable: true }).collect(),
        )
        .unwrap()
    }

    fn tile(w: usize, h: usize, elev: Vec<f64>, lc: Vec<ClassId>, n: u16) -> TerrainTile {
        TerrainTile::new(w, h, 1.0, elev, lc, table(n)).unwrap()
    }

    #[test]
    fn rejects_bad_inputs() {
        let t = TerrainTile::new(2, 2, 1.0, vec![0.0; 4], vec![0, 0, 0, 9], table(2));
        assert!(matches!(t, Err(ClearError::UnknownClass { id: 9, row: 1, col: 1 })));
        let t = TerrainTile::new(2, 2, 1.0, vec![0.0, f64::NAN, 0.0, 0.0], vec![0; 4], table(1));
        assert!(matches!(t, Err(ClearError::NonFiniteElevation { row: 0, col: 1 })));
        let t = TerrainTile::new(2, 2, 0.0, vec![0.0; 4], vec![0; 4], table(1));
        assert!(t.is_err());
        let dup = ClassTable::new(vec![table(1).classes[0].clone(), table(1).classes[0].clone()]);
        assert!(dup.is_err());
    }

    #[test]
    fn local_std_constant_and_window_checks() {
        let t = tile(5, 5, vec![3.0; 25], vec![0; 25], 1);
        assert!(local_std(&t, 3).unwrap().values.iter().all(|&v| v == 0.0));
        assert!(matches!(local_std(&t, 4), Err(ClearError::InvalidWindow { .. })));
        assert!(matches!(local_std(&t, 7), Err(ClearError::InvalidWindow { .. })));
        assert!(local_std(&t, 1).is_err());
    }

    #[test]
    fn local_std_center_matches_multiset() {
        let mut e = vec![1.0; 9];
        e[8] = 10.0;
        let t = tile(3, 3, e, vec![0; 9], 1);
        let s = local_std(&t, 3).unwrap();
        // mean = 2, squared deviations 8*1 + 64 = 72, / 9 = 8
        assert!((s.get(1, 1) - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn flat_threshold_values() {
        let g = |v: Vec<f64>| StatGrid { width: v.len(), height: 1, values: v };
        assert_eq!(flat_threshold(&g(vec![0.0, 1.0, 2.0, 3.0])).unwrap(), 0.75);
        assert_eq!(flat_threshold(&g(vec![4.5; 7])).unwrap(), 4.5);
        assert_eq!(flat_threshold(&g(vec![2.0])).unwrap(), 2.0);
        assert!(flat_threshold(&g(vec![])).is_err());
    }

    #[test]
    fn boundary_vertical_split() {
        let (w, h, split) = (8, 5, 3);
        let lc = (0..w * h).map(|i| if i % w < split { 0 } else { 1 }).collect();
        let m = boundary_mask(&tile(w, h, vec![0.0; w * h], lc, 2));
        for r in 0..h {
            for c in 0..w {
                assert_eq!(m.get(r, c), c == split - 1 || c == split);
            }
        }
    }

    #[test]
    fn boundary_single_pixel() {
        let mut lc = vec![0; 25];
        lc[12] = 1;
        let m = boundary_mask(&tile(5, 5, vec![0.0; 25], lc, 2));
        let expect = [7, 11, 12, 13, 17];
        for i in 0..25 {
            assert_eq!(m.values[i], expect.contains(&i), "pixel {i}");
        }
    }

    #[test]
    fn entropy_values() {
        let t = tile(4, 4, vec![0.0; 16], vec![0; 16], 1);
        assert!(local_entropy(&t, 3).unwrap().values.iter().all(|&v| v == 0.0));

        // 3x3 with counts {5, 4}
        let lc = vec![0, 0, 0, 0, 0, 1, 1, 1, 1];
        let t = tile(3, 3, vec![0.0; 9], lc, 2);
        let e = local_entropy(&t, 3).unwrap().get(1, 1);
        let p: f64 = 5.0 / 9.0;
        let q: f64 = 4.0 / 9.0;
        assert!((e - (-(p * p.ln()) - q * q.ln())).abs() < 1e-12);

        let t = tile(3, 3, vec![0.0; 9], (0..9).collect(), 9);
        assert!((local_entropy(&t, 3).unwrap().get(1, 1) - 9f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn pixel_lookup() {
        let t = tile(4, 3, vec![0.0; 12], vec![0; 12], 1);
        assert_eq!(t.pixel_at(Point2::new(3.5, 2.5)), Some((2, 3)));
        assert_eq!(t.pixel_at(Point2::new(4.0, 3.0)), Some((2, 3)));
        assert_eq!(t.pixel_at(Point2::new(-0.1, 0.0)), None);
        assert_eq!(t.pixel_center(1, 2), Point2::new(2.5, 1.5));
    }
}
