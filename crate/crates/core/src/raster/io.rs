//! ESRI ASCII grid reading/writing and the JSON class-table format.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{ClassId, ClassTable, TerrainTile};
use crate::error::{ClearError, Result};
use crate::geometry::Point2;

/// One parsed ESRI ASCII grid. Row 0 of `values` is the top (north) row.
#[derive(Debug, Clone, PartialEq)]
pub struct AsciiGrid {
    pub ncols: usize,
    pub nrows: usize,
    pub xll: f64,
    pub yll: f64,
    pub cell_size: f64,
    pub nodata: Option<f64>,
    pub values: Vec<f64>,
}

pub fn read_ascii_grid(path: &Path) -> Result<AsciiGrid> {
    let text = fs::read_to_string(path).map_err(|e| ClearError::io(path, e))?;
    parse_ascii_grid(&text, path)
}

fn parse_ascii_grid(text: &str, path: &Path) -> Result<AsciiGrid> {
    let perr = |line: usize, msg: String| ClearError::Parse { path: path.to_path_buf(), line, msg };
    let mut ncols = None;
    let mut nrows = None;
    let mut xll = 0.0;
    let mut yll = 0.0;
    let mut center_ref = false;
    let mut cell_size = None;
    let mut nodata = None;

    let mut lines = text.lines().enumerate().peekable();
    while let Some(&(i, line)) = lines.peek() {
        let mut parts = line.split_whitespace();
        let Some(key) = parts.next() else {
            lines.next();
            continue;
        };
        if !key.starts_with(|c: char| c.is_ascii_alphabetic()) {
            break;
        }
        let val = parts.next().ok_or_else(|| perr(i + 1, format!("header `{key}` has no value")))?;
        let num: f64 = val.parse().map_err(|_| perr(i + 1, format!("header `{key}` value `{val}` is not a number")))?;
        match key.to_ascii_lowercase().as_str() {
            "ncols" => ncols = Some(num as usize),
            "nrows" => nrows = Some(num as usize),
            "xllcorner" => xll = num,
            "yllcorner" => yll = num,
            "xllcenter" => {
                xll = num;
                center_ref = true;
            }
            "yllcenter" => {
                yll = num;
                center_ref = true;
            }
            "cellsize" => cell_size = Some(num),
            "nodata_value" => nodata = Some(num),
            other => return Err(perr(i + 1, format!("unknown header key `{other}`"))),
        }
        lines.next();
    }
    let ncols = ncols.ok_or_else(|| perr(0, "missing ncols".into()))?;
    let nrows = nrows.ok_or_else(|| perr(0, "missing nrows".into()))?;
    let cell_size = cell_size.ok_or_else(|| perr(0, "missing cellsize".into()))?;
    if center_ref {
        xll -= 0.5 * cell_size;
        yll -= 0.5 * cell_size;
    }

    let mut values = Vec::with_capacity(ncols * nrows);
    for (i, line) in lines {
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| perr(i + 1, format!("value `{tok}` is not a number")))?;
            values.push(v);
        }
    }
    if values.len() != ncols * nrows {
        return Err(perr(0, format!("expected {} values for {nrows}x{ncols} grid, found {}", ncols * nrows, values.len())));
    }
    Ok(AsciiGrid { ncols, nrows, xll, yll, cell_size, nodata, values })
}

pub fn write_ascii_grid(path: &Path, grid: &AsciiGrid) -> Result<()> {
    let mut out = String::with_capacity(grid.values.len() * 8 + 128);
    let _ = writeln!(out, "ncols {}", grid.ncols);
    let _ = writeln!(out, "nrows {}", grid.nrows);
    let _ = writeln!(out, "xllcorner {}", grid.xll);
    let _ = writeln!(out, "yllcorner {}", grid.yll);
    let _ = writeln!(out, "cellsize {}", grid.cell_size);
    if let Some(nd) = grid.nodata {
        let _ = writeln!(out, "NODATA_value {nd}");
    }
    for row in grid.values.chunks(grid.ncols.max(1)) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            // `Display` for f64 prints the shortest string that parses back
            // to the same bits.
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| ClearError::io(path, e))
}

pub fn load_class_table(path: &Path) -> Result<ClassTable> {
    let text = fs::read_to_string(path).map_err(|e| ClearError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_class_table(path: &Path, table: &ClassTable) -> Result<()> {
    let text = serde_json::to_string_pretty(table)?;
    fs::write(path, text + "\n").map_err(|e| ClearError::io(path, e))
}

pub fn load_tile(elevation_path: &Path, landcover_path: &Path, class_table_path: &Path) -> Result<TerrainTile> {
    let elev = read_ascii_grid(elevation_path)?;
    let lc = read_ascii_grid(landcover_path)?;
    let classes = load_class_table(class_table_path)?;
    if elev.nrows != lc.nrows || elev.ncols != lc.ncols {
        return Err(ClearError::DimensionMismatch {
            left_name: "elevation",
            left_rows: elev.nrows,
            left_cols: elev.ncols,
            right_name: "landcover",
            right_rows: lc.nrows,
            right_cols: lc.ncols,
        });
    }
    if let Some(nd) = elev.nodata {
        if let Some(i) = elev.values.iter().position(|&v| v == nd) {
            return Err(ClearError::NonFiniteElevation { row: i / elev.ncols, col: i % elev.ncols });
        }
    }
    let mut landcover = Vec::with_capacity(lc.values.len());
    for (i, &v) in lc.values.iter().enumerate() {
        let (row, col) = (i / lc.ncols, i % lc.ncols);
        if v.fract() != 0.0 || v < 0.0 || v > ClassId::MAX as f64 {
            return Err(ClearError::Parse {
                path: landcover_path.to_path_buf(),
                line: 0,
                msg: format!("landcover value {v} at (row {row}, col {col}) is not a class id"),
            });
        }
        landcover.push(v as ClassId);
    }
    let tile = TerrainTile::new(elev.ncols, elev.nrows, elev.cell_size, elev.values, landcover, classes)?;
    Ok(tile.with_origin(Point2::new(elev.xll, elev.yll)))
}

/// Writes both layers and the class table; `load_tile` reads them back
/// bit-exactly.
pub fn write_tile(tile: &TerrainTile, elevation_path: &Path, landcover_path: &Path, class_table_path: &Path) -> Result<()> {
    let mut nodata = -9999.0;
    while tile.elevation().contains(&nodata) {
        nodata = nodata * 10.0 - 9.0;
    }
    let origin = tile.origin();
    let base = AsciiGrid {
        ncols: tile.width(),
        nrows: tile.height(),
        xll: origin.x,
        yll: origin.y,
        cell_size: tile.cell_size(),
        nodata: Some(nodata),
        values: tile.elevation().to_vec(),
    };
    write_ascii_grid(elevation_path, &base)?;
    let lc = AsciiGrid { nodata: None, values: tile.landcover().iter().map(|&l| l as f64).collect(), ..base };
    write_ascii_grid(landcover_path, &lc)?;
    write_class_table(class_table_path, tile.classes())
}
