//! File formats: polygon and graph JSON, edge and waypoint CSV, and native
//! SVG/PPM renders.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bsd::ConvexCell;
use crate::error::{ClearError, Result};
use crate::geometry::Point2;
use crate::graph::{CostWeights, GraphEdge, RegionGraph};
use crate::planefit::Region;
use crate::planner::PlanResult;
use crate::raster::{ClassId, ClassTable};

/// Regions with the raster frame they were fitted in; reloads for planning
/// without refitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionDocument {
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
    pub regions: Vec<Region>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDocument {
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
    pub cells: Vec<ConvexCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub cell_size: f64,
    pub weights: CostWeights,
    pub regions: Vec<Region>,
    pub edges: Vec<GraphEdge>,
}

impl GraphDocument {
    pub fn from_graph(g: &RegionGraph) -> Self {
        GraphDocument { cell_size: g.cell_size, weights: g.weights, regions: g.regions.clone(), edges: g.edges.clone() }
    }

    pub fn into_graph(self) -> RegionGraph {
        RegionGraph::from_edges(self.regions, self.edges, self.weights, self.cell_size)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| ClearError::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| ClearError::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json(value)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| ClearError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn csv_string<F>(fill: F) -> Result<String>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    fill(&mut w).map_err(|e| ClearError::invalid(format!("csv: {e}")))?;
    let bytes = w.into_inner().map_err(|e| ClearError::invalid(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| ClearError::invalid(format!("csv: {e}")))
}

/// Serializes `rows` with a header taken from the record type.
pub fn rows_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    csv_string(|w| rows.iter().try_for_each(|r| w.serialize(r)))
}

/// `from_id,to_id,cost,boundary_length`, one directed edge per line.
pub fn edges_csv(edges: &[GraphEdge]) -> Result<String> {
    csv_string(|w| {
        w.write_record(["from_id", "to_id", "cost", "boundary_length"])?;
        for e in edges {
            w.write_record([e.from.to_string(), e.to.to_string(), e.cost.to_string(), e.boundary_length.to_string()])?;
        }
        Ok(())
    })
}

/// `index,x,y` per waypoint.
pub fn waypoints_csv(result: &PlanResult) -> Result<String> {
    csv_string(|w| {
        w.write_record(["index", "x", "y"])?;
        for (i, p) in result.path.iter().enumerate() {
            w.write_record([i.to_string(), p.x.to_string(), p.y.to_string()])?;
        }
        Ok(())
    })
}

const PALETTE: [[u8; 3]; 10] = [
    [141, 211, 199],
    [255, 255, 179],
    [190, 186, 218],
    [251, 128, 114],
    [128, 177, 211],
    [253, 180, 98],
    [179, 222, 105],
    [252, 205, 229],
    [217, 217, 217],
    [188, 128, 189],
];

/// Fill color of a class: water-like (non-traversable) classes are blue,
/// the rest cycle through a fixed palette by table position.
pub fn class_color(classes: &ClassTable, id: ClassId) -> [u8; 3] {
    match classes.index_of(id) {
        Some(_) if !classes.is_traversable(id) => [70, 120, 200],
        Some(i) => PALETTE[i % PALETTE.len()],
        None => [0, 0, 0],
    }
}

fn hex([r, g, b]: [u8; 3]) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Region polygons filled by landcover, optional path overlay. One SVG
/// unit per meter.
pub fn render_svg(width_m: f64, height_m: f64, regions: &[Region], classes: &ClassTable, path: Option<&[Point2]>) -> String {
    let stroke = (width_m.max(height_m) / 800.0).max(1e-9);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width_m} {height_m}" width="800" height="{}">"#,
        (800.0 * height_m / width_m.max(1e-9)).round()
    );
    for r in regions {
        let pts: Vec<String> = r.polygon.vertices.iter().map(|p| format!("{},{}", p.x, p.y)).collect();
        let fill = if r.traversable { hex(class_color(classes, r.landcover)) } else { "#3a3a3a".to_string() };
        let _ = writeln!(
            s,
            r##"<polygon points="{}" fill="{fill}" stroke="#404040" stroke-width="{stroke}"><title>region {} class {}</title></polygon>"##,
            pts.join(" "),
            r.id,
            r.landcover
        );
    }
    if let Some(path) = path.filter(|p| !p.is_empty()) {
        let pts: Vec<String> = path.iter().map(|p| format!("{},{}", p.x, p.y)).collect();
        let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#d00000" stroke-width="{}"/>"##, pts.join(" "), stroke * 3.0);
        for (p, c) in [(path[0], "#00a000"), (path[path.len() - 1], "#d00000")] {
            let _ = writeln!(s, r#"<circle cx="{}" cy="{}" r="{}" fill="{c}"/>"#, p.x, p.y, stroke * 6.0);
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Binary PPM of a label raster, with region borders darkened when `owner`
/// is given and the path drawn in red.
pub fn render_ppm(
    labels: &[ClassId],
    width: usize,
    height: usize,
    classes: &ClassTable,
    owner: Option<&[usize]>,
    path: Option<&[Point2]>,
    cell_size: f64,
) -> Vec<u8> {
    let mut img: Vec<[u8; 3]> = labels.iter().map(|&l| class_color(classes, l)).collect();
    if let Some(own) = owner {
        for r in 0..height {
            for c in 0..width {
                let k = r * width + c;
                let border = (c + 1 < width && own[k] != own[k + 1]) || (r + 1 < height && own[k] != own[k + width]);
                if border {
                    img[k] = img[k].map(|v| v / 2);
                }
            }
        }
    }
    if let Some(path) = path {
        let mut plot = |p: Point2| {
            let (c, r) = ((p.x / cell_size).floor(), (p.y / cell_size).floor());
            if c >= 0.0 && r >= 0.0 && (c as usize) < width && (r as usize) < height {
                img[r as usize * width + c as usize] = [220, 0, 0];
            }
        };
        for seg in path.windows(2) {
            let steps = (seg[0].dist(seg[1]) / (0.5 * cell_size)).ceil().max(1.0) as usize;
            for i in 0..=steps {
                let t = i as f64 / steps as f64;
                plot(Point2::new(seg[0].x + t * (seg[1].x - seg[0].x), seg[0].y + t * (seg[1].y - seg[0].y)));
            }
        }
        if let [p] = path {
            plot(*p);
        }
    }
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend(img.iter().flatten());
    out
}
