//! CSV and JSON writers. Files are written to a temporary sibling and renamed
//! into place, so a failed command never leaves a partial file behind.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde_json::{json, Map, Value};
use sublorentz_core::geodesic::Trajectory;
use sublorentz_core::magnetic::PointCloud;

pub const TRAJECTORY_COLUMNS: [&str; 12] =
    ["t", "x0", "x1", "x2", "x3", "x4", "u0", "u1", "u2", "u3", "pseudonorm", "horiz_defect"];
pub const CLOUD_COLUMNS: [&str; 5] = ["x2", "x3", "x4", "alpha", "p"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// 17 significant digits; enough to round-trip any f64.
pub fn fmt_number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trajectory_rows(traj: &Trajectory) -> Vec<[f64; 12]> {
    traj.samples
        .iter()
        .map(|s| {
            let x = s.state.position.to_array();
            let u = s.state.velocity;
            [
                s.t,
                x[0],
                x[1],
                x[2],
                x[3],
                x[4],
                u[0],
                u[1],
                u[2],
                u[3],
                s.pseudonorm,
                s.horizontality_defect,
            ]
        })
        .collect()
}

pub fn cloud_rows(cloud: &PointCloud) -> Vec<[f64; 5]> {
    cloud.points.iter().map(|q| [q.x2, q.x3, q.x4, q.alpha, q.p]).collect()
}

pub fn to_csv<const N: usize>(columns: &[&str; N], rows: &[[f64; N]]) -> String {
    let mut out = columns.join(",");
    out.push('\n');
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", fmt_number(*v));
        }
        out.push('\n');
    }
    out
}

pub fn to_json<const N: usize>(meta: Map<String, Value>, rows: &[[f64; N]]) -> String {
    let points: Vec<Value> = rows.iter().map(|r| json!(r.to_vec())).collect();
    let mut s = serde_json::to_string_pretty(&json!({ "meta": meta, "points": points }))
        .expect("finite numbers serialize");
    s.push('\n');
    s
}

pub fn render<const N: usize>(format: Format, columns: &[&str; N], meta: Map<String, Value>, rows: &[[f64; N]]) -> String {
    match format {
        Format::Csv => to_csv(columns, rows),
        Format::Json => {
            let mut meta = meta;
            meta.insert("columns".into(), json!(columns.to_vec()));
            to_json(meta, rows)
        }
    }
}

/// Parses a CSV produced by [`to_csv`]; used by tests and round-trip checks.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty file")?;
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|c| c.parse::<f64>().map_err(|e| format!("row {}: {e}", i + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != columns.len() {
            return Err(format!("row {} has {} fields, expected {}", i + 1, row.len(), columns.len()));
        }
        rows.push(row);
    }
    Ok((columns, rows))
}

/// Writes `contents` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
