//! Text formats: edge lists, embedding TSVs, XYZ point clouds and label TSVs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::graph::SampledGraph;

fn parse_error(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parses `u w [weight]` lines; `#` starts a comment line. Weight defaults
/// to 1.
pub fn parse_edge_list(text: &str, source: &str) -> Result<SampledGraph> {
    let mut edges = Vec::new();
    for (line, content) in data_lines(text) {
        let fields: Vec<&str> = content.split_whitespace().collect();
        let weight = match fields.len() {
            2 => 1.0,
            3 => fields[2]
                .parse::<f64>()
                .map_err(|e| parse_error(source, line, format!("bad weight {:?}: {e}", fields[2])))?,
            k => return Err(parse_error(source, line, format!("expected 2 or 3 fields, found {k}"))),
        };
        edges.push((fields[0].to_string(), fields[1].to_string(), weight));
    }
    SampledGraph::from_edge_list(edges)
}

pub fn read_edge_list(path: impl AsRef<Path>) -> Result<SampledGraph> {
    let path = path.as_ref();
    parse_edge_list(&fs::read_to_string(path)?, &path.display().to_string())
}

/// One row per node, `label<TAB>v1<TAB>...<TAB>vC`, 17 significant digits.
pub fn format_embedding(labels: &[String], matrix: ArrayView2<f64>) -> String {
    let mut out = String::new();
    for (label, row) in labels.iter().zip(matrix.rows()) {
        out.push_str(label);
        for v in row {
            write!(out, "\t{v:.16e}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_embedding(text: &str, source: &str) -> Result<(Vec<String>, Array2<f64>)> {
    let mut labels = Vec::new();
    let mut values = Vec::new();
    let mut width = None;
    for (line, content) in data_lines(text) {
        let mut fields = content.split('\t');
        let label = fields.next().unwrap_or_default().to_string();
        let row: Vec<f64> = fields
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_error(source, line, format!("bad value: {e}")))?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(parse_error(source, line, format!("expected {w} values, found {}", row.len())))
            }
            _ => {}
        }
        labels.push(label);
        values.extend(row);
    }
    let matrix = Array2::from_shape_vec((labels.len(), width.unwrap_or(0)), values)
        .expect("row widths checked");
    Ok((labels, matrix))
}

pub fn read_embedding(path: impl AsRef<Path>) -> Result<(Vec<String>, Array2<f64>)> {
    let path = path.as_ref();
    parse_embedding(&fs::read_to_string(path)?, &path.display().to_string())
}

/// Whitespace-separated coordinates, one point per line.
pub fn parse_xyz(text: &str, source: &str) -> Result<Array2<f64>> {
    let mut values = Vec::new();
    let mut rows = 0;
    let mut width = None;
    for (line, content) in data_lines(text) {
        let row: Vec<f64> = content
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_error(source, line, format!("bad coordinate: {e}")))?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(parse_error(source, line, format!("expected {w} coordinates, found {}", row.len())))
            }
            _ => {}
        }
        values.extend(row);
        rows += 1;
    }
    if rows == 0 {
        return Err(parse_error(source, 0, "no points"));
    }
    Ok(Array2::from_shape_vec((rows, width.unwrap()), values).expect("row widths checked"))
}

pub fn read_xyz(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    parse_xyz(&fs::read_to_string(path)?, &path.display().to_string())
}

pub fn format_xyz(points: ArrayView2<f64>) -> String {
    let mut out = String::new();
    for row in points.rows() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out
}

/// `node<TAB>class` pairs in file order.
pub fn parse_label_pairs(text: &str, source: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (line, content) in data_lines(text) {
        let fields: Vec<&str> = content.split('\t').map(str::trim).collect();
        if fields.len() != 2 || fields[0].is_empty() || fields[1].is_empty() {
            return Err(parse_error(source, line, "expected node<TAB>class"));
        }
        pairs.push((fields[0].to_string(), fields[1].to_string()));
    }
    Ok(pairs)
}
