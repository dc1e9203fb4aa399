//! Pattern file format: a header line carrying the geometry, then one point
//! per line with whitespace-separated coordinates.
//!
//! ```text
//! # d1=1 d2=1 T=16 w=16
//! 0.0125 -3.5
//! -0.002 11.25
//! ```

use std::path::Path;

use steinpp::metrics::PointPattern;

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternHeader {
    pub d1: usize,
    pub d2: usize,
    pub t: f64,
    pub w: f64,
}

pub fn format_pattern(header: &PatternHeader, pattern: &PointPattern) -> String {
    let mut out = format!(
        "# d1={} d2={} T={} w={}\n",
        header.d1, header.d2, header.t, header.w
    );
    for p in pattern.points() {
        let line: Vec<String> = p.iter().map(|x| format!("{x:.16e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn save_pattern(
    path: &Path,
    header: &PatternHeader,
    pattern: &PointPattern,
) -> Result<(), HarnessError> {
    std::fs::write(path, format_pattern(header, pattern)).map_err(|e| HarnessError::io(path, e))
}

pub fn parse_pattern(text: &str) -> Result<(PatternHeader, PointPattern), HarnessError> {
    let mut lines = text.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| HarnessError::PatternFile("empty file".into()))?;
    let header = parse_header(header_line)?;
    let dims = header.d1 + header.d2;
    let mut points = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let coords: Result<Vec<f64>, _> =
            line.split_whitespace().map(str::parse::<f64>).collect();
        let coords = coords.map_err(|e| {
            HarnessError::PatternFile(format!("line {}: {e}", lineno + 2))
        })?;
        if coords.len() != dims {
            return Err(HarnessError::PatternFile(format!(
                "line {}: expected {} coordinates, found {}",
                lineno + 2,
                dims,
                coords.len()
            )));
        }
        points.push(coords);
    }
    let pattern = PointPattern::new(points)
        .map_err(|e| HarnessError::PatternFile(format!("bad coordinates: {e}")))?;
    Ok((header, pattern))
}

pub fn load_pattern(path: &Path) -> Result<(PatternHeader, PointPattern), HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_pattern(&text)
}

fn parse_header(line: &str) -> Result<PatternHeader, HarnessError> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| HarnessError::PatternFile("header must start with '#'".into()))?;
    let mut d1 = None;
    let mut d2 = None;
    let mut t = None;
    let mut w = None;
    for field in body.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| HarnessError::PatternFile(format!("bad header field '{field}'")))?;
        match key {
            "d1" => d1 = Some(value.parse::<usize>()),
            "d2" => d2 = Some(value.parse::<usize>()),
            "T" => t = Some(value.parse::<f64>().map_err(|e| e.to_string())),
            "w" => w = Some(value.parse::<f64>().map_err(|e| e.to_string())),
            other => {
                return Err(HarnessError::PatternFile(format!("unknown header key '{other}'")))
            }
        }
    }
    let d1 = d1
        .ok_or_else(|| HarnessError::PatternFile("header missing d1".into()))?
        .map_err(|e| HarnessError::PatternFile(format!("d1: {e}")))?;
    let d2 = d2
        .ok_or_else(|| HarnessError::PatternFile("header missing d2".into()))?
        .map_err(|e| HarnessError::PatternFile(format!("d2: {e}")))?;
    let t = t
        .ok_or_else(|| HarnessError::PatternFile("header missing T".into()))?
        .map_err(|e| HarnessError::PatternFile(format!("T: {e}")))?;
    let w = w
        .ok_or_else(|| HarnessError::PatternFile("header missing w".into()))?
        .map_err(|e| HarnessError::PatternFile(format!("w: {e}")))?;
    Ok(PatternHeader { d1, d2, t, w })
}
