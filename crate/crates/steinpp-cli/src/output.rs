//! Deterministic result persistence: a CSV with a fixed column order and
//! 17-significant-digit reals, plus a JSON summary carrying the config hash.
//! Two runs with identical configs produce byte-identical CSVs; wall time
//! lives only in the summary.

use std::path::{Path, PathBuf};

use serde::Serialize;

use steinpp::bounds::BoundReport;

use crate::HarnessError;

/// Fixed CSV term columns; absent terms are written as zero.
pub const TERM_COLUMNS: [&str; 9] = [
    "discretization_d1",
    "discretization_d2",
    "strong_neighborhood",
    "orderliness_cells",
    "orderliness_cells_poisson",
    "orderliness_sections",
    "mixing",
    "mixing_orderliness",
    "fixed_intensity_gap",
];

/// One output row of an experiment pipeline.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub t: f64,
    pub theorem: String,
    pub m: u64,
    pub h: f64,
    pub terms: Vec<f64>,
    pub total: f64,
    pub total_clamped: f64,
    pub empirical: Option<f64>,
    pub mc_se: Option<f64>,
    pub seed: u64,
}

impl ResultRow {
    pub fn from_bound(experiment: &str, report: &BoundReport, seed: u64) -> Self {
        let terms = TERM_COLUMNS.iter().map(|label| report.term(label)).collect();
        ResultRow {
            experiment: experiment.to_string(),
            t: report.t,
            theorem: report.theorem.label().to_string(),
            m: report.m,
            h: report.h,
            terms,
            total: report.total,
            total_clamped: report.total_clamped,
            empirical: None,
            mc_se: None,
            seed,
        }
    }

    pub fn plain(experiment: &str, t: f64, label: &str, seed: u64) -> Self {
        ResultRow {
            experiment: experiment.to_string(),
            t,
            theorem: label.to_string(),
            m: 0,
            h: 1.0,
            terms: vec![0.0; TERM_COLUMNS.len()],
            total: 0.0,
            total_clamped: 0.0,
            empirical: None,
            mc_se: None,
            seed,
        }
    }
}

fn real(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn csv_header() -> String {
    let mut cols = vec!["experiment", "t", "theorem", "m", "h"];
    cols.extend(TERM_COLUMNS);
    cols.extend(["total", "total_clamped", "empirical", "mc_se", "seed"]);
    cols.join(",")
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = csv_header();
    out.push('\n');
    for row in rows {
        let mut fields = vec![
            row.experiment.clone(),
            real(row.t),
            row.theorem.clone(),
            row.m.to_string(),
            real(row.h),
        ];
        for v in &row.terms {
            fields.push(real(*v));
        }
        fields.push(real(row.total));
        fields.push(real(row.total_clamped));
        fields.push(row.empirical.map(real).unwrap_or_default());
        fields.push(row.mc_se.map(real).unwrap_or_default());
        fields.push(row.seed.to_string());
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Free-form per-experiment summary payload.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub rows: usize,
    pub pass: Option<bool>,
    pub notes: Vec<String>,
    pub wall_time_ms: u128,
}

pub struct WrittenFiles {
    pub csv: PathBuf,
    pub summary: PathBuf,
}

pub fn write_results(
    rows: &[ResultRow],
    summary: &Summary,
    dir: &Path,
) -> Result<WrittenFiles, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let csv_path = dir.join("rows.csv");
    std::fs::write(&csv_path, rows_to_csv(rows)).map_err(|e| HarnessError::io(&csv_path, e))?;
    let summary_path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(summary).expect("summary serializes");
    std::fs::write(&summary_path, json).map_err(|e| HarnessError::io(&summary_path, e))?;
    Ok(WrittenFiles { csv: csv_path, summary: summary_path })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_fixed_shape_and_full_precision() {
        let mut row = ResultRow::plain("bound_sweep", 16.0, "principal-sharp", 7);
        row.total = 1.0 / 3.0;
        row.empirical = Some(0.25);
        let text = rows_to_csv(&[row]);
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert_eq!(header.split(',').count(), 5 + TERM_COLUMNS.len() + 5);
        let data = lines.next().unwrap();
        assert!(data.contains("3.3333333333333331e-1"), "{data}");
        assert_eq!(data.split(',').count(), header.split(',').count());
    }

    #[test]
    fn missing_empirical_fields_stay_empty() {
        let row = ResultRow::plain("x", 2.0, "y", 1);
        let text = rows_to_csv(&[row]);
        assert!(text.lines().nth(1).unwrap().ends_with(",,,1"));
    }
}
