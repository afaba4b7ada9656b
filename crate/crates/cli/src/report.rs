//! Machine-readable run reports and CSV tables.

use std::io::Write;

use hodohj_core::hodograph::format_sig17;
use serde::Serialize;

pub const REPORT_SCHEMA: &str = "hodohj.run-report";
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Keeps finite values; everything else becomes JSON `null`.
pub fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchRecord {
    pub y: Vec<f64>,
    pub u: f64,
    pub rank: usize,
    pub det_j: f64,
    pub iterations: usize,
}

/// Result at one `(x, t)` query.
#[derive(Clone, Debug, Serialize)]
pub struct PointRecord {
    pub x: Vec<f64>,
    pub t: f64,
    pub u: Option<f64>,
    pub y: Option<Vec<f64>>,
    pub rank: Option<usize>,
    pub branch_count: usize,
    pub det_j: Option<f64>,
    pub residual: Option<f64>,
    pub caustic: bool,
    /// `ok` or a short failure description.
    pub status: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub branches: Vec<BranchRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualStats {
    pub count: usize,
    pub max_abs: f64,
    pub mean_abs: f64,
}

impl ResidualStats {
    pub fn of(values: impl Iterator<Item = f64>) -> Option<Self> {
        let (mut count, mut max_abs, mut sum) = (0usize, 0.0f64, 0.0f64);
        for v in values {
            count += 1;
            max_abs = max_abs.max(v.abs());
            sum += v.abs();
        }
        (count > 0).then(|| ResidualStats { count, max_abs, mean_abs: sum / count as f64 })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonRecord {
    pub a: String,
    pub b: String,
    pub t: f64,
    pub linf: f64,
    pub rms: f64,
    pub points_compared: usize,
    pub worst_point: Vec<f64>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub notes: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct GateRecord {
    pub name: String,
    pub threshold: f64,
    pub value: Option<f64>,
    pub passed: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransformRecord {
    pub x: Vec<f64>,
    pub t: f64,
    pub y: Option<Vec<f64>>,
    /// `x·y − u` from the solved branch.
    pub h: Option<f64>,
    /// `λt|y|² − Φ(y)`.
    pub h_general: Option<f64>,
    pub transformed_residual: Option<f64>,
    /// `|∇_y H − x|` for the general `H`.
    pub inverse_error: Option<f64>,
    pub status: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct FieldSummary {
    pub name: String,
    pub counts: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub schema_version: u32,
    pub command: String,
    /// `ok` or `gate-failed`.
    pub status: String,
    pub exit_code: i32,
    pub n: usize,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convention: Option<String>,
    pub query_count: usize,
    pub failed_points: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<PointRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub transforms: Vec<TransformRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_stats: Option<ResidualStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transformed_residual_stats: Option<ResidualStats>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub comparisons: Vec<ComparisonRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<FieldSummary>,
    /// Times at which at least one point was flagged as a caustic.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caustic_t: Option<Vec<f64>>,
    /// Number of points per rank value, indexed by rank.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_histogram: Option<Vec<usize>>,
    pub gates: Vec<GateRecord>,
    pub artifacts: Vec<String>,
}

impl RunReport {
    pub fn new(command: &str, n: usize, lambda: f64, convention: Option<String>, query_count: usize) -> Self {
        RunReport {
            schema: REPORT_SCHEMA,
            schema_version: REPORT_SCHEMA_VERSION,
            command: command.into(),
            status: "ok".into(),
            exit_code: 0,
            n,
            lambda,
            convention,
            query_count,
            failed_points: 0,
            points: Vec::new(),
            transforms: Vec::new(),
            residual_stats: None,
            transformed_residual_stats: None,
            comparisons: Vec::new(),
            fields: Vec::new(),
            caustic_t: None,
            rank_histogram: None,
            gates: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn gates_passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }
}

/// One CSV cell: 17 significant digits, or `nan` for a missing value.
pub fn cell(v: Option<f64>) -> String {
    match v {
        Some(v) if v.is_finite() => format_sig17(v),
        _ => "nan".into(),
    }
}

/// A table written as comma-separated text.
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: Vec<String>) -> Self {
        CsvTable { header, rows: Vec::new() }
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for r in &self.rows {
            writeln!(w, "{}", r.join(","))?;
        }
        Ok(())
    }
}

pub fn coord_names(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |a| format!("{prefix}{a}"))
}

/// Header shared by the per-query tables.
pub fn point_header(n: usize) -> Vec<String> {
    coord_names("x", n)
        .chain(["t".to_string(), "u".to_string()])
        .chain(coord_names("y", n))
        .chain(["rank", "branch_count", "det_J", "residual", "caustic", "status"].map(String::from))
        .collect()
}

/// Status strings never contain separators or quotes.
pub fn csv_text(s: &str) -> String {
    s.chars().map(|c| if c == ',' || c == '"' || c == '\n' || c == '\r' { ';' } else { c }).collect()
}

pub fn point_row(p: &PointRecord, n: usize) -> Vec<String> {
    let mut row: Vec<String> = p.x.iter().map(|&v| cell(Some(v))).collect();
    row.push(cell(Some(p.t)));
    row.push(cell(p.u));
    match &p.y {
        Some(y) => row.extend(y.iter().map(|&v| cell(Some(v)))),
        None => row.extend(std::iter::repeat_n("nan".to_string(), n)),
    }
    row.push(p.rank.map_or("nan".into(), |r| r.to_string()));
    row.push(p.branch_count.to_string());
    row.push(cell(p.det_j));
    row.push(cell(p.residual));
    row.push(if p.caustic { "1" } else { "0" }.into());
    row.push(csv_text(&p.status));
    row
}
