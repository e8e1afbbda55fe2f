//! JSON-lines rows exchanged between subcommands and their tabular rendering.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GeometryDescriptors;
use crate::metrics::MetricResult;
use crate::mixed_models::TestReport;
use crate::toy_model::ToyReport;

/// Descriptor row: `{name, n, D, k, density, erank}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescribeRow {
    pub name: String,
    pub n: usize,
    #[serde(rename = "D")]
    pub dim: usize,
    pub k: usize,
    pub density: f64,
    pub erank: f64,
}

impl DescribeRow {
    pub fn new(name: impl Into<String>, dim: usize, g: &GeometryDescriptors) -> Self {
        Self {
            name: name.into(),
            n: g.n,
            dim,
            k: g.k,
            density: g.mean_knn_log_density,
            erank: g.effective_rank,
        }
    }
}

/// Any row a subcommand can emit. Rows carry no tag; the variant is
/// recognized by its fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Row {
    Describe(DescribeRow),
    Metric(MetricResult),
    Analysis(TestReport),
    Toy(ToyReport),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Describe,
    Metric,
    Analysis,
    Toy,
}

impl Row {
    pub fn kind(&self) -> RowKind {
        match self {
            Row::Describe(_) => RowKind::Describe,
            Row::Metric(_) => RowKind::Metric,
            Row::Analysis(_) => RowKind::Analysis,
            Row::Toy(_) => RowKind::Toy,
        }
    }
}

impl RowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RowKind::Describe => "describe",
            RowKind::Metric => "metric",
            RowKind::Analysis => "analysis",
            RowKind::Toy => "toy",
        }
    }

    fn header(self) -> &'static [&'static str] {
        match self {
            RowKind::Describe => &["name", "n", "D", "k", "density", "erank"],
            RowKind::Metric => &["metric", "value", "n_ref", "n_gen", "params"],
            RowKind::Analysis => &["test", "group", "statistic", "p", "r2_slope", "z", "standardized"],
            RowKind::Toy => &[
                "D",
                "r",
                "lambda",
                "n",
                "seed",
                "empirical_frechet",
                "analytic_w2",
                "rel_error",
                "erank",
                "density",
                "k",
            ],
        }
    }
}

impl fmt::Display for RowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "describe" => Ok(RowKind::Describe),
            "metric" => Ok(RowKind::Metric),
            "analysis" => Ok(RowKind::Analysis),
            "toy" => Ok(RowKind::Toy),
            _ => Err(Error::Argument(format!(
                "unknown row kind {s:?} (expected describe, metric, analysis or toy)"
            ))),
        }
    }
}

/// One row as a single JSON line, newline included.
pub fn to_json_line<T: Serialize>(row: &T) -> String {
    let mut s = serde_json::to_string(row).expect("rows serialize");
    s.push('\n');
    s
}

/// Parses JSON lines, skipping blank lines. `source` names the input in errors.
pub fn parse_rows(text: &str, source: &str) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(line).map_err(|e| {
            Error::Format(format!("{source}, line {}: not a report row ({e})", i + 1))
        })?;
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Text(String),
    Int(u64),
    Num(f64),
    Empty,
}

impl Cell {
    fn exact(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => v.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn short(&self) -> String {
        match self {
            Cell::Num(v) => short_number(*v),
            _ => self.exact(),
        }
    }

    fn numeric(&self) -> bool {
        matches!(self, Cell::Int(_) | Cell::Num(_))
    }
}

fn short_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-3..1e6).contains(&a) {
        format!("{v:.4}")
    } else if a.is_finite() {
        format!("{v:.3e}")
    } else {
        v.to_string()
    }
}

fn opt(v: Option<f64>) -> Cell {
    v.map_or(Cell::Empty, Cell::Num)
}

fn cells(row: &Row) -> Vec<Cell> {
    match row {
        Row::Describe(d) => vec![
            Cell::Text(d.name.clone()),
            Cell::Int(d.n as u64),
            Cell::Int(d.dim as u64),
            Cell::Int(d.k as u64),
            Cell::Num(d.density),
            Cell::Num(d.erank),
        ],
        Row::Metric(m) => {
            let params = m
                .params
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(";");
            vec![
                Cell::Text(m.metric_name.clone()),
                Cell::Num(m.value),
                Cell::Int(m.n_ref as u64),
                Cell::Int(m.n_gen as u64),
                Cell::Text(params),
            ]
        }
        Row::Analysis(t) => {
            let test = serde_json::to_value(t.kind).expect("kind serializes");
            vec![
                Cell::Text(test.as_str().unwrap_or_default().to_string()),
                t.group.clone().map_or(Cell::Empty, Cell::Text),
                Cell::Num(t.statistic),
                opt(t.p_value),
                opt(t.r2_slope),
                opt(t.wald_z),
                Cell::Text(t.standardized.to_string()),
            ]
        }
        Row::Toy(r) => vec![
            Cell::Int(r.config.dim as u64),
            Cell::Int(r.config.rank as u64),
            Cell::Num(r.config.lambda),
            Cell::Int(r.config.n as u64),
            Cell::Int(r.config.seed),
            Cell::Num(r.empirical_frechet),
            Cell::Num(r.analytic_w2),
            Cell::Num(r.rel_error),
            Cell::Num(r.erank),
            Cell::Num(r.density),
            Cell::Int(r.density_k as u64),
        ],
    }
}

/// Rows of a single kind, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    kind: RowKind,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    /// `empty_kind` picks the header when there are no rows.
    pub fn build(rows: &[Row], empty_kind: RowKind) -> Result<Self> {
        let kind = rows.first().map_or(empty_kind, Row::kind);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.kind() != kind) {
            return Err(Error::Format(format!(
                "mixed row kinds: row 1 is {kind}, row {} is {}",
                i + 1,
                r.kind()
            )));
        }
        Ok(Self {
            kind,
            rows: rows.iter().map(cells).collect(),
        })
    }

    pub fn kind(&self) -> RowKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Space-aligned text; numbers right-aligned and shortened.
    pub fn render_text(&self) -> String {
        let header = self.kind.header();
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(Cell::short).collect())
            .collect();
        let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for r in &body {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let right: Vec<bool> = (0..header.len())
            .map(|j| self.rows.iter().any(|r| r[j].numeric()))
            .collect();
        let line = |cols: Vec<&str>| {
            let parts: Vec<String> = cols
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    if right[j] {
                        format!("{c:>w$}", w = width[j])
                    } else {
                        format!("{c:<w$}", w = width[j])
                    }
                })
                .collect();
            let mut s = parts.join("  ").trim_end().to_string();
            s.push('\n');
            s
        };
        let mut out = line(header.to_vec());
        let rule: Vec<String> = width.iter().map(|w| "-".repeat(*w)).collect();
        out.push_str(&line(rule.iter().map(String::as_str).collect()));
        for r in &body {
            out.push_str(&line(r.iter().map(String::as_str).collect()));
        }
        out
    }

    /// CSV with full-precision numbers.
    pub fn render_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.kind.header()).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::exact)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }
}
