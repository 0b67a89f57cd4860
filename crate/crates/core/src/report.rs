//! Prediction rows and their CSV, JSON and Markdown renderings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::workload::WorkloadKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Uncalibrated,
    Unsupported,
    Oom,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Uncalibrated => "uncalibrated",
            Status::Unsupported => "unsupported",
            Status::Oom => "oom",
        }
    }
}

impl FromStr for Status {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ok" => Ok(Status::Ok),
            "uncalibrated" => Ok(Status::Uncalibrated),
            "unsupported" => Ok(Status::Unsupported),
            "oom" => Ok(Status::Oom),
            _ => Err(Error::Config(format!("unknown row status `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub device: String,
    pub kind: String,
    pub params: BTreeMap<String, String>,
    pub metric: String,
    pub predicted: Option<f64>,
    pub unit: String,
    pub calibrated: Option<f64>,
    pub rel_error: Option<f64>,
    pub status: Status,
    pub provenance: Option<String>,
}

impl ReportRow {
    pub fn new(
        device: &str,
        kind: WorkloadKind,
        params: BTreeMap<String, String>,
        metric: String,
        status: Status,
        estimate: Option<Estimate>,
    ) -> Self {
        let mut row = ReportRow {
            device: device.to_string(),
            kind: kind.to_string(),
            params,
            metric,
            predicted: None,
            unit: String::new(),
            calibrated: None,
            rel_error: None,
            status,
            provenance: None,
        };
        if let Some(e) = estimate {
            row.predicted = Some(e.value);
            row.unit = e.unit.to_string();
            row.rel_error = e.rel_error();
            row.calibrated = e.calibrated;
            row.provenance = e.provenance;
        }
        row
    }

    pub fn with_unit(mut self, unit: &str) -> Self {
        self.unit = unit.to_string();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Md,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "md" | "markdown" => Ok(Format::Md),
            _ => Err(Error::Config(format!("unknown format `{s}` (csv, json, md)"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Md => "md",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub rows: Vec<ReportRow>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

const LEAD: [&str; 2] = ["device", "kind"];
const TAIL: [&str; 7] = ["metric", "predicted", "unit", "calibrated", "rel_error", "status", "provenance"];

impl PredictionReport {
    /// Union of parameter names over all rows, sorted.
    pub fn param_names(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.rows.iter().flat_map(|r| r.params.keys()).collect();
        set.into_iter().cloned().collect()
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => Ok(self.to_json()),
            Format::Md => Ok(self.to_markdown()),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> Result<String> {
        let names = self.param_names();
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let header: Vec<&str> = LEAD.iter().copied().chain(names.iter().map(String::as_str)).chain(TAIL).collect();
        let csv_err = |e: csv::Error| Error::Config(e.to_string());
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![r.device.clone(), r.kind.clone()];
            rec.extend(names.iter().map(|n| r.params.get(n).cloned().unwrap_or_default()));
            rec.extend([
                r.metric.clone(),
                opt(r.predicted),
                r.unit.clone(),
                opt(r.calibrated),
                opt(r.rel_error),
                r.status.as_str().to_string(),
                r.provenance.clone().unwrap_or_default(),
            ]);
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("utf-8 fields"))
    }

    /// Markdown: one table per (kind, metric). Memory workloads pivot into one table per kind
    /// with a row per level and a column per device.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let mut groups: Vec<((String, String), Vec<&ReportRow>)> = Vec::new();
        for r in &self.rows {
            let metric = if is_memory(r) { String::new() } else { r.metric.clone() };
            let key = (r.kind.clone(), metric);
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, rows)) => rows.push(r),
                None => groups.push((key, vec![r])),
            }
        }
        for ((kind, metric), rows) in groups {
            let title = if metric.is_empty() { kind.clone() } else { format!("{kind}: {metric}") };
            let _ = writeln!(out, "### {title}\n");
            if !pivot_markdown(&mut out, &rows) {
                flat_markdown(&mut out, &rows);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_csv(text: &str, origin: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let fmt_err = |line: usize, msg: String| Error::Format { path: origin.to_string(), line, msg };
        let header = rdr.headers().map_err(|e| fmt_err(1, e.to_string()))?.clone();
        let cols: Vec<&str> = header.iter().collect();
        let n = cols.len();
        if n < LEAD.len() + TAIL.len() || cols[..2] != LEAD || cols[n - TAIL.len()..] != TAIL {
            return Err(fmt_err(1, format!("unexpected header `{}`", cols.join(","))));
        }
        let param_cols = &cols[2..n - TAIL.len()];
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| fmt_err(line, e.to_string()))?;
            let f = |j: usize| rec.get(j).unwrap_or_default().to_string();
            let num = |j: usize| -> Result<Option<f64>> {
                let s = f(j);
                if s.is_empty() {
                    return Ok(None);
                }
                s.parse().map(Some).map_err(|_| fmt_err(line, format!("`{s}` is not a number")))
            };
            let params = param_cols
                .iter()
                .enumerate()
                .filter_map(|(k, name)| {
                    let v = f(2 + k);
                    (!v.is_empty()).then(|| (name.to_string(), v))
                })
                .collect();
            let t = n - TAIL.len();
            let provenance = f(t + 6);
            rows.push(ReportRow {
                device: f(0),
                kind: f(1),
                params,
                metric: f(t),
                predicted: num(t + 1)?,
                unit: f(t + 2),
                calibrated: num(t + 3)?,
                rel_error: num(t + 4)?,
                status: f(t + 5).parse().map_err(|e: Error| fmt_err(line, e.to_string()))?,
                provenance: (!provenance.is_empty()).then_some(provenance),
            });
        }
        Ok(PredictionReport { rows })
    }

    /// Read a report written by `render`, choosing the parser by extension and falling back on content.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => true,
            Some("csv") => false,
            _ => text.trim_start().starts_with('{'),
        };
        if is_json {
            serde_json::from_str(&text).map_err(|e| Error::Format {
                path: path.display().to_string(),
                line: e.line(),
                msg: e.to_string(),
            })
        } else {
            Self::from_csv(&text, &path.display().to_string())
        }
    }
}

fn cell(r: &ReportRow) -> String {
    match (r.status, r.predicted) {
        (Status::Ok, Some(v)) => format_value(v),
        (s, _) => s.as_str().to_string(),
    }
}

/// Short values print as-is; long ones are cut to table precision. CSV and JSON keep full precision.
/// Five significant digits with trailing zeros dropped, so measured values print as recorded.
fn format_value(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return v.to_string();
    }
    let int_digits = v.abs().log10().floor() as i32 + 1;
    let decimals = (5 - int_digits).clamp(0, 6) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn is_memory(r: &ReportRow) -> bool {
    (r.kind == "MemLatency" || r.kind == "MemThroughput") && r.params.contains_key("level")
}

fn pivot_markdown(out: &mut String, rows: &[&ReportRow]) -> bool {
    if !rows.iter().all(|r| is_memory(r)) {
        return false;
    }
    let mut devices: Vec<&str> = Vec::new();
    let mut lines: Vec<String> = Vec::new();
    let line = |r: &ReportRow| {
        let level = &r.params["level"];
        let unit = if r.unit.is_empty() { String::new() } else { format!(" ({})", r.unit) };
        match r.params.get("access") {
            Some(a) if r.metric.ends_with(".l1") || r.metric.ends_with(".l2") => format!("{level} {a}{unit}"),
            _ => format!("{level}{unit}"),
        }
    };
    for r in rows {
        if !devices.contains(&r.device.as_str()) {
            devices.push(&r.device);
        }
        let l = line(r);
        if !lines.contains(&l) {
            lines.push(l);
        }
    }
    let _ = writeln!(out, "| | {} |", devices.join(" | "));
    let _ = writeln!(out, "|---|{}", "---|".repeat(devices.len()));
    for l in &lines {
        let cells: Vec<String> = devices
            .iter()
            .map(|d| rows.iter().find(|r| r.device == *d && line(r) == *l).map(|r| cell(r)).unwrap_or_default())
            .collect();
        let _ = writeln!(out, "| {l} | {} |", cells.join(" | "));
    }
    true
}

fn flat_markdown(out: &mut String, rows: &[&ReportRow]) {
    let names: BTreeSet<&String> = rows.iter().flat_map(|r| r.params.keys()).collect();
    let calibrated = rows.iter().any(|r| r.calibrated.is_some());
    let mut head: Vec<String> = vec!["device".into()];
    head.extend(names.iter().map(|n| n.to_string()));
    head.push(format!("predicted ({})", rows.first().map(|r| r.unit.as_str()).unwrap_or_default()));
    if calibrated {
        head.extend(["calibrated".into(), "rel. error".into()]);
    }
    let _ = writeln!(out, "| {} |", head.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(head.len()));
    for r in rows {
        let mut cells = vec![r.device.clone()];
        cells.extend(names.iter().map(|n| r.params.get(*n).cloned().unwrap_or_default()));
        cells.push(cell(r));
        if calibrated {
            cells.push(r.calibrated.map(format_value).unwrap_or_default());
            cells.push(r.rel_error.map(|e| format!("{:.1}%", e * 100.0)).unwrap_or_default());
        }
        let _ = writeln!(out, "| {} |", cells.join(" | "));
    }
}
