//! Measured values with provenance, keyed by device, metric and parameters.
//!
//! Records are exact-match only. Models decide what to do when a point is missing.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub type Params = BTreeMap<String, String>;

pub const CSV_HEADER: [&str; 6] = ["device", "metric_id", "params", "value", "unit", "provenance"];

/// Known provenance anchors and what each one covers.
pub const ANCHORS: &[(&str, &str)] = &[
    ("mem_latency", "per-level load latency"),
    ("mem_throughput", "per-level cache and memory throughput"),
    ("mma_table", "warp-level mma latency and throughput, dense and sparse"),
    ("wgmma_dense", "dense warp-group mma at N=256"),
    ("wgmma_sparse", "sparse warp-group mma at N=256"),
    ("wgmma_nsweep", "warp-group mma f32.f16 across N"),
    ("tc_energy", "power and energy efficiency of the largest mma shapes"),
    ("llm_inference", "decode-only model inference throughput"),
    ("async_h800", "synchronous vs asynchronous tiled matmul on H800"),
    ("async_a100", "synchronous vs asynchronous tiled matmul on A100"),
    ("dsm_prose", "SM-to-SM network numbers quoted in text"),
    ("dpx_prose", "DPX speedups quoted in text"),
    ("fit", "parameters fitted offline against the records above"),
];

pub fn is_known_anchor(anchor: &str) -> bool {
    ANCHORS.iter().any(|(a, _)| *a == anchor)
}

/// Build a parameter map from literal pairs.
pub fn params(pairs: &[(&str, &str)]) -> Params {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

/// `k=v;k=v` in key order.
pub fn format_params(p: &Params) -> String {
    p.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

pub fn parse_params(s: &str) -> std::result::Result<Params, String> {
    let mut out = Params::new();
    for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| format!("param `{part}` is not k=v"))?;
        if out.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(format!("param `{}` repeated", k.trim()));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Unit {
    Cycles,
    BytesPerClkSm,
    BytesPerClk,
    GBps,
    TBps,
    Tflops,
    Tops,
    Gflops,
    Ms,
    TokensPerS,
    Watts,
    TflopsPerWatt,
    Percent,
    Ratio,
}

impl Unit {
    pub fn as_str(self) -> &'static str {
        match self {
            Unit::Cycles => "cycles",
            Unit::BytesPerClkSm => "bytes_per_clk_sm",
            Unit::BytesPerClk => "bytes_per_clk",
            Unit::GBps => "GBps",
            Unit::TBps => "TBps",
            Unit::Tflops => "TFLOPS",
            Unit::Tops => "TOPS",
            Unit::Gflops => "GFLOPS",
            Unit::Ms => "ms",
            Unit::TokensPerS => "tokens_per_s",
            Unit::Watts => "watts",
            Unit::TflopsPerWatt => "tflops_per_watt",
            Unit::Percent => "percent",
            Unit::Ratio => "ratio",
        }
    }

    /// TFLOPS and TOPS measure the same thing for different operand kinds.
    fn dimension(self) -> Unit {
        match self {
            Unit::Tops => Unit::Tflops,
            u => u,
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Unit {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        Ok(match s {
            "cycles" => Unit::Cycles,
            "bytes_per_clk_sm" => Unit::BytesPerClkSm,
            "bytes_per_clk" => Unit::BytesPerClk,
            "GBps" => Unit::GBps,
            "TBps" => Unit::TBps,
            "TFLOPS" => Unit::Tflops,
            "TOPS" => Unit::Tops,
            "GFLOPS" => Unit::Gflops,
            "ms" => Unit::Ms,
            "tokens_per_s" => Unit::TokensPerS,
            "watts" => Unit::Watts,
            "tflops_per_watt" => Unit::TflopsPerWatt,
            "percent" => Unit::Percent,
            "ratio" => Unit::Ratio,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibRecord {
    pub device: String,
    pub metric_id: String,
    pub params: Params,
    pub value: f64,
    pub unit: Unit,
    pub provenance: String,
}

type Key = (String, String, String);

fn key_of(device: &str, metric: &str, p: &Params) -> Key {
    (device.to_string(), metric.to_string(), format_params(p))
}

#[derive(Debug, Clone, Default)]
pub struct CalibStore {
    records: Vec<CalibRecord>,
    index: HashMap<Key, usize>,
    units: HashMap<String, Unit>,
}

impl CalibStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut store = Self::new();
        store.ingest_path(path)?;
        Ok(store)
    }

    pub fn ingest_path(&mut self, path: impl AsRef<Path>) -> Result<usize> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.ingest_str(&text, &path.display().to_string())
    }

    /// Ingest CSV text; returns the number of records added. Nothing is added on error.
    pub fn ingest_str(&mut self, text: &str, origin: &str) -> Result<usize> {
        if text.trim().is_empty() {
            return Ok(0);
        }
        let format_err = |line: usize, msg: String| Error::Format { path: origin.to_string(), line, msg };
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| format_err(1, e.to_string()))?.clone();
        if header.iter().collect::<Vec<_>>() != CSV_HEADER {
            return Err(format_err(1, format!("header must be `{}`", CSV_HEADER.join(","))));
        }
        let mut staged = self.clone();
        let mut added = 0;
        for row in reader.records() {
            let row = row.map_err(|e| format_err(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
            let line = row.position().map_or(0, |p| p.line() as usize);
            if row.len() != CSV_HEADER.len() {
                return Err(format_err(line, format!("expected 6 fields, found {}", row.len())));
            }
            let params = parse_params(&row[2]).map_err(|m| format_err(line, m))?;
            let value: f64 = row[3].trim().parse().map_err(|_| format_err(line, format!("bad value `{}`", &row[3])))?;
            if !value.is_finite() {
                return Err(format_err(line, format!("value `{}` is not finite", &row[3])));
            }
            let unit: Unit = row[4].trim().parse().map_err(|_| Error::UnknownUnit {
                path: origin.to_string(),
                line,
                unit: row[4].to_string(),
            })?;
            let record = CalibRecord {
                device: row[0].trim().to_string(),
                metric_id: row[1].trim().to_string(),
                params,
                value,
                unit,
                provenance: row[5].trim().to_string(),
            };
            staged.insert_at(record, origin, line)?;
            added += 1;
        }
        *self = staged;
        Ok(added)
    }

    pub fn insert(&mut self, record: CalibRecord) -> Result<()> {
        self.insert_at(record, "<memory>", 0)
    }

    fn insert_at(&mut self, record: CalibRecord, origin: &str, line: usize) -> Result<()> {
        let key = key_of(&record.device, &record.metric_id, &record.params);
        if self.index.contains_key(&key) {
            return Err(Error::DuplicateRecord {
                path: origin.to_string(),
                line,
                key: format!("({}, {}, {{{}}})", key.0, key.1, key.2),
            });
        }
        if let Some(&expected) = self.units.get(&record.metric_id) {
            if expected.dimension() != record.unit.dimension() {
                return Err(Error::InconsistentUnit {
                    path: origin.to_string(),
                    line,
                    metric: record.metric_id.clone(),
                    expected: expected.to_string(),
                    found: record.unit.to_string(),
                });
            }
        } else {
            self.units.insert(record.metric_id.clone(), record.unit);
        }
        self.index.insert(key, self.records.len());
        self.records.push(record);
        Ok(())
    }

    pub fn lookup(&self, device: &str, metric: &str, p: &Params) -> Result<&CalibRecord> {
        self.index
            .get(&key_of(device, metric, p))
            .map(|&i| &self.records[i])
            .ok_or_else(|| Error::absent(device, metric, p))
    }

    pub fn value(&self, device: &str, metric: &str, p: &Params) -> Result<f64> {
        self.lookup(device, metric, p).map(|r| r.value)
    }

    pub fn get(&self, device: &str, metric: &str, p: &Params) -> Option<&CalibRecord> {
        self.lookup(device, metric, p).ok()
    }

    pub fn records(&self) -> &[CalibRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records for one device and metric, in ingest order.
    pub fn select<'a>(&'a self, device: &'a str, metric: &'a str) -> impl Iterator<Item = &'a CalibRecord> + 'a {
        self.records.iter().filter(move |r| r.device == device && r.metric_id == metric)
    }

    /// Drop every record whose metric starts with `prefix`; returns how many were removed.
    pub fn remove_metric_prefix(&mut self, prefix: &str) -> usize {
        let before = self.records.len();
        let kept: Vec<_> = std::mem::take(&mut self.records)
            .into_iter()
            .filter(|r| !r.metric_id.starts_with(prefix))
            .collect();
        *self = Self::new();
        for r in kept {
            self.insert(r).expect("kept records were already unique");
        }
        before - self.records.len()
    }

    /// Records whose provenance is not in [`ANCHORS`].
    pub fn unknown_provenance(&self) -> Vec<&CalibRecord> {
        self.records.iter().filter(|r| !is_known_anchor(&r.provenance)).collect()
    }

    /// Canonical CSV: header, then records in ingest order with sorted params.
    pub fn dump(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("write to memory");
        for r in &self.records {
            w.write_record([
                r.device.as_str(),
                r.metric_id.as_str(),
                &format_params(&r.params),
                &r.value.to_string(),
                r.unit.as_str(),
                r.provenance.as_str(),
            ])
            .expect("write to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "device,metric_id,params,value,unit,provenance\n";

    #[test]
    fn empty_input_ingests_nothing() {
        let mut s = CalibStore::new();
        assert_eq!(s.ingest_str("", "e.csv").unwrap(), 0);
        assert_eq!(s.ingest_str(HEADER, "e.csv").unwrap(), 0);
    }

    #[test]
    fn duplicate_key_rejected_and_store_untouched() {
        let text = format!(
            "{HEADER}H800,mem.latency.l1,,40.7,cycles,mem_latency\nH800,mem.latency.l1,,41,cycles,mem_latency\n"
        );
        let mut s = CalibStore::new();
        let err = s.ingest_str(&text, "d.csv").unwrap_err();
        assert!(matches!(err, Error::DuplicateRecord { line: 3, .. }), "{err}");
        assert!(s.is_empty());
    }

    #[test]
    fn unknown_unit_rejected() {
        let text = format!("{HEADER}H800,mem.latency.l1,,40.7,furlongs,mem_latency\n");
        assert!(matches!(CalibStore::new().ingest_str(&text, "u.csv"), Err(Error::UnknownUnit { .. })));
    }

    #[test]
    fn mixed_units_per_metric_rejected() {
        let text = format!(
            "{HEADER}H800,mem.latency.l1,,40.7,cycles,mem_latency\nA100,mem.latency.l1,,37.9,ms,mem_latency\n"
        );
        assert!(matches!(CalibStore::new().ingest_str(&text, "m.csv"), Err(Error::InconsistentUnit { .. })));
    }

    #[test]
    fn params_order_does_not_matter() {
        let text = format!("{HEADER}H800,x.y,b=2;a=1,3,ratio,fit\n");
        let mut s = CalibStore::new();
        s.ingest_str(&text, "p.csv").unwrap();
        assert_eq!(s.value("H800", "x.y", &params(&[("a", "1"), ("b", "2")])).unwrap(), 3.0);
        assert!(s.lookup("H800", "x.y", &params(&[("a", "1")])).unwrap_err().is_absent());
    }

    #[test]
    fn removing_a_prefix_keeps_the_rest_addressable() {
        let text = format!("{HEADER}H800,a.one,,1,ratio,fit\nH800,b.two,,2,ratio,fit\nH800,a.three,,3,ratio,fit\n");
        let mut s = CalibStore::new();
        s.ingest_str(&text, "r.csv").unwrap();
        assert_eq!(s.remove_metric_prefix("a."), 2);
        assert_eq!(s.value("H800", "b.two", &Params::new()).unwrap(), 2.0);
    }
}
