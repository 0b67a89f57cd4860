//! Declarative workload sweeps evaluated through the models.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::async_pipe::{self, AsyncMatmulConfig, AsyncMode};
use crate::calib::{params, CalibStore, Unit};
use crate::device::{Catalog, DeviceSpec};
use crate::dpx::{self, DpxFnClass};
use crate::dsm::{self, HistogramConfig, RbcWorkload};
use crate::dtype::{AccType, Dtype};
use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::memory::{self, AccessDtype, MemAccess, MemLevel};
use crate::report::{PredictionReport, ReportRow, Status};
use crate::te::{self, LayerConfig, LlmDtype, LlmModelDesc, TeDtype, TeLinearPoint};
use crate::tensorcore::{self, Api, Init, Shape, Source, TcInstrDesc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WorkloadKind {
    MemLatency,
    MemThroughput,
    TcInstr,
    TcNSweep,
    Dpx,
    AsyncMatmul,
    RbcSweep,
    Histogram,
    TeLinear,
    TeLayer,
    LlmRoofline,
}

impl fmt::Display for WorkloadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl WorkloadKind {
    /// Parameters every point of this kind must carry.
    pub fn required(self) -> &'static [&'static str] {
        match self {
            WorkloadKind::MemLatency | WorkloadKind::MemThroughput => &["level"],
            WorkloadKind::TcInstr => &["api", "a", "cd"],
            WorkloadKind::TcNSweep => &["N"],
            WorkloadKind::Dpx => &["blocks"],
            WorkloadKind::AsyncMatmul => &["block_dim", "blocks_per_sm", "mode"],
            WorkloadKind::RbcSweep => &["cluster_size", "block_size", "ilp"],
            WorkloadKind::Histogram => &["cluster_size", "block_size", "nbins"],
            WorkloadKind::TeLinear => &["N", "dtype"],
            WorkloadKind::TeLayer => &["hidden", "dtype"],
            WorkloadKind::LlmRoofline => &["model", "dtype"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub kind: WorkloadKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    /// Axes in order; the first axis varies slowest.
    #[serde(default)]
    pub sweep: Vec<(String, Vec<Value>)>,
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Report columns a parameter may not shadow.
const RESERVED: [&str; 8] = ["kind", "metric", "predicted", "unit", "calibrated", "rel_error", "status", "provenance"];

/// One fully bound sweep point.
pub type Point = BTreeMap<String, String>;

impl WorkloadSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.display().to_string(),
            line: e.line(),
            msg: e.to_string(),
        })
    }

    /// Pin every point to one device, dropping any device axis.
    pub fn with_device(mut self, device: &str) -> Self {
        self.device = Some(device.to_string());
        self.sweep.retain(|(axis, _)| axis != "device");
        self.params.remove("device");
        self
    }

    /// Cartesian product of the axes over the fixed params, first axis slowest.
    pub fn points(&self) -> Result<Vec<Point>> {
        let mut base = Point::new();
        for (k, v) in &self.params {
            base.insert(k.clone(), value_text(v));
        }
        if let Some(d) = &self.device {
            base.insert("device".into(), d.clone());
        }
        let mut points = vec![base];
        for (axis, values) in &self.sweep {
            if values.is_empty() {
                return Err(Error::Workload(format!("sweep axis `{axis}` has no values")));
            }
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.insert(axis.clone(), value_text(v));
                        q
                    })
                })
                .collect();
        }
        for p in &points {
            if let Some(bad) = p.keys().find(|k| RESERVED.contains(&k.as_str())) {
                return Err(Error::Workload(format!("param `{bad}` clashes with a report column")));
            }
            if !p.contains_key("device") {
                return Err(Error::Workload("`device` is required (field, param or sweep axis)".into()));
            }
            for req in self.kind.required() {
                if !p.contains_key(*req) {
                    return Err(Error::Workload(format!("{} needs param `{req}`", self.kind)));
                }
            }
        }
        Ok(points)
    }
}

struct Ctx<'a> {
    point: &'a Point,
}

impl Ctx<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.point.get(key).map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.raw(key).ok_or_else(|| Error::Workload(format!("missing param `{key}`")))?;
        raw.parse().map_err(|_| Error::Workload(format!("param `{key}`: cannot parse `{raw}`")))
    }

    fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some(_) => self.get(key),
        }
    }

    fn typed<T: FromStr<Err = Error>>(&self, key: &str) -> Result<T> {
        let raw = self.raw(key).ok_or_else(|| Error::Workload(format!("missing param `{key}`")))?;
        raw.parse().map_err(|e: Error| Error::Workload(format!("param `{key}`: {e}")))
    }

    fn typed_or<T: FromStr<Err = Error>>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some(_) => self.typed(key),
        }
    }
}

struct Outcome {
    metric: String,
    estimate: Estimate,
}

fn outcome(metric: impl Into<String>, estimate: Estimate) -> Outcome {
    Outcome { metric: metric.into(), estimate }
}

fn tc_instr(c: &Ctx<'_>, api: Api) -> Result<TcInstrDesc> {
    let a: Dtype = c.typed("a")?;
    let cd: AccType = c.typed("cd")?;
    let sparse: bool = c.get_or("sparse", false)?;
    match api {
        Api::Mma => {
            // Sparse mma shapes are written compressed, as in the calibration keys.
            let mut shape: Shape = c.typed("shape")?;
            if sparse {
                shape.k *= 2;
            }
            Ok(TcInstrDesc::mma(a, cd, shape, sparse))
        }
        Api::Wgmma => {
            let source: Source = c.typed_or("source", Source::SS)?;
            if c.raw("shape").is_some() {
                let shape: Shape = c.typed("shape")?;
                Ok(TcInstrDesc { api, sparse, shape, a_type: a, cd_type: cd, source })
            } else {
                Ok(TcInstrDesc::wgmma(a, cd, c.get("N")?, source, sparse))
            }
        }
    }
}

fn tc_metric(c: &Ctx<'_>, store: &CalibStore, dev: &DeviceSpec, instr: &TcInstrDesc, analytic: bool) -> Result<Outcome> {
    let init: Init = c.typed_or("init", Init::Zero)?;
    let measure: String = c.get_or("measure", "throughput".to_string())?;
    let family = if instr.api == Api::Mma { "tc.mma" } else { "tc.wgmma" };
    match measure.as_str() {
        "latency" => Ok(outcome(format!("{family}.latency"), tensorcore::predict_latency(store, dev, instr)?)),
        "throughput" if analytic => {
            let stored = tensorcore::predict_throughput(store, dev, instr, init).ok().filter(|e| e.calibrated.is_some());
            let value = tensorcore::model_wgmma_throughput(store, dev, instr, init)?;
            let mut e = Estimate::modeled(value, instr.throughput_unit());
            if let Some(s) = stored {
                e.calibrated = s.calibrated;
                e.provenance = s.provenance;
            }
            Ok(outcome(format!("{family}.throughput"), e))
        }
        "throughput" => Ok(outcome(format!("{family}.throughput"), tensorcore::predict_throughput(store, dev, instr, init)?)),
        "efficiency" => {
            let v = tensorcore::efficiency(store, dev, instr, init)?;
            Ok(outcome(format!("{family}.efficiency"), Estimate::modeled(v, Unit::Ratio)))
        }
        "ops" => Ok(outcome(format!("{family}.ops"), Estimate::modeled(instr.ops() as f64, Unit::Ratio))),
        other => Err(Error::Workload(format!("param `measure`: unknown tensor-core measure `{other}`"))),
    }
}

fn evaluate(kind: WorkloadKind, c: &Ctx<'_>, store: &CalibStore, dev: &DeviceSpec) -> Result<Outcome> {
    match kind {
        WorkloadKind::MemLatency => {
            let level: MemLevel = c.typed("level")?;
            let metric = memory::latency_metric(level);
            Ok(outcome(&metric, Estimate::echo(store.lookup(&dev.name, &metric, &Default::default())?)))
        }
        WorkloadKind::MemThroughput => {
            let level: MemLevel = c.typed("level")?;
            let access = MemAccess::new(c.typed_or("access", AccessDtype::Fp32)?);
            let metric = memory::throughput_metric(level);
            let rec = store.lookup(&dev.name, &metric, &memory::throughput_params(level, access))?;
            Ok(outcome(metric, Estimate::echo(rec)))
        }
        WorkloadKind::TcInstr => {
            let api: Api = c.typed("api")?;
            let instr = tc_instr(c, api)?;
            tc_metric(c, store, dev, &instr, c.get_or("analytic", false)?)
        }
        WorkloadKind::TcNSweep => {
            let a: Dtype = c.typed_or("a", Dtype::Fp16)?;
            let cd: AccType = c.typed_or("cd", AccType::Fp32)?;
            let instr = TcInstrDesc::wgmma(a, cd, c.get("N")?, c.typed_or("source", Source::SS)?, c.get_or("sparse", false)?);
            tc_metric(c, store, dev, &instr, c.get_or("analytic", false)?)
        }
        WorkloadKind::Dpx => {
            let class: DpxFnClass = c.typed_or("class", DpxFnClass::SixteenBit)?;
            let v = dpx::dpx_block_throughput(dev, class, c.get("blocks")?);
            Ok(outcome("dpx.block_throughput", Estimate::modeled(v, Unit::Ratio)))
        }
        WorkloadKind::AsyncMatmul => {
            let cfg = AsyncMatmulConfig::new(c.get("block_dim")?, c.get("blocks_per_sm")?)?;
            let mode: AsyncMode = c.typed("mode")?;
            Ok(outcome(async_pipe::THROUGHPUT, async_pipe::model_matmul_throughput(store, dev, &cfg, mode)?))
        }
        WorkloadKind::RbcSweep => {
            let w = RbcWorkload::new(c.get("cluster_size")?, c.get("block_size")?, c.get("ilp")?)?;
            let v = dsm::rbc_throughput(store, dev, &w)?;
            let anchor = store.get(dev.name.as_str(), dsm::RBC_PEAK, &params(&[("cs", &w.cluster_size.to_string())]));
            let saturated = dsm::rbc_saturation(store, dev, &w)? >= 1.0;
            Ok(outcome("dsm.rbc.throughput", Estimate::modeled(v, Unit::TBps).against(anchor.filter(|_| saturated))))
        }
        WorkloadKind::Histogram => {
            let cfg = HistogramConfig::new(c.get("cluster_size")?, c.get("block_size")?, c.get("nbins")?)?;
            Ok(outcome("dsm.histogram.relative", Estimate::modeled(dsm::histogram_throughput(dev, &cfg)?, Unit::Ratio)))
        }
        WorkloadKind::TeLinear => {
            let pt = TeLinearPoint { n: c.get("N")?, dtype: c.typed("dtype")? };
            Ok(outcome("te.linear.throughput", Estimate::modeled(te::te_linear_throughput(dev, &pt)?, Unit::Gflops)))
        }
        WorkloadKind::TeLayer => {
            let cfg = LayerConfig::for_hidden(c.get("hidden")?)?;
            let dtype: TeDtype = c.typed("dtype")?;
            let v = te::transformer_layer_latency(store, dev, &cfg, dtype)?;
            Ok(outcome("te.layer.latency", Estimate::modeled(v, Unit::Ms)))
        }
        WorkloadKind::LlmRoofline => {
            let model = LlmModelDesc::known(&c.get::<String>("model")?)?;
            let dtype: LlmDtype = c.typed("dtype")?;
            let bound = te::llm_decode_throughput(dev, &model, dtype)?;
            Ok(outcome("llm.decode_bound", Estimate::modeled(bound.total_tokens_per_s, Unit::TokensPerS)))
        }
    }
}

/// Metric id and unit a point reports when the model produces no value for it.
fn nominal(kind: WorkloadKind, c: &Ctx<'_>) -> (String, &'static str) {
    let level = || c.typed::<MemLevel>("level").ok();
    let tc = |api: Option<Api>| {
        let family = if api == Some(Api::Mma) { "tc.mma" } else { "tc.wgmma" };
        let measure = c.raw("measure").unwrap_or("throughput");
        let unit = match measure {
            "latency" => "cycles",
            "throughput" if c.typed::<Dtype>("a").is_ok_and(Dtype::is_integer) => "TOPS",
            "throughput" => "TFLOPS",
            _ => "ratio",
        };
        (format!("{family}.{measure}"), unit)
    };
    match kind {
        WorkloadKind::MemLatency => (level().map(memory::latency_metric).unwrap_or_default(), "cycles"),
        WorkloadKind::MemThroughput => match level() {
            Some(l) => (memory::throughput_metric(l), l.throughput_unit().as_str()),
            None => (String::new(), ""),
        },
        WorkloadKind::TcInstr => tc(c.typed("api").ok()),
        WorkloadKind::TcNSweep => tc(Some(Api::Wgmma)),
        WorkloadKind::Dpx => ("dpx.block_throughput".into(), "ratio"),
        WorkloadKind::AsyncMatmul => (async_pipe::THROUGHPUT.into(), "GFLOPS"),
        WorkloadKind::RbcSweep => ("dsm.rbc.throughput".into(), "TBps"),
        WorkloadKind::Histogram => ("dsm.histogram.relative".into(), "ratio"),
        WorkloadKind::TeLinear => ("te.linear.throughput".into(), "GFLOPS"),
        WorkloadKind::TeLayer => ("te.layer.latency".into(), "ms"),
        WorkloadKind::LlmRoofline => ("llm.decode_bound".into(), "tokens_per_s"),
    }
}

fn run_point(kind: WorkloadKind, point: &Point, catalog: &Catalog, store: &CalibStore) -> Result<ReportRow> {
    let device = catalog.get(&point["device"])?;
    let mut shown = point.clone();
    shown.remove("device");
    let ctx = Ctx { point };
    let row = |metric: String, status: Status, e: Option<Estimate>| ReportRow::new(&device.name, kind, shown.clone(), metric, status, e);
    let empty = |status: Status| {
        let (metric, unit) = nominal(kind, &ctx);
        row(metric, status, None).with_unit(unit)
    };
    match evaluate(kind, &ctx, store, device) {
        Ok(o) => Ok(row(o.metric, Status::Ok, Some(o.estimate))),
        Err(e) if e.is_absent() => Ok(empty(Status::Uncalibrated)),
        Err(e) if e.is_unsupported() => Ok(empty(Status::Unsupported)),
        Err(Error::OutOfMemory { .. }) => Ok(empty(Status::Oom)),
        Err(e) => Err(e),
    }
}

/// Evaluate every sweep point; rows come back in sweep order whatever order points finish in.
pub fn run_workload(spec: &WorkloadSpec, catalog: &Catalog, store: &CalibStore) -> Result<PredictionReport> {
    let points = spec.points()?;
    let rows = points.par_iter().map(|p| run_point(spec.kind, p, catalog, store)).collect::<Result<Vec<_>>>()?;
    Ok(PredictionReport { rows })
}
