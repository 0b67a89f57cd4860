//! Acceptance checks of the models and calibration data against declared tolerances.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::async_pipe::{self, AsyncMatmulConfig, AsyncMode, BLOCKS_PER_SM, BLOCK_DIMS, PERF_GAIN};
use crate::calib::{params, CalibStore, Params};
use crate::device::{Architecture, Catalog, DeviceSpec, PeakBasis};
use crate::dpx::{self, DpxFnClass};
use crate::dsm::{self, HistogramConfig};
use crate::dtype::{AccType, Dtype};
use crate::error::{Error, Result};
use crate::memory::{self, MemLevel};
use crate::report::Format;
use crate::te::{self, LayerConfig, LlmDtype, LlmModelDesc, TeDtype, LAYER_TABLE};
use crate::tensorcore::{self, Api, Init, LoweringResult, Shape, Source, TcInstrDesc, WGMMA_THROUGHPUT};
use crate::workload::{run_workload, WorkloadKind, WorkloadSpec};

/// `target ± abs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub target: f64,
    pub abs: f64,
}

/// Closed interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerDevice {
    pub targets: BTreeMap<String, f64>,
    pub rel: f64,
}

/// Every field is required; a missing entry is a configuration error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance for lookup-backed values.
    pub echo: f64,
    pub mem_l2_over_l1_latency: Band,
    pub mem_global_over_l2_latency: Band,
    pub mem_l2_over_global_bw: PerDevice,
    pub global_efficiency: Range,
    pub h800_mma_efficiency: Band,
    pub a100_dense_mma_min_efficiency: f64,
    pub rtx4090_sparse_speedup: Range,
    pub h800_sparse_speedup_mean: Band,
    pub wgmma_dense_min_efficiency: f64,
    pub wgmma_nsweep_rel: f64,
    pub energy_h800_over_a100: Band,
    pub energy_h800_over_rtx4090: Band,
    pub async_cell_rel: f64,
    pub async_gain_abs: f64,
    pub dsm_latency_saving: Range,
    pub te_fp8_linear_ratio: Range,
    pub te_fp16_over_fp32: Band,
}

impl Tolerances {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: Tolerances = serde_json::from_str(text).map_err(|e| Error::Config(format!("tolerances: {e}")))?;
        t.check()?;
        Ok(t)
    }

    fn check(&self) -> Result<()> {
        let nonneg = [
            self.echo,
            self.mem_l2_over_l1_latency.abs,
            self.mem_global_over_l2_latency.abs,
            self.mem_l2_over_global_bw.rel,
            self.h800_mma_efficiency.abs,
            self.h800_sparse_speedup_mean.abs,
            self.wgmma_nsweep_rel,
            self.energy_h800_over_a100.abs,
            self.energy_h800_over_rtx4090.abs,
            self.async_cell_rel,
            self.async_gain_abs,
            self.te_fp16_over_fp32.abs,
        ];
        if nonneg.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config("tolerances must be finite and non-negative".into()));
        }
        for r in [self.global_efficiency, self.rtx4090_sparse_speedup, self.dsm_latency_saving, self.te_fp8_linear_ratio] {
            if r.min.partial_cmp(&r.max).is_none_or(std::cmp::Ordering::is_gt) {
                return Err(Error::Config(format!("empty range [{}, {}]", r.min, r.max)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    /// The check closest to (or furthest past) its limit.
    pub worst: String,
    pub tolerance: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{verdict} [{:>2}] {}: worst {} (tolerance {})", self.id, self.name, self.worst, self.tolerance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationResult {
    pub criteria: Vec<CriterionResult>,
    pub pass: bool,
}

impl ValidationResult {
    fn new(criteria: Vec<CriterionResult>) -> Self {
        let pass = criteria.iter().all(|c| c.pass);
        ValidationResult { criteria, pass }
    }

    pub fn get(&self, id: u8) -> Option<&CriterionResult> {
        self.criteria.iter().find(|c| c.id == id)
    }
}

/// Accumulates individual checks; margin is the distance to the limit, negative on failure.
#[derive(Default)]
struct Findings {
    items: Vec<(String, bool, f64)>,
}

impl Findings {
    fn push(&mut self, label: impl Into<String>, ok: bool, margin: f64) {
        self.items.push((label.into(), ok, margin));
    }

    fn band(&mut self, label: &str, v: f64, b: Band) {
        let margin = b.abs - (v - b.target).abs();
        self.push(format!("{label} = {v:.4}"), margin >= -EPS, margin);
    }

    fn range(&mut self, label: &str, v: f64, r: Range) {
        let margin = (v - r.min).min(r.max - v);
        self.push(format!("{label} = {v:.4}"), margin >= -EPS, margin);
    }

    fn at_least(&mut self, label: &str, v: f64, min: f64) {
        self.push(format!("{label} = {v:.4}"), v >= min - EPS, v - min);
    }

    fn rel(&mut self, label: &str, v: f64, expected: f64, tol: f64) {
        let err = (v - expected).abs() / expected.abs();
        self.push(format!("{label} = {v} vs {expected} ({:.2}%)", err * 100.0), err <= tol + EPS, tol - err);
    }

    fn truth(&mut self, label: impl Into<String>, ok: bool) {
        self.push(label, ok, if ok { f64::INFINITY } else { -1.0 });
    }

    fn finish(self, id: u8, name: &'static str, tolerance: String) -> CriterionResult {
        let pass = self.items.iter().all(|(_, ok, _)| *ok);
        let worst = self
            .items
            .iter()
            .min_by(|a, b| (a.1, a.2).partial_cmp(&(b.1, b.2)).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(l, _, _)| l.clone())
            .unwrap_or_else(|| "no checks".into());
        CriterionResult { id, name, pass: pass && !self.items.is_empty(), worst, tolerance }
    }
}

/// Slack for floating-point rounding in derived quantities.
const EPS: f64 = 1e-9;

const NAMES: [&str; 15] = [
    "memory ratios",
    "global memory efficiency",
    "mma efficiency",
    "mma sparse speedups",
    "dense wgmma",
    "sparse wgmma",
    "power throttling",
    "energy efficiency",
    "DPX wave quantization",
    "async pipeline",
    "distributed shared memory",
    "transformer engine",
    "LLM roofline",
    "SASS lowering",
    "determinism",
];

struct Ctx<'a> {
    catalog: &'a Catalog,
    store: &'a CalibStore,
    tol: &'a Tolerances,
}

impl Ctx<'_> {
    fn dev(&self, name: &str) -> Result<&DeviceSpec> {
        self.catalog.get(name)
    }
}

fn criterion_1(c: &Ctx<'_>, f: &mut Findings) -> Result<String> {
    let r = memory::latency_ratios(c.store, c.catalog.devices())?;
    f.band("avg L2/L1 latency", r.avg_l2_over_l1, c.tol.mem_l2_over_l1_latency);
    f.band("avg Global/L2 latency", r.avg_global_over_l2, c.tol.mem_global_over_l2_latency);
    let t = &c.tol.mem_l2_over_global_bw;
    for (dev, target) in &t.targets {
        let v = memory::l2_over_global_bw(c.store, c.dev(dev)?)?;
        f.rel(&format!("{dev} L2/Global bandwidth"), v, *target, t.rel);
    }
    Ok(format!(
        "{} ± {}, {} ± {}, bandwidth ± {}%",
        c.tol.mem_l2_over_l1_latency.target,
        c.tol.mem_l2_over_l1_latency.abs,
        c.tol.mem_global_over_l2_latency.target,
        c.tol.mem_global_over_l2_latency.abs,
        t.rel * 100.0
    ))
}

fn criterion_2(c: &Ctx<'_>, f: &mut Findings) -> Result<String> {
    for d in c.catalog.devices() {
        // Efficiencies are quoted to whole percent.
        let v = (memory::global_efficiency(c.store, d)? * 100.0).round() / 100.0;
        f.range(&format!("{} global efficiency", d.name), v, c.tol.global_efficiency);
    }
    Ok(format!("[{}, {}] at whole-percent precision", c.tol.global_efficiency.min, c.tol.global_efficiency.max))
}

fn criterion_3(c: &Ctx<'_>, f: &mut Findings) -> Result<String> {
    let h800 = c.dev("H800")?;
    let rows = tensorcore::mma_rows(c.store, &h800.name)?;
    let mut effs = Vec::new();
    for r in &rows {
        effs.push(tensorcore::efficiency(c.store, h800, r, Init::Zero)?);
    }
    if effs.is_empty() {
        return Err(Error::absent(&h800.name, tensorcore::MMA_THROUGHPUT, &Params::new()));
    }
    let mean = effs.iter().sum::<f64>() / effs.len() as f64;
    f.band("H800 mean mma efficiency", mean, c.tol.h800_mma_efficiency);
    let a100 = c.dev("A100")?;
    for r in tensorcore::mma_rows(c.store, &a100.name)?.iter().filter(|r| !r.sparse) {
        let e = tensorcore::efficiency(c.store, a100, r, Init::Zero)?;
        f.at_least(&format!("A100 {r} efficiency"), e, c.tol.a100_dense_mma_min_efficiency);
    }
    Ok(format!(
        "H800 {} ± {}, A100 dense >= {}",
        c.tol.h800_mma_efficiency.target, c.tol.h800_mma_efficiency.abs, c.tol.a100_dense_mma_min_efficiency
    ))
}

fn dense_mma_speedups(c: &Ctx<'_>, device: &DeviceSpec) -> Result<Vec<(TcInstrDesc, f64)>> {
    let mut out = Vec::new();
    for r in tensorcore::mma_rows(c.store, &device.name)?.into_iter().filter(|r| !r.sparse) {
        out.push((r, tensorcore::sparse_speedup(c.store, device, &r)?));
    }
    Ok(out)
}

fn criterion_4(c: &Ctx<'_>, f: &mut Findings) -> Result<String> {
    for (r, s) in dense_mma_speedups(c, c.dev("RTX4090")?)? {
        f.range(&format!("RTX4090 {r} sparse speedup"), s, c.tol.rtx4090_sparse_speedup);
    }
    let h800 = dense_mma_speedups(c, c.dev("H800")?)?;
    let mean = h800.iter().map(|(_, s)| s).sum::<f64>() / h800.len().max(1) as f64;
    f.band("H800 mean sparse speedup", mean, c.tol.h800_sparse_speedup_mean);
    let r = c.tol.rtx4090_sparse_speedup;
    let b = c.tol.h800_sparse_speedup_mean;
    Ok(format!("RTX4090 [{}, {}], H800 {} ± {}", r.min, r.max, b.target, b.abs))
}

fn wgmma_records<'a>(c: &'a Ctx<'_>, device: &'a str, provenance: &'a str) -> impl Iterator<Item = &'a crate::calib::CalibRecord> + 'a {
    c.store.select(device, WGMMA_THROUGHPUT).filter(move |r| r.provenance == provenance)
}

const NSWEEP_N: [u32; 6] = [256, 128, 64, 32, 16, 8];

fn criterion_5(c: &Ctx<'_>, f: &mut Findings) -> Result<String> {
    let h800 = c.dev("H800")?;
    for r in wgmma_records(c, &h800.name, "wgmma_dense").filter(|r| r.params.get("init").is_some_and(|i| i == "Zero")) {
        let instr = TcInstrDesc::from_wgmma_params(&r.params)?;
        let peak = h800.peak_for(PeakBasis::Wgmma, instr.a_type, false)?;
        f.at_least(&format!("{instr} efficiency"), r.value / peak, c.tol.wgmma_dense_min_efficiency);
    }
    for source in [Source::SS, Source::RS] {
        for n in [64, 128, 256] {
            let measured = c.store.value(&h800.name, tensorcore::WGMMA_LATENCY, &nsweep_key(n, source, false))?;
            f.rel(&format!("N/2 latency {source} N={n}"), tensorcore::wgmma_dense_latency(n), measured, 0.0);
        }
        for n in NSWEEP_N {
            let instr = TcInstrDesc::wgmma(Dtype::Fp16, AccType::Fp32, n, source, false);
            let lat = c.store.value(&h800.name, tensorcore::WGMMA_LATENCY, &nsweep_key(n, source, false))?;
            let pred = tensorcore::predict_latency(c.store, h800, &instr)?.value;
            f.rel(&format!("N-sweep {source} N={n} latency"), pred, lat, c.tol.wgmma_nsweep_rel);
            for init in [Init::Zero, Init::Rand] {
                let mut key = nsweep_key(n, source, false);
                key.insert("init".into(), init.to_string());
                let tp = c.store.value(&h800.name, WGMMA_THROUGHPUT, &key)?;
                let pred = tensorcore::predict_throughput(c.store, h800, &instr, init)?.value;
                f.rel(&format!("N-sweep {source} {init} N={n} throughput"), pred, tp, c.tol.wgmma_nsweep_rel);
            }
        }
    }
    Ok(format!(
        "rows >= {} of peak, N/2 exact, N sweep ± {}%",
        c.tol.wgmma_dense_min_efficiency,
        c.tol.wgmma_nsweep_rel * 100.0
    ))
}

fn nsweep_key(n: u32, source: Source, sparse: bool) -> Params {
    params(&[("N", &n.to_string()), ("source", &source.to_string()), ("sparse", if sparse { "true" } else { "false" })])
}

/// Sparse warp-group latency at N=256 by operand source.
pub const SPARSE_WGMMA_LATENCY: [(Source, f64); 2] = [(Source::SS, 144.0), (Source::RS, 128.0)];

fn criterion_6(c: &Ctx<'_>, f: &mut Findings) -> Result<String> {
    let h800 = c.dev("H800")?;
    let rows: Vec<TcInstrDesc> = wgmma_records(c, &h800.name, "wgmma_sparse")
        .filter(|r| r.params.get("source").is_some_and(|s| s == "SS") && r.params.get("init").is_some_and(|i| i == "Zero"))
        .map(|r| TcInstrDesc::from_wgmma_params(&r.params))
        .collect::<Result<_>>()?;
    if rows.is_empty() {
        return Err(Error::absent(&h800.name, WGMMA_THROUGHPUT, &params(&[("sparse", "true")])));
    }
    for ss in rows {
        let rs = TcInstrDesc { source: Source::RS, ..ss };
        for (source, expected) in SPARSE_WGMMA_LATENCY {
            let instr = TcInstrDesc { source, ..ss };
            f.rel(&format!("{instr} latency"), tensorcore::predict_latency(c.store, h800, &instr)?.value, expected, c.tol.echo);
        }
        for init in [Init::Zero, Init::Rand] {
            let a = tensorcore::predict_throughput(c.store, h800, &ss, init)?.value;
            let b = tensorcore::predict_throughput(c.store, h800, &rs, init)?.value;
            f.push(format!("{ss} {init}: RS {b} vs SS {a}"), b > a, b / a - 1.0);
        }
    }
    Ok(format!("latency echo ± {}, RS > SS", c.tol.echo))
}

fn criterion_7(c: &Ctx<'_>, f: &mut Findings) -> Result<String> {
    let mut pairs = 0;
    for d in c.catalog.devices() {
        for z in c.store.select(&d.name, WGMMA_THROUGHPUT).filter(|r| r.params.get("init").is_some_and(|i| i == "Zero")) {
            let mut key = z.params.clone();
            key.insert("init".into(), "Rand".into());
            if let Some(r) = c.store.get(&d.name, WGMMA_THROUGHPUT, &key) {
                pairs += 1;
                f.push(
                    format!("{} {{{}}}: Rand {} vs Zero {}", d.name, crate::calib::format_params(&z.params), r.value, z.value),
                    r.value <= z.value,
                    z.value / r.value - 1.0,
                );
            }
        }
    }
    f.truth(format!("{pairs} Zero/Rand pairs found"), pairs > 0);
    Ok("Rand <= Zero".into())
}

const ENERGY_ROWS: [(Dtype, AccType, Shape); 4] = [
    (Dtype::Fp16, AccType::Fp16, Shape::new(16, 8, 16)),
    (Dtype::Fp16, AccType::Fp32, Shape::new(16, 8, 16)),
    (Dtype::Tf32, AccType::Fp32, Shape::new(16, 8, 8)),
    (Dtype::Int8, AccType::Int32, Shape::new(16, 8, 32)),
];

fn dense_energy_mean(c: &Ctx<'_>, device: &DeviceSpec) -> Result<f64> {
    let mut sum = 0.0;
    for (a, cd, shape) in ENERGY_ROWS {
        sum += tensorcore::energy_metrics(c.store, device, &TcInstrDesc::mma(a, cd, shape, false))?.tflops_per_w;
    }
    Ok(sum / ENERGY_ROWS.len() as f64)
}

fn criterion_8(c: &Ctx<'_>, f: &mut Findings) -> Result<String> {
    let h800 = dense_energy_mean(c, c.dev("H800")?)?;
    f.band("H800/A100 efficiency", h800 / dense_energy_mean(c, c.dev("A100")?)?, c.tol.energy_h800_over_a100);
    f.band("H800/RTX4090 efficiency", h800 / dense_energy_mean(c, c.dev("RTX4090")?)?, c.tol.energy_h800_over_rtx4090);
    for d in c.catalog.devices() {
        for (a, cd, shape) in ENERGY_ROWS {
            for sparse in [false, true] {
                let dense = TcInstrDesc::mma(a, cd, shape, false);
                let instr = if sparse { dense.to_sparse() } else { dense };
                let m = tensorcore::energy_metrics(c.store, d, &instr)?;
                let key = params(&[("a", a.calib_key()), ("cd", cd.as_str()), ("sparse", if sparse { "true" } else { "false" })]);
                let power = c.store.value(&d.name, tensorcore::ENERGY_POWER, &key)?;
                let eff = c.store.value(&d.name, tensorcore::ENERGY_EFFICIENCY, &key)?;
                f.rel(&format!("{} {instr} power", d.name), m.power_w, power, c.tol.echo);
                f.rel(&format!("{} {instr} efficiency", d.name), m.tflops_per_w, eff, c.tol.echo);
            }
        }
    }
    let (a, r) = (c.tol.energy_h800_over_a100, c.tol.energy_h800_over_rtx4090);
    Ok(format!("{} ± {}, {} ± {}, cells echo ± {}", a.target, a.abs, r.target, r.abs, c.tol.echo))
}

/// Throughput by simulating waves one block slot at a time.
pub fn wave_oracle(sms: u32, blocks: u64) -> f64 {
    if blocks == 0 {
        return 0.0;
    }
    let mut left = blocks;
    let mut waves = 0u64;
    while left > 0 {
        left -= left.min(u64::from(sms));
        waves += 1;
    }
    blocks as f64 / (waves * u64::from(sms)) as f64
}

/// Sixteen-bit DPX speedup of Hopper over the previous generation.
pub const DPX_SIXTEEN_BIT_SPEEDUP: f64 = 13.0;

fn criterion_9(c: &Ctx<'_>, f: &mut Findings) -> Result<String> {
    for d in c.catalog.devices() {
        let s = d.sm_count;
        let s64 = u64::from(s);
        let t = |b: u64| dpx::wave_throughput(s, b);
        let mut under = true;
        for b in 0..=s64 {
            under &= (t(b) - b as f64 / f64::from(s)).abs() <= EPS;
        }
        f.truth(format!("{} T(b) = b/S for b <= S", d.name), under);
        for k in 1..=3u64 {
            f.truth(format!("{} T({k}S) = 1", d.name), t(k * s64) == 1.0);
            f.truth(format!("{} T({k}S+1) < T({k}S)", d.name), t(k * s64 + 1) < t(k * s64));
        }
        let worst = (0..=4 * s64).map(|b| (t(b) - wave_oracle(s, b)).abs()).fold(0.0, f64::max);
        f.push(format!("{} closed form vs wave oracle, max diff {worst:e}", d.name), worst <= EPS, EPS - worst);
    }
    let h800 = c.dev("H800")?;
    let a100 = c.dev("A100")?;
    let v = dpx::dpx_speedup(c.store, h800, a100, DpxFnClass::SixteenBit)?;
    f.rel("H800/A100 16-bit DPX speedup", v, DPX_SIXTEEN_BIT_SPEEDUP, c.tol.echo);
    Ok("exact wave arithmetic, anchor echo".into())
}

fn criterion_10(c: &Ctx<'_>, f: &mut Findings) -> Result<String> {
    for name in ["H800", "A100"] {
        let d = c.dev(name)?;
        let mut gains = Vec::new();
        for bd in BLOCK_DIMS {
            for bps in BLOCKS_PER_SM {
                let cfg = AsyncMatmulConfig::new(bd, bps)?;
                for mode in [AsyncMode::AsyncPipe, AsyncMode::SyncShare] {
                    let e = async_pipe::model_matmul_throughput(c.store, d, &cfg, mode)?;
                    let measured = e.calibrated.ok_or_else(|| Error::absent(name, async_pipe::THROUGHPUT, &Params::new()))?;
                    f.rel(&format!("{name} {bd}x{bd} {bps} blocks/SM {mode}"), e.value, measured, c.tol.async_cell_rel);
                }
            }
            let model = async_pipe::pipeline_improvement(c.store, d, bd)?;
            let target = c.store.value(name, PERF_GAIN, &params(&[("block", &bd.to_string())]))?;
            let margin = c.tol.async_gain_abs - (model - target).abs();
            f.push(format!("{name} {bd}x{bd} improvement {model:.2}% vs {target}%"), margin >= -EPS, margin);
            gains.push(model);
        }
        let monotone = gains.windows(2).all(|w| w[1] <= w[0] + EPS);
        f.truth(format!("{name} improvement nonincreasing in block size {gains:.2?}"), monotone);
    }
    Ok(format!("cells ± {}%, improvement ± {} points", c.tol.async_cell_rel * 100.0, c.tol.async_gain_abs))
}

/// SM-to-SM latency in cycles and ring-copy peaks by cluster size, in TB/s.
pub const SM2SM_LATENCY_CYCLES: f64 = 180.0;
pub const RBC_PEAKS: [(u32, f64); 2] = [(2, 3.27), (4, 2.65)];

/// Histogram cluster-size optimum by block size at the reference bin count.
pub const HISTOGRAM_ARGMAX: [(u32, u32); 2] = [(128, 4), (512, 2)];
pub const HISTOGRAM_ARGMAX_NBINS: u64 = 1024;
/// Block size at which a single-block cluster loses occupancy going from 1024 to 2048 bins.
pub const HISTOGRAM_DROP_BLOCK: u32 = 128;

fn criterion_11(c: &Ctx<'_>, f: &mut Findings) -> Result<String> {
    let h800 = c.dev("H800")?;
    let lat = dsm::sm2sm_latency(c.store, h800)?;
    f.rel("SM-to-SM latency", lat, SM2SM_LATENCY_CYCLES, c.tol.echo);
    let l2 = memory::level_latency(c.store, h800, MemLevel::L2)?;
    f.range("saving over L2", 1.0 - lat / l2, c.tol.dsm_latency_saving);
    for (cs, peak) in RBC_PEAKS {
        let rec = c.store.value(&h800.name, dsm::RBC_PEAK, &params(&[("cs", &cs.to_string())]))?;
        f.rel(&format!("stored ring peak CS={cs}"), rec, peak, c.tol.echo);
        f.rel(&format!("modeled ring peak CS={cs}"), dsm::rbc_peak(c.store, h800, cs)?, peak, c.tol.echo.max(EPS));
    }
    let peaks: Vec<f64> = [2, 4, 8, 16].iter().map(|&cs| dsm::rbc_peak(c.store, h800, cs)).collect::<Result<_>>()?;
    f.truth(format!("ring peak strictly decreasing {peaks:.3?}"), peaks.windows(2).all(|w| w[1] < w[0]));
    for (bs, want) in HISTOGRAM_ARGMAX {
        let got = dsm::best_cluster_size(h800, bs, HISTOGRAM_ARGMAX_NBINS, &dsm::REFERENCE_CLUSTER_SIZES)?;
        f.truth(format!("histogram best CS at block {bs}: {got} (want {want})"), got == want);
    }
    let at = |nbins| dsm::histogram_throughput(h800, &HistogramConfig::new(1, HISTOGRAM_DROP_BLOCK, nbins)?);
    let (before, after) = (at(1024)?, at(2048)?);
    f.truth(format!("CS=1 histogram {before:.3} at 1024 bins -> {after:.3} at 2048"), after < before);
    let r = c.tol.dsm_latency_saving;
    Ok(format!("echo ± {}, saving [{}, {}]", c.tol.echo, r.min, r.max))
}

const TE_DEVICES: [&str; 2] = ["H800", "RTX4090"];
pub const TE_LINEAR_N: [u64; 7] = [256, 512, 1024, 2048, 4096, 8192, 16384];

fn criterion_12(c: &Ctx<'_>, f: &mut Findings) -> Result<String> {
    for name in TE_DEVICES {
        let d = c.dev(name)?;
        f.range(&format!("{name} FP8/FP16 linear at N=16384"), te::fp8_linear_ratio(d, 16384)?, c.tol.te_fp8_linear_ratio);
        let ratios: Vec<f64> = TE_LINEAR_N.iter().map(|&n| te::fp8_linear_ratio(d, n)).collect::<Result<_>>()?;
        let first_win = TE_LINEAR_N.iter().zip(&ratios).find(|(_, r)| **r >= 1.0).map(|(n, _)| *n);
        let crosses = ratios[0] < 1.0 && first_win.is_some_and(|n| n <= 8192);
        f.truth(format!("{name} FP8/FP16 crosses 1 by N=8192 {ratios:.3?}"), crosses);
        for (hidden, _, _) in LAYER_TABLE {
            let cfg = LayerConfig::for_hidden(hidden)?;
            let fp8 = te::transformer_layer_latency(c.store, d, &cfg, TeDtype::Fp8)?;
            let fp16 = te::transformer_layer_latency(c.store, d, &cfg, TeDtype::Fp16)?;
            f.truth(
                format!("{name} hidden {hidden}: FP8 {fp8:.3} ms vs FP16 {fp16:.3} ms"),
                (fp8 < fp16) == (hidden > 4096),
            );
        }
    }
    let h800 = c.dev("H800")?;
    let cfg = LayerConfig::for_hidden(8192)?;
    let ratio = te::transformer_layer_latency(c.store, h800, &cfg, TeDtype::Fp32)?
        / te::transformer_layer_latency(c.store, h800, &cfg, TeDtype::Fp16)?;
    f.band("H800 FP32/FP16 layer latency at hidden 8192", ratio, c.tol.te_fp16_over_fp32);
    let (r, b) = (c.tol.te_fp8_linear_ratio, c.tol.te_fp16_over_fp32);
    Ok(format!("linear [{}, {}], FP32/FP16 {} ± {}", r.min, r.max, b.target, b.abs))
}

/// Cells reported out of memory, by device, model and type.
pub const LLM_OOM_CELLS: [(&str, &str, LlmDtype); 2] =
    [("RTX4090", "llama-2-7B", LlmDtype::Fp32), ("A100", "llama-2-13B", LlmDtype::Fp32)];

fn criterion_13(c: &Ctx<'_>, f: &mut Findings) -> Result<String> {
    let mut cells = 0;
    for d in c.catalog.devices() {
        for r in c.store.select(&d.name, te::LLM_THROUGHPUT) {
            let model = LlmModelDesc::known(r.params.get("model").map(String::as_str).unwrap_or_default())?;
            let dtype: LlmDtype = r.params.get("dtype").map(String::as_str).unwrap_or_default().parse()?;
            let label = format!("{} {} {dtype}", d.name, model.name);
            match te::llm_decode_throughput(d, &model, dtype) {
                Ok(b) => f.push(
                    format!("{label}: {} <= {:.1}", r.value, b.total_tokens_per_s),
                    b.admits(r.value),
                    b.total_tokens_per_s / r.value - 1.0,
                ),
                Err(e) => f.truth(format!("{label}: measured {} but model says {e}", r.value), false),
            }
            cells += 1;
        }
    }
    f.truth(format!("{cells} measured cells"), cells > 0);
    for (dev, model, dtype) in LLM_OOM_CELLS {
        let res = te::llm_decode_throughput(c.dev(dev)?, &LlmModelDesc::known(model)?, dtype);
        f.truth(format!("{dev} {model} {dtype} predicted OOM"), matches!(res, Err(Error::OutOfMemory { .. })));
    }
    Ok("measured <= bound, OOM cells exact".into())
}

/// Hopper lowering of each instruction row: (A/B, C/D, mma SASS, wgmma SASS). `None` is no tensor-core form.
pub const HOPPER_SASS: [(Dtype, AccType, Option<&str>, &[&str]); 9] = [
    (Dtype::Fp16, AccType::Fp16, Some("HMMA.16816.F16"), &["HGMMA.64x256x16.F16"]),
    (Dtype::Fp16, AccType::Fp32, Some("HMMA.16816.F32"), &["HGMMA.64x256x16.F32"]),
    (Dtype::Tf32, AccType::Fp32, Some("HMMA.1688.F32.TF32"), &["HGMMA.64x256x8.F32.TF32"]),
    (Dtype::Fp8E5m2, AccType::Fp16, None, &["QGMMA.64x256x32.F16.E5M2.E5M2"]),
    (Dtype::Fp8E4m3, AccType::Fp16, None, &["QGMMA.64x256x32.F16.E4M3.E4M3"]),
    (Dtype::Fp8E4m3, AccType::Fp32, None, &["QGMMA.64x256x32.F32.E4M3.E4M3"]),
    (Dtype::Fp8E5m2, AccType::Fp32, None, &["QGMMA.64x256x32.F32.E5M2.E5M2"]),
    (Dtype::Int8, AccType::Int32, Some("IMMA.16832.S8.S8"), &["IGMMA.64x256x32.S8.S8"]),
    (Dtype::Binary, AccType::Int32, Some("BMMA.168256.AND.POPC"), &["BGMMA.64x256x256.AND.POPC"]),
];

/// Largest mma shape of each input type.
fn widest_mma(a: Dtype) -> Shape {
    match a {
        Dtype::Tf32 => Shape::new(16, 8, 8),
        Dtype::Int8 | Dtype::Fp8E4m3 | Dtype::Fp8E5m2 => Shape::new(16, 8, 32),
        Dtype::Int4 => Shape::new(16, 8, 64),
        Dtype::Binary => Shape::new(16, 8, 256),
        Dtype::Fp16 | Dtype::Bf16 => Shape::new(16, 8, 16),
    }
}

fn criterion_14(f: &mut Findings) -> Result<String> {
    for (a, cd, mma, wgmma) in HOPPER_SASS {
        let m = TcInstrDesc::mma(a, cd, widest_mma(a), false);
        let got = tensorcore::sass_lower(&m, Architecture::Hopper);
        let want = match mma {
            Some(s) => LoweringResult::TensorCoreSass(s.to_string()),
            None => LoweringResult::Unsupported,
        };
        f.truth(format!("mma {a}/{cd} -> {got:?}"), got == want);
        let w = TcInstrDesc::wgmma(a, cd, 256, Source::SS, false);
        let got = tensorcore::sass_lower(&w, Architecture::Hopper);
        f.truth(format!("wgmma {a}/{cd} -> {got:?}"), got.name().is_some_and(|n| wgmma.contains(&n)));
        for arch in [Architecture::Ampere, Architecture::Ada] {
            let got = tensorcore::sass_lower(&w, arch);
            f.truth(format!("wgmma {a}/{cd} on {arch} -> {got:?}"), got == LoweringResult::Unsupported);
        }
    }
    let int4 = TcInstrDesc::mma(Dtype::Int4, AccType::Int32, widest_mma(Dtype::Int4), false);
    let got = tensorcore::sass_lower(&int4, Architecture::Hopper);
    f.truth(format!("mma INT4 -> {got:?}"), got == LoweringResult::CudaCoreFallback("IMAD.MOV.U32".into()));
    let int4w = TcInstrDesc { api: Api::Wgmma, source: Source::SS, shape: Shape::new(64, 256, 64), ..int4 };
    let got = tensorcore::sass_lower(&int4w, Architecture::Hopper);
    f.truth(format!("wgmma INT4 -> {got:?}"), got == LoweringResult::Unsupported);
    Ok("exact".into())
}

type Check = fn(&Ctx<'_>, &mut Findings) -> Result<String>;

fn model_checks() -> [Check; 14] {
    [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
        criterion_11,
        criterion_12,
        criterion_13,
        |_, f| criterion_14(f),
    ]
}

fn run_check(id: u8, check: Check, ctx: &Ctx<'_>) -> CriterionResult {
    let mut f = Findings::default();
    match check(ctx, &mut f) {
        Ok(tol) => f.finish(id, NAMES[usize::from(id) - 1], tol),
        Err(e) => CriterionResult {
            id,
            name: NAMES[usize::from(id) - 1],
            pass: false,
            worst: format!("error: {e}"),
            tolerance: "n/a".into(),
        },
    }
}

/// Criteria 1 to 14, which depend only on the models and data.
pub fn evaluate_models(catalog: &Catalog, store: &CalibStore, tol: &Tolerances) -> Vec<CriterionResult> {
    let ctx = Ctx { catalog, store, tol };
    model_checks().into_iter().enumerate().map(|(i, check)| run_check(i as u8 + 1, check, &ctx)).collect()
}

/// Workload used to check that repeated runs render identically.
fn reference_workload() -> WorkloadSpec {
    use serde_json::json;
    WorkloadSpec {
        kind: WorkloadKind::MemLatency,
        device: None,
        params: BTreeMap::new(),
        sweep: vec![
            ("device".into(), vec![json!("A100"), json!("H800"), json!("RTX4090")]),
            ("level".into(), vec![json!("L1"), json!("Shared"), json!("L2"), json!("Global")]),
        ],
    }
}

/// Scale one record and return the corrupted store.
pub fn corrupt(store: &CalibStore, device: &str, metric: &str, p: &Params, factor: f64) -> Result<CalibStore> {
    let mut out = CalibStore::new();
    let mut hit = false;
    for r in store.records() {
        let mut r = r.clone();
        if r.device == device && r.metric_id == metric && &r.params == p {
            r.value *= factor;
            hit = true;
        }
        out.insert(r)?;
    }
    if !hit {
        return Err(Error::absent(device, metric, p));
    }
    Ok(out)
}

/// Record corrupted by the fault-injection check, and the only criterion it feeds.
const FAULT_TARGET: (&str, &str, u8) = ("H800", dsm::SM2SM_LATENCY, 11);

fn criterion_15(catalog: &Catalog, store: &CalibStore, tol: &Tolerances, baseline: &[CriterionResult]) -> CriterionResult {
    let mut f = Findings::default();
    let spec = reference_workload();
    let render = || -> Result<String> { run_workload(&spec, catalog, store)?.render(Format::Csv) };
    match (render(), render()) {
        (Ok(a), Ok(b)) => f.truth(format!("repeated run renders {} identical bytes", a.len()), a == b),
        (Err(e), _) | (_, Err(e)) => f.truth(format!("reference run failed: {e}"), false),
    }
    let (dev, metric, id) = FAULT_TARGET;
    match corrupt(store, dev, metric, &Params::new(), 1.5) {
        Ok(bad) => {
            let faulty = evaluate_models(catalog, &bad, tol);
            for (b, x) in baseline.iter().zip(&faulty) {
                if b.id == id {
                    f.truth(format!("corrupted {metric} fails criterion {id}"), !x.pass);
                } else {
                    f.truth(format!("criterion {} unaffected by the fault", b.id), b.pass == x.pass);
                }
            }
        }
        Err(e) => f.truth(format!("fault injection: {e}"), false),
    }
    let empty = validate(catalog, &CalibStore::new(), tol);
    f.truth("empty store is a configuration error", matches!(empty, Err(Error::Config(_))));
    f.finish(15, NAMES[14], "byte-identical, fault isolated".into())
}

/// Evaluate every criterion. An empty calibration store is a configuration error.
pub fn validate(catalog: &Catalog, store: &CalibStore, tol: &Tolerances) -> Result<ValidationResult> {
    if store.is_empty() {
        return Err(Error::Config("calibration store is empty".into()));
    }
    let mut criteria = evaluate_models(catalog, store, tol);
    let determinism = criterion_15(catalog, store, tol, &criteria);
    criteria.push(determinism);
    Ok(ValidationResult::new(criteria))
}
