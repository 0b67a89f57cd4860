//! Tensor-core instructions: SASS lowering, op counts, latency, throughput, efficiency and energy.

use std::fmt;
use std::str::FromStr;

use crate::calib::{params, CalibStore, Params, Unit};
use crate::device::{Architecture, DeviceSpec, PeakBasis};
use crate::dtype::{AccType, Dtype};
use crate::error::{Error, Result};
use crate::estimate::Estimate;

pub const MMA_LATENCY: &str = "tc.mma.latency";
pub const MMA_THROUGHPUT: &str = "tc.mma.throughput";
pub const WGMMA_LATENCY: &str = "tc.wgmma.latency";
pub const WGMMA_THROUGHPUT: &str = "tc.wgmma.throughput";
pub const ENERGY_POWER: &str = "tc.energy.power";
pub const ENERGY_EFFICIENCY: &str = "tc.energy.efficiency";

/// Widest N a warp-group instruction takes; also the reference point for N scaling.
pub const WGMMA_MAX_N: u32 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Api {
    Mma,
    Wgmma,
}

impl fmt::Display for Api {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Api::Mma => "mma",
            Api::Wgmma => "wgmma",
        })
    }
}

impl FromStr for Api {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mma" => Ok(Api::Mma),
            "wgmma" => Ok(Api::Wgmma),
            _ => Err(Error::Workload(format!("unknown api `{s}`"))),
        }
    }
}

/// Where operands come from: registers for mma, shared memory or registers for A with wgmma.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    RR,
    SS,
    RS,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RR" => Ok(Source::RR),
            "SS" => Ok(Source::SS),
            "RS" => Ok(Source::RS),
            _ => Err(Error::Workload(format!("unknown operand source `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Init {
    Zero,
    Rand,
}

impl fmt::Display for Init {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" => Ok(Init::Zero),
            "rand" | "random" => Ok(Init::Rand),
            _ => Err(Error::Workload(format!("unknown init `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub m: u32,
    pub n: u32,
    pub k: u32,
}

impl Shape {
    pub const fn new(m: u32, n: u32, k: u32) -> Self {
        Shape { m, n, k }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}n{}k{}", self.m, self.n, self.k)
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Workload(format!("bad shape `{s}`, expected mXnYkZ"));
        let rest = s.trim().trim_start_matches("sp.").strip_prefix('m').ok_or_else(bad)?;
        let (m, rest) = rest.split_once('n').ok_or_else(bad)?;
        let (n, k) = rest.split_once('k').ok_or_else(bad)?;
        Ok(Shape {
            m: m.parse().map_err(|_| bad())?,
            n: n.parse().map_err(|_| bad())?,
            k: k.parse().map_err(|_| bad())?,
        })
    }
}

/// One tensor-core instruction variant. `shape.k` is the logical k of the instruction modifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TcInstrDesc {
    pub api: Api,
    pub sparse: bool,
    pub shape: Shape,
    pub a_type: Dtype,
    pub cd_type: AccType,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoweringResult {
    TensorCoreSass(String),
    CudaCoreFallback(String),
    Unsupported,
}

impl LoweringResult {
    pub fn name(&self) -> Option<&str> {
        match self {
            LoweringResult::TensorCoreSass(n) | LoweringResult::CudaCoreFallback(n) => Some(n),
            LoweringResult::Unsupported => None,
        }
    }
}

/// Dense k values an mma instruction accepts for an input type.
fn mma_dense_ks(a: Dtype) -> &'static [u32] {
    match a {
        Dtype::Fp16 | Dtype::Bf16 => &[8, 16],
        Dtype::Tf32 => &[4, 8],
        Dtype::Int8 => &[16, 32],
        Dtype::Int4 => &[32, 64],
        Dtype::Binary => &[128, 256],
        Dtype::Fp8E4m3 | Dtype::Fp8E5m2 => &[32],
    }
}

/// The k a dense wgmma takes for an input type; `None` where wgmma has no form.
pub fn wgmma_dense_k(a: Dtype) -> Option<u32> {
    match a {
        Dtype::Fp16 | Dtype::Bf16 => Some(16),
        Dtype::Tf32 => Some(8),
        Dtype::Fp8E4m3 | Dtype::Fp8E5m2 | Dtype::Int8 => Some(32),
        Dtype::Binary => Some(256),
        Dtype::Int4 => None,
    }
}

fn accumulator_allowed(a: Dtype, cd: AccType) -> bool {
    match a {
        Dtype::Fp16 | Dtype::Fp8E4m3 | Dtype::Fp8E5m2 => matches!(cd, AccType::Fp16 | AccType::Fp32),
        Dtype::Bf16 | Dtype::Tf32 => cd == AccType::Fp32,
        Dtype::Int8 | Dtype::Int4 | Dtype::Binary => cd == AccType::Int32,
    }
}

impl TcInstrDesc {
    pub fn mma(a: Dtype, cd: AccType, shape: Shape, sparse: bool) -> Self {
        TcInstrDesc { api: Api::Mma, sparse, shape, a_type: a, cd_type: cd, source: Source::RR }
    }

    /// A warp-group instruction with the natural k for `a` (doubled when sparse).
    pub fn wgmma(a: Dtype, cd: AccType, n: u32, source: Source, sparse: bool) -> Self {
        let k = wgmma_dense_k(a).unwrap_or(64) * if sparse { 2 } else { 1 };
        TcInstrDesc { api: Api::Wgmma, sparse, shape: Shape::new(64, n, k), a_type: a, cd_type: cd, source }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInstr(format!("{self}: {msg}")));
        let factor = if self.sparse { 2 } else { 1 };
        match self.api {
            Api::Mma => {
                if self.source != Source::RR {
                    return bad("mma operands come from registers (RR)".into());
                }
                if (self.shape.m, self.shape.n) != (16, 8) {
                    return bad("mma shapes are m16n8kK".into());
                }
                if !mma_dense_ks(self.a_type).iter().any(|k| k * factor == self.shape.k) {
                    return bad(format!("k={} is not valid for {} mma", self.shape.k, self.a_type));
                }
            }
            Api::Wgmma => {
                if self.source == Source::RR {
                    return bad("wgmma sources are SS or RS".into());
                }
                if self.shape.m != 64 {
                    return bad("wgmma has m=64".into());
                }
                if self.shape.n == 0 || !self.shape.n.is_multiple_of(8) || self.shape.n > WGMMA_MAX_N {
                    return bad(format!("N={} must be a multiple of 8 up to 256", self.shape.n));
                }
                if let Some(k) = wgmma_dense_k(self.a_type) {
                    if self.shape.k != k * factor {
                        return bad(format!("k must be {} for {}", k * factor, self.a_type));
                    }
                }
            }
        }
        if !accumulator_allowed(self.a_type, self.cd_type) {
            return bad(format!("{} inputs cannot accumulate into {}", self.a_type, self.cd_type));
        }
        Ok(())
    }

    /// Multiply and add operations: `2 m n k` with the logical k.
    pub fn ops(&self) -> u64 {
        2 * u64::from(self.shape.m) * u64::from(self.shape.n) * u64::from(self.shape.k)
    }

    /// Shape as printed in mma tables, where sparse rows show the compressed k.
    pub fn table_shape(&self) -> Shape {
        match (self.api, self.sparse) {
            (Api::Mma, true) => Shape { k: self.shape.k / 2, ..self.shape },
            _ => self.shape,
        }
    }

    /// The sparse counterpart of a dense instruction.
    pub fn to_sparse(&self) -> Self {
        if self.sparse {
            return *self;
        }
        TcInstrDesc { sparse: true, shape: Shape { k: self.shape.k * 2, ..self.shape }, ..*self }
    }

    pub fn with_n(&self, n: u32) -> Self {
        TcInstrDesc { shape: Shape { n, ..self.shape }, ..*self }
    }

    pub fn peak_basis(&self) -> PeakBasis {
        match self.api {
            Api::Mma => PeakBasis::Mma,
            Api::Wgmma => PeakBasis::Wgmma,
        }
    }

    pub fn throughput_unit(&self) -> Unit {
        if self.a_type.is_integer() {
            Unit::Tops
        } else {
            Unit::Tflops
        }
    }

    fn base_params(&self) -> Params {
        let mut p = params(&[
            ("a", self.a_type.calib_key()),
            ("cd", self.cd_type.as_str()),
            ("shape", &self.table_shape().to_string()),
            ("sparse", if self.sparse { "true" } else { "false" }),
        ]);
        match self.api {
            Api::Mma if self.sparse => {
                p.insert("k_is_compressed".into(), "true".into());
            }
            Api::Mma => {}
            Api::Wgmma => {
                p.insert("source".into(), self.source.to_string());
            }
        }
        p
    }

    /// Calibration key for latency records.
    pub fn latency_params(&self) -> Params {
        self.base_params()
    }

    /// Calibration key for throughput records.
    pub fn throughput_params(&self, init: Init) -> Params {
        let mut p = self.base_params();
        if self.api == Api::Wgmma {
            p.insert("init".into(), init.to_string());
        }
        p
    }

    /// Key into the N sweep, which covers only `f32.f16` warp-group instructions.
    fn nsweep_params(&self) -> Option<Params> {
        let covered = self.api == Api::Wgmma && self.a_type == Dtype::Fp16 && self.cd_type == AccType::Fp32;
        covered.then(|| {
            params(&[
                ("N", &self.shape.n.to_string()),
                ("source", &self.source.to_string()),
                ("sparse", if self.sparse { "true" } else { "false" }),
            ])
        })
    }

    /// Rebuild an mma instruction from a calibration key.
    pub fn from_mma_params(p: &Params) -> Result<Self> {
        let get = |k: &str| p.get(k).ok_or_else(|| Error::Workload(format!("mma record lacks `{k}`")));
        let sparse = get("sparse")? == "true";
        let mut shape: Shape = get("shape")?.parse()?;
        if sparse && p.get("k_is_compressed").is_some_and(|v| v == "true") {
            shape.k *= 2;
        }
        Ok(Self::mma(get("a")?.parse()?, get("cd")?.parse()?, shape, sparse))
    }

    /// Rebuild a warp-group instruction from a calibration key (full or N-sweep form).
    pub fn from_wgmma_params(p: &Params) -> Result<Self> {
        let get = |k: &str| p.get(k).ok_or_else(|| Error::Workload(format!("wgmma record lacks `{k}`")));
        let sparse = get("sparse")? == "true";
        let source: Source = get("source")?.parse()?;
        if let Some(n) = p.get("N") {
            let n = n.parse().map_err(|_| Error::Workload(format!("bad N `{n}`")))?;
            return Ok(Self::wgmma(Dtype::Fp16, AccType::Fp32, n, source, sparse));
        }
        let shape: Shape = get("shape")?.parse()?;
        Ok(TcInstrDesc { api: Api::Wgmma, sparse, shape, a_type: get("a")?.parse()?, cd_type: get("cd")?.parse()?, source })
    }
}

impl fmt::Display for TcInstrDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sp = if self.sparse { "sp." } else { "" };
        write!(f, "{} {}{} {}/{}", self.api, sp, self.shape, self.a_type, self.cd_type)?;
        if self.api == Api::Wgmma {
            write!(f, " {}", self.source)?;
        }
        Ok(())
    }
}

fn sparse_tag(opcode: &str, sparse: bool) -> String {
    if sparse {
        format!("{opcode}.SP")
    } else {
        opcode.to_string()
    }
}

fn acc_suffix(cd: AccType) -> &'static str {
    match cd {
        AccType::Fp16 => "F16",
        AccType::Fp32 => "F32",
        AccType::Int32 => "S32",
    }
}

fn fp8_suffix(a: Dtype) -> &'static str {
    if a == Dtype::Fp8E5m2 {
        "E5M2"
    } else {
        "E4M3"
    }
}

/// Static PTX-to-SASS mapping. Total: anything without a form maps to `Unsupported`.
pub fn sass_lower(instr: &TcInstrDesc, arch: Architecture) -> LoweringResult {
    use LoweringResult::*;
    if instr.validate().is_err() {
        return Unsupported;
    }
    let s = instr.shape;
    match instr.api {
        Api::Mma => {
            let code = format!("{}{}{}", s.m, s.n, s.k);
            let op = |name: &str| sparse_tag(name, instr.sparse);
            match instr.a_type {
                Dtype::Fp16 => TensorCoreSass(format!("{}.{code}.{}", op("HMMA"), acc_suffix(instr.cd_type))),
                Dtype::Bf16 => TensorCoreSass(format!("{}.{code}.F32.BF16", op("HMMA"))),
                Dtype::Tf32 => TensorCoreSass(format!("{}.{code}.F32.TF32", op("HMMA"))),
                Dtype::Int8 => TensorCoreSass(format!("{}.{code}.S8.S8", op("IMMA"))),
                Dtype::Int4 if arch == Architecture::Hopper => CudaCoreFallback("IMAD.MOV.U32".into()),
                Dtype::Int4 => TensorCoreSass(format!("{}.{code}.S4.S4", op("IMMA"))),
                Dtype::Binary => TensorCoreSass(format!("{}.{code}.AND.POPC", op("BMMA"))),
                Dtype::Fp8E4m3 | Dtype::Fp8E5m2 => Unsupported,
            }
        }
        Api::Wgmma => {
            if arch != Architecture::Hopper {
                return Unsupported;
            }
            let code = format!("{}x{}x{}", s.m, s.n, s.k);
            let op = |name: &str| sparse_tag(name, instr.sparse);
            match instr.a_type {
                Dtype::Fp16 => TensorCoreSass(format!("{}.{code}.{}", op("HGMMA"), acc_suffix(instr.cd_type))),
                Dtype::Bf16 => TensorCoreSass(format!("{}.{code}.F32.BF16", op("HGMMA"))),
                Dtype::Tf32 => TensorCoreSass(format!("{}.{code}.F32.TF32", op("HGMMA"))),
                Dtype::Fp8E4m3 | Dtype::Fp8E5m2 => {
                    let e = fp8_suffix(instr.a_type);
                    TensorCoreSass(format!("{}.{code}.{}.{e}.{e}", op("QGMMA"), acc_suffix(instr.cd_type)))
                }
                Dtype::Int8 => TensorCoreSass(format!("{}.{code}.S8.S8", op("IGMMA"))),
                Dtype::Binary => TensorCoreSass(format!("{}.{code}.AND.POPC", op("BGMMA"))),
                Dtype::Int4 => Unsupported,
            }
        }
    }
}

pub fn instr_ops(instr: &TcInstrDesc) -> u64 {
    instr.ops()
}

fn ensure_runnable(device: &DeviceSpec, instr: &TcInstrDesc) -> Result<()> {
    instr.validate()?;
    if sass_lower(instr, device.architecture) == LoweringResult::Unsupported {
        return Err(Error::UnsupportedInstr(format!("{instr} on {}", device.architecture)));
    }
    Ok(())
}

/// Latency in cycles: a stored measurement, or `N/2` for dense warp-group instructions with `N >= 64`.
pub fn predict_latency(store: &CalibStore, device: &DeviceSpec, instr: &TcInstrDesc) -> Result<Estimate> {
    ensure_runnable(device, instr)?;
    let dev = device.name.as_str();
    match instr.api {
        Api::Mma => Ok(Estimate::echo(store.lookup(dev, MMA_LATENCY, &instr.latency_params())?)),
        Api::Wgmma => {
            if let Some(r) = store.get(dev, WGMMA_LATENCY, &instr.latency_params()) {
                return Ok(Estimate::echo(r));
            }
            if let Some(r) = instr.nsweep_params().and_then(|p| store.get(dev, WGMMA_LATENCY, &p).cloned()) {
                return Ok(Estimate::echo(&r));
            }
            if !instr.sparse && instr.shape.n >= 64 {
                return Ok(Estimate::modeled(wgmma_dense_latency(instr.shape.n), Unit::Cycles));
            }
            Err(Error::absent(dev, WGMMA_LATENCY, &instr.latency_params()))
        }
    }
}

/// Dense warp-group latency once N is large enough to hide operand fetch: half a cycle per column.
pub fn wgmma_dense_latency(n: u32) -> f64 {
    f64::from(n) / 2.0
}

fn stored_throughput(store: &CalibStore, device: &DeviceSpec, instr: &TcInstrDesc, init: Init) -> Option<Estimate> {
    let dev = device.name.as_str();
    let metric = match instr.api {
        Api::Mma => MMA_THROUGHPUT,
        Api::Wgmma => WGMMA_THROUGHPUT,
    };
    if instr.api == Api::Mma && init == Init::Rand {
        return None;
    }
    if let Some(r) = store.get(dev, metric, &instr.throughput_params(init)) {
        return Some(Estimate::echo(r));
    }
    let mut p = instr.nsweep_params()?;
    p.insert("init".into(), init.to_string());
    store.get(dev, WGMMA_THROUGHPUT, &p).map(Estimate::echo)
}

/// Rand/Zero throughput ratio for an instruction row: the clock drop under a power cap.
pub fn rand_throttle(store: &CalibStore, device: &DeviceSpec, instr: &TcInstrDesc) -> Result<f64> {
    let dev = device.name.as_str();
    let rows: Vec<TcInstrDesc> = match instr.api {
        Api::Wgmma => vec![instr.with_n(WGMMA_MAX_N)],
        Api::Mma => {
            let n_k = wgmma_dense_k(instr.a_type).unwrap_or(0) * if instr.sparse { 2 } else { 1 };
            [Source::SS, Source::RS]
                .into_iter()
                .map(|src| TcInstrDesc {
                    api: Api::Wgmma,
                    source: src,
                    shape: Shape::new(64, WGMMA_MAX_N, n_k),
                    ..*instr
                })
                .collect()
        }
    };
    let mut ratios = Vec::new();
    for row in &rows {
        let zero = store.get(dev, WGMMA_THROUGHPUT, &row.throughput_params(Init::Zero));
        let rand = store.get(dev, WGMMA_THROUGHPUT, &row.throughput_params(Init::Rand));
        if let (Some(z), Some(r)) = (zero, rand) {
            ratios.push(r.value / z.value);
        }
    }
    if ratios.is_empty() {
        return Err(Error::absent(dev, WGMMA_THROUGHPUT, &rows[0].throughput_params(Init::Rand)));
    }
    Ok(ratios.iter().sum::<f64>() / ratios.len() as f64)
}

/// Fraction of the N=256 rate an instruction keeps at its N, from ops per latency cycle.
pub fn n_profile(store: &CalibStore, device: &DeviceSpec, instr: &TcInstrDesc) -> Result<f64> {
    let reference = instr.with_n(WGMMA_MAX_N);
    let lat = predict_latency(store, device, instr)?.value;
    let lat_ref = predict_latency(store, device, &reference)?.value;
    let density = instr.ops() as f64 / lat;
    let density_ref = reference.ops() as f64 / lat_ref;
    Ok((density / density_ref).min(1.0))
}

/// Warp-group throughput from the model alone:
/// `peak x saturated efficiency x N profile x throttle(init)`.
pub fn model_wgmma_throughput(store: &CalibStore, device: &DeviceSpec, instr: &TcInstrDesc, init: Init) -> Result<f64> {
    ensure_runnable(device, instr)?;
    if instr.api != Api::Wgmma {
        return Err(Error::InvalidInstr(format!("{instr}: N scaling applies to wgmma only")));
    }
    let dev = device.name.as_str();
    let reference = instr.with_n(WGMMA_MAX_N);
    let zero_ref = store.lookup(dev, WGMMA_THROUGHPUT, &reference.throughput_params(Init::Zero))?.value;
    let peak = device.peak_for(PeakBasis::Wgmma, instr.a_type, instr.sparse)?;
    let saturated = zero_ref / peak;
    let throttle = match init {
        Init::Zero => 1.0,
        Init::Rand => rand_throttle(store, device, instr)?,
    };
    Ok(peak * saturated * n_profile(store, device, instr)? * throttle)
}

/// Achieved throughput in TFLOPS or TOPS: a stored measurement when one exists, else the model.
pub fn predict_throughput(store: &CalibStore, device: &DeviceSpec, instr: &TcInstrDesc, init: Init) -> Result<Estimate> {
    ensure_runnable(device, instr)?;
    if let Some(e) = stored_throughput(store, device, instr, init) {
        return Ok(e);
    }
    let unit = instr.throughput_unit();
    match instr.api {
        Api::Wgmma => Ok(Estimate::modeled(model_wgmma_throughput(store, device, instr, init)?, unit)),
        Api::Mma => {
            let zero = store.lookup(&device.name, MMA_THROUGHPUT, &instr.throughput_params(Init::Zero))?.value;
            Ok(Estimate::modeled(zero * rand_throttle(store, device, instr)?, unit))
        }
    }
}

/// Achieved throughput over the matching peak (the sparse peak for sparse instructions).
pub fn efficiency(store: &CalibStore, device: &DeviceSpec, instr: &TcInstrDesc, init: Init) -> Result<f64> {
    let achieved = predict_throughput(store, device, instr, init)?.value;
    Ok(achieved / device.peak_for(instr.peak_basis(), instr.a_type, instr.sparse)?)
}

/// Sparse over dense throughput for the same row of a dense instruction.
pub fn sparse_speedup(store: &CalibStore, device: &DeviceSpec, dense: &TcInstrDesc) -> Result<f64> {
    let dense = TcInstrDesc { sparse: false, ..*dense };
    let d = predict_throughput(store, device, &dense, Init::Zero)?;
    let s = predict_throughput(store, device, &dense.to_sparse(), Init::Zero)?;
    Ok(s.value / d.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyMetrics {
    pub power_w: f64,
    pub tflops_per_w: f64,
}

fn energy_params(instr: &TcInstrDesc) -> Params {
    params(&[
        ("a", instr.a_type.calib_key()),
        ("cd", instr.cd_type.as_str()),
        ("sparse", if instr.sparse { "true" } else { "false" }),
    ])
}

/// Power and efficiency of the largest mma shape for a type pair.
pub fn energy_metrics(store: &CalibStore, device: &DeviceSpec, instr: &TcInstrDesc) -> Result<EnergyMetrics> {
    instr.validate()?;
    let widest = mma_dense_ks(instr.a_type).iter().max().copied().unwrap_or(0) * if instr.sparse { 2 } else { 1 };
    if instr.api != Api::Mma || instr.shape.k != widest {
        return Err(Error::InvalidInstr(format!("{instr}: energy is recorded for the largest mma shape only")));
    }
    let p = energy_params(instr);
    Ok(EnergyMetrics {
        power_w: store.value(&device.name, ENERGY_POWER, &p)?,
        tflops_per_w: store.value(&device.name, ENERGY_EFFICIENCY, &p)?,
    })
}

/// Throughput over power, to compare against the recorded efficiency.
pub fn energy_consistency(store: &CalibStore, device: &DeviceSpec, instr: &TcInstrDesc) -> Result<f64> {
    let e = energy_metrics(store, device, instr)?;
    let tp = predict_throughput(store, device, instr, Init::Zero)?.value;
    Ok(tp / e.power_w)
}

/// Every mma instruction with a stored throughput for `device`, in record order.
pub fn mma_rows(store: &CalibStore, device: &str) -> Result<Vec<TcInstrDesc>> {
    store.select(device, MMA_THROUGHPUT).map(|r| TcInstrDesc::from_mma_params(&r.params)).collect()
}
