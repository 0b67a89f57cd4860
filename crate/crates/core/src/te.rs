//! Transformer-Engine style FP8 linear layers, full transformer-layer latency, and
//! decode-only LLM inference as a memory-bandwidth roofline.

use std::fmt;
use std::str::FromStr;

use crate::calib::{CalibRecord, CalibStore, Params, Unit};
use crate::device::DeviceSpec;
use crate::dtype::Dtype;
use crate::error::{Error, Result};

pub mod fp8;

pub const LAYER_CAST_BYTES: &str = "te.params.fp8_cast_bytes";
pub const LLM_THROUGHPUT: &str = "llm.throughput";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TeDtype {
    Fp32,
    /// FP16 or BF16; both run on the 16-bit tensor-core pipe.
    Fp16,
    Fp8,
}

impl TeDtype {
    pub const ALL: [TeDtype; 3] = [TeDtype::Fp32, TeDtype::Fp16, TeDtype::Fp8];

    /// Tensor-core pipe a GEMM in this type runs on. FP32 GEMMs go through TF32.
    fn pipe(self) -> Dtype {
        match self {
            TeDtype::Fp32 => Dtype::Tf32,
            TeDtype::Fp16 => Dtype::Fp16,
            TeDtype::Fp8 => Dtype::Fp8E4m3,
        }
    }

    /// Output tile of one CTA in the GEMM kernels; FP8 kernels use a wider N tile.
    fn tile_area(self) -> f64 {
        match self {
            TeDtype::Fp8 => 128.0 * 256.0,
            _ => 128.0 * 128.0,
        }
    }
}

impl fmt::Display for TeDtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TeDtype::Fp32 => "FP32",
            TeDtype::Fp16 => "FP16",
            TeDtype::Fp8 => "FP8",
        })
    }
}

impl FromStr for TeDtype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "FP32" => Ok(TeDtype::Fp32),
            "FP16" | "BF16" => Ok(TeDtype::Fp16),
            "FP8" => Ok(TeDtype::Fp8),
            _ => Err(Error::Workload(format!("unknown TE dtype `{s}`"))),
        }
    }
}

/// Dense tensor-core peak in FLOP/s for a GEMM type.
pub fn gemm_peak_flops(device: &DeviceSpec, dtype: TeDtype) -> Result<f64> {
    if dtype == TeDtype::Fp8 && !device.features.fp8_tc {
        return Err(Error::UnsupportedDtype { device: device.name.clone(), dtype: "FP8".into() });
    }
    Ok(device.peak_tc_throughput(dtype.pipe(), false)? * 1e12)
}

/// Fraction of the peak a GEMM with an `m x n` output reaches: tiles over tiles plus one wave of SMs.
pub fn gemm_utilization(device: &DeviceSpec, dtype: TeDtype, m: f64, n: f64) -> f64 {
    let tiles = m * n / dtype.tile_area();
    tiles / (tiles + f64::from(device.sm_count))
}

fn bandwidth(device: &DeviceSpec) -> f64 {
    device.mem_bandwidth_gbs * 1e9
}

/// Seconds for an `m x n x k` GEMM on the tensor cores, excluding any casts.
pub fn gemm_seconds(device: &DeviceSpec, dtype: TeDtype, m: f64, n: f64, k: f64) -> Result<f64> {
    let flops = 2.0 * m * n * k;
    Ok(flops / (gemm_peak_flops(device, dtype)? * gemm_utilization(device, dtype, m, n)))
}

/// Bytes per activation element the FP8 path moves to cast its input: a 16-bit read and an 8-bit write.
pub const LINEAR_CAST_BYTES: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeLinearPoint {
    pub n: u64,
    pub dtype: TeDtype,
}

/// Seconds for a square `N x N x N` linear layer including the FP8 input cast.
pub fn te_linear_seconds(device: &DeviceSpec, pt: &TeLinearPoint) -> Result<f64> {
    if pt.n == 0 {
        return Err(Error::Workload("N must be positive".into()));
    }
    let n = pt.n as f64;
    let cast = match pt.dtype {
        TeDtype::Fp8 => LINEAR_CAST_BYTES * n * n / bandwidth(device),
        _ => 0.0,
    };
    Ok(cast + gemm_seconds(device, pt.dtype, n, n, n)?)
}

/// Achieved GFLOPS of a square linear layer.
pub fn te_linear_throughput(device: &DeviceSpec, pt: &TeLinearPoint) -> Result<f64> {
    let n = pt.n as f64;
    Ok(2.0 * n * n * n / te_linear_seconds(device, pt)? / 1e9)
}

/// FP8 over FP16 linear throughput at `n`.
pub fn fp8_linear_ratio(device: &DeviceSpec, n: u64) -> Result<f64> {
    let fp8 = te_linear_throughput(device, &TeLinearPoint { n, dtype: TeDtype::Fp8 })?;
    let fp16 = te_linear_throughput(device, &TeLinearPoint { n, dtype: TeDtype::Fp16 })?;
    Ok(fp8 / fp16)
}

/// Hidden size, FFN size and head count of each evaluated layer.
pub const LAYER_TABLE: [(u32, u32, u32); 5] =
    [(1024, 2816, 8), (2048, 5632, 16), (4096, 11008, 32), (5120, 13824, 40), (8192, 22016, 64)];
pub const LAYER_BATCH: u32 = 4;
pub const LAYER_SEQ_LEN: u32 = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerConfig {
    pub hidden_size: u32,
    pub ffn_hidden_size: u32,
    pub num_attention_heads: u32,
    pub batch: u32,
    pub seq_len: u32,
}

impl LayerConfig {
    pub fn new(hidden_size: u32, ffn_hidden_size: u32, num_attention_heads: u32) -> Result<Self> {
        if !LAYER_TABLE.contains(&(hidden_size, ffn_hidden_size, num_attention_heads)) {
            return Err(Error::Workload(format!(
                "layer ({hidden_size}, {ffn_hidden_size}, {num_attention_heads}) is not one of {LAYER_TABLE:?}"
            )));
        }
        Ok(LayerConfig { hidden_size, ffn_hidden_size, num_attention_heads, batch: LAYER_BATCH, seq_len: LAYER_SEQ_LEN })
    }

    pub fn for_hidden(hidden_size: u32) -> Result<Self> {
        let (h, f, a) = LAYER_TABLE
            .iter()
            .copied()
            .find(|(h, ..)| *h == hidden_size)
            .ok_or_else(|| Error::Workload(format!("no layer configuration for hidden size {hidden_size}")))?;
        Self::new(h, f, a)
    }

    pub fn all() -> impl Iterator<Item = LayerConfig> {
        LAYER_TABLE.iter().map(|&(h, f, a)| LayerConfig::new(h, f, a).expect("table rows are valid"))
    }

    fn tokens(&self) -> f64 {
        f64::from(self.batch) * f64::from(self.seq_len)
    }

    /// `(m, n, k)` of the QKV, output projection, gate+up and down GEMMs.
    pub fn gemms(&self) -> [(f64, f64, f64); 4] {
        let t = self.tokens();
        let h = f64::from(self.hidden_size);
        let f = f64::from(self.ffn_hidden_size);
        [(t, 3.0 * h, h), (t, h, h), (t, 2.0 * f, h), (t, h, f)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerBreakdown {
    pub gemm_ms: f64,
    pub cast_ms: f64,
    pub attention_ms: f64,
    pub elementwise_ms: f64,
}

impl LayerBreakdown {
    pub fn total_ms(&self) -> f64 {
        self.gemm_ms + self.cast_ms + self.attention_ms + self.elementwise_ms
    }
}

/// Tensors of hidden width each token touches outside the GEMMs: two norms (read and write)
/// and two residual adds (two reads and a write).
const HIDDEN_WIDTH_TENSORS: f64 = 10.0;
/// FFN-width tensors of the SwiGLU activation: gate and up read, product written.
const FFN_WIDTH_TENSORS: f64 = 3.0;
/// Softmax reads and writes each attention score once.
const SCORE_TENSORS: f64 = 2.0;
const HALF_BYTES: f64 = 2.0;

/// Layer latency with the FP8 cast cost `cast_bytes` per GEMM input element.
pub fn layer_breakdown(device: &DeviceSpec, cfg: &LayerConfig, dtype: TeDtype, cast_bytes: f64) -> Result<LayerBreakdown> {
    let bw = bandwidth(device);
    let mut gemm = 0.0;
    let mut cast = 0.0;
    for (m, n, k) in cfg.gemms() {
        gemm += gemm_seconds(device, dtype, m, n, k)?;
        if dtype == TeDtype::Fp8 {
            cast += cast_bytes * (m * k + k * n) / bw;
        }
    }
    let t = cfg.tokens();
    let h = f64::from(cfg.hidden_size);
    let f = f64::from(cfg.ffn_hidden_size);
    let s = f64::from(cfg.seq_len);
    let b = f64::from(cfg.batch);
    let attention_flops = 4.0 * b * s * s * h;
    let attention = attention_flops / gemm_peak_flops(device, TeDtype::Fp16)?;
    let scores = b * f64::from(cfg.num_attention_heads) * s * s;
    let elementwise_bytes = HALF_BYTES * (HIDDEN_WIDTH_TENSORS * t * h + FFN_WIDTH_TENSORS * t * f + SCORE_TENSORS * scores);
    Ok(LayerBreakdown {
        gemm_ms: gemm * 1e3,
        cast_ms: cast * 1e3,
        attention_ms: attention * 1e3,
        elementwise_ms: elementwise_bytes / bw * 1e3,
    })
}

/// Fitted FP8 cast cost for a device.
pub fn layer_cast_bytes(store: &CalibStore, device: &DeviceSpec) -> Result<f64> {
    store.value(&device.name, LAYER_CAST_BYTES, &Params::new())
}

/// Layer latency in milliseconds.
pub fn transformer_layer_latency(store: &CalibStore, device: &DeviceSpec, cfg: &LayerConfig, dtype: TeDtype) -> Result<f64> {
    let cast = match dtype {
        TeDtype::Fp8 => {
            gemm_peak_flops(device, dtype)?;
            layer_cast_bytes(store, device)?
        }
        _ => 0.0,
    };
    Ok(layer_breakdown(device, cfg, dtype, cast)?.total_ms())
}

/// Hidden sizes bracketing the FP8-beats-FP16 crossover; the fitted cast cost puts it between them.
pub const CROSSOVER_BRACKET: (u32, u32) = (4096, 5120);

/// Cast cost at which FP8 and FP16 layer latencies tie for `cfg`.
pub fn break_even_cast_bytes(device: &DeviceSpec, cfg: &LayerConfig) -> Result<f64> {
    let fp16 = layer_breakdown(device, cfg, TeDtype::Fp16, 0.0)?.total_ms();
    let no_cast = layer_breakdown(device, cfg, TeDtype::Fp8, 0.0)?;
    let per_byte = layer_breakdown(device, cfg, TeDtype::Fp8, 1.0)?.cast_ms;
    Ok((fp16 - no_cast.total_ms()) / per_byte)
}

/// Geometric mean of the break-even costs at the two bracketing hidden sizes.
pub fn fit_layer_cast_bytes(device: &DeviceSpec) -> Result<f64> {
    let lo = break_even_cast_bytes(device, &LayerConfig::for_hidden(CROSSOVER_BRACKET.0)?)?;
    let hi = break_even_cast_bytes(device, &LayerConfig::for_hidden(CROSSOVER_BRACKET.1)?)?;
    if !(lo > 0.0 && hi > 0.0) {
        return Err(Error::Fit(format!("{}: FP8 never beats FP16 in the bracket", device.name)));
    }
    Ok((lo * hi).sqrt())
}

pub fn cast_record(device: &DeviceSpec, cast_bytes: f64) -> CalibRecord {
    CalibRecord {
        device: device.name.clone(),
        metric_id: LAYER_CAST_BYTES.into(),
        params: Params::new(),
        value: cast_bytes,
        unit: Unit::Ratio,
        provenance: "fit".into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LlmDtype {
    Fp32,
    Bf16,
    Fp8,
}

impl LlmDtype {
    pub const ALL: [LlmDtype; 3] = [LlmDtype::Fp32, LlmDtype::Bf16, LlmDtype::Fp8];

    pub fn bytes(self) -> f64 {
        match self {
            LlmDtype::Fp32 => 4.0,
            LlmDtype::Bf16 => 2.0,
            LlmDtype::Fp8 => 1.0,
        }
    }
}

impl fmt::Display for LlmDtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LlmDtype::Fp32 => "FP32",
            LlmDtype::Bf16 => "BF16",
            LlmDtype::Fp8 => "FP8",
        })
    }
}

impl FromStr for LlmDtype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "FP32" => Ok(LlmDtype::Fp32),
            "BF16" | "FP16" => Ok(LlmDtype::Bf16),
            "FP8" => Ok(LlmDtype::Fp8),
            _ => Err(Error::Workload(format!("unknown LLM dtype `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmModelDesc {
    pub name: String,
    pub param_count: f64,
    pub batch: u32,
    pub max_in_len: u32,
    pub max_out_len: u32,
}

pub const LLM_MODELS: [(&str, f64); 3] = [("llama-3B", 3e9), ("llama-2-7B", 7e9), ("llama-2-13B", 13e9)];

impl LlmModelDesc {
    pub fn new(name: &str, param_count: f64) -> Self {
        LlmModelDesc { name: name.to_string(), param_count, batch: 8, max_in_len: 128, max_out_len: 128 }
    }

    pub fn known(name: &str) -> Result<Self> {
        LLM_MODELS
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|&(n, p)| Self::new(n, p))
            .ok_or_else(|| Error::Workload(format!("unknown model `{name}`")))
    }

    pub fn weight_bytes(&self, dtype: LlmDtype) -> f64 {
        self.param_count * dtype.bytes()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeBound {
    /// Seconds to stream the weights once.
    pub step_seconds: f64,
    /// Generated tokens per second across the batch.
    pub output_tokens_per_s: f64,
    /// Prompt plus generated tokens per second, the quantity inference throughput reports.
    pub total_tokens_per_s: f64,
}

impl DecodeBound {
    pub fn admits(&self, measured: f64) -> bool {
        measured <= self.total_tokens_per_s
    }
}

/// Upper bound on decode throughput when every step streams all weights from memory.
pub fn llm_decode_throughput(device: &DeviceSpec, model: &LlmModelDesc, dtype: LlmDtype) -> Result<DecodeBound> {
    if dtype == LlmDtype::Fp8 && !device.features.fp8_tc {
        return Err(Error::UnsupportedDtype { device: device.name.clone(), dtype: dtype.to_string() });
    }
    let weights = model.weight_bytes(dtype);
    if weights > device.mem_bytes() {
        return Err(Error::OutOfMemory {
            device: device.name.clone(),
            model: model.name.clone(),
            dtype: dtype.to_string(),
            need_gb: weights / 1e9,
            have_gb: device.mem_bytes() / 1e9,
        });
    }
    let step_seconds = weights / bandwidth(device);
    let output_tokens_per_s = f64::from(model.batch) / step_seconds;
    let prompt_share = f64::from(model.max_in_len + model.max_out_len) / f64::from(model.max_out_len);
    Ok(DecodeBound { step_seconds, output_tokens_per_s, total_tokens_per_s: output_tokens_per_s * prompt_share })
}
