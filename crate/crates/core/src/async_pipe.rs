//! Synchronous vs asynchronous (double-buffered) tiled matmul throughput.
//!
//! Each tile step costs a per-block latency and a per-SM issue cost. With `r` resident
//! blocks the step time is the `p`-norm of the latency and `r` times the issue cost, so
//! throughput grows linearly while latency dominates and flattens once issue dominates.
//! The synchronous kernel pays copy and compute back to back; the pipelined kernel overlaps
//! them and pays a fixed overlap overhead instead.

use std::fmt;
use std::str::FromStr;

use crate::calib::{params, CalibRecord, CalibStore, Params, Unit};
use crate::device::DeviceSpec;
use crate::error::{Error, Result};
use crate::estimate::Estimate;

pub mod fit;

pub const THROUGHPUT: &str = "async.throughput";
pub const PERF_GAIN: &str = "async.perf_gain";
pub const PARAMS_PREFIX: &str = "async.params.";

pub const BLOCK_DIMS: [u32; 3] = [8, 16, 32];
pub const BLOCKS_PER_SM: [u32; 6] = [1, 2, 4, 8, 16, 32];
pub const K_EXTENT: u32 = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AsyncMode {
    SyncShare,
    AsyncPipe,
}

impl fmt::Display for AsyncMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for AsyncMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "syncshare" | "sync" => Ok(AsyncMode::SyncShare),
            "asyncpipe" | "async" => Ok(AsyncMode::AsyncPipe),
            _ => Err(Error::Workload(format!("unknown pipeline mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AsyncMatmulConfig {
    pub block_dim: u32,
    pub blocks_per_sm: u32,
    pub k_extent: u32,
}

impl AsyncMatmulConfig {
    pub fn new(block_dim: u32, blocks_per_sm: u32) -> Result<Self> {
        if !BLOCK_DIMS.contains(&block_dim) {
            return Err(Error::Workload(format!("block_dim {block_dim} not in {BLOCK_DIMS:?}")));
        }
        if !BLOCKS_PER_SM.contains(&blocks_per_sm) {
            return Err(Error::Workload(format!("blocks_per_sm {blocks_per_sm} not in {BLOCKS_PER_SM:?}")));
        }
        Ok(AsyncMatmulConfig { block_dim, blocks_per_sm, k_extent: K_EXTENT })
    }

    /// Flops one block performs over the whole K extent.
    pub fn work_per_block(&self) -> f64 {
        2.0 * f64::from(self.block_dim).powi(2) * f64::from(self.k_extent)
    }

    /// Tile steps along K.
    pub fn n_tiles(&self) -> f64 {
        f64::from(self.k_extent) / f64::from(self.block_dim)
    }
}

/// Fitted per-(device, block size) costs, all in cycles except the two knee exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineParams {
    /// Latency of moving one A and one B tile from global to shared memory.
    pub copy_cycles: f64,
    /// Latency of the tile's multiply-accumulate loop.
    pub compute_cycles: f64,
    /// Extra latency a two-stage pipeline adds on top of the slower stage.
    pub overlap_cycles: f64,
    /// Per-block SM occupancy per tile step once latency is hidden.
    pub sync_issue_cycles: f64,
    pub async_issue_cycles: f64,
    /// Sharpness of the latency-to-issue transition.
    pub sync_knee: f64,
    pub async_knee: f64,
}

const PARAM_FIELDS: [(&str, Unit); 7] = [
    ("copy_cycles", Unit::Cycles),
    ("compute_cycles", Unit::Cycles),
    ("overlap_cycles", Unit::Cycles),
    ("sync_issue_cycles", Unit::Cycles),
    ("async_issue_cycles", Unit::Cycles),
    ("sync_knee", Unit::Ratio),
    ("async_knee", Unit::Ratio),
];

impl PipelineParams {
    fn values(&self) -> [f64; 7] {
        [
            self.copy_cycles,
            self.compute_cycles,
            self.overlap_cycles,
            self.sync_issue_cycles,
            self.async_issue_cycles,
            self.sync_knee,
            self.async_knee,
        ]
    }

    fn from_values(v: [f64; 7]) -> Self {
        PipelineParams {
            copy_cycles: v[0],
            compute_cycles: v[1],
            overlap_cycles: v[2],
            sync_issue_cycles: v[3],
            async_issue_cycles: v[4],
            sync_knee: v[5],
            async_knee: v[6],
        }
    }

    pub fn load(store: &CalibStore, device: &DeviceSpec, block_dim: u32) -> Result<Self> {
        let p = block_params(block_dim);
        let mut v = [0.0; 7];
        for (slot, (field, _)) in v.iter_mut().zip(PARAM_FIELDS) {
            *slot = store.value(&device.name, &format!("{PARAMS_PREFIX}{field}"), &p)?;
        }
        let params = Self::from_values(v);
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values().iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::Config(format!("pipeline parameters must be positive: {self:?}")))
        }
    }

    /// Calibration records carrying these parameters.
    pub fn to_records(&self, device: &str, block_dim: u32) -> Vec<CalibRecord> {
        PARAM_FIELDS
            .iter()
            .zip(self.values())
            .map(|((field, unit), value)| CalibRecord {
                device: device.to_string(),
                metric_id: format!("{PARAMS_PREFIX}{field}"),
                params: block_params(block_dim),
                value,
                unit: *unit,
                provenance: "fit".into(),
            })
            .collect()
    }

    /// Per-block latency of one tile step.
    pub fn step_latency(&self, mode: AsyncMode) -> f64 {
        match mode {
            AsyncMode::SyncShare => self.copy_cycles + self.compute_cycles,
            AsyncMode::AsyncPipe => self.copy_cycles.max(self.compute_cycles) + self.overlap_cycles,
        }
    }

    fn issue(&self, mode: AsyncMode) -> (f64, f64) {
        match mode {
            AsyncMode::SyncShare => (self.sync_issue_cycles, self.sync_knee),
            AsyncMode::AsyncPipe => (self.async_issue_cycles, self.async_knee),
        }
    }

    /// Blocks per SM at which issue cost catches up with latency.
    pub fn saturation_blocks(&self, mode: AsyncMode) -> f64 {
        self.step_latency(mode) / self.issue(mode).0
    }

    /// SM cycles per tile step with `blocks` resident blocks.
    pub fn step_cycles(&self, mode: AsyncMode, blocks: f64) -> f64 {
        let (issue, knee) = self.issue(mode);
        p_norm(self.step_latency(mode), blocks * issue, knee)
    }
}

fn block_params(block_dim: u32) -> Params {
    params(&[("block", &block_dim.to_string())])
}

/// `(a^p + b^p)^(1/p)` without overflow.
pub fn p_norm(a: f64, b: f64, p: f64) -> f64 {
    let m = a.max(b);
    if m == 0.0 {
        return 0.0;
    }
    m * ((a / m).powf(p) + (b / m).powf(p)).powf(1.0 / p)
}

/// Whole-device GFLOPS for a configuration under fitted parameters.
pub fn modeled_gflops(device: &DeviceSpec, p: &PipelineParams, cfg: &AsyncMatmulConfig, mode: AsyncMode) -> f64 {
    let blocks = f64::from(cfg.blocks_per_sm);
    let cycles_per_block = cfg.n_tiles() * p.step_cycles(mode, blocks) / blocks;
    let flops_per_cycle = cfg.work_per_block() / cycles_per_block;
    flops_per_cycle * f64::from(device.sm_count) * device.effective_clock_ghz()
}

fn cell_params(cfg: &AsyncMatmulConfig, mode: AsyncMode) -> Params {
    params(&[
        ("block", &cfg.block_dim.to_string()),
        ("blocks_per_sm", &cfg.blocks_per_sm.to_string()),
        ("mode", &mode.to_string()),
    ])
}

pub fn measured_gflops(store: &CalibStore, device: &DeviceSpec, cfg: &AsyncMatmulConfig, mode: AsyncMode) -> Result<f64> {
    store.value(&device.name, THROUGHPUT, &cell_params(cfg, mode))
}

/// Model output with the measured cell attached when there is one.
pub fn model_matmul_throughput(
    store: &CalibStore,
    device: &DeviceSpec,
    cfg: &AsyncMatmulConfig,
    mode: AsyncMode,
) -> Result<Estimate> {
    let p = PipelineParams::load(store, device, cfg.block_dim)?;
    let value = modeled_gflops(device, &p, cfg, mode);
    Ok(Estimate::modeled(value, Unit::Gflops).against(store.get(&device.name, THROUGHPUT, &cell_params(cfg, mode))))
}

/// The measured cell when present, otherwise the model.
pub fn predict_matmul_throughput(
    store: &CalibStore,
    device: &DeviceSpec,
    cfg: &AsyncMatmulConfig,
    mode: AsyncMode,
) -> Result<f64> {
    match measured_gflops(store, device, cfg, mode) {
        Ok(v) => Ok(v),
        Err(e) if e.is_absent() => Ok(model_matmul_throughput(store, device, cfg, mode)?.value),
        Err(e) => Err(e),
    }
}

/// Mean over the blocks-per-SM sweep of `(async - sync) / sync`, in percent.
pub fn mean_improvement(async_tp: &[f64], sync_tp: &[f64]) -> f64 {
    let n = async_tp.len().min(sync_tp.len());
    100.0 * async_tp.iter().zip(sync_tp).map(|(a, s)| a / s - 1.0).sum::<f64>() / n as f64
}

/// Modeled improvement of the pipelined kernel, in percent.
pub fn pipeline_improvement(store: &CalibStore, device: &DeviceSpec, block_dim: u32) -> Result<f64> {
    let p = PipelineParams::load(store, device, block_dim)?;
    let (mut a, mut s) = (Vec::new(), Vec::new());
    for bps in BLOCKS_PER_SM {
        let cfg = AsyncMatmulConfig::new(block_dim, bps)?;
        a.push(modeled_gflops(device, &p, &cfg, AsyncMode::AsyncPipe));
        s.push(modeled_gflops(device, &p, &cfg, AsyncMode::SyncShare));
    }
    Ok(mean_improvement(&a, &s))
}

/// The improvement recomputed from the measured cells, in percent.
pub fn measured_improvement(store: &CalibStore, device: &DeviceSpec, block_dim: u32) -> Result<f64> {
    let (a, s) = measured_columns(store, device, block_dim)?;
    Ok(mean_improvement(&a, &s))
}

/// Measured (async, sync) columns over the blocks-per-SM sweep.
pub fn measured_columns(store: &CalibStore, device: &DeviceSpec, block_dim: u32) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut a = Vec::new();
    let mut s = Vec::new();
    for bps in BLOCKS_PER_SM {
        let cfg = AsyncMatmulConfig::new(block_dim, bps)?;
        a.push(measured_gflops(store, device, &cfg, AsyncMode::AsyncPipe)?);
        s.push(measured_gflops(store, device, &cfg, AsyncMode::SyncShare)?);
    }
    Ok((a, s))
}
