//! Per-level memory latency and throughput, the FP64 pipe clamp, and cross-level ratios.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::calib::{params, CalibStore, Params, Unit};
use crate::device::DeviceSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MemLevel {
    L1,
    Shared,
    L2,
    Global,
}

impl MemLevel {
    pub const ALL: [MemLevel; 4] = [MemLevel::L1, MemLevel::Shared, MemLevel::L2, MemLevel::Global];

    pub fn key(self) -> &'static str {
        match self {
            MemLevel::L1 => "l1",
            MemLevel::Shared => "shared",
            MemLevel::L2 => "l2",
            MemLevel::Global => "global",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MemLevel::L1 => "L1 Cache",
            MemLevel::Shared => "Shared Memory",
            MemLevel::L2 => "L2 Cache",
            MemLevel::Global => "Global Memory",
        }
    }

    /// Unit a throughput at this level is reported in.
    pub fn throughput_unit(self) -> Unit {
        match self {
            MemLevel::L1 | MemLevel::Shared => Unit::BytesPerClkSm,
            MemLevel::L2 => Unit::BytesPerClk,
            MemLevel::Global => Unit::GBps,
        }
    }

    fn takes_access_type(self) -> bool {
        matches!(self, MemLevel::L1 | MemLevel::L2)
    }
}

impl fmt::Display for MemLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MemLevel::L1 => "L1",
            MemLevel::Shared => "Shared",
            MemLevel::L2 => "L2",
            MemLevel::Global => "Global",
        })
    }
}

impl FromStr for MemLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(MemLevel::L1),
            "shared" | "smem" => Ok(MemLevel::Shared),
            "l2" => Ok(MemLevel::L2),
            "global" | "gmem" => Ok(MemLevel::Global),
            _ => Err(Error::Workload(format!("unknown memory level `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AccessDtype {
    Fp32,
    Fp64,
    Fp32v4,
}

impl AccessDtype {
    pub const ALL: [AccessDtype; 3] = [AccessDtype::Fp32, AccessDtype::Fp64, AccessDtype::Fp32v4];

    pub fn as_str(self) -> &'static str {
        match self {
            AccessDtype::Fp32 => "FP32",
            AccessDtype::Fp64 => "FP64",
            AccessDtype::Fp32v4 => "FP32v4",
        }
    }
}

impl fmt::Display for AccessDtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AccessDtype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('.', "").as_str() {
            "FP32" => Ok(AccessDtype::Fp32),
            "FP64" => Ok(AccessDtype::Fp64),
            "FP32V4" => Ok(AccessDtype::Fp32v4),
            _ => Err(Error::Workload(format!("unknown access type `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemAccess {
    pub dtype: AccessDtype,
    pub vector_width: u32,
}

impl MemAccess {
    pub fn new(dtype: AccessDtype) -> Self {
        let vector_width = if dtype == AccessDtype::Fp32v4 { 4 } else { 1 };
        MemAccess { dtype, vector_width }
    }
}

impl From<AccessDtype> for MemAccess {
    fn from(dtype: AccessDtype) -> Self {
        MemAccess::new(dtype)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate {
    pub value: f64,
    pub unit: Unit,
}

pub fn latency_metric(level: MemLevel) -> String {
    format!("mem.latency.{}", level.key())
}

pub fn throughput_metric(level: MemLevel) -> String {
    format!("mem.throughput.{}", level.key())
}

pub fn throughput_params(level: MemLevel, access: MemAccess) -> Params {
    if level.takes_access_type() {
        params(&[("access", access.dtype.as_str())])
    } else {
        Params::new()
    }
}

pub fn level_latency(store: &CalibStore, device: &DeviceSpec, level: MemLevel) -> Result<f64> {
    store.value(&device.name, &latency_metric(level), &Params::new())
}

pub fn level_throughput(store: &CalibStore, device: &DeviceSpec, level: MemLevel, access: MemAccess) -> Result<Rate> {
    if access.dtype == AccessDtype::Fp32v4 && access.vector_width != 4 {
        return Err(Error::Workload("FP32v4 access must have vector width 4".into()));
    }
    let value = store.value(&device.name, &throughput_metric(level), &throughput_params(level, access))?;
    Ok(Rate { value, unit: level.throughput_unit() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheRate {
    /// Measured rate for the requested access.
    pub rate: Rate,
    /// Measured scalar FP32 rate at the same level, the cache's own capability.
    pub raw: f64,
    /// FP64 add ceiling scaled to the level's unit, when the device has one.
    pub pipe_limit: Option<f64>,
    pub clamped: bool,
}

impl CacheRate {
    /// `min(raw, pipe)`: what the clamp predicts the FP64 probe should observe.
    pub fn modeled(&self) -> f64 {
        self.pipe_limit.map_or(self.raw, |p| p.min(self.raw))
    }
}

/// Cache throughput with the FP64 pipe ceiling applied to FP64 probes.
pub fn effective_cache_throughput(
    store: &CalibStore,
    device: &DeviceSpec,
    level: MemLevel,
    access: MemAccess,
) -> Result<CacheRate> {
    if !level.takes_access_type() {
        return Err(Error::Workload(format!("{level} is not a cache level with access types")));
    }
    let rate = level_throughput(store, device, level, access)?;
    let raw = level_throughput(store, device, level, MemAccess::new(AccessDtype::Fp32))?.value;
    let pipe_limit = match (access.dtype, device.fp64_add_bytes_per_clk_sm) {
        (AccessDtype::Fp64, Some(per_sm)) => Some(match level {
            MemLevel::L2 => per_sm * f64::from(device.sm_count),
            _ => per_sm,
        }),
        _ => None,
    };
    let clamped = pipe_limit.is_some_and(|p| p < raw);
    Ok(CacheRate { rate, raw, pipe_limit, clamped })
}

/// Convert an L2 rate in bytes per clock to GB/s at the device's effective clock.
pub fn bytes_per_clk_to_gbs(device: &DeviceSpec, bytes_per_clk: f64) -> f64 {
    bytes_per_clk * device.effective_clock_ghz()
}

/// Achieved global throughput over the datasheet bandwidth.
pub fn global_efficiency(store: &CalibStore, device: &DeviceSpec) -> Result<f64> {
    let global = level_throughput(store, device, MemLevel::Global, MemAccess::new(AccessDtype::Fp32v4))?;
    Ok(global.value / device.mem_bandwidth_gbs)
}

/// Best L2 rate over access types, in GB/s, divided by global throughput.
pub fn l2_over_global_bw(store: &CalibStore, device: &DeviceSpec) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for dtype in AccessDtype::ALL {
        best = best.max(level_throughput(store, device, MemLevel::L2, MemAccess::new(dtype))?.value);
    }
    let global = level_throughput(store, device, MemLevel::Global, MemAccess::new(AccessDtype::Fp32v4))?.value;
    Ok(bytes_per_clk_to_gbs(device, best) / global)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyRatios {
    pub avg_l2_over_l1: f64,
    pub avg_global_over_l2: f64,
    pub l2_over_global_bw: BTreeMap<String, f64>,
}

pub fn latency_ratios<'a>(
    store: &CalibStore,
    devices: impl IntoIterator<Item = &'a DeviceSpec>,
) -> Result<LatencyRatios> {
    let (mut l2_l1, mut g_l2, mut n) = (0.0, 0.0, 0usize);
    let mut bw = BTreeMap::new();
    for d in devices {
        let l1 = level_latency(store, d, MemLevel::L1)?;
        let l2 = level_latency(store, d, MemLevel::L2)?;
        let global = level_latency(store, d, MemLevel::Global)?;
        l2_l1 += l2 / l1;
        g_l2 += global / l2;
        n += 1;
        bw.insert(d.name.clone(), l2_over_global_bw(store, d)?);
    }
    if n == 0 {
        return Err(Error::Config("latency ratios need at least one device".into()));
    }
    Ok(LatencyRatios {
        avg_l2_over_l1: l2_l1 / n as f64,
        avg_global_over_l2: g_l2 / n as f64,
        l2_over_global_bw: bw,
    })
}

/// Level a pointer chase over `working_set` bytes settles in, given cache capacities.
pub fn pchase_level(device: &DeviceSpec, working_set: u64) -> Option<MemLevel> {
    let caches = device.cache_sizes?;
    Some(if working_set <= caches.l1_bytes {
        MemLevel::L1
    } else if working_set <= caches.l2_bytes {
        MemLevel::L2
    } else {
        MemLevel::Global
    })
}

/// Latency seen by a pointer chase over `working_set` bytes.
pub fn pchase_latency(store: &CalibStore, device: &DeviceSpec, working_set: u64) -> Result<f64> {
    let level = pchase_level(device, working_set)
        .ok_or_else(|| Error::Workload(format!("{} has no cache sizes for a working-set sweep", device.name)))?;
    level_latency(store, device, level)
}
