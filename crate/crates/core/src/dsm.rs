//! SM-to-SM network: transfer latency, ring-based copy throughput, and DSM histogram occupancy.

use crate::calib::{params, CalibStore, Params};
use crate::device::DeviceSpec;
use crate::error::{Error, Result};

pub const SM2SM_LATENCY: &str = "dsm.latency.sm2sm";
pub const RBC_PEAK: &str = "dsm.rbc.peak";

/// Cluster sizes whose peaks are measured; the contention slope comes from these two.
const RBC_ANCHORS: (u32, u32) = (2, 4);

/// Hardware cap on resident blocks per SM.
pub const MAX_BLOCKS_PER_SM: u32 = 32;
pub const BYTES_PER_BIN: u64 = 4;
/// Bytes each thread moves per copy instruction in the ring benchmark.
pub const RBC_BYTES_PER_ACCESS: f64 = 4.0;

fn require_dsm(device: &DeviceSpec) -> Result<()> {
    if device.features.dsm {
        Ok(())
    } else {
        Err(Error::FeatureUnsupported { device: device.name.clone(), feature: "distributed shared memory" })
    }
}

pub fn sm2sm_latency(store: &CalibStore, device: &DeviceSpec) -> Result<f64> {
    require_dsm(device)?;
    store.value(&device.name, SM2SM_LATENCY, &Params::new())
}

/// Ring copy: block `r` of a cluster writes into block `(r + 1) mod CS`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RbcWorkload {
    pub cluster_size: u32,
    pub block_size: u32,
    pub ilp: u32,
}

impl RbcWorkload {
    pub fn new(cluster_size: u32, block_size: u32, ilp: u32) -> Result<Self> {
        if cluster_size < 2 {
            return Err(Error::Workload(format!("ring copy needs cluster_size >= 2, got {cluster_size}")));
        }
        if block_size == 0 || block_size > 1024 {
            return Err(Error::Workload(format!("block_size {block_size} outside 1..=1024")));
        }
        if ilp == 0 {
            return Err(Error::Workload("ilp must be positive".into()));
        }
        Ok(RbcWorkload { cluster_size, block_size, ilp })
    }

    /// Destination block of `rank` in the ring.
    pub fn neighbor(&self, rank: u32) -> u32 {
        (rank + 1) % self.cluster_size
    }
}

fn rbc_anchor(store: &CalibStore, device: &DeviceSpec, cs: u32) -> Result<f64> {
    store.value(&device.name, RBC_PEAK, &params(&[("cs", &cs.to_string())]))
}

/// Contention factor relative to the smallest cluster, linear in cluster size.
pub fn rbc_contention(store: &CalibStore, device: &DeviceSpec, cluster_size: u32) -> Result<f64> {
    require_dsm(device)?;
    let (lo, hi) = RBC_ANCHORS;
    let slope = (rbc_anchor(store, device, lo)? / rbc_anchor(store, device, hi)? - 1.0) / f64::from(hi - lo);
    Ok(1.0 + slope * (f64::from(cluster_size) - f64::from(lo)))
}

/// Saturated ring-copy throughput in TB/s: network capacity over contention.
pub fn rbc_peak(store: &CalibStore, device: &DeviceSpec, cluster_size: u32) -> Result<f64> {
    require_dsm(device)?;
    let capacity = rbc_anchor(store, device, RBC_ANCHORS.0)?;
    Ok(capacity / rbc_contention(store, device, cluster_size)?)
}

/// Fraction of the peak reached by a block's bytes in flight, by Little's law over the SM-to-SM latency.
pub fn rbc_saturation(store: &CalibStore, device: &DeviceSpec, w: &RbcWorkload) -> Result<f64> {
    let latency = sm2sm_latency(store, device)?;
    let peak_tbs = rbc_peak(store, device, w.cluster_size)?;
    let per_sm_bytes_per_clk = peak_tbs * 1e12 / (f64::from(device.sm_count) * device.effective_clock_mhz() * 1e6);
    let in_flight = f64::from(w.block_size) * f64::from(w.ilp) * RBC_BYTES_PER_ACCESS;
    Ok((in_flight / (latency * per_sm_bytes_per_clk)).min(1.0))
}

pub fn rbc_throughput(store: &CalibStore, device: &DeviceSpec, w: &RbcWorkload) -> Result<f64> {
    Ok(rbc_peak(store, device, w.cluster_size)? * rbc_saturation(store, device, w)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HistogramConfig {
    pub cluster_size: u32,
    pub block_size: u32,
    pub nbins: u64,
}

impl HistogramConfig {
    pub fn new(cluster_size: u32, block_size: u32, nbins: u64) -> Result<Self> {
        if cluster_size == 0 {
            return Err(Error::Workload("cluster_size must be >= 1".into()));
        }
        if block_size == 0 || block_size > 1024 {
            return Err(Error::Workload(format!("block_size {block_size} outside 1..=1024")));
        }
        if nbins == 0 {
            return Err(Error::Workload("nbins must be positive".into()));
        }
        Ok(HistogramConfig { cluster_size, block_size, nbins })
    }

    /// Shared memory each block holds: its slice of the bins.
    pub fn bytes_per_block(&self) -> u64 {
        self.nbins.div_ceil(u64::from(self.cluster_size)) * BYTES_PER_BIN
    }
}

/// Resident blocks per SM under the thread, block-count and shared-memory limits.
pub fn active_blocks(device: &DeviceSpec, cfg: &HistogramConfig) -> u32 {
    let by_threads = device.max_threads_per_sm / cfg.block_size;
    let by_smem = device.smem_carveout_bytes / cfg.bytes_per_block();
    let by_smem = u32::try_from(by_smem).unwrap_or(u32::MAX);
    MAX_BLOCKS_PER_SM.min(by_threads).min(by_smem)
}

/// Fraction of the SM's thread slots kept busy.
pub fn concurrency(device: &DeviceSpec, cfg: &HistogramConfig) -> f64 {
    let threads = f64::from(active_blocks(device, cfg)) * f64::from(cfg.block_size);
    (threads / f64::from(device.max_threads_per_sm)).min(1.0)
}

/// Cost of one remote bin update relative to a local one. Grows with the traffic a cluster
/// puts on the SM-to-SM network: threads per block times blocks sharing it.
const REMOTE_BASE_COST: f64 = 0.3;
const REMOTE_TRAFFIC_SCALE: f64 = 512.0;

fn remote_update_cost(cfg: &HistogramConfig) -> f64 {
    let traffic = f64::from(cfg.block_size) * f64::from(cfg.cluster_size);
    REMOTE_BASE_COST * (1.0 + traffic / REMOTE_TRAFFIC_SCALE)
}

/// Relative time per element: local work shrinks as `1/CS`, remote updates take a `(CS-1)/CS` share.
fn time_per_element(cfg: &HistogramConfig) -> f64 {
    let cs = f64::from(cfg.cluster_size);
    (1.0 / cs).max((cs - 1.0) / cs * remote_update_cost(cfg))
}

/// Unnormalized elements per unit time.
pub fn histogram_score(device: &DeviceSpec, cfg: &HistogramConfig) -> Result<f64> {
    if cfg.cluster_size > 1 {
        require_dsm(device)?;
    }
    Ok(concurrency(device, cfg) / time_per_element(cfg))
}

pub const REFERENCE_CLUSTER_SIZES: [u32; 5] = [1, 2, 4, 8, 16];
pub const REFERENCE_BLOCK_SIZES: [u32; 4] = [128, 256, 512, 1024];
pub const REFERENCE_NBINS: [u64; 6] = [256, 512, 1024, 2048, 4096, 8192];

/// Best score over the reference grid of cluster sizes, block sizes and bin counts.
pub fn histogram_best(device: &DeviceSpec) -> Result<f64> {
    let mut best = 0.0f64;
    let sizes: &[u32] = if device.features.dsm { &REFERENCE_CLUSTER_SIZES } else { &[1] };
    for &cs in sizes {
        for &bs in &REFERENCE_BLOCK_SIZES {
            for &nb in &REFERENCE_NBINS {
                best = best.max(histogram_score(device, &HistogramConfig::new(cs, bs, nb)?)?);
            }
        }
    }
    Ok(best)
}

/// Throughput relative to the device's best configuration on the reference grid.
pub fn histogram_throughput(device: &DeviceSpec, cfg: &HistogramConfig) -> Result<f64> {
    Ok(histogram_score(device, cfg)? / histogram_best(device)?)
}

/// Cluster size with the highest throughput among `sizes` (first on ties).
pub fn best_cluster_size(device: &DeviceSpec, block_size: u32, nbins: u64, sizes: &[u32]) -> Result<u32> {
    let mut best: Option<(u32, f64)> = None;
    for &cs in sizes {
        let s = histogram_score(device, &HistogramConfig::new(cs, block_size, nbins)?)?;
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((cs, s));
        }
    }
    best.map(|(cs, _)| cs).ok_or_else(|| Error::Workload("no cluster sizes given".into()))
}
