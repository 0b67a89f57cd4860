//! Static device descriptions and theoretical tensor-core peaks.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dtype::Dtype;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Architecture {
    Ampere,
    Ada,
    Hopper,
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MemType {
    HBM2e,
    GDDR6X,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Features {
    pub dpx_hardware: bool,
    pub dsm: bool,
    pub fp8_tc: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheSizes {
    pub l1_bytes: u64,
    pub l2_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub name: String,
    pub architecture: Architecture,
    pub compute_capability: f64,
    pub sm_count: u32,
    pub cores_per_sm: u32,
    pub max_clock_mhz: f64,
    pub mem_size_gib: f64,
    pub mem_type: MemType,
    pub mem_clock_mhz: f64,
    pub mem_bus_bits: u32,
    pub mem_bandwidth_gbs: f64,
    pub tc_count: u32,
    pub tc_generation: u32,
    pub power_limit_w: f64,
    pub features: Features,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_sizes: Option<CacheSizes>,
    /// Dense peak per peak class (`FP16`, `TF32`, `FP8`, `INT8`), TFLOPS or TOPS.
    pub tc_peaks: BTreeMap<String, f64>,
    /// Peaks that differ when quoted against warp-group instructions.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub wgmma_tc_peaks: BTreeMap<String, f64>,
    /// Clock the part actually ran at, when it differs from the documented boost.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_clock_mhz: Option<f64>,
    /// Measured FP64 add rate; present only where it limits FP64 cache probes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fp64_add_bytes_per_clk_sm: Option<f64>,
    pub max_threads_per_sm: u32,
    /// Shared-memory bytes per SM available to a histogram kernel.
    pub smem_carveout_bytes: u64,
    /// Fields taken from vendor datasheets rather than measurement.
    #[serde(default)]
    pub non_paper_fields: Vec<String>,
}

/// Which instruction family a peak is quoted against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeakBasis {
    Mma,
    Wgmma,
}

impl DeviceSpec {
    /// Clock used to turn cycles into time.
    pub fn effective_clock_mhz(&self) -> f64 {
        self.observed_clock_mhz.unwrap_or(self.max_clock_mhz)
    }

    pub fn effective_clock_ghz(&self) -> f64 {
        self.effective_clock_mhz() / 1000.0
    }

    pub fn mem_bytes(&self) -> f64 {
        self.mem_size_gib * (1u64 << 30) as f64
    }

    /// Dense peak, doubled for 2:4 sparsity.
    pub fn peak_tc_throughput(&self, dtype: Dtype, sparse: bool) -> Result<f64> {
        self.peak_for(PeakBasis::Mma, dtype, sparse)
    }

    pub fn peak_for(&self, basis: PeakBasis, dtype: Dtype, sparse: bool) -> Result<f64> {
        let key = dtype.peak_key();
        let dense = match basis {
            PeakBasis::Wgmma => self.wgmma_tc_peaks.get(key).or_else(|| self.tc_peaks.get(key)),
            PeakBasis::Mma => self.tc_peaks.get(key),
        }
        .copied()
        .ok_or_else(|| Error::UnsupportedDtype { device: self.name.clone(), dtype: dtype.to_string() })?;
        Ok(if sparse { 2.0 * dense } else { dense })
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, msg: String| Error::Validation {
            device: self.name.clone(),
            field: field.to_string(),
            msg,
        };
        if self.name.trim().is_empty() {
            return Err(fail("name", "must be nonempty".into()));
        }
        if self.sm_count == 0 {
            return Err(fail("sm_count", "must be positive".into()));
        }
        if self.tc_count != 4 * self.sm_count {
            return Err(fail(
                "tc_count",
                format!("{} != 4 x sm_count ({})", self.tc_count, 4 * self.sm_count),
            ));
        }
        let positive = [
            ("max_clock_mhz", self.max_clock_mhz),
            ("mem_bandwidth_gbs", self.mem_bandwidth_gbs),
            ("power_limit_w", self.power_limit_w),
            ("mem_size_gib", self.mem_size_gib),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(fail(field, format!("must be positive, got {v}")));
            }
        }
        if let Some(clk) = self.observed_clock_mhz {
            if !(clk.is_finite() && clk > 0.0) {
                return Err(fail("observed_clock_mhz", format!("must be positive, got {clk}")));
            }
        }
        let hopper = self.architecture == Architecture::Hopper;
        if self.features.dsm && !hopper {
            return Err(fail("features.dsm", format!("set on {} device", self.architecture)));
        }
        if self.features.dpx_hardware && !hopper {
            return Err(fail("features.dpx_hardware", format!("set on {} device", self.architecture)));
        }
        for (k, v) in self.tc_peaks.iter().chain(&self.wgmma_tc_peaks) {
            if !(v.is_finite() && *v > 0.0) {
                return Err(fail("tc_peaks", format!("{k} peak must be positive, got {v}")));
            }
        }
        if self.features.fp8_tc != self.tc_peaks.contains_key("FP8") {
            return Err(fail("tc_peaks", "FP8 peak must be present exactly when features.fp8_tc is set".into()));
        }
        Ok(())
    }
}

/// Immutable, name-sorted set of devices.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    devices: Vec<DeviceSpec>,
}

impl Catalog {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// Parse a JSON array of devices; `origin` labels format errors.
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let devices: Vec<DeviceSpec> = serde_json::from_str(text).map_err(|e| Error::Format {
            path: origin.to_string(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        Self::new(devices)
    }

    pub fn new(mut devices: Vec<DeviceSpec>) -> Result<Self> {
        for d in &devices {
            d.validate()?;
        }
        devices.sort_by(|a, b| a.name.cmp(&b.name));
        if let Some(w) = devices.windows(2).find(|w| w[0].name == w[1].name) {
            return Err(Error::DuplicateDevice(w[0].name.clone()));
        }
        Ok(Catalog { devices })
    }

    pub fn get(&self, name: &str) -> Result<&DeviceSpec> {
        self.devices
            .iter()
            .find(|d| d.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::UnknownDevice(name.to_string()))
    }

    pub fn devices(&self) -> &[DeviceSpec] {
        &self.devices
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.devices.iter().map(|d| d.name.as_str())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.devices).expect("device specs serialize")
    }
}
