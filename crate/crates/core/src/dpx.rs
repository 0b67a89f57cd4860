//! DPX function classes, hardware vs emulated execution, and wave quantization over SMs.

use std::fmt;
use std::str::FromStr;

use crate::calib::{params, CalibStore};
use crate::device::{Architecture, DeviceSpec};
use crate::error::{Error, Result};

pub const MAX_SPEEDUP: &str = "dpx.max_speedup";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpxMode {
    HardwareAccelerated,
    SoftwareEmulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DpxFnClass {
    /// `__viaddmax_s16x2_relu`-style functions with a ReLU clamp.
    Relu16or32,
    /// Packed 16-bit forms.
    SixteenBit,
    /// Plain three-input max such as `__viaddmax_s32`.
    SimpleThreeInputMax,
}

impl DpxFnClass {
    pub const ALL: [DpxFnClass; 3] = [DpxFnClass::Relu16or32, DpxFnClass::SixteenBit, DpxFnClass::SimpleThreeInputMax];

    /// Throughput is normalized, so every class issues one op per cycle per SM.
    pub fn base_throughput_per_sm(self) -> f64 {
        1.0
    }
}

impl fmt::Display for DpxFnClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for DpxFnClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Relu16or32" | "relu" => Ok(DpxFnClass::Relu16or32),
            "SixteenBit" | "16bit" => Ok(DpxFnClass::SixteenBit),
            "SimpleThreeInputMax" | "max3" => Ok(DpxFnClass::SimpleThreeInputMax),
            _ => Err(Error::Workload(format!("unknown DPX class `{s}`"))),
        }
    }
}

pub fn dpx_mode(device: &DeviceSpec) -> DpxMode {
    if device.architecture == Architecture::Hopper {
        DpxMode::HardwareAccelerated
    } else {
        DpxMode::SoftwareEmulated
    }
}

/// Speed of `fast` relative to `slow` for a function class.
///
/// Two devices in the same mode run at parity. A reversed pair gives the reciprocal.
pub fn dpx_speedup(store: &CalibStore, fast: &DeviceSpec, slow: &DeviceSpec, class: DpxFnClass) -> Result<f64> {
    match (dpx_mode(fast), dpx_mode(slow)) {
        (a, b) if a == b => Ok(1.0),
        (DpxMode::SoftwareEmulated, DpxMode::HardwareAccelerated) => {
            Ok(1.0 / dpx_speedup(store, slow, fast, class)?)
        }
        _ => match class {
            DpxFnClass::SimpleThreeInputMax => Ok(1.0),
            other => store.value(&fast.name, MAX_SPEEDUP, &params(&[("class", &other.to_string())])),
        },
    }
}

/// Relative throughput of `blocks` blocks on a device with `sms` SMs: `b / (S ceil(b/S))`.
pub fn wave_throughput(sms: u32, blocks: u64) -> f64 {
    if blocks == 0 || sms == 0 {
        return 0.0;
    }
    let s = u64::from(sms);
    let waves = blocks.div_ceil(s);
    blocks as f64 / (s * waves) as f64
}

pub fn dpx_block_throughput(device: &DeviceSpec, class: DpxFnClass, blocks: u64) -> f64 {
    class.base_throughput_per_sm() * wave_throughput(device.sm_count, blocks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_waves_saturate() {
        for k in 1..=4 {
            assert_eq!(wave_throughput(114, 114 * k), 1.0);
        }
        assert_eq!(wave_throughput(114, 0), 0.0);
        assert!((wave_throughput(114, 115) - 115.0 / 228.0).abs() < 1e-15);
    }
}
