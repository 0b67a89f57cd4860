//! Tensor-core operand types.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Input (A/B) element type of a tensor-core instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dtype {
    #[serde(rename = "FP16")]
    Fp16,
    #[serde(rename = "BF16")]
    Bf16,
    #[serde(rename = "TF32")]
    Tf32,
    #[serde(rename = "FP8_E4M3")]
    Fp8E4m3,
    #[serde(rename = "FP8_E5M2")]
    Fp8E5m2,
    #[serde(rename = "INT8")]
    Int8,
    #[serde(rename = "INT4")]
    Int4,
    #[serde(rename = "Binary")]
    Binary,
}

impl Dtype {
    pub const ALL: [Dtype; 8] = [
        Dtype::Fp16,
        Dtype::Bf16,
        Dtype::Tf32,
        Dtype::Fp8E4m3,
        Dtype::Fp8E5m2,
        Dtype::Int8,
        Dtype::Int4,
        Dtype::Binary,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Dtype::Fp16 => "FP16",
            Dtype::Bf16 => "BF16",
            Dtype::Tf32 => "TF32",
            Dtype::Fp8E4m3 => "FP8_E4M3",
            Dtype::Fp8E5m2 => "FP8_E5M2",
            Dtype::Int8 => "INT8",
            Dtype::Int4 => "INT4",
            Dtype::Binary => "Binary",
        }
    }

    /// Key into a device's peak table. BF16 shares the FP16 pipe and both FP8 formats share one peak.
    pub fn peak_key(self) -> &'static str {
        match self {
            Dtype::Fp16 | Dtype::Bf16 => "FP16",
            Dtype::Tf32 => "TF32",
            Dtype::Fp8E4m3 | Dtype::Fp8E5m2 => "FP8",
            Dtype::Int8 => "INT8",
            Dtype::Int4 => "INT4",
            Dtype::Binary => "Binary",
        }
    }

    /// Name used in calibration records, where the two FP8 formats share a row.
    pub fn calib_key(self) -> &'static str {
        match self {
            Dtype::Fp8E4m3 | Dtype::Fp8E5m2 => "FP8",
            other => other.as_str(),
        }
    }

    pub fn is_integer(self) -> bool {
        matches!(self, Dtype::Int8 | Dtype::Int4 | Dtype::Binary)
    }

    pub fn is_fp8(self) -> bool {
        matches!(self, Dtype::Fp8E4m3 | Dtype::Fp8E5m2)
    }
}

impl fmt::Display for Dtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dtype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let up = s.to_ascii_uppercase();
        Ok(match up.as_str() {
            "FP16" | "F16" => Dtype::Fp16,
            "BF16" => Dtype::Bf16,
            "TF32" => Dtype::Tf32,
            "FP8" | "FP8_E4M3" | "E4M3" => Dtype::Fp8E4m3,
            "FP8_E5M2" | "E5M2" => Dtype::Fp8E5m2,
            "INT8" | "S8" => Dtype::Int8,
            "INT4" | "S4" => Dtype::Int4,
            "BINARY" | "B1" => Dtype::Binary,
            _ => return Err(Error::Workload(format!("unknown input dtype `{s}`"))),
        })
    }
}

/// Accumulator (C/D) element type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AccType {
    #[serde(rename = "FP16")]
    Fp16,
    #[serde(rename = "FP32")]
    Fp32,
    #[serde(rename = "INT32")]
    Int32,
}

impl AccType {
    pub fn as_str(self) -> &'static str {
        match self {
            AccType::Fp16 => "FP16",
            AccType::Fp32 => "FP32",
            AccType::Int32 => "INT32",
        }
    }
}

impl fmt::Display for AccType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AccType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_uppercase().as_str() {
            "FP16" | "F16" => Ok(AccType::Fp16),
            "FP32" | "F32" => Ok(AccType::Fp32),
            "INT32" | "S32" => Ok(AccType::Int32),
            _ => Err(Error::Workload(format!("unknown accumulator dtype `{s}`"))),
        }
    }
}
