//! FP8 (E4M3 / E5M2) rounding with per-tensor max-abs scaling.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fp8Format {
    E4M3,
    E5M2,
}

impl Fp8Format {
    pub fn max_finite(self) -> f64 {
        match self {
            Fp8Format::E4M3 => 448.0,
            Fp8Format::E5M2 => 57344.0,
        }
    }

    pub fn mantissa_bits(self) -> i32 {
        match self {
            Fp8Format::E4M3 => 3,
            Fp8Format::E5M2 => 2,
        }
    }

    /// Exponent of the smallest normal value.
    pub fn min_normal_exp(self) -> i32 {
        match self {
            Fp8Format::E4M3 => -6,
            Fp8Format::E5M2 => -14,
        }
    }

    /// Spacing of representable values around `v`.
    pub fn quantum(self, v: f64) -> f64 {
        let e = if v == 0.0 { self.min_normal_exp() } else { (v.abs().log2().floor() as i32).max(self.min_normal_exp()) };
        2f64.powi(e - self.mantissa_bits())
    }

    /// Round to the nearest representable value (ties to even), saturating at the largest finite one.
    pub fn round(self, v: f64) -> f64 {
        if v.is_nan() {
            return v;
        }
        let max = self.max_finite();
        let mag = v.abs().min(max);
        let q = self.quantum(mag);
        let rounded = ((mag / q).round_ties_even() * q).min(max);
        rounded.copysign(v)
    }
}

/// Per-tensor scale: the max-abs value maps onto the format's largest finite value.
pub fn scale_for(values: &[f64], format: Fp8Format) -> f64 {
    let amax = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if amax == 0.0 {
        1.0
    } else {
        amax / format.max_finite()
    }
}

/// `x / scale` rounded to the format.
pub fn quantize(values: &[f64], scale: f64, format: Fp8Format) -> Vec<f64> {
    values.iter().map(|v| format.round(v / scale)).collect()
}

pub fn dequantize(values: &[f64], scale: f64) -> Vec<f64> {
    values.iter().map(|v| v * scale).collect()
}

/// Largest error rounding can introduce for `x` under `scale`: half a quantum, in input units.
pub fn error_bound(x: f64, scale: f64, format: Fp8Format) -> f64 {
    0.5 * format.quantum(x / scale) * scale
}
