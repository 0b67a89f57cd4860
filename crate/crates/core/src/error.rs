use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {msg}")]
    Format { path: String, line: usize, msg: String },

    #[error("device `{device}`: field `{field}`: {msg}")]
    Validation { device: String, field: String, msg: String },

    #[error("duplicate device `{0}`")]
    DuplicateDevice(String),

    #[error("unknown device `{0}`")]
    UnknownDevice(String),

    #[error("{device} has no {dtype} tensor-core peak")]
    UnsupportedDtype { device: String, dtype: String },

    #[error("{path}: line {line}: duplicate record {key}")]
    DuplicateRecord { path: String, line: usize, key: String },

    #[error("{path}: line {line}: unknown unit `{unit}`")]
    UnknownUnit { path: String, line: usize, unit: String },

    #[error("{path}: line {line}: metric `{metric}` uses {found}, earlier records use {expected}")]
    InconsistentUnit { path: String, line: usize, metric: String, expected: String, found: String },

    #[error("no calibration record for {device} {metric} {{{params}}}")]
    Absent { device: String, metric: String, params: String },

    #[error("instruction not supported: {0}")]
    UnsupportedInstr(String),

    #[error("invalid instruction: {0}")]
    InvalidInstr(String),

    #[error("{device} does not support {feature}")]
    FeatureUnsupported { device: String, feature: &'static str },

    #[error("{model} in {dtype} needs {need_gb:.1} GB of weights, {device} has {have_gb:.1} GB")]
    OutOfMemory { device: String, model: String, dtype: String, need_gb: f64, have_gb: f64 },

    #[error("invalid workload: {0}")]
    Workload(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn absent(device: &str, metric: &str, params: &crate::calib::Params) -> Self {
        Error::Absent {
            device: device.to_string(),
            metric: metric.to_string(),
            params: crate::calib::format_params(params),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io { path: path.display().to_string(), source }
    }

    /// True for errors a model raises when a point has no data behind it.
    pub fn is_absent(&self) -> bool {
        matches!(self, Error::Absent { .. })
    }

    /// True for errors raised when the device or instruction cannot run the workload at all.
    pub fn is_unsupported(&self) -> bool {
        matches!(
            self,
            Error::UnsupportedDtype { .. } | Error::UnsupportedInstr(_) | Error::FeatureUnsupported { .. }
        )
    }
}
