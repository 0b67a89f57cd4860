//! Locating the shipped device, calibration and tolerance files.

use std::path::{Path, PathBuf};

use crate::calib::CalibStore;
use crate::device::Catalog;
use crate::error::Result;

pub const DATA_DIR_ENV: &str = "GPM_DATA_DIR";
pub const DEVICES_FILE: &str = "devices/paper_devices.json";
pub const CALIB_FILE: &str = "calib/paper_tables.csv";
pub const TOLERANCES_FILE: &str = "tolerances.json";

#[derive(Debug, Clone)]
pub struct DataDir {
    root: PathBuf,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DataDir { root: root.into() }
    }

    /// `$GPM_DATA_DIR` when set, otherwise the data directory shipped with the crate.
    pub fn from_env() -> Self {
        match std::env::var_os(DATA_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Self::new(dir),
            _ => Self::bundled(),
        }
    }

    pub fn bundled() -> Self {
        Self::new(concat!(env!("CARGO_MANIFEST_DIR"), "/data"))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn devices_path(&self) -> PathBuf {
        self.root.join(DEVICES_FILE)
    }

    pub fn calib_path(&self) -> PathBuf {
        self.root.join(CALIB_FILE)
    }

    pub fn tolerances_path(&self) -> PathBuf {
        self.root.join(TOLERANCES_FILE)
    }

    pub fn catalog(&self) -> Result<Catalog> {
        Catalog::load(self.devices_path())
    }

    pub fn calibration(&self) -> Result<CalibStore> {
        CalibStore::load(self.calib_path())
    }

    pub fn load(&self) -> Result<(Catalog, CalibStore)> {
        Ok((self.catalog()?, self.calibration()?))
    }
}
