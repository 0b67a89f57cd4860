//! Calibrated analytical performance model of Ampere, Ada Lovelace and Hopper GPUs.
//!
//! Measurements live in a [`CalibStore`]; devices in a [`Catalog`]. Each model module answers
//! one family of questions (memory, tensor cores, DPX, async copies, distributed shared memory,
//! FP8 transformer layers) from those two inputs. [`workload`] runs declarative sweeps through
//! the models and [`validate`] checks them against the acceptance tolerances.
//!
//! ```
//! use gpm::{DataDir, memory::{self, MemLevel}};
//!
//! let (catalog, store) = DataDir::bundled().load().unwrap();
//! let h800 = catalog.get("H800").unwrap();
//! assert_eq!(memory::level_latency(&store, h800, MemLevel::L1).unwrap(), 40.7);
//! ```

pub mod async_pipe;
pub mod calib;
pub mod data;
pub mod device;
pub mod dpx;
pub mod dsm;
pub mod dtype;
pub mod error;
pub mod estimate;
pub mod memory;
pub mod report;
pub mod te;
pub mod tensorcore;
pub mod validate;
pub mod workload;

pub use calib::{CalibRecord, CalibStore, Params, Unit};
pub use data::DataDir;
pub use device::{Catalog, DeviceSpec};
pub use dtype::{AccType, Dtype};
pub use error::{Error, Result};
pub use estimate::Estimate;
pub use report::{Format, PredictionReport, ReportRow, Status};
pub use validate::{Tolerances, ValidationResult};
pub use workload::{run_workload, WorkloadKind, WorkloadSpec};
