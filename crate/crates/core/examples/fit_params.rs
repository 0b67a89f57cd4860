//! Refit the pipeline and FP8 cast parameters and write them into the calibration file.
//!
//! ```text
//! cargo run --release --example fit_params            # fit and rewrite data/calib/paper_tables.csv
//! cargo run --release --example fit_params -- --dry   # fit and print, leave the file alone
//! ```

use gpm::async_pipe::fit::{fit_device, store_results, FitOptions};
use gpm::async_pipe::PERF_GAIN;
use gpm::calib::params;
use gpm::te;
use gpm::DataDir;

fn main() -> gpm::Result<()> {
    let dry = std::env::args().any(|a| a == "--dry");
    let data = DataDir::from_env();
    let (catalog, mut store) = data.load()?;
    let opts = FitOptions::default();

    for name in ["A100", "H800"] {
        let device = catalog.get(name)?;
        let results = fit_device(&store, device, &opts)?;
        for r in &results {
            let measured = store.value(name, PERF_GAIN, &params(&[("block", &r.block_dim.to_string())]))?;
            println!(
                "{name} {bd}x{bd}: knees {}/{} worst cell {:.2}% improvement {:.2}% (measured {measured}%)",
                r.params.sync_knee,
                r.params.async_knee,
                r.max_cell_error * 100.0,
                r.gain_percent,
                bd = r.block_dim,
            );
        }
        store_results(&mut store, device, &results)?;
    }

    store.remove_metric_prefix(te::LAYER_CAST_BYTES);
    for device in catalog.devices().iter().filter(|d| d.features.fp8_tc) {
        let k = te::fit_layer_cast_bytes(device)?;
        println!("{}: FP8 cast cost {k:.4} bytes per GEMM input element", device.name);
        store.insert(te::cast_record(device, k))?;
    }

    if dry {
        return Ok(());
    }
    let path = data.calib_path();
    std::fs::write(&path, store.dump()).map_err(|e| gpm::Error::Io { path: path.display().to_string(), source: e })?;
    println!("wrote {} records to {}", store.len(), path.display());
    Ok(())
}
