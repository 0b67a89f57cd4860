//! Load the device catalog and print what each part offers.
//!
//! ```text
//! cargo run --example device_catalog
//! ```

use gpm::DataDir;

fn main() -> gpm::Result<()> {
    let catalog = DataDir::from_env().catalog()?;

    println!("{:<8} {:<8} {:>4} {:>9} {:>8} {:>10}  features", "device", "arch", "SMs", "clock MHz", "mem GiB", "bw GB/s");
    for d in catalog.devices() {
        let mut features = Vec::new();
        if d.features.fp8_tc {
            features.push("fp8");
        }
        if d.features.dpx_hardware {
            features.push("dpx");
        }
        if d.features.dsm {
            features.push("dsm");
        }
        println!(
            "{:<8} {:<8} {:>4} {:>9} {:>8} {:>10}  {}",
            d.name,
            d.architecture.to_string(),
            d.sm_count,
            d.max_clock_mhz,
            d.mem_size_gib,
            d.mem_bandwidth_gbs,
            features.join(",")
        );
    }

    println!();
    for d in catalog.devices() {
        let peaks: Vec<String> = d.tc_peaks.iter().map(|(k, v)| format!("{k} {v}")).collect();
        println!("{} dense tensor-core peaks: {}", d.name, peaks.join(", "));
    }
    Ok(())
}
