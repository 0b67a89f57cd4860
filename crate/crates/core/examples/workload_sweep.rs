//! Run a workload file through the models and print the report in every format.
//!
//! ```text
//! cargo run --example workload_sweep -- data/workloads/rbc_sweep.json
//! ```

use gpm::{run_workload, DataDir, Format, WorkloadSpec};

fn main() -> gpm::Result<()> {
    let data = DataDir::from_env();
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| data.root().join("workloads/mem_latency.json").display().to_string());
    let (catalog, store) = data.load()?;

    let spec = WorkloadSpec::load(&path)?;
    let report = run_workload(&spec, &catalog, &store)?;
    println!("{} rows from {path}", report.rows.len());
    for format in [Format::Md, Format::Csv, Format::Json] {
        println!("\n--- {format}");
        print!("{}", report.render(format)?);
    }
    Ok(())
}
