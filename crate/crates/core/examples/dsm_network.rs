//! Distributed shared memory: SM-to-SM latency, ring throughput and cluster histograms.
//!
//! ```text
//! cargo run --example dsm_network
//! ```

use gpm::dsm::{self, HistogramConfig, RbcWorkload};
use gpm::DataDir;

fn main() -> gpm::Result<()> {
    let (catalog, store) = DataDir::from_env().load()?;
    let h800 = catalog.get("H800")?;

    println!("SM-to-SM latency {} cycles", dsm::sm2sm_latency(&store, h800)?);

    println!();
    println!("ring-based copy, bytes/clk/SM");
    for cs in [2, 4, 8, 16] {
        let peak = dsm::rbc_peak(&store, h800, cs)?;
        let tp: Vec<String> = [1, 2, 4]
            .into_iter()
            .map(|ilp| {
                let w = RbcWorkload::new(cs, 1024, ilp).expect("valid ring workload");
                format!("{:.2}", dsm::rbc_throughput(&store, h800, &w).unwrap_or(f64::NAN))
            })
            .collect();
        println!("  cluster {cs:>2}: peak {peak:.2}, ILP 1/2/4 at 1024 threads -> {}", tp.join(" / "));
    }

    println!();
    println!("histogram, best cluster size at 1024 bins");
    for bs in dsm::REFERENCE_BLOCK_SIZES {
        let best = dsm::best_cluster_size(h800, bs, 1024, &dsm::REFERENCE_CLUSTER_SIZES)?;
        let cfg = HistogramConfig::new(best, bs, 1024)?;
        println!(
            "  block {bs:>4}: cluster {best}  ({} active blocks/SM, relative throughput {:.3})",
            dsm::active_blocks(h800, &cfg),
            dsm::histogram_throughput(h800, &cfg)?
        );
    }
    Ok(())
}
