//! Latency and throughput of each memory level, the FP64 pipe clamp, and pointer-chase lookups.
//!
//! ```text
//! cargo run --example memory_hierarchy
//! ```

use gpm::memory::{self, AccessDtype, MemAccess, MemLevel};
use gpm::DataDir;

fn main() -> gpm::Result<()> {
    let (catalog, store) = DataDir::from_env().load()?;

    for d in catalog.devices() {
        println!("== {}", d.name);
        for level in MemLevel::ALL {
            let lat = memory::level_latency(&store, d, level)?;
            println!("  {:<7} latency {lat:>6} cycles", level.label());
        }
        for level in [MemLevel::L1, MemLevel::L2] {
            for dtype in AccessDtype::ALL {
                let r = memory::effective_cache_throughput(&store, d, level, MemAccess::new(dtype))?;
                let clamp = if r.clamped { format!("  (FP64 pipe caps at {:.1})", r.modeled()) } else { String::new() };
                println!("  {:<7} {:<7} {:>8} {}{clamp}", level.label(), dtype.as_str(), r.rate.value, r.rate.unit);
            }
        }
        println!("  global efficiency {:.3}", memory::global_efficiency(&store, d)?);
        println!("  L2 / global bandwidth {:.2}", memory::l2_over_global_bw(&store, d)?);
        for kib in [16u64, 1024, 1 << 20] {
            let ws = kib * 1024;
            let level = memory::pchase_level(d, ws).map_or("?", |l| l.label());
            println!("  pointer chase over {kib} KiB lands in {level}: {} cycles", memory::pchase_latency(&store, d, ws)?);
        }
    }

    let ratios = memory::latency_ratios(&store, catalog.devices())?;
    println!();
    println!("mean L2/L1 latency {:.2}", ratios.avg_l2_over_l1);
    println!("mean global/L2 latency {:.2}", ratios.avg_global_over_l2);
    Ok(())
}
