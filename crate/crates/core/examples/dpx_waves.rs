//! DPX throughput under wave quantization, and hardware versus emulated speedups.
//!
//! ```text
//! cargo run --example dpx_waves
//! ```

use gpm::dpx::{self, DpxFnClass};
use gpm::DataDir;

fn main() -> gpm::Result<()> {
    let (catalog, store) = DataDir::from_env().load()?;
    let h800 = catalog.get("H800")?;

    println!("fraction of peak reached as the grid grows on {} ({} SMs)", h800.name, h800.sm_count);
    let sms = u64::from(h800.sm_count);
    for blocks in [1, sms / 2, sms, sms + 1, 2 * sms, 2 * sms + 1, 10 * sms] {
        println!("  {blocks:>5} blocks  {:.4}", dpx::wave_throughput(h800.sm_count, blocks));
    }

    println!();
    for d in catalog.devices() {
        println!("{:<8} {:?}", d.name, dpx::dpx_mode(d));
        for class in DpxFnClass::ALL {
            println!("  {:<20} {:.3} of peak at 1000 blocks", class.to_string(), dpx::dpx_block_throughput(d, class, 1000));
        }
    }

    println!();
    for slow in ["A100", "RTX4090"] {
        let slow = catalog.get(slow)?;
        for class in DpxFnClass::ALL {
            let speedup = match dpx::dpx_speedup(&store, h800, slow, class) {
                Ok(x) => format!("x{x}"),
                Err(e) if e.is_absent() => "not calibrated".to_string(),
                Err(e) => return Err(e),
            };
            println!("H800 over {:<8} {:<20} {speedup}", slow.name, class.to_string());
        }
    }
    Ok(())
}
