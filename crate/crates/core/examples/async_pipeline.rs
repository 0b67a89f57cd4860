//! Synchronous versus asynchronous (`cp.async`) tiled matmul throughput.
//!
//! ```text
//! cargo run --example async_pipeline
//! ```

use gpm::async_pipe::{self, AsyncMatmulConfig, AsyncMode, PipelineParams, BLOCKS_PER_SM, BLOCK_DIMS};
use gpm::DataDir;

fn main() -> gpm::Result<()> {
    let (catalog, store) = DataDir::from_env().load()?;

    for name in ["A100", "H800"] {
        let d = catalog.get(name)?;
        for bd in BLOCK_DIMS {
            let p = PipelineParams::load(&store, d, bd)?;
            println!(
                "{name} {bd}x{bd}: copy {:.0} compute {:.0} overlap {:.0} cycles, improvement {:.1}% (measured {:.1}%)",
                p.copy_cycles,
                p.compute_cycles,
                p.overlap_cycles,
                async_pipe::pipeline_improvement(&store, d, bd)?,
                async_pipe::measured_improvement(&store, d, bd)?,
            );
            println!("  {:>7} {:>10} {:>10} {:>10} {:>10}", "blk/SM", "sync", "measured", "async", "measured");
            for b in BLOCKS_PER_SM {
                let cfg = AsyncMatmulConfig::new(bd, b)?;
                let row: Vec<f64> = [AsyncMode::SyncShare, AsyncMode::AsyncPipe]
                    .into_iter()
                    .flat_map(|m| {
                        [
                            async_pipe::modeled_gflops(d, &p, &cfg, m),
                            async_pipe::measured_gflops(&store, d, &cfg, m).unwrap_or(f64::NAN),
                        ]
                    })
                    .collect();
                println!("  {b:>7} {:>10.1} {:>10.1} {:>10.1} {:>10.1}", row[0], row[1], row[2], row[3]);
            }
        }
    }
    Ok(())
}
