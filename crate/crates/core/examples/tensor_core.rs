//! Tensor-core instruction latency, throughput, sparsity, power throttling and SASS lowering.
//!
//! ```text
//! cargo run --example tensor_core
//! ```

use gpm::device::Architecture;
use gpm::tensorcore::{self, Init, Shape, Source, TcInstrDesc};
use gpm::{AccType, DataDir, Dtype};

fn main() -> gpm::Result<()> {
    let (catalog, store) = DataDir::from_env().load()?;

    let fp16 = TcInstrDesc::mma(Dtype::Fp16, AccType::Fp32, Shape::new(16, 8, 16), false);
    println!("{fp16}");
    for d in catalog.devices() {
        let lat = tensorcore::predict_latency(&store, d, &fp16)?;
        let tp = tensorcore::predict_throughput(&store, d, &fp16, Init::Zero)?;
        let eff = tensorcore::efficiency(&store, d, &fp16, Init::Zero)?;
        let sparse = tensorcore::sparse_speedup(&store, d, &fp16)?;
        println!(
            "  {:<8} latency {:>5} cycles  throughput {:>6.1} {}  {:>5.1}% of peak  sparse x{sparse:.2}",
            d.name,
            lat.value,
            tp.value,
            tp.unit,
            eff * 100.0
        );
    }

    let h800 = catalog.get("H800")?;
    println!();
    println!("wgmma FP16/FP32 SS on H800, N sweep");
    for n in [8, 16, 32, 64, 128, 256] {
        let instr = TcInstrDesc::wgmma(Dtype::Fp16, AccType::Fp32, n, Source::SS, false);
        let lookup = tensorcore::predict_throughput(&store, h800, &instr, Init::Zero)?;
        let model = tensorcore::model_wgmma_throughput(&store, h800, &instr, Init::Zero)?;
        let rand = tensorcore::predict_throughput(&store, h800, &instr, Init::Rand)?;
        println!(
            "  N={n:<3} latency {:>4}  measured {:>6.1}  analytic {model:>6.1}  random data {:>6.1}",
            tensorcore::wgmma_dense_latency(n),
            lookup.value,
            rand.value
        );
    }

    println!();
    for (a, cd, k) in [(Dtype::Fp16, AccType::Fp32, 16), (Dtype::Int8, AccType::Int32, 32), (Dtype::Fp8E4m3, AccType::Fp32, 32)] {
        let mma = TcInstrDesc::mma(a, cd, Shape::new(16, 8, k), false);
        let wg = TcInstrDesc::wgmma(a, cd, 128, Source::SS, false);
        for arch in [Architecture::Ampere, Architecture::Hopper] {
            println!(
                "  {a}/{cd} on {arch}: mma -> {:?}, wgmma -> {:?}",
                tensorcore::sass_lower(&mma, arch),
                tensorcore::sass_lower(&wg, arch)
            );
        }
    }
    Ok(())
}
