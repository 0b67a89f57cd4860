//! FP8 linear layers, full transformer layers, LLM decode bounds and FP8 rounding.
//!
//! ```text
//! cargo run --example transformer_engine
//! ```

use gpm::te::fp8::{self, Fp8Format};
use gpm::te::{self, LayerConfig, LlmDtype, LlmModelDesc, TeDtype};
use gpm::DataDir;

fn main() -> gpm::Result<()> {
    let (catalog, store) = DataDir::from_env().load()?;
    let h800 = catalog.get("H800")?;

    println!("FP8 / FP16 linear throughput on {}", h800.name);
    for n in [512, 1024, 2048, 4096, 8192, 16384] {
        println!("  N={n:<6} x{:.3}", te::fp8_linear_ratio(h800, n)?);
    }

    println!();
    println!("layer latency, ms");
    for cfg in LayerConfig::all() {
        let ms: Vec<String> = TeDtype::ALL
            .into_iter()
            .map(|dt| format!("{dt} {:.3}", te::transformer_layer_latency(&store, h800, &cfg, dt).unwrap_or(f64::NAN)))
            .collect();
        println!("  hidden {:>5}: {}", cfg.hidden_size, ms.join("  "));
    }

    println!();
    println!("decode bound, total tokens/s");
    for d in catalog.devices() {
        for (name, _) in te::LLM_MODELS {
            let model = LlmModelDesc::known(name)?;
            let cells: Vec<String> = LlmDtype::ALL
                .into_iter()
                .map(|dt| match te::llm_decode_throughput(d, &model, dt) {
                    Ok(b) => format!("{dt} {:.0}", b.total_tokens_per_s),
                    Err(e) => format!("{dt} ({e})"),
                })
                .collect();
            println!("  {:<8} {:<12} {}", d.name, name, cells.join("  "));
        }
    }

    println!();
    let x = [0.013, -1.7, 3.25, 40.0, -0.0004];
    for format in [Fp8Format::E4M3, Fp8Format::E5M2] {
        let scale = fp8::scale_for(&x, format);
        let back = fp8::dequantize(&fp8::quantize(&x, scale, format), scale);
        let worst = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("{format:?}: scale {scale:.5}, round trip {back:?}, worst error {worst:.2e}");
    }
    Ok(())
}
