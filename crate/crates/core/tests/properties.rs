use gpm::async_pipe::{self, AsyncMatmulConfig, AsyncMode, PipelineParams};
use gpm::calib::{format_params, parse_params, Params};
use gpm::dpx;
use gpm::dsm::{self, HistogramConfig};
use gpm::te::fp8::{self, Fp8Format};
use gpm::te::{self, LlmDtype, LlmModelDesc, TeDtype, TeLinearPoint};
use gpm::tensorcore::{self, Shape, Source, TcInstrDesc};
use gpm::{AccType, Catalog, DataDir, Dtype};
use proptest::prelude::*;

fn catalog() -> Catalog {
    DataDir::bundled().catalog().unwrap()
}

/// Tensor-core input type a linear layer of `dtype` runs on.
fn pipe(dtype: TeDtype) -> Dtype {
    match dtype {
        TeDtype::Fp32 => Dtype::Tf32,
        TeDtype::Fp16 => Dtype::Fp16,
        TeDtype::Fp8 => Dtype::Fp8E4m3,
    }
}

fn format() -> impl Strategy<Value = Fp8Format> {
    prop_oneof![Just(Fp8Format::E4M3), Just(Fp8Format::E5M2)]
}

proptest! {
    #[test]
    fn waves_match_slot_counting(sms in 1u32..256, blocks in 0u64..5000) {
        let t = dpx::wave_throughput(sms, blocks);
        let s = u64::from(sms);
        let slots = blocks.div_ceil(s) * s;
        let expected = if blocks == 0 { 0.0 } else { blocks as f64 / slots as f64 };
        prop_assert!((t - expected).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&t));
    }

    #[test]
    fn full_waves_are_never_worse(sms in 1u32..256, k in 1u64..20, extra in 1u64..255) {
        let s = u64::from(sms);
        prop_assume!(extra < s);
        prop_assert!(dpx::wave_throughput(sms, k * s + extra) < dpx::wave_throughput(sms, k * s));
    }

    #[test]
    fn fp8_round_trip_within_half_quantum(
        xs in prop::collection::vec(-1.0e4f64..1.0e4, 1..64),
        format in format(),
    ) {
        let scale = fp8::scale_for(&xs, format);
        let q = fp8::quantize(&xs, scale, format);
        let back = fp8::dequantize(&q, scale);
        for ((x, y), qv) in xs.iter().zip(&back).zip(&q) {
            prop_assert!(qv.abs() <= format.max_finite());
            let bound = fp8::error_bound(*x, scale, format);
            prop_assert!((x - y).abs() <= bound * (1.0 + 1e-12), "{x} -> {y}, bound {bound}");
        }
    }

    #[test]
    fn fp8_rounding_is_idempotent(v in -6.0e4f64..6.0e4, format in format()) {
        let once = format.round(v);
        prop_assert_eq!(format.round(once), once);
        prop_assert!(once.abs() <= format.max_finite());
    }

    #[test]
    fn histogram_occupancy_respects_every_limit(
        dev in 0usize..3,
        cs in prop::sample::select(vec![1u32, 2, 4, 8, 16]),
        bs in prop::sample::select(vec![32u32, 64, 128, 256, 512, 1024]),
        nbins in 1u64..65536,
    ) {
        let catalog = catalog();
        let d = &catalog.devices()[dev];
        let cfg = HistogramConfig::new(cs, bs, nbins).unwrap();
        let n = dsm::active_blocks(d, &cfg);
        prop_assert!(n <= dsm::MAX_BLOCKS_PER_SM);
        prop_assert!(n * bs <= d.max_threads_per_sm);
        prop_assert!(u64::from(n) * cfg.bytes_per_block() <= d.smem_carveout_bytes);
        let c = dsm::concurrency(d, &cfg);
        prop_assert!((0.0..=1.0).contains(&c));
    }

    #[test]
    fn more_bins_never_raise_occupancy(bs in prop::sample::select(vec![128u32, 256, 512, 1024]), nbins in 1u64..32768) {
        let catalog = catalog();
        let h800 = catalog.get("H800").unwrap();
        for cs in dsm::REFERENCE_CLUSTER_SIZES {
            let small = dsm::active_blocks(h800, &HistogramConfig::new(cs, bs, nbins).unwrap());
            let large = dsm::active_blocks(h800, &HistogramConfig::new(cs, bs, nbins * 2).unwrap());
            prop_assert!(large <= small);
        }
    }

    #[test]
    fn mma_ops_are_two_mnk(m in 1u32..64, n in 1u32..256, k in 1u32..256) {
        let instr = TcInstrDesc::mma(Dtype::Fp16, AccType::Fp32, Shape::new(m, n, k), false);
        prop_assert_eq!(instr.ops(), 2 * u64::from(m) * u64::from(n) * u64::from(k));
        prop_assert_eq!(tensorcore::instr_ops(&instr), instr.ops());
        prop_assert_eq!(instr.to_sparse().ops(), 2 * instr.ops());
    }

    #[test]
    fn wgmma_latency_is_half_n(step in 1u32..=32) {
        let n = 8 * step;
        prop_assert_eq!(tensorcore::wgmma_dense_latency(n), f64::from(n) / 2.0);
        let instr = TcInstrDesc::wgmma(Dtype::Fp16, AccType::Fp32, n, Source::SS, false);
        prop_assert_eq!(instr.ops(), 2 * 64 * u64::from(n) * 16);
    }

    #[test]
    fn pipeline_throughput_grows_with_occupancy(
        copy in 10.0f64..2000.0,
        compute in 10.0f64..2000.0,
        overlap in 0.0f64..500.0,
        sync_issue in 1.0f64..500.0,
        async_issue in 1.0f64..500.0,
        sync_knee in 1.0f64..4.0,
        async_knee in 1.0f64..4.0,
        bd in prop::sample::select(async_pipe::BLOCK_DIMS.to_vec()),
    ) {
        let catalog = catalog();
        let d = catalog.get("A100").unwrap();
        let p = PipelineParams {
            copy_cycles: copy,
            compute_cycles: compute,
            overlap_cycles: overlap,
            sync_issue_cycles: sync_issue,
            async_issue_cycles: async_issue,
            sync_knee,
            async_knee,
        };
        for mode in [AsyncMode::SyncShare, AsyncMode::AsyncPipe] {
            let tp: Vec<f64> = async_pipe::BLOCKS_PER_SM
                .iter()
                .map(|&b| async_pipe::modeled_gflops(d, &p, &AsyncMatmulConfig::new(bd, b).unwrap(), mode))
                .collect();
            prop_assert!(tp.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)), "{mode}: {tp:?}");
            prop_assert!(tp.iter().all(|v| v.is_finite() && *v > 0.0));
        }
    }

    #[test]
    fn p_norm_sits_between_max_and_sum(a in 0.0f64..1e6, b in 0.0f64..1e6, p in 1.0f64..16.0) {
        let v = async_pipe::p_norm(a, b, p);
        let tol = 1e-9 * (a + b).max(1.0);
        prop_assert!(v >= a.max(b) - tol);
        prop_assert!(v <= a + b + tol);
    }

    #[test]
    fn linear_layers_take_longer_as_they_grow(dev in 0usize..3, exp in 7u32..15) {
        let catalog = catalog();
        let d = &catalog.devices()[dev];
        let dtypes: &[TeDtype] = if d.features.fp8_tc { &TeDtype::ALL } else { &[TeDtype::Fp32, TeDtype::Fp16] };
        for &dtype in dtypes {
            let t = |n| te::te_linear_seconds(d, &TeLinearPoint { n, dtype }).unwrap();
            prop_assert!(t(1 << (exp + 1)) > t(1 << exp));
            let peak = d.peak_tc_throughput(pipe(dtype), false).unwrap();
            let gflops = te::te_linear_throughput(d, &TeLinearPoint { n: 1 << exp, dtype }).unwrap();
            prop_assert!(gflops <= peak * 1e3 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn decode_bound_scales_inversely_with_weight_bytes(params in 1.0e8f64..4.0e9) {
        let catalog = catalog();
        let h800 = catalog.get("H800").unwrap();
        let model = LlmModelDesc::new("probe", params);
        let fp32 = te::llm_decode_throughput(h800, &model, LlmDtype::Fp32).unwrap();
        let bf16 = te::llm_decode_throughput(h800, &model, LlmDtype::Bf16).unwrap();
        let fp8 = te::llm_decode_throughput(h800, &model, LlmDtype::Fp8).unwrap();
        prop_assert!((bf16.total_tokens_per_s / fp32.total_tokens_per_s - 2.0).abs() < 1e-9);
        prop_assert!((fp8.total_tokens_per_s / bf16.total_tokens_per_s - 2.0).abs() < 1e-9);
        prop_assert!(fp32.total_tokens_per_s > fp32.output_tokens_per_s);
    }

    #[test]
    fn params_text_round_trips(pairs in prop::collection::btree_map("[a-z_]{1,8}", "[A-Za-z0-9.]{1,8}", 0..6)) {
        let p: Params = pairs.into_iter().collect();
        let text = format_params(&p);
        prop_assert_eq!(parse_params(&text).unwrap(), p);
    }
}
