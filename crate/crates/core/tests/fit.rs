use gpm::async_pipe::fit::{fit_block, FitOptions, FitTarget};
use gpm::async_pipe::PipelineParams;
use gpm::DataDir;

/// Search restricted to the stored knee pair so the fit stays quick in debug builds.
fn quick(stored: &PipelineParams) -> FitOptions {
    FitOptions {
        knees: vec![stored.sync_knee, stored.async_knee],
        starts: 4,
        restarts: 2,
        max_iters: 1500,
        ..FitOptions::default()
    }
}

#[test]
fn refit_reproduces_the_measured_columns() {
    let data = DataDir::bundled();
    let (catalog, store) = data.load().unwrap();
    for (name, block_dim) in [("H800", 8), ("A100", 8)] {
        let device = catalog.get(name).unwrap();
        let stored = PipelineParams::load(&store, device, block_dim).unwrap();
        let target = FitTarget::from_store(&store, device, block_dim).unwrap();
        let opts = quick(&stored);

        let fit = fit_block(device, &target, &opts).unwrap();
        assert!(fit.max_cell_error <= 0.10, "{name}: worst cell {:.3}", fit.max_cell_error);
        assert!((fit.gain_percent - target.gain_percent).abs() <= 2.0, "{name}: {} vs {}", fit.gain_percent, target.gain_percent);
        fit.params.validate().unwrap();

        assert_eq!(fit_block(device, &target, &opts).unwrap(), fit, "{name}: same seed, different fit");
    }
}
