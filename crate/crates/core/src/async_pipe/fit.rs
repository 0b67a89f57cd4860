//! Offline fit of [`PipelineParams`] to the measured sync/async columns.
//!
//! Five costs are fit in log space with Nelder-Mead from seeded random starts, once per pair
//! of knee exponents on a small grid. The objective is the L8 norm of log residuals over the
//! twelve cells plus the deviation of the mean improvement from the measured one. Everything
//! is deterministic for a given seed.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    mean_improvement, measured_columns, modeled_gflops, AsyncMatmulConfig, AsyncMode, PipelineParams, BLOCKS_PER_SM,
    BLOCK_DIMS, PERF_GAIN, PARAMS_PREFIX,
};
use crate::calib::{params, CalibStore};
use crate::device::DeviceSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub knees: Vec<f64>,
    pub starts: usize,
    pub restarts: usize,
    pub max_iters: u64,
    pub seed: u64,
    /// Weight on the improvement residual relative to a cell's log residual.
    pub gain_weight: f64,
    pub norm: i32,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            knees: vec![1.0, 1.5, 2.0, 2.5, 3.0],
            starts: 12,
            restarts: 4,
            max_iters: 4000,
            seed: 0x5eed_a5c0,
            gain_weight: 10.0,
            norm: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub block_dim: u32,
    pub params: PipelineParams,
    /// Largest relative error over the twelve cells.
    pub max_cell_error: f64,
    /// Modeled mean improvement, percent.
    pub gain_percent: f64,
    pub cost: f64,
}

/// Measured columns for one block size.
#[derive(Debug, Clone)]
pub struct FitTarget {
    pub block_dim: u32,
    pub async_tp: Vec<f64>,
    pub sync_tp: Vec<f64>,
    pub gain_percent: f64,
}

impl FitTarget {
    pub fn from_store(store: &CalibStore, device: &DeviceSpec, block_dim: u32) -> Result<Self> {
        let (async_tp, sync_tp) = measured_columns(store, device, block_dim)?;
        let gain_percent = store.value(&device.name, PERF_GAIN, &params(&[("block", &block_dim.to_string())]))?;
        Ok(FitTarget { block_dim, async_tp, sync_tp, gain_percent })
    }
}

#[derive(Clone)]
struct Objective<'a> {
    device: &'a DeviceSpec,
    target: &'a FitTarget,
    sync_knee: f64,
    async_knee: f64,
    gain_weight: f64,
    norm: i32,
}

impl Objective<'_> {
    fn params(&self, q: &[f64]) -> PipelineParams {
        let e = |x: f64| x.clamp(-40.0, 40.0).exp();
        PipelineParams {
            copy_cycles: e(q[0]),
            compute_cycles: e(q[1]),
            overlap_cycles: e(q[2]),
            sync_issue_cycles: e(q[3]),
            async_issue_cycles: e(q[4]),
            sync_knee: self.sync_knee,
            async_knee: self.async_knee,
        }
    }

    fn columns(&self, p: &PipelineParams) -> (Vec<f64>, Vec<f64>) {
        let cfgs = BLOCKS_PER_SM.map(|b| AsyncMatmulConfig::new(self.target.block_dim, b).expect("grid point"));
        let a = cfgs.iter().map(|c| modeled_gflops(self.device, p, c, AsyncMode::AsyncPipe)).collect();
        let s = cfgs.iter().map(|c| modeled_gflops(self.device, p, c, AsyncMode::SyncShare)).collect();
        (a, s)
    }

    fn evaluate(&self, q: &[f64]) -> f64 {
        let p = self.params(q);
        let (a, s) = self.columns(&p);
        let t = self.target;
        let cells = a.iter().zip(&t.async_tp).chain(s.iter().zip(&t.sync_tp)).map(|(m, d)| (m / d).ln());
        let gain = self.gain_weight * (mean_improvement(&a, &s) - t.gain_percent) / 100.0;
        cells.chain(std::iter::once(gain)).map(|r| r.abs().powi(self.norm)).sum()
    }

    fn summarize(&self, q: &[f64], cost: f64) -> FitResult {
        let p = self.params(q);
        let (a, s) = self.columns(&p);
        let t = self.target;
        let max_cell_error = a
            .iter()
            .zip(&t.async_tp)
            .chain(s.iter().zip(&t.sync_tp))
            .map(|(m, d)| (m / d - 1.0).abs())
            .fold(0.0, f64::max);
        FitResult { block_dim: t.block_dim, params: p, max_cell_error, gain_percent: mean_improvement(&a, &s), cost }
    }
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, q: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.evaluate(q))
    }
}

fn nelder_mead(obj: &Objective<'_>, start: Vec<f64>, max_iters: u64) -> Result<(Vec<f64>, f64)> {
    let mut simplex = vec![start.clone()];
    for i in 0..start.len() {
        let mut v = start.clone();
        v[i] += 0.5;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex).with_sd_tolerance(1e-14).map_err(|e| Error::Fit(e.to_string()))?;
    let res = Executor::new(obj.clone(), solver)
        .configure(|s| s.max_iters(max_iters))
        .run()
        .map_err(|e| Error::Fit(e.to_string()))?;
    let best = res.state().get_best_param().cloned().unwrap_or(start);
    let cost = obj.evaluate(&best);
    Ok((best, cost))
}

/// Log-space starting point implied by the measured end points of the sweep.
fn anchor(device: &DeviceSpec, t: &FitTarget) -> [f64; 5] {
    let cfg = AsyncMatmulConfig::new(t.block_dim, 1).expect("grid point");
    let scale = cfg.work_per_block() / cfg.n_tiles() * f64::from(device.sm_count) * device.effective_clock_ghz();
    let lat = scale / t.sync_tp[0];
    let last = t.sync_tp.len() - 1;
    let issue = scale / t.sync_tp[last];
    [(lat / 2.0).ln(), (lat / 2.0).ln(), (lat / 10.0).ln(), issue.ln(), issue.ln()]
}

fn fit_with_knees(device: &DeviceSpec, t: &FitTarget, sync_knee: f64, async_knee: f64, opts: &FitOptions) -> Result<FitResult> {
    let obj = Objective { device, target: t, sync_knee, async_knee, gain_weight: opts.gain_weight, norm: opts.norm };
    let center = anchor(device, t);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ u64::from(t.block_dim));
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..opts.starts {
        let mut q: Vec<f64> = center.iter().map(|c| c + rng.random_range(-1.5..1.5)).collect();
        let mut cost = f64::INFINITY;
        for _ in 0..opts.restarts {
            (q, cost) = nelder_mead(&obj, q, opts.max_iters)?;
        }
        if best.as_ref().is_none_or(|(_, c)| cost < *c) {
            best = Some((q, cost));
        }
    }
    let (q, cost) = best.ok_or_else(|| Error::Fit("no starts requested".into()))?;
    Ok(obj.summarize(&q, cost))
}

/// Fit one block size, choosing the knee pair with the smallest worst-cell error.
pub fn fit_block(device: &DeviceSpec, target: &FitTarget, opts: &FitOptions) -> Result<FitResult> {
    let pairs: Vec<(f64, f64)> = opts.knees.iter().flat_map(|&s| opts.knees.iter().map(move |&a| (s, a))).collect();
    let fits: Vec<FitResult> = pairs
        .par_iter()
        .map(|&(s, a)| fit_with_knees(device, target, s, a, opts))
        .collect::<Result<_>>()?;
    fits.into_iter()
        .reduce(|best, f| if f.max_cell_error < best.max_cell_error { f } else { best })
        .ok_or_else(|| Error::Fit("empty knee grid".into()))
}

/// Fit every block size for a device.
pub fn fit_device(store: &CalibStore, device: &DeviceSpec, opts: &FitOptions) -> Result<Vec<FitResult>> {
    BLOCK_DIMS
        .iter()
        .map(|&bd| fit_block(device, &FitTarget::from_store(store, device, bd)?, opts))
        .collect()
}

/// Replace a device's stored parameters with fitted ones.
pub fn store_results(store: &mut CalibStore, device: &DeviceSpec, results: &[FitResult]) -> Result<()> {
    let mut kept: Vec<_> = store
        .records()
        .iter()
        .filter(|r| !(r.device == device.name && r.metric_id.starts_with(PARAMS_PREFIX)))
        .cloned()
        .collect();
    for r in results {
        kept.extend(r.params.to_records(&device.name, r.block_dim));
    }
    let mut fresh = CalibStore::new();
    for r in kept {
        fresh.insert(r)?;
    }
    *store = fresh;
    Ok(())
}
