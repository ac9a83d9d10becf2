//! Rayon scheduling of the core routines. Results are merged in a fixed
//! order, so every thread count gives bit-identical output.

use ctmc_trunc_core::limits::{analyze_window, assemble_report, LeakMeasurement, SweepConfig, SweepReport};
use ctmc_trunc_core::presets::window_sequence;
use ctmc_trunc_core::recurrence::{
    absorption_chunk, check_return_args, chunks, return_chunk, AbsorptionAccumulator, AbsorptionStats, Event,
    ReturnAccumulator, TrajectoryStats,
};
use ctmc_trunc_core::{Network, StateLabel};
use rayon::prelude::*;

use crate::error::{CliError, Result};

pub const THREADS_ENV: &str = "CTMC_TRUNC_THREADS";

/// `--threads`, then the environment, then the config, then all cores.
pub fn thread_count(flag: Option<usize>, config: Option<usize>) -> Result<usize> {
    if let Some(n) = flag {
        return positive(n, "--threads");
    }
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n = v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("{THREADS_ENV}=`{v}` is not a thread count")))?;
        return positive(n, THREADS_ENV);
    }
    if let Some(n) = config {
        return positive(n, "threads");
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn positive(n: usize, what: &str) -> Result<usize> {
    if n == 0 {
        Err(CliError::Config(format!("{what} must be at least 1")))
    } else {
        Ok(n)
    }
}

pub fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))
}

/// The sweep with windows analyzed concurrently.
pub fn sweep<N: Network + Sync + ?Sized>(pool: &rayon::ThreadPool, net: &N, cfg: &SweepConfig) -> Result<SweepReport> {
    let windows = window_sequence(net, cfg.window_kind, &cfg.sizes)?;
    let data = pool.install(|| {
        windows
            .par_iter()
            .map(|f| analyze_window(net, f, cfg))
            .collect::<ctmc_trunc_core::Result<Vec<_>>>()
    })?;
    let leak = match &cfg.leak_probe {
        Some(p) => {
            let stats = absorption(pool, net, p.start, p.horizon, p.n, p.seed)?;
            Some(LeakMeasurement::from_stats(&stats, &windows[windows.len() - 1]))
        }
        None => None,
    };
    Ok(assemble_report(net.name(), cfg, &data, leak)?)
}

pub fn absorption<N: Network + Sync + ?Sized>(
    pool: &rayon::ThreadPool,
    net: &N,
    start: StateLabel,
    horizon: f64,
    n: u64,
    seed: u64,
) -> Result<AbsorptionStats> {
    if n == 0 {
        return Err(CliError::Config("need at least one trajectory".into()));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(CliError::Config(format!("horizon must be positive, got {horizon}")));
    }
    let ranges: Vec<_> = chunks(n).collect();
    let parts: Vec<AbsorptionAccumulator> = pool.install(|| {
        ranges
            .into_par_iter()
            .map(|r| absorption_chunk(net, start, horizon, seed, r))
            .collect()
    });
    let mut total = AbsorptionAccumulator::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(total.finish(horizon))
}

/// Return-time simulation; with `keep_events` the events come back in
/// trajectory order.
pub fn returns<N: Network + Sync + ?Sized>(
    pool: &rayon::ThreadPool,
    net: &N,
    start: StateLabel,
    horizon: f64,
    n: u64,
    seed: u64,
    keep_events: bool,
) -> Result<(TrajectoryStats, Vec<Event>)> {
    check_return_args(net, start, horizon, n)?;
    let ranges: Vec<_> = chunks(n).collect();
    let parts: Vec<(ReturnAccumulator, Vec<Event>)> = pool.install(|| {
        ranges
            .into_par_iter()
            .map(|r| {
                let mut events = Vec::new();
                let acc = return_chunk(net, start, horizon, seed, r, |e| {
                    if keep_events {
                        events.push(e)
                    }
                });
                (acc, events)
            })
            .collect()
    });
    let mut total = ReturnAccumulator::default();
    let mut events = Vec::new();
    for (acc, ev) in parts {
        total.merge(&acc);
        events.extend(ev);
    }
    Ok((total.finish(start, horizon), events))
}
