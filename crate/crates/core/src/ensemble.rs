//! Parallel trajectory ensembles with reproducible reduction.
//!
//! Trajectory `k` draws from the ChaCha8 stream `k` of the generator keyed
//! by the master seed, so its random numbers do not depend on which worker
//! runs it. Per-trajectory series are collected in index order and reduced
//! with a fixed pairwise tree, making the statistics bitwise identical for
//! any worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::observables::{Observable, ObservableSet};
use crate::trajectory::{Engine, ObservableSeries, TrajectorySchedule};

/// Largest tolerated fraction of failed trajectories.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

pub const DEFAULT_TRAJECTORIES: usize = 400;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarSeries {
    pub observable: Observable,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStatistics {
    pub params: ModelParams,
    pub schedule: TrajectorySchedule,
    pub observables: ObservableSet,
    pub master_seed: u64,
    /// Trajectories requested.
    pub n_trajectories: usize,
    pub failures: usize,
    pub times: Vec<f64>,
    pub rescaled_times: Vec<f64>,
    pub scalars: Vec<ScalarSeries>,
    /// Mean density, time × site.
    pub density_mean: Vec<Vec<f64>>,
    pub density_stderr: Vec<Vec<f64>>,
    pub mean_jumps: f64,
}

impl EnsembleStatistics {
    pub fn scalar(&self, observable: Observable) -> Option<&ScalarSeries> {
        self.scalars.iter().find(|s| s.observable == observable)
    }

    pub fn successful(&self) -> usize {
        self.n_trajectories - self.failures
    }

    /// Index of the recorded time closest to `rescaled_time`.
    pub fn index_at(&self, rescaled_time: f64) -> usize {
        self.rescaled_times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - rescaled_time).abs().total_cmp(&(b.1 - rescaled_time).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

/// Deterministic pairwise sum.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Mean and standard error `s / √n` (sample deviation, `n − 1`); the error
/// is zero for a single sample.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(values) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let squares: Vec<f64> = values.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&squares) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs `n_traj` trajectories of `engine` on `workers` threads
/// (`0` = rayon default) and reduces them.
pub fn run_ensemble(
    engine: &Engine,
    schedule: &TrajectorySchedule,
    n_traj: usize,
    master_seed: u64,
    workers: usize,
) -> Result<EnsembleStatistics> {
    if n_traj == 0 {
        return Err(Error::InvalidConfig("at least one trajectory is required".into()));
    }
    let initial = engine.initial_state()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let results: Vec<Result<ObservableSeries>> = pool.install(|| {
        (0..n_traj)
            .into_par_iter()
            .map(|k| {
                let sched = TrajectorySchedule {
                    seed: master_seed,
                    stream: k as u64,
                    ..schedule.clone()
                };
                engine.evolve(initial.clone(), &sched)
            })
            .collect()
    });
    let mut series = Vec::with_capacity(n_traj);
    for r in results {
        series.push(r?);
    }
    reduce(engine, schedule, master_seed, series)
}

fn reduce(
    engine: &Engine,
    schedule: &TrajectorySchedule,
    master_seed: u64,
    series: Vec<ObservableSeries>,
) -> Result<EnsembleStatistics> {
    let n_traj = series.len();
    let failures = series.iter().filter(|s| s.failure.is_some()).count();
    for (k, s) in series.iter().enumerate() {
        if let Some(msg) = &s.failure {
            log::warn!("trajectory {k} failed: {msg}");
        }
    }
    if failures as f64 > MAX_FAILURE_FRACTION * n_traj as f64 {
        return Err(Error::TooManyFailures {
            failed: failures,
            total: n_traj,
        });
    }
    let good: Vec<&ObservableSeries> = series.iter().filter(|s| s.failure.is_none()).collect();
    let first = good.first().ok_or(Error::TooManyFailures {
        failed: failures,
        total: n_traj,
    })?;
    let n_times = first.records.len();
    let sites = engine.params.sites;
    let times: Vec<f64> = first.records.iter().map(|r| r.time).collect();
    let rescaled_times: Vec<f64> = first.records.iter().map(|r| r.rescaled_time).collect();

    let set = engine.observables.set;
    let mut buffer = vec![0.0; good.len()];
    let mut scalars = Vec::new();
    for observable in Observable::ALL.into_iter().filter(|o| o.enabled_in(&set)) {
        let mut mean = Vec::with_capacity(n_times);
        let mut stderr = Vec::with_capacity(n_times);
        for t in 0..n_times {
            for (b, s) in buffer.iter_mut().zip(&good) {
                *b = s.records[t].get(observable);
            }
            let (m, e) = mean_and_stderr(&buffer);
            mean.push(m);
            stderr.push(e);
        }
        scalars.push(ScalarSeries {
            observable,
            mean,
            stderr,
        });
    }
    let mut density_mean = vec![vec![0.0; sites]; n_times];
    let mut density_stderr = vec![vec![0.0; sites]; n_times];
    for t in 0..n_times {
        for site in 0..sites {
            for (b, s) in buffer.iter_mut().zip(&good) {
                *b = s.records[t].density[site];
            }
            let (m, e) = mean_and_stderr(&buffer);
            density_mean[t][site] = m;
            density_stderr[t][site] = e;
        }
    }
    let jumps: Vec<f64> = good.iter().map(|s| s.jumps as f64).collect();
    Ok(EnsembleStatistics {
        params: engine.params.clone(),
        schedule: TrajectorySchedule {
            seed: master_seed,
            stream: 0,
            ..schedule.clone()
        },
        observables: set,
        master_seed,
        n_trajectories: n_traj,
        failures,
        times,
        rescaled_times,
        scalars,
        density_mean,
        density_stderr,
        mean_jumps: mean_and_stderr(&jumps).0,
    })
}

/// Builds the engine and runs the ensemble in one call.
pub fn run_ensemble_for(
    params: &ModelParams,
    set: ObservableSet,
    schedule: &TrajectorySchedule,
    n_traj: usize,
    master_seed: u64,
    workers: usize,
) -> Result<EnsembleStatistics> {
    let engine = Engine::new(params, set)?;
    run_ensemble(&engine, schedule, n_traj, master_seed, workers)
}
