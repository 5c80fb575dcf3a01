//! Parallel Monte Carlo driver. Replication `i` always uses
//! `seed_split(master_seed, i)` and results are gathered by index, so the
//! output does not depend on the number of worker threads.

use rayon::prelude::*;
use sgdct_core::engine::{run, seed_split, EngineConfig, Trajectory};
use sgdct_core::stats::ReplicationSet;
use sgdct_core::{CoreError, DriftModel, ParameterVector};

use crate::error::Result;

/// Runs `n_reps` replications on `parallelism` threads (0 picks the number of
/// available cores) and returns the per-replication results in index order.
pub fn run_trajectories<M: DriftModel>(
    config: &EngineConfig<M>,
    n_reps: usize,
    master_seed: u64,
    parallelism: usize,
) -> Result<Vec<sgdct_core::Result<Trajectory>>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| CoreError::Input(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        (0..n_reps)
            .into_par_iter()
            .map(|i| run(config, seed_split(master_seed, i as u64)))
            .collect()
    }))
}

/// Runs replications and assembles them into a [`ReplicationSet`]. Failed
/// replications are listed in the set; more than 1% failures is an error.
pub fn run_replications<M: DriftModel>(
    config: &EngineConfig<M>,
    n_reps: usize,
    master_seed: u64,
    parallelism: usize,
) -> Result<ReplicationSet> {
    let results = run_trajectories(config, n_reps, master_seed, parallelism)?;
    let theta_star = config
        .model
        .true_theta()
        .ok_or_else(|| CoreError::Input("replication sets need a model with known theta*".into()))?;
    Ok(ReplicationSet::from_results(master_seed, ParameterVector::from_slice(theta_star)?, results)?)
}
