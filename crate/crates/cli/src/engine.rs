//! Parallel ensemble evaluation. Trials are fanned out over a rayon pool in
//! fixed-size batches and summed strictly in trial order, so the mean does
//! not depend on the thread count.

use bayesaf_core::simulate::{run_trial, trial_seed, EnsembleMean, Scenario, Trajectory};
use bayesaf_core::tune::{grid_search_with, TuneResult, TuneSpec};
use bayesaf_core::FilterConfig;
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

/// Trials evaluated per batch; bounds memory to `BATCH * T` samples.
const BATCH: usize = 16;

pub struct Runner {
    pool: rayon::ThreadPool,
}

impl Runner {
    /// `threads = 0` lets rayon pick.
    pub fn new(threads: usize) -> CliResult<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {threads} threads: {e}")))?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub fn ensemble(
        &self,
        scenario: &Scenario,
        config: &FilterConfig,
        base_seed: u64,
    ) -> bayesaf_core::Result<Trajectory> {
        scenario.validate()?;
        let mut acc = EnsembleMean::new(scenario.horizon);
        let n = scenario.realizations;
        let mut start = 0;
        while start < n {
            let end = (start + BATCH).min(n);
            let batch: Vec<_> = self.pool.install(|| {
                (start..end)
                    .into_par_iter()
                    .map(|i| run_trial(scenario, config, trial_seed(base_seed, i)))
                    .collect()
            });
            for traj in batch {
                acc.add(&traj?)?;
            }
            start = end;
        }
        acc.finish()
    }

    pub fn tune(
        &self,
        scenario: &Scenario,
        template: &FilterConfig,
        spec: &TuneSpec,
        base_seed: u64,
    ) -> bayesaf_core::Result<TuneResult> {
        grid_search_with(spec, |value| {
            let cfg = spec.knob.apply(template, value)?;
            self.ensemble(scenario, &cfg, base_seed)
        })
    }
}
