//! Parallel execution of a sweep's pending runs.

use std::path::PathBuf;
use std::sync::mpsc;

use rayon::prelude::*;

use super::grid::GridSpec;
use super::manifest::{checkpoint_ref, run_id, store_run, RunEntry, RunStatus, SweepManifest};
use crate::data::{split_series, SeriesMatrix};
use crate::error::{Error, Result};
use crate::vae::{train, Hyperparams, ModelRecord, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    /// Worker threads.
    pub jobs: usize,
    /// Stop after this many new runs, leaving the rest pending.
    pub limit: Option<usize>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { jobs: 1, limit: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepSummary {
    pub total: usize,
    pub completed: usize,
    pub failed: usize,
    pub pending: usize,
    /// Runs trained by this call.
    pub executed: usize,
    /// More than a quarter of all runs failed.
    pub sweep_failed: bool,
}

/// What a worker needs to train and store one run.
struct RunContext {
    dir: PathBuf,
    dataset_hash: String,
    spec: GridSpec,
    grid: Vec<Hyperparams>,
}

impl RunContext {
    fn run_one(&self, series: &SeriesMatrix, grid_index: usize, seed: u64) -> Result<(RunEntry, ModelRecord)> {
        let hp = &self.grid[grid_index];
        let spec = &self.spec;
        let cfg = TrainConfig::from_hyperparams(hp, seed, spec.val_fraction, spec.test_fraction);
        let trained = split_series(series.len(), seed, spec.val_fraction, spec.test_fraction)
            .and_then(|split| train(hp, series, &split, &cfg));
        let (mut record, model) = match trained {
            Ok(out) => (out.record, Some(out.model)),
            Err(e @ Error::Io { .. }) => return Err(e),
            Err(e) => (failed_record(hp, seed, e), None),
        };
        record.run_id = run_id(&self.dataset_hash, hp, seed);
        record.grid_index = grid_index;
        let model = model.filter(|_| !record.failed);
        if model.is_some() {
            record.checkpoint_ref = checkpoint_ref(&record.run_id);
        }
        let entry = store_run(&self.dir, &record, model.as_ref())?;
        Ok((entry, record))
    }
}

fn failed_record(hp: &Hyperparams, seed: u64, err: Error) -> ModelRecord {
    ModelRecord {
        run_id: String::new(),
        grid_index: 0,
        hyperparams: hp.clone(),
        seed,
        failed: true,
        failure: Some(err.to_string()),
        final_train_loss: None,
        final_val_loss: None,
        final_val_recon: None,
        final_val_kl: None,
        val_nl: None,
        val_nl_per_pair: None,
        loss_curves: Vec::new(),
        checkpoint_ref: String::new(),
    }
}

/// Trains every pending run of `manifest` on `series`.
///
/// Runs are independent and seeded from their own `(grid point, seed)`, so
/// results do not depend on `jobs` or completion order. Finished runs are
/// logged by the calling thread alone as they arrive; `progress` sees each
/// record once it is durable. Already logged runs are skipped, which makes the
/// call resumable after an interruption.
pub fn run_sweep(
    manifest: &mut SweepManifest,
    series: &SeriesMatrix,
    opts: &SweepOptions,
    mut progress: impl FnMut(&ModelRecord),
) -> Result<SweepSummary> {
    manifest.check_dataset(&series.content_hash())?;
    if opts.jobs == 0 {
        return Err(Error::Usage("jobs must be at least 1".into()));
    }
    let mut pending = manifest.pending();
    if let Some(limit) = opts.limit {
        pending.truncate(limit);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::Usage(format!("thread pool: {e}")))?;
    let ctx = RunContext {
        dir: manifest.dir.clone(),
        dataset_hash: manifest.dataset_hash.clone(),
        spec: manifest.spec.clone(),
        grid: manifest.grid.clone(),
    };
    let mut log = manifest.open_log()?;
    let (tx, rx) = mpsc::channel();
    let mut first_err: Option<Error> = None;
    std::thread::scope(|scope| {
        let (ctx, pending, pool) = (&ctx, &pending, &pool);
        scope.spawn(move || {
            pool.install(|| {
                pending.par_iter().for_each_with(tx, |tx, &(g, s)| {
                    let _ = tx.send(ctx.run_one(series, g, s));
                })
            })
        });
        for res in rx {
            let logged = res.and_then(|(entry, record)| {
                manifest.append(&mut log, entry)?;
                progress(&record);
                Ok(())
            });
            if let Err(e) = logged {
                first_err.get_or_insert(e);
            }
        }
    });
    if let Some(e) = first_err {
        return Err(e);
    }
    Ok(SweepSummary {
        total: manifest.tasks().len(),
        completed: manifest.count(RunStatus::Completed),
        failed: manifest.count(RunStatus::Failed),
        pending: manifest.count(RunStatus::Pending),
        executed: pending.len(),
        sweep_failed: manifest.is_failed(),
    })
}
