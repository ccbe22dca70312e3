//! Single-model training loop.

use serde::{Deserialize, Serialize};

use super::hyper::Hyperparams;
use super::loss::{draw_noise, objective, LossBreakdown};
use super::model::{Variant, VaeModel};
use crate::data::{SeriesMatrix, SeriesSplit};
use crate::error::{Error, Result};
use crate::metrics::neighbor_loss;
use crate::nn::{AdamState, Matrix, Purpose, RngStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub val_fraction: f64,
    pub test_fraction: f64,
}

impl TrainConfig {
    pub fn from_hyperparams(hp: &Hyperparams, seed: u64, val_fraction: f64, test_fraction: f64) -> Self {
        TrainConfig {
            epochs: hp.epochs,
            batch_size: hp.batch_size,
            lr: hp.lr,
            seed,
            val_fraction,
            test_fraction,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::Config("val_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub train: f64,
    pub val: f64,
    pub val_recon: f64,
    pub val_kl: f64,
    /// Neighbor loss of the test-segment encodings after this epoch.
    pub nl: f64,
}

/// Outcome of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub run_id: String,
    pub grid_index: usize,
    pub hyperparams: Hyperparams,
    pub seed: u64,
    pub failed: bool,
    pub failure: Option<String>,
    pub final_train_loss: Option<f64>,
    pub final_val_loss: Option<f64>,
    pub final_val_recon: Option<f64>,
    pub final_val_kl: Option<f64>,
    pub val_nl: Option<f64>,
    pub val_nl_per_pair: Option<f64>,
    pub loss_curves: Vec<EpochLoss>,
    pub checkpoint_ref: String,
}

impl ModelRecord {
    pub fn succeeded(&self) -> bool {
        !self.failed
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub record: ModelRecord,
    pub model: VaeModel,
}

/// Inputs and targets for a set of pair indices.
pub fn gather_pairs(series: &SeriesMatrix, pairs: &[usize], variant: Variant) -> (Matrix, Matrix) {
    let inputs = series.values().select_rows(pairs);
    let targets = match variant {
        Variant::Standard => inputs.clone(),
        Variant::TimeNeighbor => {
            let next: Vec<usize> = pairs.iter().map(|t| t + 1).collect();
            series.values().select_rows(&next)
        }
    };
    (inputs, targets)
}

/// Full objective on explicit rows with noise from `rng`, no gradients.
pub fn evaluate(
    model: &VaeModel,
    inputs: &Matrix,
    targets: &Matrix,
    rng: &mut RngStream,
) -> Result<LossBreakdown> {
    let eps = draw_noise(inputs.rows(), model.latent_dim(), rng);
    Ok(objective(model, inputs, targets, &eps, false)?.0)
}

fn test_rows(series: &SeriesMatrix, split: &SeriesSplit) -> Matrix {
    let idx: Vec<usize> = split.test.clone().collect();
    series.values().select_rows(&idx)
}

/// Minibatch Adam for `cfg.epochs` epochs.
///
/// Each epoch shuffles the training pairs from its own substream and keeps a
/// short final batch. Validation loss uses a fixed noise substream, so its
/// changes across epochs reflect the parameters only. After every epoch the
/// neighbor loss of the ordered test segment's posterior means is logged; the
/// last one is `val_nl`. A non-finite loss stops the run and returns a record
/// flagged `failed`.
pub fn train(
    hp: &Hyperparams,
    series: &SeriesMatrix,
    split: &SeriesSplit,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if split.train.is_empty() || split.val.is_empty() {
        return Err(Error::Usage("training and validation pair sets must be non-empty".into()));
    }
    if let Some(&t) = split.train.iter().chain(&split.val).find(|&&t| t + 1 >= split.test.start) {
        return Err(Error::Usage(format!("pair {t} reaches into the test segment")));
    }
    let root = RngStream::new(cfg.seed);
    let mut model = VaeModel::init(&hp.spec(series.dim()), &mut root.substream(Purpose::Init, 0, 0))?;
    let mut adam = AdamState::new(cfg.lr, &model.param_shapes());
    let (val_in, val_tg) = gather_pairs(series, &split.val, hp.variant);
    let test_x = test_rows(series, split);
    let test_start = split.test.start as i64;

    let mut record = ModelRecord {
        run_id: String::new(),
        grid_index: 0,
        hyperparams: hp.clone(),
        seed: cfg.seed,
        failed: false,
        failure: None,
        final_train_loss: None,
        final_val_loss: None,
        final_val_recon: None,
        final_val_kl: None,
        val_nl: None,
        val_nl_per_pair: None,
        loss_curves: Vec::with_capacity(cfg.epochs),
        checkpoint_ref: String::new(),
    };
    let fail = |mut record: ModelRecord, model: VaeModel, err: Error| {
        record.failed = true;
        record.failure = Some(err.to_string());
        Ok(TrainOutcome { record, model })
    };

    for epoch in 0..cfg.epochs {
        let mut order = split.train.clone();
        root.substream(Purpose::Shuffle, epoch as u64, 0).shuffle(&mut order);
        let mut noise = root.substream(Purpose::Sample, epoch as u64, 0);
        let mut weighted = 0.0;
        for (batch_idx, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let (x, tg) = gather_pairs(series, chunk, hp.variant);
            let eps = draw_noise(chunk.len(), model.latent_dim(), &mut noise);
            let (loss, grads) = match objective(&model, &x, &tg, &eps, true) {
                Ok((l, g)) => (l, g.expect("requested")),
                Err(Error::Numeric(_) | Error::NonFinite { .. }) => {
                    return fail(record, model, Error::Diverged { epoch, batch: batch_idx });
                }
                Err(e) => return Err(e),
            };
            weighted += loss.total * chunk.len() as f64;
            adam.step(&mut model.params_mut(), &grads.tensors())?;
        }
        let train_loss = weighted / order.len() as f64;

        let mut eval_rng = root.substream(Purpose::Eval, 0, 0);
        let val = match evaluate(&model, &val_in, &val_tg, &mut eval_rng) {
            Ok(v) => v,
            Err(Error::Numeric(_) | Error::NonFinite { .. }) => {
                return fail(record, model, Error::Diverged { epoch, batch: usize::MAX });
            }
            Err(e) => return Err(e),
        };
        let nl = match model
            .encode_rows(&test_x, test_start)
            .and_then(|enc| neighbor_loss(&enc))
        {
            Ok(nl) => nl,
            Err(e) => return fail(record, model, e),
        };
        record.loss_curves.push(EpochLoss {
            train: train_loss,
            val: val.total,
            val_recon: val.recon,
            val_kl: val.kl,
            nl: nl.total,
        });
        if epoch + 1 == cfg.epochs {
            record.final_train_loss = Some(train_loss);
            record.final_val_loss = Some(val.total);
            record.final_val_recon = Some(val.recon);
            record.final_val_kl = Some(val.kl);
            record.val_nl = Some(nl.total);
            record.val_nl_per_pair = Some(nl.per_pair);
        }
    }
    Ok(TrainOutcome { record, model })
}
