use std::fmt::Write as _;

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{SampleRef, SampleSet};
use crate::layers::Mode;
use crate::models::Regressor;
use crate::tensor::{SeededRng, Tensor};
use crate::training::{adam_step, mean_squared_error, mse_loss, streams, AdamState, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean of the mini-batch losses seen during the epoch (train mode).
    pub train_mse: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were restored.
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

impl TrainLog {
    pub fn best_val_mse(&self) -> Option<f64> {
        self.epochs.iter().map(|e| e.val_mse).min_by(f64::total_cmp)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_mse,val_mse\n");
        for e in &self.epochs {
            let _ = writeln!(out, "{},{},{}", e.epoch, e.train_mse, e.val_mse);
        }
        out
    }
}

/// Mini-batch Adam over a model. `fit` drives it; tests can step it directly.
pub struct Trainer<M: Regressor> {
    pub model: M,
    cfg: TrainConfig,
    states: Vec<AdamState>,
    dropout_base: u64,
    samples_seen: u64,
}

impl<M: Regressor> Trainer<M> {
    pub fn new(model: M, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let states = model.parameters().iter().map(|(_, p)| AdamState::new(p)).collect();
        Ok(Self {
            model,
            cfg: cfg.clone(),
            states,
            dropout_base: SeededRng::derive(cfg.seed, streams::DROPOUT).next_u64(),
            samples_seen: 0,
        })
    }

    /// One Adam step on the batch; returns the batch MSE before the update.
    pub fn train_batch(&mut self, batch: &[SampleRef<'_>]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Contract("empty mini-batch".into()));
        }
        let model = &self.model;
        let base = self.dropout_base;
        let offset = self.samples_seen;
        // Each sample gets its own dropout stream keyed by its global position,
        // so the parallel map is deterministic.
        let passes: Vec<(f64, M::Cache)> = batch
            .par_iter()
            .enumerate()
            .map(|(j, s)| {
                let mut rng = SeededRng::derive(base, offset + j as u64);
                model.forward(*s, Mode::Train, &mut rng)
            })
            .collect::<Result<_>>()?;
        self.samples_seen += batch.len() as u64;

        let y: Vec<f64> = batch.iter().map(|s| s.y).collect();
        let yhat: Vec<f64> = passes.iter().map(|p| p.0).collect();
        let (loss, dscores) = mse_loss(&y, &yhat)?;
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("training loss became {loss}")));
        }
        let per_sample: Vec<Vec<Tensor>> = passes
            .par_iter()
            .zip(dscores.par_iter())
            .map(|((_, cache), &d)| model.backward(cache, d))
            .collect::<Result<_>>()?;

        let mut grads = per_sample[0].clone();
        for g in &per_sample[1..] {
            for (acc, t) in grads.iter_mut().zip(g) {
                acc.accumulate(t)?;
            }
        }
        let names: Vec<&'static str> = self.model.parameters().iter().map(|(n, _)| *n).collect();
        for (g, name) in grads.iter().zip(&names) {
            if !g.is_finite() {
                return Err(Error::Numerical(format!("non-finite gradient for {name}")));
            }
        }
        for ((param, state), grad) in self.model.parameters_mut().into_iter().zip(&mut self.states).zip(&grads) {
            adam_step(state, param, grad, &self.cfg)?;
        }
        Ok(loss)
    }
}

/// Infer-mode MSE over a whole set.
pub fn evaluate_mse<M: Regressor>(model: &M, set: &SampleSet) -> Result<f64> {
    let yhat: Vec<f64> = (0..set.len())
        .into_par_iter()
        .map(|i| model.predict(set.get(i)))
        .collect::<Result<_>>()?;
    mean_squared_error(&set.y, &yhat)
}

/// Trains with shuffled mini-batches until validation MSE has not improved
/// for `patience` epochs or `max_epochs` is reached, then restores the
/// parameters from the best validation epoch.
pub fn fit<M: Regressor>(model: M, train: &SampleSet, val: &SampleSet, cfg: &TrainConfig) -> Result<(M, TrainLog)> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Contract(format!(
            "fit needs non-empty train and validation sets (got {} and {})",
            train.len(),
            val.len()
        )));
    }
    let mut log = TrainLog::default();
    if cfg.max_epochs == 0 {
        return Ok((model, log));
    }
    let mut shuffle_rng = SeededRng::derive(cfg.seed, streams::SHUFFLE);
    let mut trainer = Trainer::new(model, cfg)?;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut best: Option<(f64, M)> = None;
    let mut since_best = 0;

    for epoch in 1..=cfg.max_epochs {
        shuffle_rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<SampleRef<'_>> = chunk.iter().map(|&i| train.get(i)).collect();
            loss_sum += trainer.train_batch(&batch)?;
            batches += 1;
        }
        let val_mse = evaluate_mse(&trainer.model, val)?;
        if !val_mse.is_finite() {
            return Err(Error::Numerical(format!("validation loss became {val_mse} at epoch {epoch}")));
        }
        let train_mse = loss_sum / batches as f64;
        log.epochs.push(EpochRecord { epoch, train_mse, val_mse });
        debug!("epoch {epoch}: train {train_mse:.6} val {val_mse:.6}");

        if best.as_ref().map_or(true, |(b, _)| val_mse < *b) {
            best = Some((val_mse, trainer.model.clone()));
            log.best_epoch = Some(epoch);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                log.stopped_early = true;
                info!("early stop at epoch {epoch}; best epoch {:?}", log.best_epoch);
                break;
            }
        }
    }
    let (_, model) = best.expect("at least one epoch ran");
    Ok((model, log))
}
