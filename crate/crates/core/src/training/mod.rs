//! Mini-batch Adam training of any forecast model under the mean squared
//! error, with best-validation checkpointing.

mod bias_demo;
mod grad;

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use bias_demo::{bias_displacements, effective_bias_lr_demo, BiasLrDemo};
pub use grad::{loss_and_gradient, predict_batch, Workspace};

use crate::analysis::{affine_of_model, cosine_similarity, AffineModel};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::models::ForecastModel;
use crate::solvers::DesignSource;

const EVAL_BLOCK: usize = 1024;

/// Mean over all entries of the squared difference.
pub fn mse(pred: &Matrix, target: &Matrix) -> Result<f64> {
    if pred.shape() != target.shape() {
        return Err(Error::DimensionMismatch(format!(
            "prediction {:?} vs target {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let n = pred.as_slice().len();
    if n == 0 {
        return Err(Error::EmptyData("mse of empty matrices"));
    }
    let total: f64 = pred
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(total / n as f64)
}

/// Batch MSE gradient of `model` in `ForecastModel::params` order.
pub fn gradients(model: &ForecastModel, x: &Matrix, y: &Matrix) -> Result<Vec<f64>> {
    let ws = Workspace::for_model(model)?;
    Ok(loss_and_gradient(model, x, y, &ws)?.1)
}

fn gather<S: DesignSource + ?Sized>(src: &S, idx: &[usize]) -> (Matrix, Matrix) {
    let mut x = Matrix::zeros(idx.len(), src.context_len());
    let mut y = Matrix::zeros(idx.len(), src.horizon());
    let mut xb = vec![0.0; src.context_len()];
    let mut yb = vec![0.0; src.horizon()];
    for (r, &i) in idx.iter().enumerate() {
        src.copy_pair(i, &mut xb, &mut yb);
        x.row_mut(r).copy_from_slice(&xb);
        y.row_mut(r).copy_from_slice(&yb);
    }
    (x, y)
}

/// MSE of `model` over every pair of `src`.
pub fn evaluate_mse<S: DesignSource + ?Sized>(
    model: &ForecastModel,
    src: &S,
    ws: &Workspace,
) -> Result<f64> {
    if src.is_empty() {
        return Err(Error::EmptyData("evaluation set"));
    }
    let mut total = 0.0;
    let idx: Vec<usize> = (0..src.len()).collect();
    for chunk in idx.chunks(EVAL_BLOCK) {
        let (x, y) = gather(src, chunk);
        let p = predict_batch(model, &x, ws)?;
        total += mse(&p, &y)? * chunk.len() as f64;
    }
    Ok(total / src.len() as f64)
}

/// Adam with bias-corrected moment estimates.
#[derive(Clone, Debug)]
pub struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    pub fn new(n: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            beta1,
            beta2,
            eps,
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    pub early_stop: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 5e-4,
            batch_size: 128,
            epochs: 50,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            early_stop: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let beta_ok = |b: f64| b > 0.0 && b < 1.0;
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate {} must be non-negative",
                self.lr
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        if !beta_ok(self.adam_beta1) || !beta_ok(self.adam_beta2) {
            return Err(Error::InvalidConfig("Adam betas must lie in (0, 1)".into()));
        }
        if !(self.adam_eps > 0.0) {
            return Err(Error::InvalidConfig("Adam epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// Losses after one epoch (or before training, for the initial record).
#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
    /// Cosine between the model's affine weight and the reference weight.
    pub cosine: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainTrace {
    /// State before the first update, recorded as epoch 0.
    pub initial: EpochRecord,
    /// One record per epoch run, numbered from 1.
    pub epochs: Vec<EpochRecord>,
    /// Epoch (from 1) with the lowest validation MSE, earliest on ties.
    pub best_epoch: Option<usize>,
}

impl TrainTrace {
    pub fn train_mse(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train_mse).collect()
    }

    pub fn val_mse(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.val_mse).collect()
    }

    /// `epoch,train_mse,val_mse,cosine_to_ols`, with the initial state as
    /// epoch 0 and a blank cosine when no reference was given.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "epoch,train_mse,val_mse,cosine_to_ols")?;
        for r in std::iter::once(&self.initial).chain(&self.epochs) {
            let cos = r.cosine.map(|c| c.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{}", r.epoch, r.train_mse, r.val_mse, cos)?;
        }
        Ok(())
    }
}

fn record<S: DesignSource + ?Sized, V: DesignSource + ?Sized>(
    epoch: usize,
    model: &ForecastModel,
    train: &S,
    val: &V,
    reference: Option<&AffineModel>,
    ws: &Workspace,
) -> Result<EpochRecord> {
    let cosine = match reference {
        Some(r) => Some(cosine_similarity(&affine_of_model(model)?.a, &r.a)?),
        None => None,
    };
    Ok(EpochRecord {
        epoch,
        train_mse: evaluate_mse(model, train, ws)?,
        val_mse: evaluate_mse(model, val, ws)?,
        cosine,
    })
}

/// Trains `model` with Adam on shuffled mini-batches (the last short batch
/// is kept). After each epoch the full training and validation MSE are
/// recorded, plus the weight cosine to `reference` if one is given. With
/// `early_stop` the parameters of the best validation epoch are returned,
/// otherwise the final ones.
pub fn train<S: DesignSource + ?Sized, V: DesignSource + ?Sized>(
    model: &ForecastModel,
    train_set: &S,
    val_set: &V,
    cfg: &TrainConfig,
    reference: Option<&AffineModel>,
) -> Result<(ForecastModel, TrainTrace)> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyData("training split"));
    }
    if val_set.is_empty() {
        return Err(Error::EmptyData("validation split"));
    }
    for src in [
        (train_set.context_len(), train_set.horizon()),
        (val_set.context_len(), val_set.horizon()),
    ] {
        if src != (model.context_len(), model.horizon()) {
            return Err(Error::DimensionMismatch(format!(
                "data has (L, T) = {src:?}, model has ({}, {})",
                model.context_len(),
                model.horizon()
            )));
        }
    }
    let ws = Workspace::for_model(model)?;
    let mut current = model.clone();
    let mut params = current.params();
    let mut adam = Adam::new(params.len(), cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let initial = record(0, &current, train_set, val_set, reference, &ws)?;
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let (x, y) = gather(train_set, chunk);
            let (_, grad) = loss_and_gradient(&current, &x, &y, &ws)?;
            adam.step(&mut params, &grad, cfg.lr);
            current.set_params(&params)?;
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("parameters after update"));
        }
        let rec = record(epoch, &current, train_set, val_set, reference, &ws)?;
        if best.as_ref().is_none_or(|(_, v, _)| rec.val_mse < *v) {
            best = Some((epoch, rec.val_mse, params.clone()));
        }
        epochs.push(rec);
    }
    let best_epoch = best.as_ref().map(|(e, _, _)| *e);
    if cfg.early_stop {
        if let Some((_, _, p)) = best {
            current.set_params(&p)?;
        }
    }
    Ok((
        current,
        TrainTrace {
            initial,
            epochs,
            best_epoch,
        },
    ))
}
