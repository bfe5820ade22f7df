//! Desk-scale classifiers and the mix-then-update training loop.

mod model;

pub use model::{
    backward, chunked_loss_and_gradients, forward_loss, log_softmax, loss_and_gradients, soft_cross_entropy, Arch,
    Dense, ModelParams, Standardizer, GRADIENT_CHUNK,
};

use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{EvalSummary, Prediction};
use crate::mixers::{mix_batch, BatchContext, LabelVector, MixPolicy};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub arch: Arch,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Epochs at which the learning rate is multiplied by `lr_decay_factor`.
    pub lr_decay_epochs: Vec<usize>,
    pub lr_decay_factor: f64,
    pub policy: MixPolicy,
    pub seed: u64,
    pub shuffle: bool,
    /// Standardize inputs with statistics of the clean training images.
    pub standardize: bool,
    /// Worker threads for mixing and gradient sums; results do not depend on it.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            arch: Arch::Mlp { hidden: 64 },
            epochs: 40,
            batch_size: 64,
            lr: 0.1,
            lr_decay_epochs: vec![20, 30],
            lr_decay_factor: 0.1,
            policy: MixPolicy::none(),
            seed: crate::rng::DEFAULT_SEED,
            shuffle: true,
            standardize: true,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be >= 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid("learning rate must be > 0"));
        }
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor.is_finite()) {
            return Err(Error::invalid("decay factor must be > 0"));
        }
        self.policy.validate()
    }

    /// Learning rate in effect during `epoch`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let steps = self.lr_decay_epochs.iter().filter(|&&e| e <= epoch).count();
        self.lr * self.lr_decay_factor.powi(steps as i32)
    }
}

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean training loss on the mixed batches.
    pub loss: f64,
    /// Validation metrics on clean images.
    pub top1_error: f64,
    pub macro_f1: f64,
    pub ece: f64,
    /// Fraction of batches that were actually mixed.
    pub mixed_fraction: f64,
}

impl EpochLog {
    pub const HEADER: &'static str = "epoch loss top1 macro_f1 ece mixed";
}

impl fmt::Display for EpochLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:.6} {:.6} {:.6} {:.6} {:.6}",
            self.epoch, self.loss, self.top1_error, self.macro_f1, self.ece, self.mixed_fraction
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub log: Vec<EpochLog>,
}

impl TrainOutcome {
    pub fn final_epoch(&self) -> &EpochLog {
        self.log.last().expect("at least one epoch")
    }

    pub fn log_text(&self) -> String {
        let mut out = format!("{}\n", EpochLog::HEADER);
        for line in &self.log {
            out.push_str(&format!("{line}\n"));
        }
        out
    }
}

/// Scores for every image of `data`.
pub fn predict(params: &ModelParams, data: &Dataset) -> Result<Vec<Prediction>> {
    data.images
        .iter()
        .zip(&data.classes)
        .map(|(im, &c)| Ok(Prediction::new(c, params.forward(im)?)))
        .collect()
}

pub fn evaluate(params: &ModelParams, data: &Dataset) -> Result<EvalSummary> {
    EvalSummary::from_predictions(&predict(params, data)?)
}

/// Trains on `train` and evaluates on `valid` (or on clean `train` images when
/// no validation set is given) after every epoch.
///
/// Each minibatch goes through [`mix_batch`] first; the loss and gradient are
/// computed on the mixed images and soft labels, then one SGD step is taken.
pub fn train(train: &Dataset, valid: Option<&Dataset>, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyInput("training set has no images".into()));
    }
    let eval_set = valid.unwrap_or(train);
    if eval_set.n_classes != train.n_classes {
        return Err(Error::invalid("training and validation sets disagree on the classes"));
    }
    let mut params = ModelParams::init(config.arch, train.feature_len(), train.n_classes, config.seed)?;
    if config.standardize {
        params.standardizer = Some(Standardizer::fit(&train.images)?);
    }
    let pool = if config.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.threads)
                .build()
                .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?,
        )
    } else {
        None
    };
    let one_hot: Vec<LabelVector> = train
        .classes
        .iter()
        .map(|&c| LabelVector::one_hot(c, train.n_classes))
        .collect();

    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        if config.shuffle {
            order.shuffle(&mut RngStream::derive(config.seed, &[u64::MAX, 1, epoch as u64]).rng());
        }
        let lr = config.lr_at(epoch);
        let mut loss_sum = 0.0;
        let mut mixed_batches = 0usize;
        let n_batches = order.len().div_ceil(config.batch_size);
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            let images: Vec<_> = idx.iter().map(|&i| train.images[i].clone()).collect();
            let labels: Vec<_> = idx.iter().map(|&i| one_hot[i].clone()).collect();
            // the mixer's own threads would nest inside ours, so it runs inline
            let ctx = BatchContext::new(config.seed).at(epoch, config.epochs, b);
            let outcomes = mix_batch(&images, &labels, &config.policy, &ctx)?;
            if outcomes.iter().any(|o| o.crop.is_some() || o.lambda_a < 1.0) {
                mixed_batches += 1;
            }
            let (mixed_images, mixed_labels): (Vec<_>, Vec<_>) =
                outcomes.into_iter().map(|o| (o.image, o.label)).unzip();
            let (loss, grads) = chunked_loss_and_gradients(&params, &mixed_images, &mixed_labels, pool.as_ref())?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            params.sgd_step(&grads, lr);
            if !params.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            loss_sum += loss * idx.len() as f64;
        }
        let preds = predict(&params, eval_set)?;
        if preds.iter().any(|p| p.scores.iter().any(|s| !s.is_finite())) {
            // the last update pushed the logits out of range
            return Err(Error::NonFiniteLoss { epoch, batch: n_batches - 1 });
        }
        let summary = EvalSummary::from_predictions(&preds)?;
        log.push(EpochLog {
            epoch,
            loss: loss_sum / train.len() as f64,
            top1_error: summary.top1_error,
            macro_f1: summary.macro_f1,
            ece: summary.ece,
            mixed_fraction: mixed_batches as f64 / n_batches as f64,
        });
    }
    Ok(TrainOutcome { params, log })
}

/// Writes parameters as JSON.
pub fn save_params(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, serde_json::to_string(params)?).map_err(|e| Error::io(path, e))
}

pub fn load_params(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let params: ModelParams = serde_json::from_str(&text)?;
    let expected = ModelParams::zeros(params.arch, params.input_dim, params.n_classes)?;
    let consistent = params.layers.len() == expected.layers.len()
        && params
            .standardizer
            .as_ref()
            .is_none_or(|s| s.mean.len() == params.input_dim && s.scale.len() == params.input_dim)
        && params.layers.iter().zip(&expected.layers).all(|(a, b)| {
            a.inputs == b.inputs
                && a.outputs == b.outputs
                && a.weights.len() == b.weights.len()
                && a.bias.len() == b.bias.len()
        });
    if !consistent || !params.is_finite() {
        return Err(Error::invalid(format!("{} holds inconsistent model parameters", path.display())));
    }
    Ok(params)
}
