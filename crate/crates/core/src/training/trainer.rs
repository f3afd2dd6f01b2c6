use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::batching::{make_buckets, pad_batch};
use super::gradients::{batch_loss, compute_gradients, sgd_step};
use super::TrainingExample;
use crate::error::{Error, Result};
use crate::lexicon::StressPattern;
use crate::model::{ModelConfig, ModelInput, ModelParameters};

/// How the initial weights are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    /// Uniform(−init_scale, init_scale) for every tensor.
    Uniform,
    /// Glorot-uniform weights, zero biases.
    Glorot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Upper bound on epochs; early stopping usually ends sooner.
    pub epochs: usize,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    /// Early stopping cannot end the run before this epoch.
    pub min_epochs: usize,
    pub init: InitScheme,
    pub init_scale: f64,
    /// Multiplier on the initial GRU and key-projection weights.
    pub encoder_gain: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            batch_size: 20,
            epochs: 200,
            patience: 10,
            min_epochs: 0,
            init: InitScheme::Uniform,
            init_scale: 0.1,
            encoder_gain: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Training(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Training("batch_size must be at least 1".into()));
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return Err(Error::Training(format!(
                "init_scale must be > 0, got {}",
                self.init_scale
            )));
        }
        if !(self.encoder_gain > 0.0 && self.encoder_gain.is_finite()) {
            return Err(Error::Training(format!(
                "encoder_gain must be > 0, got {}",
                self.encoder_gain
            )));
        }
        Ok(())
    }
}

const ENCODER_TENSORS: [&str; 3] = ["gru.", "frame_key.", "phone_key."];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the lowest validation loss (training
    /// loss when there is no validation set).
    pub params: ModelParameters,
    pub best_epoch: usize,
    /// Epoch 0 holds the losses of the initial parameters.
    pub log: Vec<EpochLoss>,
}

/// Write the loss log as `epoch,train_loss,val_loss` CSV.
pub fn write_loss_log(log: &[EpochLoss], mut out: impl Write) -> Result<()> {
    writeln!(out, "epoch,train_loss,val_loss")?;
    for e in log {
        let val = e.val_loss.map(|v| format!("{v:.12}")).unwrap_or_default();
        writeln!(out, "{},{:.12},{val}", e.epoch, e.train_loss)?;
    }
    Ok(())
}

pub fn write_loss_log_file(log: &[EpochLoss], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::File::create(path)
        .map_err(Error::from)
        .and_then(|f| write_loss_log(log, std::io::BufWriter::new(f)))
        .map_err(|e| e.in_file(path))
}

/// Hold out whole speakers: about `fraction` of them (at least one when
/// there are two or more) go to validation.
pub fn split_by_speaker(
    examples: Vec<TrainingExample>,
    fraction: f64,
    seed: u64,
) -> (Vec<TrainingExample>, Vec<TrainingExample>) {
    let mut speakers: Vec<String> = examples
        .iter()
        .map(|e| e.speaker().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    speakers.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut held = (fraction * speakers.len() as f64).round() as usize;
    if speakers.len() >= 2 {
        held = held.clamp(1, speakers.len() - 1);
    } else {
        held = 0;
    }
    let val: BTreeSet<&str> = speakers[..held].iter().map(String::as_str).collect();
    examples
        .into_iter()
        .partition(|e| !val.contains(e.speaker()))
}

/// Mean masked NLL of `inputs` in inference mode.
pub fn dataset_loss(
    inputs: &[ModelInput],
    labels: &[StressPattern],
    params: &ModelParameters,
    config: &ModelConfig,
) -> Result<f64> {
    if inputs.is_empty() {
        return Err(Error::Training("empty dataset".into()));
    }
    let per: Vec<(f64, usize)> = inputs
        .par_chunks(64)
        .zip(labels.par_chunks(64))
        .map(|(x, l)| {
            batch_loss(x, l, params, config, None)
                .map(|r| (r.mean * r.syllables as f64, r.syllables))
        })
        .collect::<Result<_>>()?;
    let (sum, n) = per.iter().fold((0.0, 0), |(s, n), (a, b)| (s + a, n + b));
    Ok(sum / n as f64)
}

fn prepare(examples: &[TrainingExample]) -> Result<(Vec<ModelInput>, Vec<StressPattern>)> {
    examples
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let input = e.input().map_err(|err| Error::record(i, err))?;
            Ok((input, e.label.clone()))
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().unzip())
}

/// Bucketed mini-batch SGD with early stopping on validation loss.
/// Deterministic given `config.seed`.
pub fn train(
    train_set: &[TrainingExample],
    validation: &[TrainingExample],
    model: &ModelConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    model.validate()?;
    if train_set.is_empty() {
        return Err(Error::Training("empty training set".into()));
    }
    if train_set.iter().all(|e| e.features.f0_fallback) {
        return Err(Error::Training(
            "every training example is fully unvoiced; there is no pitch information to learn from"
                .into(),
        ));
    }
    let train_speakers: BTreeSet<&str> = train_set.iter().map(TrainingExample::speaker).collect();
    if let Some(shared) = validation
        .iter()
        .find(|e| train_speakers.contains(e.speaker()))
    {
        return Err(Error::Training(format!(
            "speaker `{}` appears in both the training and validation sets",
            shared.speaker()
        )));
    }

    let (inputs, labels) = prepare(train_set)?;
    let (val_inputs, val_labels) = prepare(validation)?;
    for x in inputs.iter().chain(&val_inputs) {
        x.check(model)?;
    }
    let plan = make_buckets(&inputs, config.batch_size);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = match config.init {
        InitScheme::Uniform => {
            ModelParameters::init_uniform(model, rng.random(), config.init_scale)
        }
        InitScheme::Glorot => ModelParameters::init_glorot(model, rng.random()),
    };
    if config.encoder_gain != 1.0 {
        for (name, xs) in params.tensors_mut() {
            if ENCODER_TENSORS.iter().any(|p| name.starts_with(p)) {
                xs.iter_mut().for_each(|x| *x *= config.encoder_gain);
            }
        }
    }

    let evaluate = |p: &ModelParameters, epoch: usize| -> Result<EpochLoss> {
        Ok(EpochLoss {
            epoch,
            train_loss: dataset_loss(&inputs, &labels, p, model)?,
            val_loss: if val_inputs.is_empty() {
                None
            } else {
                Some(dataset_loss(&val_inputs, &val_labels, p, model)?)
            },
        })
    };
    let selection = |e: &EpochLoss| e.val_loss.unwrap_or(e.train_loss);

    let first = evaluate(&params, 0)?;
    let mut best = (selection(&first), 0, params.clone());
    let mut log = vec![first];
    for epoch in 1..=config.epochs {
        for b in plan.epoch_order(&mut rng) {
            let members = &plan.batches[b];
            let batch = pad_batch(&inputs, members);
            let batch_labels: Vec<StressPattern> =
                members.iter().map(|&i| labels[i].clone()).collect();
            let seed: u64 = rng.random();
            let step = compute_gradients(&batch, &batch_labels, &params, model, Some(seed))?;
            sgd_step(&mut params, &step.grads, config.learning_rate);
        }
        let entry = evaluate(&params, epoch)?;
        if !entry.train_loss.is_finite() {
            return Err(Error::Training(format!(
                "training loss diverged at epoch {epoch}"
            )));
        }
        log.push(entry);
        if selection(&entry) < best.0 {
            best = (selection(&entry), epoch, params.clone());
        } else if epoch >= config.min_epochs && epoch - best.1 >= config.patience {
            break;
        }
    }
    Ok(TrainOutcome {
        params: best.2,
        best_epoch: best.1,
        log,
    })
}
