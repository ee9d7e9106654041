//! Minibatch Adam training with validation early stopping.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, AdamConfig, AdamState};
use super::dataset::{generate_dataset, split_dataset};
use super::network::{argmax, LabeledImage, Network, FIRST_LABEL};
use crate::error::{Error, Result};
use crate::raster::BinaryImage;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a validation-loss improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    /// Train and validation fractions; the rest is the test set.
    pub split: (f64, f64),
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { adam: AdamConfig::default(), batch_size: 128, max_epochs: 30, patience: 3, seed: 0, split: (0.6, 0.2) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean minibatch loss seen during the epoch.
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub validation_loss: f64,
    pub validation_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (lowest validation loss).
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,train_accuracy,validation_loss,validation_accuracy\n");
        for r in &self.epochs {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.epoch, r.train_loss, r.train_accuracy, r.validation_loss, r.validation_accuracy
            ));
        }
        s
    }
}

/// Mean loss and accuracy of the network in inference mode.
pub fn evaluate(net: &Network, data: &[LabeledImage]) -> (f64, f64) {
    if data.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut loss = 0.0;
    let mut correct = 0usize;
    for chunk in data.chunks(256) {
        let images: Vec<&BinaryImage> = chunk.iter().map(|s| &s.image).collect();
        for (p, s) in net.predict_batch(&images).iter().zip(chunk) {
            loss -= p[s.label].max(f64::MIN_POSITIVE).ln();
            if argmax(p) == s.label {
                correct += 1;
            }
        }
    }
    (loss / data.len() as f64, correct as f64 / data.len() as f64)
}

/// Trains `net` in place. Stops when the validation loss has not improved
/// for `patience` epochs and restores the best parameters seen.
pub fn train(
    net: &mut Network,
    train_set: &[LabeledImage],
    validation: &[LabeledImage],
    cfg: &TrainConfig,
) -> Result<TrainHistory> {
    if train_set.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let shapes: Vec<usize> = net.parameters().iter().map(|p| p.len()).collect();
    let mut state = AdamState::new(&shapes);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, Network)> = None;
    let mut stale = 0;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for idx in order.chunks(cfg.batch_size) {
            let batch: Vec<LabeledImage> = idx.iter().map(|&i| train_set[i].clone()).collect();
            let r = net.backward(&batch)?;
            loss_sum += r.loss * batch.len() as f64;
            correct += r.correct;
            net.update_norm_statistics(&r.norm_stats);
            adam_step(&mut net.parameters_mut(), &r.gradients, &mut state, &cfg.adam);
        }
        let (validation_loss, validation_accuracy) = evaluate(net, validation);
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            train_accuracy: correct as f64 / train_set.len() as f64,
            validation_loss,
            validation_accuracy,
        });
        if validation.is_empty() {
            history.best_epoch = epoch;
            continue;
        }
        if best.as_ref().is_none_or(|(l, _)| validation_loss < *l) {
            best = Some((validation_loss, net.clone()));
            history.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    if let Some((_, snapshot)) = best {
        *net = snapshot;
    }
    Ok(history)
}

/// `counts[true][predicted]` over the test samples.
pub fn confusion_matrix(net: &Network, test: &[LabeledImage]) -> Vec<Vec<usize>> {
    let n = net.num_classes();
    let mut counts = vec![vec![0usize; n]; n];
    for chunk in test.chunks(256) {
        let images: Vec<&BinaryImage> = chunk.iter().map(|s| &s.image).collect();
        for (p, s) in net.predict_batch(&images).iter().zip(chunk) {
            counts[s.label][argmax(p)] += 1;
        }
    }
    counts
}

pub fn accuracy(confusion: &[Vec<usize>]) -> f64 {
    let total: usize = confusion.iter().flatten().sum();
    let diag: usize = (0..confusion.len()).map(|i| confusion[i][i]).sum();
    diag as f64 / total.max(1) as f64
}

pub fn confusion_csv(confusion: &[Vec<usize>]) -> String {
    let labels: Vec<String> = (0..confusion.len()).map(|j| format!("pred_{}", j + super::FIRST_LABEL)).collect();
    let mut s = format!("true,{}\n", labels.join(","));
    for (i, row) in confusion.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(usize::to_string).collect();
        s.push_str(&format!("{},{}\n", i + super::FIRST_LABEL, cells.join(",")));
    }
    s
}

/// Outcome of [`train_classifier`].
#[derive(Debug, Clone)]
pub struct TrainedClassifier {
    pub network: Network,
    pub history: TrainHistory,
    pub confusion: Vec<Vec<usize>>,
    pub test_accuracy: f64,
}

/// Full pipeline: generate `per_class` samples per class, split, train and
/// score on the held-out test set. All randomness derives from `cfg.seed`.
pub fn train_classifier(num_classes: usize, per_class: usize, cfg: &TrainConfig) -> Result<TrainedClassifier> {
    train_on_dataset(generate_dataset(num_classes, per_class, cfg.seed), num_classes, cfg)
}

/// Splits an existing dataset and trains on it, as [`train_classifier`].
pub fn train_on_dataset(data: Vec<LabeledImage>, num_classes: usize, cfg: &TrainConfig) -> Result<TrainedClassifier> {
    if let Some(s) = data.iter().find(|s| s.label >= num_classes) {
        return Err(Error::InvalidArgument(format!(
            "sample label {} exceeds the {num_classes} classes",
            s.label + FIRST_LABEL
        )));
    }
    let split = split_dataset(data, cfg.split, cfg.seed.wrapping_add(1))?;
    let mut network = Network::new(num_classes, cfg.seed.wrapping_add(2))?;
    let history = train(&mut network, &split.train, &split.validation, cfg)?;
    let confusion = confusion_matrix(&network, &split.test);
    let test_accuracy = accuracy(&confusion);
    Ok(TrainedClassifier { network, history, confusion, test_accuracy })
}
