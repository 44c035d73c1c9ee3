use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ops::softmax_cross_entropy;
use super::{SequentialNet, Tensor};
use crate::error::{Error, Result};
use crate::model::argmax;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            learning_rate: 0.01,
            batch_size: 16,
            epochs: 10,
            seed: 42,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate {} must be > 0", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Inputs `[N, ...]` with one-hot targets `[N, K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub inputs: Tensor,
    pub targets: Tensor,
}

impl TrainingSet {
    pub fn new(inputs: Tensor, targets: Tensor) -> Result<Self> {
        let (n, _) = targets.dims2()?;
        if inputs.batch() != n {
            return Err(Error::shape(format!("{n} inputs"), inputs.batch()));
        }
        Ok(TrainingSet { inputs, targets })
    }

    /// One-hot encodes class indices.
    pub fn from_labels(inputs: Tensor, labels: &[usize], n_classes: usize) -> Result<Self> {
        let mut targets = Tensor::zeros(&[labels.len(), n_classes]);
        for (i, &y) in labels.iter().enumerate() {
            if y >= n_classes {
                return Err(Error::InvalidArgument(format!("label {y} outside [0, {n_classes})")));
            }
            targets.data_mut()[i * n_classes + y] = 1.0;
        }
        TrainingSet::new(inputs, targets)
    }

    pub fn len(&self) -> usize {
        self.inputs.batch()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean training loss over the epoch.
    pub loss: f64,
    /// Train-mode accuracy over the epoch's batches.
    pub accuracy: f64,
}

pub type History = Vec<EpochStats>;

/// In-place per-sample transform applied to every training item as it is batched.
pub type AugmentFn<'a> = dyn Fn(&mut [f64], &mut ChaCha8Rng) + 'a;

/// Returns `true` to stop training after the given epoch.
pub type StopFn<'a> = dyn FnMut(&SequentialNet, &EpochStats) -> bool + 'a;

#[derive(Default)]
pub struct TrainHooks<'a> {
    pub augment: Option<&'a AugmentFn<'a>>,
    pub stop: Option<&'a mut StopFn<'a>>,
}

/// Mini-batch SGD on mean softmax cross-entropy.
pub fn train(net: &mut SequentialNet, data: &TrainingSet, cfg: &SgdConfig) -> Result<History> {
    train_with(net, data, cfg, TrainHooks::default())
}

/// [`train`] with optional per-sample augmentation and early stopping.
///
/// A single RNG seeded from `cfg.seed` drives shuffling, augmentation and
/// dropout, in that order within each batch, so runs are reproducible. When
/// the leading layers are frozen and no augmentation is set, their outputs
/// are computed once up front instead of every epoch.
pub fn train_with(net: &mut SequentialNet, data: &TrainingSet, cfg: &SgdConfig, mut hooks: TrainHooks<'_>) -> Result<History> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training set has no items".into()));
    }
    let k = data.targets.item_len();
    let start = net
        .first_trainable()
        .ok_or_else(|| Error::InvalidArgument("network has no trainable layers".into()))?;

    let (features, start) = if start > 0 && hooks.augment.is_none() {
        let mut out = Vec::with_capacity(data.len());
        for i in 0..data.len() {
            let x = Tensor::stack(net.input_shape(), &[data.inputs.item(i)])?;
            out.push(net.forward_range(0, start, &x)?);
        }
        let shape = net.layers()[start - 1].output_shape.clone();
        let items: Vec<&[f64]> = out.iter().map(Tensor::data).collect();
        (Tensor::stack(&shape, &items)?, start)
    } else {
        (data.inputs.clone(), 0)
    };
    let item_shape = features.shape()[1..].to_vec();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut hits = 0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut items: Vec<Vec<f64>> = batch.iter().map(|&i| features.item(i).to_vec()).collect();
            if let Some(aug) = hooks.augment {
                for item in items.iter_mut() {
                    aug(item, &mut rng);
                }
            }
            let refs: Vec<&[f64]> = items.iter().map(Vec::as_slice).collect();
            let x = Tensor::stack(&item_shape, &refs)?;
            let target_rows: Vec<&[f64]> = batch.iter().map(|&i| data.targets.item(i)).collect();
            let t = Tensor::stack(&[k], &target_rows)?;

            let logits = match net.forward_train_from(start, &x, &mut rng) {
                Err(Error::NonFiniteActivation(_)) => return Err(Error::NonFiniteLoss { epoch, batch: b }),
                other => other?,
            };
            let (loss, grad) = softmax_cross_entropy(&logits, &t)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            for i in 0..batch.len() {
                if argmax(logits.item(i)) == argmax(t.item(i)) {
                    hits += 1;
                }
            }
            loss_sum += loss * batch.len() as f64;
            let grads = net.backward(&grad)?;
            net.sgd_step(&grads, cfg.learning_rate)?;
        }
        let stats = EpochStats {
            epoch,
            loss: loss_sum / data.len() as f64,
            accuracy: hits as f64 / data.len() as f64,
        };
        history.push(stats);
        if let Some(stop) = hooks.stop.as_mut() {
            if stop(net, &stats) {
                break;
            }
        }
    }
    Ok(history)
}

/// Eval-mode accuracy of `net` on a labelled set.
pub fn accuracy(net: &SequentialNet, data: &TrainingSet) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("no items to evaluate".into()));
    }
    let mut hits = 0;
    for chunk_start in (0..data.len()).step_by(32) {
        let end = (chunk_start + 32).min(data.len());
        let items: Vec<&[f64]> = (chunk_start..end).map(|i| data.inputs.item(i)).collect();
        let x = Tensor::stack(net.input_shape(), &items)?;
        for (offset, p) in net.predict_batch(&x)?.into_iter().enumerate() {
            if p.class == argmax(data.targets.item(chunk_start + offset)) {
                hits += 1;
            }
        }
    }
    Ok(hits as f64 / data.len() as f64)
}

/// Random draw helper used by augmentation hooks.
pub fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::{build_lung_cnn, LayerSpec};

    /// `per_class` solid-colour images of each of red, green, blue.
    fn solid_colours(size: usize, per_class: usize) -> TrainingSet {
        let colours = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let mut items = Vec::new();
        let mut labels = Vec::new();
        for (c, rgb) in colours.iter().enumerate() {
            for _ in 0..per_class {
                items.push(rgb.repeat(size * size));
                labels.push(c);
            }
        }
        let refs: Vec<&[f64]> = items.iter().map(Vec::as_slice).collect();
        TrainingSet::from_labels(Tensor::stack(&[size, size, 3], &refs).unwrap(), &labels, 3).unwrap()
    }

    fn small_net(seed: u64) -> SequentialNet {
        let specs = [
            LayerSpec::conv3x3(4),
            LayerSpec::Relu,
            LayerSpec::pool2(),
            LayerSpec::Flatten,
            LayerSpec::dense(8),
            LayerSpec::Relu,
            LayerSpec::Dropout { rate: 0.25 },
            LayerSpec::dense(3),
            LayerSpec::Softmax,
        ];
        SequentialNet::new(&[8, 8, 3], &specs, seed).unwrap()
    }

    #[test]
    fn zero_epochs_leave_net_unchanged() {
        let mut net = small_net(1);
        let before = net.clone();
        let cfg = SgdConfig { epochs: 0, ..SgdConfig::default() };
        let history = train(&mut net, &solid_colours(8, 2), &cfg).unwrap();
        assert!(history.is_empty());
        assert_eq!(net, before);
    }

    #[test]
    fn training_is_deterministic() {
        let data = solid_colours(8, 3);
        let cfg = SgdConfig { epochs: 4, batch_size: 4, ..SgdConfig::default() };
        let mut a = small_net(3);
        let mut b = small_net(3);
        let ha = train(&mut a, &data, &cfg).unwrap();
        let hb = train(&mut b, &data, &cfg).unwrap();
        assert_eq!(ha, hb);
        assert_eq!(a, b);
        assert_eq!(ha.len(), 4);
        assert!(ha.iter().enumerate().all(|(i, s)| s.epoch == i));
    }

    #[test]
    fn empty_and_invalid_inputs_are_rejected() {
        let mut net = small_net(0);
        let empty = TrainingSet::new(Tensor::zeros(&[0, 8, 8, 3]), Tensor::zeros(&[0, 3])).unwrap();
        assert!(matches!(train(&mut net, &empty, &SgdConfig::default()), Err(Error::Empty(_))));
        let data = solid_colours(8, 1);
        let bad = SgdConfig { batch_size: 0, ..SgdConfig::default() };
        assert!(train(&mut net, &data, &bad).is_err());
        let bad = SgdConfig { learning_rate: 0.0, ..SgdConfig::default() };
        assert!(train(&mut net, &data, &bad).is_err());
        assert!(TrainingSet::from_labels(Tensor::zeros(&[1, 8, 8, 3]), &[3], 3).is_err());
    }

    #[test]
    fn divergence_reports_epoch_and_batch() {
        let mut net = small_net(0);
        let cfg = SgdConfig { learning_rate: 1e200, epochs: 3, batch_size: 3, seed: 0 };
        match train(&mut net, &solid_colours(8, 2), &cfg) {
            Err(Error::NonFiniteLoss { epoch, .. }) => assert!(epoch < 3),
            other => panic!("expected divergence error, got {other:?}"),
        }
    }

    #[test]
    fn frozen_prefix_shortcut_matches_full_forward() {
        let data = solid_colours(8, 2);
        let cfg = SgdConfig { epochs: 3, batch_size: 2, ..SgdConfig::default() };
        let mut a = small_net(5);
        a.freeze_all_but_last(1);
        let mut b = a.clone();
        let ha = train(&mut a, &data, &cfg).unwrap();
        let identity = |_: &mut [f64], _: &mut ChaCha8Rng| {};
        let hooks = TrainHooks { augment: Some(&identity), stop: None };
        let hb = train_with(&mut b, &data, &cfg, hooks).unwrap();
        assert_eq!(ha, hb);
        assert_eq!(a, b);
    }

    #[test]
    fn stop_hook_ends_training() {
        let mut net = small_net(2);
        let cfg = SgdConfig { epochs: 10, ..SgdConfig::default() };
        let mut stop = |_: &SequentialNet, s: &EpochStats| s.epoch == 1;
        let hooks = TrainHooks { augment: None, stop: Some(&mut stop) };
        let history = train_with(&mut net, &solid_colours(8, 2), &cfg, hooks).unwrap();
        assert_eq!(history.len(), 2);
    }

    #[test]
    fn lung_cnn_overfits_solid_colours() {
        let data = solid_colours(32, 4);
        let mut net = build_lung_cnn(32, 32, 3, 42).unwrap();
        let cfg = SgdConfig { learning_rate: 0.01, batch_size: 4, epochs: 200, seed: 42 };
        let mut stop = |n: &SequentialNet, _: &EpochStats| accuracy(n, &data).unwrap() == 1.0;
        let hooks = TrainHooks { augment: None, stop: Some(&mut stop) };
        let history = train_with(&mut net, &data, &cfg, hooks).unwrap();
        assert!(history.len() <= 200);
        assert_eq!(accuracy(&net, &data).unwrap(), 1.0);
    }
}
