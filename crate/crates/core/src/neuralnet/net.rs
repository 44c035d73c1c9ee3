use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::layer::{Layer, LayerSpec, Params};
use super::ops::{self, Mode};
use super::Tensor;
use crate::error::{Error, Result};
use crate::model::{argmax, Classifier, Prediction};

#[derive(Debug, Clone)]
enum LayerCache {
    Input(Tensor),
    Pool { input_shape: Vec<usize>, argmax: Vec<usize> },
    Flatten(Vec<usize>),
    Dropout(Option<Vec<f64>>),
}

#[derive(Debug, Clone)]
struct ForwardCache {
    /// Index of the first layer with a cache entry.
    start: usize,
    entries: Vec<LayerCache>,
}

/// Per-layer parameter gradients (`None` for parameterless or frozen layers).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Option<Params>>,
    /// Gradient with respect to the network input, when requested.
    pub input: Option<Tensor>,
}

impl Gradients {
    pub fn zeros_like(net: &SequentialNet) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| {
                    l.params.as_ref().map(|p| Params {
                        weights: Tensor::zeros(p.weights.shape()),
                        bias: Tensor::zeros(p.bias.shape()),
                    })
                })
                .collect(),
            input: None,
        }
    }
}

/// Ordered layer stack with materialized weights.
///
/// Inference (`forward`, `logits`, `predict`) borrows immutably and always
/// runs in eval mode. Training calls `forward_train` then `backward`; the
/// forward pass caches what the backward pass needs.
#[derive(Debug, Clone)]
pub struct SequentialNet {
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
    cache: Option<ForwardCache>,
}

impl PartialEq for SequentialNet {
    fn eq(&self, other: &Self) -> bool {
        self.input_shape == other.input_shape && self.layers == other.layers
    }
}

impl SequentialNet {
    /// Resolves shapes and draws He-normal weights (zero biases), one RNG
    /// stream per layer derived from `seed`.
    pub fn new(input_shape: &[usize], specs: &[LayerSpec], seed: u64) -> Result<Self> {
        let mut layers = Vec::with_capacity(specs.len());
        let mut shape = input_shape.to_vec();
        for (i, spec) in specs.iter().enumerate() {
            if *spec == LayerSpec::Softmax && i + 1 != specs.len() {
                return Err(Error::InvalidArgument("softmax is only supported as the final layer".into()));
            }
            let output_shape = spec.output_shape(&shape)?;
            let params = Layer::weight_shape(spec, &shape).map(|wshape| {
                let fan_in: usize = wshape[..wshape.len() - 1].iter().product();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
                let n: usize = wshape.iter().product();
                let data: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
                Params {
                    weights: Tensor::new(&wshape, data).expect("sized"),
                    bias: Tensor::zeros(&[*wshape.last().unwrap()]),
                }
            });
            layers.push(Layer {
                spec: *spec,
                input_shape: shape.clone(),
                output_shape: output_shape.clone(),
                params,
                trainable: true,
            });
            shape = output_shape;
        }
        SequentialNet::from_layers(input_shape.to_vec(), layers)
    }

    /// Assembles a network from already materialized layers, checking that shapes chain.
    pub fn from_layers(input_shape: Vec<usize>, layers: Vec<Layer>) -> Result<Self> {
        let mut shape = input_shape.clone();
        for (i, layer) in layers.iter().enumerate() {
            if layer.input_shape != shape {
                return Err(Error::shape(format!("layer {i} input {shape:?}"), format!("{:?}", layer.input_shape)));
            }
            let out = layer.spec.output_shape(&shape)?;
            if out != layer.output_shape {
                return Err(Error::shape(format!("layer {i} output {out:?}"), format!("{:?}", layer.output_shape)));
            }
            match (Layer::weight_shape(&layer.spec, &shape), &layer.params) {
                (None, None) => {}
                (Some(ws), Some(p)) if p.weights.shape() == ws.as_slice() && p.bias.shape() == [ws[ws.len() - 1]] => {}
                _ => return Err(Error::shape(format!("layer {i} parameters"), "mismatched weights")),
            }
            shape = out;
        }
        if let Some(pos) = layers.iter().position(|l| l.spec == LayerSpec::Softmax) {
            if pos + 1 != layers.len() {
                return Err(Error::InvalidArgument("softmax is only supported as the final layer".into()));
            }
        }
        Ok(SequentialNet {
            input_shape,
            layers,
            cache: None,
        })
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn output_shape(&self) -> &[usize] {
        self.layers.last().map_or(&self.input_shape, |l| &l.output_shape)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Per-sample output shape after every layer.
    pub fn shape_trace(&self) -> Vec<Vec<usize>> {
        self.layers.iter().map(|l| l.output_shape.clone()).collect()
    }

    pub fn set_trainable(&mut self, layer: usize, trainable: bool) {
        self.layers[layer].trainable = trainable;
    }

    /// Freezes every parameterized layer except the last `n` of them.
    pub fn freeze_all_but_last(&mut self, n: usize) {
        let param_layers: Vec<usize> = (0..self.layers.len()).filter(|&i| self.layers[i].params.is_some()).collect();
        let cut = param_layers.len().saturating_sub(n);
        for (rank, &i) in param_layers.iter().enumerate() {
            self.layers[i].trainable = rank >= cut;
        }
    }

    pub fn first_trainable(&self) -> Option<usize> {
        self.layers.iter().position(|l| l.trainable && l.params.is_some())
    }

    /// Number of layers that produce logits (a trailing softmax is excluded).
    pub fn logit_end(&self) -> usize {
        match self.layers.last() {
            Some(l) if l.spec == LayerSpec::Softmax => self.layers.len() - 1,
            _ => self.layers.len(),
        }
    }

    fn check_batch(&self, input: &Tensor, expected: &[usize]) -> Result<()> {
        if input.shape().len() != expected.len() + 1 || &input.shape()[1..] != expected {
            return Err(Error::shape(format!("[N, {expected:?}]"), format!("{:?}", input.shape())));
        }
        Ok(())
    }

    fn apply(layer: &Layer, x: Tensor, mode: Mode, rng: &mut dyn rand::RngCore, cache: Option<&mut Vec<LayerCache>>) -> Result<Tensor> {
        let batch = x.batch();
        let out = match layer.spec {
            LayerSpec::Conv2d { stride, padding, .. } => {
                let p = layer.params.as_ref().expect("conv params");
                let y = ops::conv2d_forward(&x, &p.weights, &p.bias, stride, padding)?;
                if let Some(c) = cache {
                    c.push(LayerCache::Input(x));
                }
                y
            }
            LayerSpec::Dense { .. } => {
                let p = layer.params.as_ref().expect("dense params");
                let y = ops::dense_forward(&x, &p.weights, &p.bias)?;
                if let Some(c) = cache {
                    c.push(LayerCache::Input(x));
                }
                y
            }
            LayerSpec::MaxPool2d { window, stride } => {
                let (y, argmax) = ops::maxpool2d_forward(&x, window, stride)?;
                if let Some(c) = cache {
                    c.push(LayerCache::Pool {
                        input_shape: x.shape().to_vec(),
                        argmax,
                    });
                }
                y
            }
            LayerSpec::Relu => {
                let y = ops::relu_forward(&x);
                if let Some(c) = cache {
                    c.push(LayerCache::Input(x));
                }
                y
            }
            LayerSpec::Flatten => {
                let shape = x.shape().to_vec();
                let y = x.reshape(&[batch, layer.output_shape[0]])?;
                if let Some(c) = cache {
                    c.push(LayerCache::Flatten(shape));
                }
                y
            }
            LayerSpec::Dropout { rate } => {
                let (y, mask) = ops::dropout_forward(&x, rate, mode, rng)?;
                if let Some(c) = cache {
                    c.push(LayerCache::Dropout(mask));
                }
                y
            }
            LayerSpec::Softmax => ops::softmax(&x)?,
        };
        if !out.is_finite() {
            return Err(Error::NonFiniteActivation(layer.spec.name()));
        }
        Ok(out)
    }

    /// Eval-mode pass through layers `[start, end)`.
    pub fn forward_range(&self, start: usize, end: usize, input: &Tensor) -> Result<Tensor> {
        let expected = if start == 0 {
            &self.input_shape
        } else {
            &self.layers[start - 1].output_shape
        };
        self.check_batch(input, expected)?;
        // eval mode never draws from the rng
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut x = input.clone();
        for layer in &self.layers[start..end] {
            x = Self::apply(layer, x, Mode::Eval, &mut rng, None)?;
        }
        Ok(x)
    }

    /// Eval-mode forward through every layer (probabilities when the net ends in softmax).
    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        self.forward_range(0, self.layers.len(), input)
    }

    /// Eval-mode forward stopping before a trailing softmax.
    pub fn logits(&self, input: &Tensor) -> Result<Tensor> {
        self.forward_range(0, self.logit_end(), input)
    }

    pub fn forward_train<R: Rng>(&mut self, input: &Tensor, rng: &mut R) -> Result<Tensor> {
        self.forward_train_from(0, input, rng)
    }

    /// Train-mode forward from layer `start` (whose input is `input`) up to the logits.
    ///
    /// Frozen layers ahead of the first trainable one run in eval mode and
    /// cache nothing, since no gradient flows into them.
    pub fn forward_train_from<R: Rng>(&mut self, start: usize, input: &Tensor, rng: &mut R) -> Result<Tensor> {
        let expected = if start == 0 {
            self.input_shape.clone()
        } else {
            self.layers[start - 1].output_shape.clone()
        };
        self.check_batch(input, &expected)?;
        let end = self.logit_end();
        let cache_from = self.first_trainable().unwrap_or(end).max(start);
        self.cache = None;
        let mut entries = Vec::with_capacity(end.saturating_sub(cache_from));
        let mut x = input.clone();
        for i in start..end {
            let layer = &self.layers[i];
            x = if i < cache_from {
                Self::apply(layer, x, Mode::Eval, rng, None)?
            } else {
                Self::apply(layer, x, Mode::Train, rng, Some(&mut entries))?
            };
        }
        self.cache = Some(ForwardCache {
            start: cache_from,
            entries,
        });
        Ok(x)
    }

    /// Backpropagates the gradient of the loss with respect to the logits.
    pub fn backward(&mut self, grad_logits: &Tensor) -> Result<Gradients> {
        self.backward_impl(grad_logits, false)
    }

    /// Like [`backward`](Self::backward) but also returns the input gradient.
    /// Requires the whole stack to have been cached (no frozen prefix).
    pub fn backward_to_input(&mut self, grad_logits: &Tensor) -> Result<Gradients> {
        self.backward_impl(grad_logits, true)
    }

    fn backward_impl(&mut self, grad_logits: &Tensor, want_input: bool) -> Result<Gradients> {
        let cache = self.cache.take().ok_or(Error::NoForwardCache)?;
        if want_input && cache.start != 0 {
            return Err(Error::InvalidArgument("input gradient needs a fully cached forward pass".into()));
        }
        let mut grads = Gradients {
            layers: vec![None; self.layers.len()],
            input: None,
        };
        let mut g = grad_logits.clone();
        let end = self.logit_end();
        for (offset, entry) in cache.entries.into_iter().enumerate().rev() {
            let i = cache.start + offset;
            debug_assert!(i < end);
            let layer = &self.layers[i];
            let need_input = i > cache.start || want_input;
            g = match (&layer.spec, entry) {
                (LayerSpec::Conv2d { stride, padding, .. }, LayerCache::Input(x)) => {
                    let p = layer.params.as_ref().expect("conv params");
                    let cg = ops::conv2d_backward(&x, &p.weights, *stride, *padding, &g, need_input)?;
                    if layer.trainable {
                        grads.layers[i] = Some(Params {
                            weights: cg.weights,
                            bias: cg.bias,
                        });
                    }
                    match cg.input {
                        Some(t) => t,
                        None => break,
                    }
                }
                (LayerSpec::Dense { .. }, LayerCache::Input(x)) => {
                    let p = layer.params.as_ref().expect("dense params");
                    let dg = ops::dense_backward(&x, &p.weights, &g, need_input)?;
                    if layer.trainable {
                        grads.layers[i] = Some(Params {
                            weights: dg.weights,
                            bias: dg.bias,
                        });
                    }
                    match dg.input {
                        Some(t) => t,
                        None => break,
                    }
                }
                (LayerSpec::MaxPool2d { .. }, LayerCache::Pool { input_shape, argmax }) => {
                    ops::maxpool2d_backward(&input_shape, &argmax, &g)?
                }
                (LayerSpec::Relu, LayerCache::Input(x)) => ops::relu_backward(&x, &g)?,
                (LayerSpec::Flatten, LayerCache::Flatten(shape)) => g.reshape(&shape)?,
                (LayerSpec::Dropout { .. }, LayerCache::Dropout(mask)) => ops::dropout_backward(mask.as_deref(), &g),
                (spec, _) => unreachable!("cache entry does not match {}", spec.name()),
            };
            if i == 0 {
                grads.input = Some(g.clone());
            }
        }
        Ok(grads)
    }

    /// `w <- w - learning_rate * g` for every layer that has a gradient.
    pub fn sgd_step(&mut self, grads: &Gradients, learning_rate: f64) -> Result<()> {
        if grads.layers.len() != self.layers.len() {
            return Err(Error::shape(format!("{} layer gradients", self.layers.len()), grads.layers.len()));
        }
        for (i, (layer, grad)) in self.layers.iter().zip(&grads.layers).enumerate() {
            match (&layer.params, grad) {
                (_, None) => {}
                (Some(p), Some(g)) if p.weights.shape() == g.weights.shape() && p.bias.shape() == g.bias.shape() => {}
                _ => return Err(Error::shape(format!("layer {i} parameter shapes"), "gradient shapes")),
            }
        }
        for (layer, grad) in self.layers.iter_mut().zip(&grads.layers) {
            if let (Some(p), Some(g)) = (layer.params.as_mut(), grad) {
                for (w, d) in p.weights.data_mut().iter_mut().zip(g.weights.data()) {
                    *w -= learning_rate * d;
                }
                for (b, d) in p.bias.data_mut().iter_mut().zip(g.bias.data()) {
                    *b -= learning_rate * d;
                }
            }
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Eval-mode predictions for every item of a batch.
    pub fn predict_batch(&self, inputs: &Tensor) -> Result<Vec<Prediction>> {
        let probs = ops::softmax(&self.logits(inputs)?)?;
        Ok((0..probs.batch())
            .map(|i| {
                let p = probs.item(i).to_vec();
                Prediction {
                    class: argmax(&p),
                    probabilities: p,
                }
            })
            .collect())
    }
}

impl Classifier for SequentialNet {
    fn n_features(&self) -> usize {
        self.input_shape.iter().product()
    }

    fn n_classes(&self) -> usize {
        self.layers[..self.logit_end()]
            .last()
            .map_or(0, |l| l.output_shape.iter().product())
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let input = Tensor::stack(&self.input_shape, &[x])?;
        Ok(ops::softmax(&self.logits(&input)?)?.into_data())
    }
}
