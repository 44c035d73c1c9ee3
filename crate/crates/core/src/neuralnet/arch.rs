//! Builders for the two image architectures.

use serde::{Deserialize, Serialize};

use super::layer::{Layer, LayerSpec};
use super::SequentialNet;
use crate::error::{Error, Result};

pub const VGG16_INPUT: [usize; 3] = [224, 224, 3];

/// Hyperparameters of the three-block sequential CNN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LungCnnConfig {
    pub filters: [usize; 3],
    pub dense_units: usize,
    pub dropout: f64,
}

impl Default for LungCnnConfig {
    fn default() -> Self {
        LungCnnConfig {
            filters: [32, 64, 128],
            dense_units: 128,
            dropout: 0.5,
        }
    }
}

/// conv-relu-pool ×3, flatten, dense-relu, dropout, dense, softmax.
pub fn lung_cnn_specs(cfg: &LungCnnConfig, n_classes: usize) -> Vec<LayerSpec> {
    let mut specs = Vec::new();
    for &f in &cfg.filters {
        specs.extend([LayerSpec::conv3x3(f), LayerSpec::Relu, LayerSpec::pool2()]);
    }
    specs.extend([
        LayerSpec::Flatten,
        LayerSpec::dense(cfg.dense_units),
        LayerSpec::Relu,
        LayerSpec::Dropout { rate: cfg.dropout },
        LayerSpec::dense(n_classes),
        LayerSpec::Softmax,
    ]);
    specs
}

pub fn build_lung_cnn(height: usize, width: usize, n_classes: usize, seed: u64) -> Result<SequentialNet> {
    build_lung_cnn_with(height, width, n_classes, &LungCnnConfig::default(), seed)
}

pub fn build_lung_cnn_with(
    height: usize,
    width: usize,
    n_classes: usize,
    cfg: &LungCnnConfig,
    seed: u64,
) -> Result<SequentialNet> {
    if height == 0 || width == 0 || !height.is_multiple_of(8) || !width.is_multiple_of(8) {
        return Err(Error::InvalidArgument(format!(
            "input size {height}x{width} must be a positive multiple of 8"
        )));
    }
    if n_classes < 2 {
        return Err(Error::InvalidArgument("a classifier needs at least 2 classes".into()));
    }
    SequentialNet::new(&[height, width, 3], &lung_cnn_specs(cfg, n_classes), seed)
}

/// Standard VGG-16: 13 3×3 convolutions in five pooled blocks, then
/// dense 4096 → 4096 → `n_classes`.
pub fn vgg16_specs(n_classes: usize) -> Vec<LayerSpec> {
    let mut specs = Vec::new();
    for (convs, width) in [(2, 64), (2, 128), (3, 256), (3, 512), (3, 512)] {
        for _ in 0..convs {
            specs.extend([LayerSpec::conv3x3(width), LayerSpec::Relu]);
        }
        specs.push(LayerSpec::pool2());
    }
    specs.extend([
        LayerSpec::Flatten,
        LayerSpec::dense(4096),
        LayerSpec::Relu,
        LayerSpec::dense(4096),
        LayerSpec::Relu,
        LayerSpec::dense(n_classes),
        LayerSpec::Softmax,
    ]);
    specs
}

/// Allocates about 1.1 GB of `f64` weights.
pub fn build_vgg16(n_classes: usize, seed: u64) -> Result<SequentialNet> {
    if n_classes < 2 {
        return Err(Error::InvalidArgument("a classifier needs at least 2 classes".into()));
    }
    SequentialNet::new(&VGG16_INPUT, &vgg16_specs(n_classes), seed)
}

/// Output shape after each layer, without allocating weights.
pub fn shape_walk(input: &[usize], specs: &[LayerSpec]) -> Result<Vec<Vec<usize>>> {
    let mut shape = input.to_vec();
    specs
        .iter()
        .map(|s| {
            shape = s.output_shape(&shape)?;
            Ok(shape.clone())
        })
        .collect()
}

/// Parameter count of an architecture, without allocating weights.
pub fn spec_param_count(input: &[usize], specs: &[LayerSpec]) -> Result<usize> {
    let mut shape = input.to_vec();
    let mut total = 0;
    for s in specs {
        if let Some(ws) = Layer::weight_shape(s, &shape) {
            total += ws.iter().product::<usize>() + ws[ws.len() - 1];
        }
        shape = s.output_shape(&shape)?;
    }
    Ok(total)
}
