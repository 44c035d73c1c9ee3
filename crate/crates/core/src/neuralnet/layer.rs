use super::ops::{conv_output_extent, Padding};
use super::Tensor;
use crate::error::{Error, Result};

/// Architecture description of one layer, before weights exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerSpec {
    Conv2d {
        out_channels: usize,
        kernel: (usize, usize),
        stride: usize,
        padding: Padding,
    },
    MaxPool2d {
        window: usize,
        stride: usize,
    },
    Relu,
    Flatten,
    Dense {
        out_features: usize,
    },
    Dropout {
        rate: f64,
    },
    Softmax,
}

impl LayerSpec {
    /// 3×3, stride 1, same padding.
    pub fn conv3x3(out_channels: usize) -> Self {
        LayerSpec::Conv2d {
            out_channels,
            kernel: (3, 3),
            stride: 1,
            padding: Padding::Same,
        }
    }

    pub fn pool2() -> Self {
        LayerSpec::MaxPool2d { window: 2, stride: 2 }
    }

    pub fn dense(out_features: usize) -> Self {
        LayerSpec::Dense { out_features }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::MaxPool2d { .. } => "maxpool2d",
            LayerSpec::Relu => "relu",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::Softmax => "softmax",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            LayerSpec::Conv2d {
                out_channels,
                kernel,
                stride,
                ..
            } => out_channels > 0 && kernel.0 > 0 && kernel.1 > 0 && stride > 0,
            LayerSpec::MaxPool2d { window, stride } => window > 0 && stride > 0,
            LayerSpec::Dense { out_features } => out_features > 0,
            LayerSpec::Dropout { rate } => (0.0..1.0).contains(&rate),
            LayerSpec::Relu | LayerSpec::Flatten | LayerSpec::Softmax => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid {} parameters: {self:?}", self.name())))
        }
    }

    /// Per-sample output shape for a per-sample input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        self.validate()?;
        let image = || match *input {
            [h, w, c] => Ok((h, w, c)),
            _ => Err(Error::shape(format!("H x W x C input to {}", self.name()), format!("{input:?}"))),
        };
        let vector = || match *input {
            [d] => Ok(d),
            _ => Err(Error::shape(format!("flat input to {}", self.name()), format!("{input:?}"))),
        };
        Ok(match *self {
            LayerSpec::Conv2d {
                out_channels,
                kernel,
                stride,
                padding,
            } => {
                let (h, w, _) = image()?;
                let (oh, _) = conv_output_extent(h, kernel.0, stride, padding)?;
                let (ow, _) = conv_output_extent(w, kernel.1, stride, padding)?;
                vec![oh, ow, out_channels]
            }
            LayerSpec::MaxPool2d { window, stride } => {
                let (h, w, c) = image()?;
                if window > h || window > w {
                    return Err(Error::shape(format!("spatial extent >= {window}"), format!("{h}x{w}")));
                }
                vec![(h - window) / stride + 1, (w - window) / stride + 1, c]
            }
            LayerSpec::Flatten => vec![input.iter().product()],
            LayerSpec::Dense { out_features } => {
                vector()?;
                vec![out_features]
            }
            LayerSpec::Softmax => {
                vector()?;
                input.to_vec()
            }
            LayerSpec::Relu | LayerSpec::Dropout { .. } => input.to_vec(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub weights: Tensor,
    pub bias: Tensor,
}

/// A layer with its resolved shapes and, for conv/dense, its weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub spec: LayerSpec,
    pub input_shape: Vec<usize>,
    pub output_shape: Vec<usize>,
    pub params: Option<Params>,
    pub trainable: bool,
}

impl Layer {
    pub fn param_count(&self) -> usize {
        self.params.as_ref().map_or(0, |p| p.weights.len() + p.bias.len())
    }

    /// Shape of the weight tensor for conv/dense layers.
    pub fn weight_shape(spec: &LayerSpec, input: &[usize]) -> Option<Vec<usize>> {
        match *spec {
            LayerSpec::Conv2d {
                out_channels, kernel, ..
            } => Some(vec![kernel.0, kernel.1, *input.last()?, out_channels]),
            LayerSpec::Dense { out_features } => Some(vec![input[0], out_features]),
            _ => None,
        }
    }
}
