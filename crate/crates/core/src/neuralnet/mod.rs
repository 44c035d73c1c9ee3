//! A small tensor/NN engine: NHWC `f64` tensors, conv/pool/dense/relu/dropout
//! layers with hand-written backward passes, softmax cross-entropy, plain
//! SGD, and builders for the lung CNN and VGG-16.

mod arch;
mod gemm;
mod layer;
mod net;
mod ops;
mod tensor;
mod train;

pub use arch::{
    build_lung_cnn, build_lung_cnn_with, build_vgg16, lung_cnn_specs, shape_walk, spec_param_count, vgg16_specs,
    LungCnnConfig, VGG16_INPUT,
};
pub use layer::{Layer, LayerSpec, Params};
pub use net::{Gradients, SequentialNet};
pub use ops::{
    conv2d_backward, conv2d_forward, conv_output_extent, dense_backward, dense_forward, dropout_backward,
    dropout_forward, maxpool2d_backward, maxpool2d_forward, relu_backward, relu_forward, softmax,
    softmax_cross_entropy, ConvGrads, DenseGrads, Mode, Padding,
};
pub use tensor::Tensor;
pub use train::{accuracy, train, train_with, uniform, AugmentFn, EpochStats, History, SgdConfig, StopFn, TrainHooks, TrainingSet};
