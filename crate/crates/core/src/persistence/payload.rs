//! Model-kind-specific sections of the file.

use super::codec::{Reader, Writer};
use crate::ensemble::{
    AdaBoostModel, DecisionTree, EnsembleConfig, FeatureSubsample, LogisticModel, SplitCriterion, TreeConfig,
    TreeEnsemble, TreeNode,
};
use crate::error::{Error, Result};
use crate::model::{Model, ModelKind};
use crate::neuralnet::{Layer, LayerSpec, Padding, Params, SequentialNet, Tensor};

/// Deeper trees are rejected on load rather than risking stack exhaustion.
const MAX_TREE_DEPTH: usize = 4096;

pub(crate) fn write_model(w: &mut Writer, model: &Model) -> Result<()> {
    match model {
        Model::Tree(t) => {
            w.usize32(t.n_features)?;
            w.usize32(t.n_classes)?;
            write_tree_config(w, &t.config);
            write_node(w, &t.root)
        }
        Model::Forest(e) | Model::Bagging(e) => {
            w.usize32(e.n_features)?;
            w.usize32(e.n_classes)?;
            write_tree_config(w, &e.config.tree);
            w.u64(e.config.n_trees as u64);
            w.u8(u8::from(e.config.bootstrap));
            w.u64(e.seed);
            w.usize32(e.trees.len())?;
            e.trees.iter().try_for_each(|t| write_node(w, t))
        }
        Model::AdaBoost(a) => {
            w.usize32(a.n_features)?;
            w.usize32(a.stumps.len())?;
            for (s, &alpha) in a.stumps.iter().zip(&a.alphas) {
                w.f64(alpha);
                write_node(w, s)?;
            }
            Ok(())
        }
        Model::Logistic(l) => {
            w.f64s(&l.weights)?;
            w.f64(l.bias);
            w.f64(l.learning_rate);
            w.u64(l.epochs as u64);
            Ok(())
        }
        Model::NeuralNet(n) => write_net(w, n),
    }
}

pub(crate) fn read_model(r: &mut Reader, kind: ModelKind) -> Result<Model> {
    Ok(match kind {
        ModelKind::Tree => {
            let n_features = r.usize32()?;
            let n_classes = r.usize32()?;
            let config = read_tree_config(r)?;
            let root = read_node(r, 0)?;
            check_tree(&root, n_features, n_classes)?;
            Model::Tree(DecisionTree {
                root,
                n_features,
                n_classes,
                config,
            })
        }
        ModelKind::Forest | ModelKind::Bagging => {
            let n_features = r.usize32()?;
            let n_classes = r.usize32()?;
            let tree = read_tree_config(r)?;
            let n_trees = r.u64()? as usize;
            let bootstrap = r.bool()?;
            let seed = r.u64()?;
            let count = r.usize32()?;
            let trees = (0..count).map(|_| read_node(r, 0)).collect::<Result<Vec<_>>>()?;
            if trees.is_empty() {
                return Err(Error::Malformed("ensemble has no trees".into()));
            }
            trees.iter().try_for_each(|t| check_tree(t, n_features, n_classes))?;
            let e = TreeEnsemble {
                trees,
                n_features,
                n_classes,
                config: EnsembleConfig {
                    tree,
                    n_trees,
                    bootstrap,
                },
                seed,
            };
            if kind == ModelKind::Forest {
                Model::Forest(e)
            } else {
                Model::Bagging(e)
            }
        }
        ModelKind::AdaBoost => {
            let n_features = r.usize32()?;
            let count = r.usize32()?;
            let mut stumps = Vec::new();
            let mut alphas = Vec::new();
            for _ in 0..count {
                alphas.push(r.f64()?);
                let s = read_node(r, 0)?;
                check_tree(&s, n_features, 2)?;
                stumps.push(s);
            }
            if stumps.is_empty() {
                return Err(Error::Malformed("boosted model has no stumps".into()));
            }
            Model::AdaBoost(AdaBoostModel {
                stumps,
                alphas,
                n_features,
            })
        }
        ModelKind::Logistic => Model::Logistic(LogisticModel {
            weights: r.f64s()?,
            bias: r.f64()?,
            learning_rate: r.f64()?,
            epochs: r.u64()? as usize,
        }),
        ModelKind::NeuralNet => Model::NeuralNet(read_net(r)?),
    })
}

fn write_tree_config(w: &mut Writer, c: &TreeConfig) {
    w.u64(c.max_depth as u64);
    w.u64(c.min_samples_split as u64);
    w.u8(match c.criterion {
        SplitCriterion::Gini => 0,
    });
    w.u8(match c.feature_subsample {
        FeatureSubsample::All => 0,
        FeatureSubsample::Sqrt => 1,
    });
}

fn read_tree_config(r: &mut Reader) -> Result<TreeConfig> {
    let max_depth = usize::try_from(r.u64()?).unwrap_or(usize::MAX);
    let min_samples_split = usize::try_from(r.u64()?).unwrap_or(usize::MAX);
    let criterion = match r.u8()? {
        0 => SplitCriterion::Gini,
        v => return Err(Error::Malformed(format!("unknown split criterion {v}"))),
    };
    let feature_subsample = match r.u8()? {
        0 => FeatureSubsample::All,
        1 => FeatureSubsample::Sqrt,
        v => return Err(Error::Malformed(format!("unknown feature subsample {v}"))),
    };
    Ok(TreeConfig {
        max_depth,
        min_samples_split,
        criterion,
        feature_subsample,
    })
}

/// Pre-order: tag 0 = leaf (class counts), tag 1 = split (feature, threshold, left, right).
fn write_node(w: &mut Writer, node: &TreeNode) -> Result<()> {
    match node {
        TreeNode::Leaf { class_counts } => {
            w.u8(0);
            w.f64s(class_counts)
        }
        TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
        } => {
            w.u8(1);
            w.usize32(*feature)?;
            w.f64(*threshold);
            write_node(w, left)?;
            write_node(w, right)
        }
    }
}

fn read_node(r: &mut Reader, depth: usize) -> Result<TreeNode> {
    if depth > MAX_TREE_DEPTH {
        return Err(Error::Malformed("tree is too deep".into()));
    }
    match r.u8()? {
        0 => Ok(TreeNode::Leaf {
            class_counts: r.f64s()?,
        }),
        1 => Ok(TreeNode::Internal {
            feature: r.usize32()?,
            threshold: r.f64()?,
            left: Box::new(read_node(r, depth + 1)?),
            right: Box::new(read_node(r, depth + 1)?),
        }),
        v => Err(Error::Malformed(format!("unknown tree node tag {v}"))),
    }
}

fn check_tree(node: &TreeNode, n_features: usize, n_classes: usize) -> Result<()> {
    match node {
        TreeNode::Leaf { class_counts } if class_counts.len() == n_classes => Ok(()),
        TreeNode::Leaf { class_counts } => Err(Error::Malformed(format!(
            "leaf has {} class counts, model has {n_classes} classes",
            class_counts.len()
        ))),
        TreeNode::Internal { feature, left, right, .. } if *feature < n_features => {
            check_tree(left, n_features, n_classes)?;
            check_tree(right, n_features, n_classes)
        }
        TreeNode::Internal { feature, .. } => Err(Error::Malformed(format!(
            "split on feature {feature} but the model has {n_features}"
        ))),
    }
}

fn write_dims(w: &mut Writer, dims: &[usize]) -> Result<()> {
    w.usize32(dims.len())?;
    dims.iter().try_for_each(|&d| w.usize32(d))
}

fn read_dims(r: &mut Reader) -> Result<Vec<usize>> {
    let n = r.usize32()?;
    if n == 0 || n > 8 {
        return Err(Error::Malformed(format!("tensor rank {n}")));
    }
    (0..n).map(|_| r.usize32()).collect()
}

fn write_spec(w: &mut Writer, spec: &LayerSpec) -> Result<()> {
    match *spec {
        LayerSpec::Conv2d {
            out_channels,
            kernel,
            stride,
            padding,
        } => {
            w.u8(1);
            w.usize32(out_channels)?;
            w.usize32(kernel.0)?;
            w.usize32(kernel.1)?;
            w.usize32(stride)?;
            w.u8(match padding {
                Padding::Valid => 0,
                Padding::Same => 1,
            });
        }
        LayerSpec::MaxPool2d { window, stride } => {
            w.u8(2);
            w.usize32(window)?;
            w.usize32(stride)?;
        }
        LayerSpec::Relu => w.u8(3),
        LayerSpec::Flatten => w.u8(4),
        LayerSpec::Dense { out_features } => {
            w.u8(5);
            w.usize32(out_features)?;
        }
        LayerSpec::Dropout { rate } => {
            w.u8(6);
            w.f64(rate);
        }
        LayerSpec::Softmax => w.u8(7),
    }
    Ok(())
}

fn read_spec(r: &mut Reader) -> Result<LayerSpec> {
    let spec = match r.u8()? {
        1 => LayerSpec::Conv2d {
            out_channels: r.usize32()?,
            kernel: (r.usize32()?, r.usize32()?),
            stride: r.usize32()?,
            padding: match r.u8()? {
                0 => Padding::Valid,
                1 => Padding::Same,
                v => return Err(Error::Malformed(format!("unknown padding {v}"))),
            },
        },
        2 => LayerSpec::MaxPool2d {
            window: r.usize32()?,
            stride: r.usize32()?,
        },
        3 => LayerSpec::Relu,
        4 => LayerSpec::Flatten,
        5 => LayerSpec::Dense {
            out_features: r.usize32()?,
        },
        6 => LayerSpec::Dropout { rate: r.f64()? },
        7 => LayerSpec::Softmax,
        v => return Err(Error::Malformed(format!("unknown layer tag {v}"))),
    };
    spec.validate().map_err(|e| Error::Malformed(e.to_string()))?;
    Ok(spec)
}

/// Input shape, then per layer: spec, trainable flag, and for conv/dense the
/// weights followed by the bias. Weight shapes follow from the layer specs.
fn write_net(w: &mut Writer, net: &SequentialNet) -> Result<()> {
    write_dims(w, net.input_shape())?;
    w.usize32(net.layers().len())?;
    for layer in net.layers() {
        write_spec(w, &layer.spec)?;
        w.u8(u8::from(layer.trainable));
        if let Some(p) = &layer.params {
            p.weights.data().iter().for_each(|&v| w.f64(v));
            p.bias.data().iter().for_each(|&v| w.f64(v));
        }
    }
    Ok(())
}

fn read_net(r: &mut Reader) -> Result<SequentialNet> {
    let input_shape = read_dims(r)?;
    let n = r.usize32()?;
    let mut layers = Vec::new();
    let mut shape = input_shape.clone();
    for _ in 0..n {
        let spec = read_spec(r)?;
        let trainable = r.bool()?;
        let output_shape = spec.output_shape(&shape).map_err(|e| Error::Malformed(e.to_string()))?;
        let params = match Layer::weight_shape(&spec, &shape) {
            Some(ws) => {
                let count = ws.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
                let count = count.ok_or_else(|| Error::Malformed("weight tensor too large".into()))?;
                let weights = Tensor::new(&ws, r.f64_n(count)?)?;
                let bias = Tensor::new(&ws[ws.len() - 1..], r.f64_n(ws[ws.len() - 1])?)?;
                Some(Params { weights, bias })
            }
            None => None,
        };
        layers.push(Layer {
            spec,
            input_shape: shape,
            output_shape: output_shape.clone(),
            params,
            trainable,
        });
        shape = output_shape;
    }
    SequentialNet::from_layers(input_shape, layers).map_err(|e| Error::Malformed(e.to_string()))
}
