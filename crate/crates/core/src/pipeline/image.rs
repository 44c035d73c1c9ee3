use std::path::Path;

use rand_chacha::ChaCha8Rng;

use super::config::{ImageArch, ResolvedImage};
use super::{Disease, TrainConfig, TrainOutcome};
use crate::dataframe::split_indices;
use crate::error::{Error, Result};
use crate::metrics::{confusion_matrix, report, ClassificationReport, ConfusionMatrix};
use crate::model::{argmax, Model};
use crate::neuralnet::{
    build_lung_cnn_with, build_vgg16, train_with, SequentialNet, Tensor, TrainHooks, TrainingSet,
};
use crate::persistence::ModelArtifact;
use crate::vision::{
    augment, binarize_labels, load_batch, scan_image_dir_excluding, ImageFolderDataset, ImageTensor,
};

/// Images at `indices`, decoded and resized, with one-hot targets.
pub fn load_training_set(ds: &ImageFolderDataset, indices: &[usize], height: usize, width: usize) -> Result<TrainingSet> {
    let paths: Vec<&Path> = indices.iter().map(|&i| ds.items[i].0.as_path()).collect();
    let labels: Vec<usize> = indices.iter().map(|&i| ds.items[i].1).collect();
    TrainingSet::from_labels(load_batch(&paths, height, width)?, &labels, ds.class_names.len())
}

fn build_net(r: &ResolvedImage, n_classes: usize, seed: u64) -> Result<SequentialNet> {
    let mut net = match r.architecture {
        ImageArch::Sequential => build_lung_cnn_with(r.height, r.width, n_classes, &r.cnn, seed)?,
        ImageArch::Vgg16 => build_vgg16(n_classes, seed)?,
    };
    if r.freeze_features {
        net.freeze_all_but_last(1);
    }
    Ok(net)
}

const EVAL_CHUNK: usize = 32;

fn predict_tensor(net: &SequentialNet, inputs: &Tensor) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(inputs.batch());
    for start in (0..inputs.batch()).step_by(EVAL_CHUNK) {
        let end = (start + EVAL_CHUNK).min(inputs.batch());
        let items: Vec<&[f64]> = (start..end).map(|i| inputs.item(i)).collect();
        let x = Tensor::stack(net.input_shape(), &items)?;
        out.extend(net.predict_batch(&x)?.into_iter().map(|p| p.class));
    }
    Ok(out)
}

/// Subsample (desk scale), split, train the network and score it on the held-out images.
pub fn train_image_dataset(disease: Disease, ds: &ImageFolderDataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let r = cfg.resolve_image(disease)?;
    binarize_labels(ds)?;
    let k = ds.class_names.len();
    let labels = ds.labels();

    let pool: Vec<usize> = match r.max_images {
        Some(m) if m < ds.len() => {
            let (mut keep, _) = split_indices(&labels, k, m as f64 / ds.len() as f64, cfg.seed, true)?;
            keep.sort_unstable();
            keep
        }
        _ => (0..ds.len()).collect(),
    };
    let pool_labels: Vec<usize> = pool.iter().map(|&i| labels[i]).collect();
    let (train_pos, test_pos) = split_indices(&pool_labels, k, cfg.train_ratio, cfg.seed, cfg.stratified)?;
    let train_idx: Vec<usize> = train_pos.iter().map(|&p| pool[p]).collect();
    let test_idx: Vec<usize> = test_pos.iter().map(|&p| pool[p]).collect();
    log::info!(
        "{disease}: {} images ({} train, {} test) at {}x{}",
        pool.len(),
        train_idx.len(),
        test_idx.len(),
        r.height,
        r.width
    );

    let train_set = load_training_set(ds, &train_idx, r.height, r.width)?;
    let test_set = load_training_set(ds, &test_idx, r.height, r.width)?;
    let mut net = build_net(&r, k, cfg.seed)?;

    let (h, w, aug_cfg) = (r.height, r.width, r.augmentation);
    let augment_fn = move |item: &mut [f64], rng: &mut ChaCha8Rng| {
        let img = ImageTensor::new(h, w, item.to_vec()).expect("decoded pixels lie in [0, 1]");
        let out = augment(&img, &aug_cfg, rng).expect("validated augmentation config");
        item.copy_from_slice(out.data());
    };
    let mut log_epoch = |_: &SequentialNet, s: &crate::neuralnet::EpochStats| {
        log::info!("epoch {:>3}  loss {:.4}  train accuracy {:.3}", s.epoch + 1, s.loss, s.accuracy);
        false
    };
    let hooks = TrainHooks {
        augment: if r.augment { Some(&augment_fn) } else { None },
        stop: Some(&mut log_epoch),
    };
    let history = train_with(&mut net, &train_set, &r.sgd, hooks)?;

    let truth: Vec<usize> = (0..test_set.len()).map(|i| argmax(test_set.targets.item(i))).collect();
    let pred = predict_tensor(&net, &test_set.inputs)?;
    let cm = confusion_matrix(&truth, &pred, k)?.with_class_names(&ds.class_names)?;
    let rep = report(&cm)?;
    Ok(TrainOutcome {
        disease,
        artifact: ModelArtifact {
            disease: disease.as_str().to_string(),
            feature_names: Vec::new(),
            class_names: ds.class_names.clone(),
            scaler: None,
            model: Model::NeuralNet(net),
        },
        confusion: cm,
        report: rep,
        n_train: train_idx.len(),
        n_test: test_idx.len(),
        comparisons: Vec::new(),
        history,
    })
}

pub fn train_images(disease: Disease, root: &Path, cfg: &TrainConfig) -> Result<TrainOutcome> {
    if !disease.is_image() {
        return Err(Error::InvalidArgument(format!("{disease} is a CSV dataset, not an image folder")));
    }
    let ds = scan_image_dir_excluding(root, disease.excluded_folders())?;
    train_image_dataset(disease, &ds, cfg)
}

/// Scores an image model on every image under `root`.
pub fn evaluate_images(artifact: &ModelArtifact, root: &Path) -> Result<(ConfusionMatrix, ClassificationReport)> {
    let disease: Disease = artifact.disease.parse()?;
    let Model::NeuralNet(net) = &artifact.model else {
        return Err(Error::InvalidArgument("image evaluation needs a neural network model".into()));
    };
    let ds = scan_image_dir_excluding(root, disease.excluded_folders())?;
    let remap: Vec<usize> = ds
        .class_names
        .iter()
        .map(|c| {
            artifact.class_names.iter().position(|a| a == c).ok_or_else(|| {
                Error::Schema(format!("folder {c:?} is not one of the model's classes {:?}", artifact.class_names))
            })
        })
        .collect::<Result<_>>()?;
    let (h, w) = (net.input_shape()[0], net.input_shape()[1]);
    let mut truth = Vec::with_capacity(ds.len());
    let mut pred = Vec::with_capacity(ds.len());
    for chunk in ds.items.chunks(EVAL_CHUNK) {
        let paths: Vec<&Path> = chunk.iter().map(|(p, _)| p.as_path()).collect();
        pred.extend(predict_tensor(net, &load_batch(&paths, h, w)?)?);
        truth.extend(chunk.iter().map(|(_, c)| remap[*c]));
    }
    let cm = confusion_matrix(&truth, &pred, artifact.class_names.len())?.with_class_names(&artifact.class_names)?;
    let rep = report(&cm)?;
    Ok((cm, rep))
}
