use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Disease;
use crate::dataframe::ImputePolicy;
use crate::ensemble::EnsembleConfig;
use crate::error::{Error, Result};
use crate::model::ModelKind;
use crate::neuralnet::{LungCnnConfig, SgdConfig};
use crate::vision::AugmentConfig;

/// `desk` trains image models on a small subsample at reduced resolution;
/// `full` uses every image and the published architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Desk,
    Full,
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            other => Err(Error::Config(format!("unknown scale `{other}` (expected desk or full)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageArch {
    /// Three conv/pool blocks, dense, dropout, dense.
    Sequential,
    Vgg16,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticSettings {
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for LogisticSettings {
    fn default() -> Self {
        LogisticSettings {
            learning_rate: 0.1,
            epochs: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TabularSettings {
    pub impute: ImputePolicy,
    /// Overrides the disease's feature list when non-empty.
    pub features: Vec<String>,
    /// Extra models fitted on the same split for comparison.
    pub compare: Vec<ModelKind>,
    pub forest: EnsembleConfig,
    pub adaboost_rounds: usize,
    pub logistic: LogisticSettings,
}

impl Default for TabularSettings {
    fn default() -> Self {
        TabularSettings {
            impute: ImputePolicy::Median,
            features: Vec::new(),
            compare: Vec::new(),
            forest: EnsembleConfig::default(),
            adaboost_rounds: 50,
            logistic: LogisticSettings::default(),
        }
    }
}

/// Unset fields take their value from the scale and disease.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImageSettings {
    pub height: Option<usize>,
    pub width: Option<usize>,
    /// Stratified subsample size before splitting.
    pub max_images: Option<usize>,
    pub architecture: Option<ImageArch>,
    /// Train only the final dense layer.
    pub freeze_features: bool,
    /// Random rotation/scale of training images each epoch.
    pub augment: Option<bool>,
    pub augmentation: AugmentConfig,
    pub cnn: LungCnnConfig,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: Option<usize>,
}

impl Default for ImageSettings {
    fn default() -> Self {
        ImageSettings {
            height: None,
            width: None,
            max_images: None,
            architecture: None,
            freeze_features: false,
            augment: None,
            augmentation: AugmentConfig::default(),
            cnn: LungCnnConfig::default(),
            learning_rate: 0.01,
            batch_size: 16,
            epochs: None,
        }
    }
}

/// Concrete image settings after applying scale and disease defaults.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ResolvedImage {
    pub height: usize,
    pub width: usize,
    pub max_images: Option<usize>,
    pub architecture: ImageArch,
    pub freeze_features: bool,
    pub augment: bool,
    pub augmentation: AugmentConfig,
    pub cnn: LungCnnConfig,
    pub sgd: SgdConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub seed: u64,
    pub train_ratio: f64,
    pub stratified: bool,
    pub scale: Scale,
    pub tabular: TabularSettings,
    pub image: ImageSettings,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 42,
            train_ratio: 0.8,
            stratified: true,
            scale: Scale::Desk,
            tabular: TabularSettings::default(),
            image: ImageSettings::default(),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainOverrides {
    pub seed: Option<u64>,
    pub scale: Option<Scale>,
    pub epochs: Option<usize>,
}

impl TrainConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: TrainConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        TrainConfig::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Defaults, then the optional file, then the overrides.
    pub fn resolve(file: Option<&Path>, overrides: &TrainOverrides) -> Result<Self> {
        let mut cfg = match file {
            Some(p) => TrainConfig::load(p)?,
            None => TrainConfig::default(),
        };
        if let Some(seed) = overrides.seed {
            cfg.seed = seed;
        }
        if let Some(scale) = overrides.scale {
            cfg.scale = scale;
        }
        if let Some(epochs) = overrides.epochs {
            cfg.image.epochs = Some(epochs);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return Err(Error::Config(format!("train_ratio {} must lie in (0, 1)", self.train_ratio)));
        }
        self.tabular.forest.tree.validate()?;
        if self.tabular.forest.n_trees == 0 {
            return Err(Error::Config("forest.n_trees must be >= 1".into()));
        }
        if self.tabular.compare.contains(&ModelKind::NeuralNet) {
            return Err(Error::Config("neuralnet is not a tabular comparison model".into()));
        }
        self.image.augmentation.validate()?;
        Ok(())
    }

    pub(crate) fn resolve_image(&self, disease: Disease) -> Result<ResolvedImage> {
        let img = &self.image;
        let architecture = img.architecture.unwrap_or(match (disease, self.scale) {
            (Disease::Brain, Scale::Full) => ImageArch::Vgg16,
            _ => ImageArch::Sequential,
        });
        let default_side = if architecture == ImageArch::Vgg16 { 224 } else { 64 };
        let resolved = ResolvedImage {
            height: img.height.unwrap_or(default_side),
            width: img.width.unwrap_or(default_side),
            max_images: match self.scale {
                Scale::Desk => Some(img.max_images.unwrap_or(300)),
                Scale::Full => img.max_images,
            },
            architecture,
            freeze_features: img.freeze_features,
            augment: img.augment.unwrap_or(disease == Disease::Brain),
            augmentation: img.augmentation,
            cnn: img.cnn,
            sgd: SgdConfig {
                learning_rate: img.learning_rate,
                batch_size: img.batch_size,
                epochs: img.epochs.unwrap_or(match self.scale {
                    Scale::Desk => 20,
                    Scale::Full => 30,
                }),
                seed: self.seed,
            },
        };
        resolved.sgd.validate()?;
        if architecture == ImageArch::Vgg16 && (resolved.height, resolved.width) != (224, 224) {
            return Err(Error::Config("the VGG-16 architecture needs 224x224 input".into()));
        }
        Ok(resolved)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_defaults_file_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.toml");
        std::fs::write(&path, "seed = 7\nscale = \"full\"\n[tabular.forest]\nn_trees = 12\n").unwrap();

        let d = TrainConfig::resolve(None, &TrainOverrides::default()).unwrap();
        assert_eq!((d.seed, d.scale, d.tabular.forest.n_trees), (42, Scale::Desk, 100));

        let f = TrainConfig::resolve(Some(&path), &TrainOverrides::default()).unwrap();
        assert_eq!((f.seed, f.scale, f.tabular.forest.n_trees), (7, Scale::Full, 12));
        assert_eq!(f.tabular.forest.tree.max_depth, 16);

        let o = TrainOverrides {
            seed: Some(9),
            scale: Some(Scale::Desk),
            epochs: Some(3),
        };
        let c = TrainConfig::resolve(Some(&path), &o).unwrap();
        assert_eq!((c.seed, c.scale, c.tabular.forest.n_trees), (9, Scale::Desk, 12));
        assert_eq!(c.resolve_image(Disease::Lung).unwrap().sgd.epochs, 3);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(TrainConfig::parse("sed = 1\n").is_err());
        assert!(TrainConfig::parse("train_ratio = 1.5\n").is_err());
        assert!(TrainConfig::parse("[tabular.forest]\nn_trees = 0\n").is_err());
        assert!(TrainConfig::parse("[tabular]\ncompare = [\"neuralnet\"]\n").is_err());
        assert!(TrainConfig::parse("[tabular]\ncompare = [\"tree\", \"logistic\"]\nimpute = \"mean\"\n").is_ok());
    }

    #[test]
    fn image_defaults_depend_on_scale_and_disease() {
        let mut cfg = TrainConfig::default();
        let lung = cfg.resolve_image(Disease::Lung).unwrap();
        assert_eq!((lung.height, lung.width, lung.max_images), (64, 64, Some(300)));
        assert!(!lung.augment);
        let brain = cfg.resolve_image(Disease::Brain).unwrap();
        assert_eq!(brain.architecture, ImageArch::Sequential);
        assert!(brain.augment);
        cfg.scale = Scale::Full;
        let brain = cfg.resolve_image(Disease::Brain).unwrap();
        assert_eq!((brain.architecture, brain.height, brain.max_images), (ImageArch::Vgg16, 224, None));
        cfg.image.height = Some(64);
        assert!(cfg.resolve_image(Disease::Brain).is_err());
    }

    #[test]
    fn shipped_defaults_file_matches_builtins() {
        let text = include_str!("../../../../configs/defaults.toml");
        assert_eq!(TrainConfig::parse(text).unwrap(), TrainConfig::default());
    }
}
