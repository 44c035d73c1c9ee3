use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use medpredict::persistence::ModelArtifact;
use medpredict::predict::ModelInfo;

/// File extension the registry looks for.
pub const MODEL_EXTENSION: &str = "model";

/// Loaded models keyed by disease tag. Never mutated after construction.
#[derive(Debug, Default, Clone)]
pub struct Registry {
    models: BTreeMap<String, Arc<ModelArtifact>>,
}

/// Outcome of scanning a models directory.
#[derive(Debug, Default)]
pub struct LoadReport {
    pub loaded: Vec<(String, PathBuf)>,
    pub failed: Vec<(PathBuf, String)>,
}

impl Registry {
    pub fn from_artifacts(artifacts: impl IntoIterator<Item = ModelArtifact>) -> Self {
        let mut models = BTreeMap::new();
        for a in artifacts {
            models.entry(a.disease.clone()).or_insert_with(|| Arc::new(a));
        }
        Registry { models }
    }

    /// Loads every `*.model` file in `dir`, in file name order. Files that
    /// fail to load are logged and skipped; the first file per disease wins.
    pub fn load_dir(dir: &Path) -> std::io::Result<(Self, LoadReport)> {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == MODEL_EXTENSION))
            .collect();
        paths.sort();

        let mut models = BTreeMap::new();
        let mut report = LoadReport::default();
        for path in paths {
            match ModelArtifact::load(&path) {
                Ok(a) => {
                    if models.contains_key(&a.disease) {
                        log::warn!("{}: a {} model is already registered, ignoring", path.display(), a.disease);
                        continue;
                    }
                    log::info!("registered {} ({}) from {}", a.disease, a.kind(), path.display());
                    report.loaded.push((a.disease.clone(), path));
                    models.insert(a.disease.clone(), Arc::new(a));
                }
                Err(e) => {
                    log::error!("skipping {}: {e}", path.display());
                    report.failed.push((path, e.to_string()));
                }
            }
        }
        if models.is_empty() {
            log::warn!("no models loaded from {}", dir.display());
        }
        Ok((Registry { models }, report))
    }

    pub fn get(&self, disease: &str) -> Option<&Arc<ModelArtifact>> {
        self.models.get(disease)
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn diseases(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(String::as_str)
    }

    pub fn infos(&self) -> Vec<ModelInfo> {
        self.models.values().map(|a| ModelInfo::of(a)).collect()
    }
}
