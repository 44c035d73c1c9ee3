//! Versioned binary model files. The byte layout is documented in
//! `docs/model-format.md`.

mod codec;
mod payload;

use std::io::Write;
use std::path::Path;

use codec::{Reader, Writer};

use crate::dataframe::ScalerParams;
use crate::error::{Error, Result};
use crate::model::{Classifier, Model, ModelKind};

pub const MAGIC: &[u8; 8] = b"MDPMODEL";
pub const FORMAT_VERSION: u32 = 1;
/// Magic, version, total length and kind tag.
pub const HEADER_LEN: usize = 8 + 4 + 8 + 1;
const CRC_LEN: usize = 4;

/// Everything needed to serve predictions: the model, the feature and class
/// names it was trained with, and the scaler fitted on its training split.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact {
    pub disease: String,
    /// Input feature names, in model column order. Empty for image models.
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub scaler: Option<ScalerParams>,
    pub model: Model,
}

impl ModelArtifact {
    pub fn kind(&self) -> ModelKind {
        self.model.kind()
    }

    fn validate(&self) -> Result<()> {
        let is_net = self.kind() == ModelKind::NeuralNet;
        if !(is_net && self.feature_names.is_empty()) && self.feature_names.len() != self.model.n_features() {
            return Err(Error::Schema(format!(
                "{} feature names for a model with {} inputs",
                self.feature_names.len(),
                self.model.n_features()
            )));
        }
        if self.class_names.len() != self.model.n_classes() {
            return Err(Error::Schema(format!(
                "{} class names for a model with {} classes",
                self.class_names.len(),
                self.model.n_classes()
            )));
        }
        if let Some(s) = &self.scaler {
            if s.mean.len() != self.feature_names.len() || s.stddev.len() != s.mean.len() {
                return Err(Error::Schema("scaler width does not match the feature names".into()));
            }
        }
        Ok(())
    }

    /// Serializes to the file format. Equal artifacts produce identical bytes.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let mut w = Writer::default();
        w.buf.extend_from_slice(MAGIC);
        w.u32(FORMAT_VERSION);
        w.u64(0);
        w.u8(self.kind().tag());
        w.str(&self.disease)?;
        w.strs(&self.feature_names)?;
        w.strs(&self.class_names)?;
        match &self.scaler {
            None => w.u8(0),
            Some(s) => {
                w.u8(1);
                w.f64s(&s.mean)?;
                w.f64s(&s.stddev)?;
            }
        }
        payload::write_model(&mut w, &self.model)?;
        let total = (w.buf.len() + CRC_LEN) as u64;
        w.buf[12..20].copy_from_slice(&total.to_le_bytes());
        let crc = crc32fast::hash(&w.buf);
        w.u32(crc);
        Ok(w.buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let magic_len = bytes.len().min(MAGIC.len());
        if bytes[..magic_len] != MAGIC[..magic_len] {
            return Err(Error::NotAModelFile);
        }
        if bytes.len() < HEADER_LEN {
            return Err(Error::Truncated {
                expected: HEADER_LEN as u64,
                found: bytes.len() as u64,
            });
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        let total = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
        if (bytes.len() as u64) < total {
            return Err(Error::Truncated {
                expected: total,
                found: bytes.len() as u64,
            });
        }
        if bytes.len() as u64 > total || total < (HEADER_LEN + CRC_LEN) as u64 {
            return Err(Error::Malformed(format!(
                "header declares {total} bytes but the file has {}",
                bytes.len()
            )));
        }
        let (body, crc) = bytes.split_at(bytes.len() - CRC_LEN);
        let stored = u32::from_le_bytes(crc.try_into().unwrap());
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(Error::ChecksumMismatch { stored, computed });
        }
        let kind = ModelKind::from_tag(bytes[20]).ok_or_else(|| Error::Malformed(format!("unknown model kind {}", bytes[20])))?;

        let mut r = Reader::new(&body[HEADER_LEN..]);
        let disease = r.str()?;
        let feature_names = r.strs()?;
        let class_names = r.strs()?;
        let scaler = if r.bool()? {
            Some(ScalerParams {
                mean: r.f64s()?,
                stddev: r.f64s()?,
            })
        } else {
            None
        };
        let model = payload::read_model(&mut r, kind)?;
        if !r.is_done() {
            return Err(Error::Malformed("unexpected bytes after the payload".into()));
        }
        let artifact = ModelArtifact {
            disease,
            feature_names,
            class_names,
            scaler,
            model,
        };
        artifact.validate().map_err(|e| Error::Malformed(e.to_string()))?;
        Ok(artifact)
    }

    /// Writes atomically: the file is assembled next to `path` and renamed into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let file_err = |source| Error::File {
            path: path.to_path_buf(),
            source,
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(file_err)?;
        tmp.write_all(&bytes).map_err(file_err)?;
        tmp.as_file().sync_all().map_err(file_err)?;
        tmp.persist(path).map_err(|e| file_err(e.error))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        ModelArtifact::from_bytes(&bytes)
    }
}

pub fn save(artifact: &ModelArtifact, path: &Path) -> Result<()> {
    artifact.save(path)
}

pub fn load(path: &Path) -> Result<ModelArtifact> {
    ModelArtifact::load(path)
}
