//! Prevention and treatment advice attached to predictions.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

const BUILTIN: &str = include_str!("../data/advice.toml");
pub const REQUIRED_DISCLAIMER: &str = "not a medical diagnosis";

/// Disease × label lookup table loaded from a TOML data file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct AdviceTable {
    pub disclaimer: String,
    pub fallback: String,
    #[serde(flatten)]
    pub entries: BTreeMap<String, BTreeMap<String, String>>,
}

impl AdviceTable {
    /// The table shipped with the crate.
    pub fn builtin() -> Self {
        AdviceTable::parse(BUILTIN).expect("bundled advice table is valid")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table: AdviceTable = toml::from_str(text).map_err(|e| Error::Config(format!("advice table: {e}")))?;
        if !table.disclaimer.to_lowercase().contains(REQUIRED_DISCLAIMER) {
            return Err(Error::Config(format!(
                "advice disclaimer must contain {REQUIRED_DISCLAIMER:?}"
            )));
        }
        if table.fallback.trim().is_empty() {
            return Err(Error::Config("advice fallback text is empty".into()));
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        AdviceTable::parse(&text)
    }

    /// Entry text followed by the disclaimer; the fallback text for unknown pairs.
    pub fn advice_for(&self, disease: &str, label: &str) -> String {
        let text = self
            .entries
            .get(disease)
            .and_then(|m| m.get(label))
            .filter(|t| !t.trim().is_empty())
            .unwrap_or(&self.fallback);
        format!("{} {}", text.trim(), self.disclaimer.trim())
    }
}

impl Default for AdviceTable {
    fn default() -> Self {
        AdviceTable::builtin()
    }
}

/// Looks up the bundled table.
pub fn advice_for(disease: &str, label: &str) -> String {
    AdviceTable::builtin().advice_for(disease, label)
}
