//! Real-dataset manifest: a TOML file mapping each dataset to its source file,
//! target column and preprocessing steps.
//!
//! ```toml
//! [[dataset]]
//! name = "ABA"
//! file = "abalone.csv"        # relative to the manifest
//! target = "rings"
//! categorical = ["sex"]       # dummy-encoded
//! subsample = 500
//! ```

use super::load::{dummy_encode, impute_mean, load_table, LoadOptions};
use super::{subsample, Dataset, DatasetError, Provenance};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealDatasetEntry {
    pub name: String,
    pub file: PathBuf,
    pub target: String,
    #[serde(default = "default_true")]
    pub header: bool,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default = "default_missing")]
    pub missing: Vec<String>,
    #[serde(default)]
    pub categorical: Vec<String>,
    #[serde(default)]
    pub drop: Vec<String>,
    #[serde(default)]
    pub subsample: Option<usize>,
    /// Expected (rows, features) after preprocessing, checked on load when set.
    #[serde(default)]
    pub expect_rows: Option<usize>,
    #[serde(default)]
    pub expect_features: Option<usize>,
}

fn default_true() -> bool {
    true
}

fn default_delimiter() -> char {
    ','
}

fn default_missing() -> Vec<String> {
    LoadOptions::default().missing_tokens
}

#[derive(Debug, Clone, Deserialize)]
pub struct RealManifest {
    #[serde(default, rename = "dataset")]
    pub datasets: Vec<RealDatasetEntry>,
    #[serde(skip)]
    base: PathBuf,
}

/// Shape of a loaded real dataset before and after dummy expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadedShape {
    pub raw_features: usize,
    pub features: usize,
    pub rows: usize,
}

impl RealManifest {
    pub fn parse(text: &str, base: &Path) -> Result<Self, DatasetError> {
        let mut m: RealManifest =
            toml::from_str(text).map_err(|e| DatasetError::Manifest(e.to_string()))?;
        m.base = base.to_path_buf();
        let mut names: Vec<&str> = m.datasets.iter().map(|d| d.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(DatasetError::Manifest(format!("duplicate dataset `{}`", w[0])));
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn resolve(&self, entry: &RealDatasetEntry) -> PathBuf {
        self.base.join(&entry.file)
    }

    /// Loads one dataset applying impute, dummy-encode and subsample in that
    /// order. `seed` drives the subsample.
    pub fn load_dataset(
        &self,
        entry: &RealDatasetEntry,
        seed: u64,
    ) -> Result<(Dataset, LoadedShape), DatasetError> {
        let delimiter = u8::try_from(entry.delimiter)
            .map_err(|_| DatasetError::Manifest(format!("{}: non-ASCII delimiter", entry.name)))?;
        let opts = LoadOptions {
            delimiter,
            has_header: entry.header,
            missing_tokens: entry.missing.clone(),
            categorical: entry.categorical.clone(),
            drop: entry.drop.clone(),
        };
        let table = load_table(&self.resolve(entry), &opts)?;
        let raw_features = table.n_columns().saturating_sub(1);
        if table.column(&entry.target).is_none() {
            return Err(DatasetError::MissingTarget(entry.target.clone()));
        }
        let mut table = impute_mean(table)?;
        for col in table.categorical_columns() {
            if col != entry.target {
                table = dummy_encode(table, &col)?;
            }
        }
        let mut ds = table.into_dataset(&entry.name, &entry.target, Provenance::Real)?;
        if let Some(n) = entry.subsample {
            ds = subsample(&ds, n, seed)?;
        }
        let shape = LoadedShape {
            raw_features,
            features: ds.n_features(),
            rows: ds.n_rows(),
        };
        if entry.expect_rows.is_some_and(|r| r != shape.rows)
            || entry.expect_features.is_some_and(|f| f != shape.features)
        {
            log::warn!(
                "{}: loaded {} rows x {} features, manifest expects {:?} x {:?}",
                entry.name,
                shape.rows,
                shape.features,
                entry.expect_rows,
                entry.expect_features
            );
        }
        Ok((ds, shape))
    }
}
