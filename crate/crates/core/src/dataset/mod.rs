//! Datasets, real-data loading and evaluation splits.

mod load;
mod manifest;
mod split;

pub use load::{dummy_encode, impute_mean, load_csv, load_table, LoadOptions, RawColumn, RawTable};
pub use manifest::{LoadedShape, RealDatasetEntry, RealManifest};
pub use split::{fold_indices, fold_sizes, make_splits, subsample, FoldPair, SplitPlan};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("dataset `{0}` has fewer than 2 rows")]
    TooFewRows(String),
    #[error("dataset `{name}`: column {column} has {got} rows, expected {expected}")]
    RaggedColumns {
        name: String,
        column: usize,
        got: usize,
        expected: usize,
    },
    #[error("dataset `{name}`: non-finite value at row {row}, column {column}")]
    NonFinite {
        name: String,
        row: usize,
        column: String,
    },
    #[error("dataset `{0}` has no input features")]
    NoFeatures(String),
    #[error("empty file {0}")]
    EmptyFile(String),
    #[error("target column `{0}` not found")]
    MissingTarget(String),
    #[error("row {row} has {got} fields, expected {expected}")]
    NonRectangular { row: usize, got: usize, expected: usize },
    #[error("column `{0}` is entirely missing")]
    AllMissing(String),
    #[error("column `{0}` is not categorical")]
    NotCategorical(String),
    #[error("column `{0}` has a single level")]
    SingleLevel(String),
    #[error("column `{column}` has a missing categorical value at row {row}")]
    MissingCategory { column: String, row: usize },
    #[error("column `{0}` is categorical and was not encoded")]
    Unencoded(String),
    #[error("column `{0}` not found")]
    UnknownColumn(String),
    #[error("cannot take {requested} rows from a dataset of {available}")]
    SubsampleTooLarge { requested: usize, available: usize },
    #[error("cannot split {n} rows into {k} folds")]
    TooFewRowsForFolds { n: usize, k: usize },
    #[error("split plan {plan:?} does not apply to {provenance} data")]
    PlanMismatch {
        plan: SplitPlan,
        provenance: Provenance,
    },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Real,
    Synthetic,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Real => "real",
            Provenance::Synthetic => "synthetic",
        })
    }
}

impl std::str::FromStr for Provenance {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "real" => Ok(Provenance::Real),
            "synthetic" => Ok(Provenance::Synthetic),
            other => Err(format!("unknown provenance `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Test,
    Full,
}

/// An input matrix with its target vector.
///
/// Inputs are stored column-major: `columns[j][i]` is feature `j` of row `i`.
/// Construction checks that every column has the same length as the target,
/// that there are at least two rows and that every value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    columns: Vec<Vec<f64>>,
    target: Vec<f64>,
    feature_names: Vec<String>,
    provenance: Provenance,
    role: Role,
}

impl Dataset {
    /// Builds a dataset with default feature names `x1..xd`.
    pub fn new(
        name: impl Into<String>,
        columns: Vec<Vec<f64>>,
        target: Vec<f64>,
        provenance: Provenance,
        role: Role,
    ) -> Result<Self, DatasetError> {
        let names = (1..=columns.len()).map(|j| format!("x{j}")).collect();
        Self::with_feature_names(name, columns, names, target, provenance, role)
    }

    pub fn with_feature_names(
        name: impl Into<String>,
        columns: Vec<Vec<f64>>,
        feature_names: Vec<String>,
        target: Vec<f64>,
        provenance: Provenance,
        role: Role,
    ) -> Result<Self, DatasetError> {
        let name = name.into();
        let n = target.len();
        if n < 2 {
            return Err(DatasetError::TooFewRows(name));
        }
        if columns.is_empty() {
            return Err(DatasetError::NoFeatures(name));
        }
        assert_eq!(feature_names.len(), columns.len(), "one name per column");
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(DatasetError::RaggedColumns {
                    name,
                    column: j,
                    got: col.len(),
                    expected: n,
                });
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(DatasetError::NonFinite {
                    name,
                    row: i,
                    column: feature_names[j].clone(),
                });
            }
        }
        if let Some(i) = target.iter().position(|v| !v.is_finite()) {
            return Err(DatasetError::NonFinite {
                name,
                row: i,
                column: "y".into(),
            });
        }
        Ok(Dataset {
            name,
            columns,
            target,
            feature_names,
            provenance,
            role,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    /// Copies the rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize], role: Role) -> Result<Dataset, DatasetError> {
        let columns = self
            .columns
            .iter()
            .map(|c| indices.iter().map(|&i| c[i]).collect())
            .collect();
        let target = indices.iter().map(|&i| self.target[i]).collect();
        Dataset::with_feature_names(
            self.name.clone(),
            columns,
            self.feature_names.clone(),
            target,
            self.provenance,
            role,
        )
    }

    /// Writes the dataset as CSV with header `x1..xd,y`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DatasetError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let mut header: Vec<String> = (1..=self.n_features()).map(|j| format!("x{j}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(self.n_features() + 1);
        for i in 0..self.n_rows() {
            record.clear();
            record.extend(self.columns.iter().map(|c| format_float(c[i])));
            record.push(format_float(self.target[i]));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), DatasetError> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Reads a CSV written by [`Dataset::write_csv`]: every column but the last
    /// is an input, the last is the target.
    pub fn read_csv(
        path: &Path,
        name: &str,
        provenance: Provenance,
        role: Role,
    ) -> Result<Dataset, DatasetError> {
        let table = load_table(path, &LoadOptions::default())?;
        let target = table
            .column_names()
            .last()
            .cloned()
            .ok_or_else(|| DatasetError::EmptyFile(path.display().to_string()))?;
        let mut ds = table.into_dataset(name, &target, provenance)?;
        ds.role = role;
        Ok(ds)
    }
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn format_float(v: f64) -> String {
    let s = format!("{v:?}");
    s.strip_suffix(".0").map(str::to_owned).unwrap_or(s)
}
