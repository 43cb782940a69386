//! The eleven dataset meta-features.
//!
//! Every measure except the feature count is computed separately on the
//! training and the test split. Each split is characterised on its own: the
//! test linearity measure fits its own linear model on the test rows.

mod measures;
mod ols;

pub use measures::{average_ranks, mean_abs_corr, skewness, spearman, target_std, MeanAbsCorr, Spearman};
pub use ols::{fit_ols, linearity_r2, OlsFit};

#[cfg(test)]
pub(crate) use ols::tests::normal_equations;

use crate::dataset::{format_float, Dataset, Provenance};
use crate::stats::median;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetaFeatureError {
    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("zero variance")]
    ZeroVariance,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("constant target")]
    ConstantTarget,
    #[error("train has {train} features, test has {test}")]
    FeatureMismatch { train: usize, test: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{field}: {source}")]
    Field {
        field: &'static str,
        #[source]
        source: Box<MetaFeatureError>,
    },
}

/// Column names of the meta-feature table, in order. These are the join keys
/// used by the analysis stage.
pub const FEATURE_NAMES: [&str; 11] = [
    "n_features",
    "n_instances_train",
    "n_instances_test",
    "skewness_train",
    "skewness_test",
    "target_std_train",
    "target_std_test",
    "mean_abs_corr_train",
    "mean_abs_corr_test",
    "linearity_r2_train",
    "linearity_r2_test",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaFeatureVector {
    pub n_features: f64,
    pub n_instances_train: f64,
    pub n_instances_test: f64,
    pub skewness_train: f64,
    pub skewness_test: f64,
    pub target_std_train: f64,
    pub target_std_test: f64,
    pub mean_abs_corr_train: f64,
    pub mean_abs_corr_test: f64,
    pub linearity_r2_train: f64,
    pub linearity_r2_test: f64,
}

impl MetaFeatureVector {
    /// Values in [`FEATURE_NAMES`] order.
    pub fn to_array(&self) -> [f64; 11] {
        [
            self.n_features,
            self.n_instances_train,
            self.n_instances_test,
            self.skewness_train,
            self.skewness_test,
            self.target_std_train,
            self.target_std_test,
            self.mean_abs_corr_train,
            self.mean_abs_corr_test,
            self.linearity_r2_train,
            self.linearity_r2_test,
        ]
    }

    pub fn from_array(v: [f64; 11]) -> Self {
        MetaFeatureVector {
            n_features: v[0],
            n_instances_train: v[1],
            n_instances_test: v[2],
            skewness_train: v[3],
            skewness_test: v[4],
            target_std_train: v[5],
            target_std_test: v[6],
            mean_abs_corr_train: v[7],
            mean_abs_corr_test: v[8],
            linearity_r2_train: v[9],
            linearity_r2_test: v[10],
        }
    }

    /// Field-wise median of several vectors, e.g. over cross-validation folds.
    pub fn median_of(vectors: &[MetaFeatureVector]) -> Self {
        let arrays: Vec<[f64; 11]> = vectors.iter().map(Self::to_array).collect();
        let mut out = [0.0; 11];
        for (k, o) in out.iter_mut().enumerate() {
            let col: Vec<f64> = arrays.iter().map(|a| a[k]).collect();
            *o = median(&col);
        }
        Self::from_array(out)
    }
}

/// Meta-features of one (train, test) pair, plus constant-column warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct Extracted {
    pub features: MetaFeatureVector,
    pub degenerate_train_columns: Vec<usize>,
    pub degenerate_test_columns: Vec<usize>,
}

fn field<T>(name: &'static str, r: Result<T, MetaFeatureError>) -> Result<T, MetaFeatureError> {
    r.map_err(|e| MetaFeatureError::Field {
        field: name,
        source: Box::new(e),
    })
}

pub fn extract(train: &Dataset, test: &Dataset) -> Result<Extracted, MetaFeatureError> {
    if train.n_features() != test.n_features() {
        return Err(MetaFeatureError::FeatureMismatch {
            train: train.n_features(),
            test: test.n_features(),
        });
    }
    let corr_train = field("mean_abs_corr_train", mean_abs_corr(train))?;
    let corr_test = field("mean_abs_corr_test", mean_abs_corr(test))?;
    let features = MetaFeatureVector {
        n_features: train.n_features() as f64,
        n_instances_train: train.n_rows() as f64,
        n_instances_test: test.n_rows() as f64,
        skewness_train: field("skewness_train", skewness(train.target()))?,
        skewness_test: field("skewness_test", skewness(test.target()))?,
        target_std_train: field("target_std_train", target_std(train.target()))?,
        target_std_test: field("target_std_test", target_std(test.target()))?,
        mean_abs_corr_train: corr_train.value,
        mean_abs_corr_test: corr_test.value,
        linearity_r2_train: field("linearity_r2_train", linearity_r2(train))?,
        linearity_r2_test: field("linearity_r2_test", linearity_r2(test))?,
    };
    Ok(Extracted {
        features,
        degenerate_train_columns: corr_train.degenerate_columns,
        degenerate_test_columns: corr_test.degenerate_columns,
    })
}

/// One row of the meta-feature table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaFeatureRow {
    pub name: String,
    pub provenance: Provenance,
    pub features: MetaFeatureVector,
}

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("unexpected header {0:?}")]
    Header(Vec<String>),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Header of the meta-feature CSV: `dataset,provenance,<FEATURE_NAMES>`.
pub fn table_header() -> Vec<&'static str> {
    let mut h = vec!["dataset", "provenance"];
    h.extend(FEATURE_NAMES);
    h
}

pub fn write_table<W: Write>(rows: &[MetaFeatureRow], out: W) -> Result<(), TableError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(table_header())?;
    for r in rows {
        let mut rec = vec![r.name.clone(), r.provenance.to_string()];
        rec.extend(r.features.to_array().iter().map(|v| format_float(*v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_table<R: Read>(input: R) -> Result<Vec<MetaFeatureRow>, TableError> {
    let mut r = csv::ReaderBuilder::new().from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != table_header() {
        return Err(TableError::Header(header));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let fail = |message: String| TableError::Row { row: i + 1, message };
        let provenance = rec[1].parse().map_err(fail)?;
        let mut values = [0.0; 11];
        for (k, v) in values.iter_mut().enumerate() {
            *v = rec[k + 2]
                .parse()
                .map_err(|_| fail(format!("bad value `{}` for {}", &rec[k + 2], FEATURE_NAMES[k])))?;
        }
        rows.push(MetaFeatureRow {
            name: rec[0].to_owned(),
            provenance,
            features: MetaFeatureVector::from_array(values),
        });
    }
    Ok(rows)
}
