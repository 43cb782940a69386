//! Analysis of the meta-dataset: one row per benchmark, the eleven
//! meta-features as inputs and the median test NRMSE of GP as the target.

mod forest;
mod linear;
mod pca;
mod report;

pub use forest::{fit_forest, ForestModel, ForestParams, RegressionTree};
pub use linear::{fit_linear_meta, fit_plane, LinearMeta, PlaneFit};
pub use pca::{fit_pca2, PcaModel};
pub use report::{emit_report, histogram, sorted_importances, Histogram, ReportMeta, HISTOGRAM_BINS, METRICS_FILE};

use crate::dataset::Provenance;
use crate::gp::SummaryRow;
use crate::metafeatures::{MetaFeatureError, MetaFeatureRow, MetaFeatureVector, FEATURE_NAMES};
use crate::stats::{r_squared, rmse};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("dataset `{0}` has meta-features but no GP summary")]
    MissingSummary(String),
    #[error("dataset `{0}` has a GP summary but no meta-features")]
    MissingMetaFeatures(String),
    #[error("dataset `{0}` appears more than once")]
    Duplicate(String),
    #[error("dataset `{name}`: {field} is {value}")]
    InvalidCell { name: String, field: &'static str, value: f64 },
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("no features")]
    NoFeatures,
    #[error("constant target")]
    ConstantTarget,
    #[error("forest needs at least one tree")]
    NoTrees,
    #[error("only {0} varying features; two components need at least two")]
    DegenerateFeatures(usize),
    #[error("projected scores are collinear")]
    DegenerateProjection,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Fit(#[from] MetaFeatureError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// In-sample fit quality. `r2` is `None` for a constant target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitMetrics {
    pub r2: Option<f64>,
    pub rmse: f64,
}

impl FitMetrics {
    pub fn of(y: &[f64], pred: &[f64]) -> Self {
        FitMetrics {
            r2: r_squared(y, pred),
            rmse: rmse(y, pred),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaRow {
    pub name: String,
    pub provenance: Provenance,
    pub features: MetaFeatureVector,
    /// Median test NRMSE: the analysis target.
    pub nrmse: f64,
    /// Median train NRMSE, reported only.
    pub train_nrmse: f64,
}

/// Validated meta-dataset: unique names, finite cells, non-negative NRMSE.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaDataset {
    rows: Vec<MetaRow>,
}

impl MetaDataset {
    pub fn new(rows: Vec<MetaRow>) -> Result<Self, AnalysisError> {
        let mut seen = HashSet::new();
        for r in &rows {
            if !seen.insert(r.name.as_str()) {
                return Err(AnalysisError::Duplicate(r.name.clone()));
            }
            for (field, value) in FEATURE_NAMES.iter().zip(r.features.to_array()) {
                if !value.is_finite() {
                    return Err(AnalysisError::InvalidCell {
                        name: r.name.clone(),
                        field,
                        value,
                    });
                }
            }
            if !(r.nrmse.is_finite() && r.nrmse >= 0.0) {
                return Err(AnalysisError::InvalidCell {
                    name: r.name.clone(),
                    field: "median_test_nrmse",
                    value: r.nrmse,
                });
            }
        }
        Ok(MetaDataset { rows })
    }

    pub fn rows(&self) -> &[MetaRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// The eleven meta-feature columns in [`FEATURE_NAMES`] order.
    pub fn feature_columns(&self) -> Vec<Vec<f64>> {
        (0..FEATURE_NAMES.len())
            .map(|k| self.rows.iter().map(|r| r.features.to_array()[k]).collect())
            .collect()
    }

    pub fn target(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.nrmse).collect()
    }

    pub fn count(&self, provenance: Provenance) -> usize {
        self.rows.iter().filter(|r| r.provenance == provenance).count()
    }
}

/// Joins meta-feature rows with GP summaries by dataset name, keeping the
/// order of the meta-feature rows.
pub fn assemble(meta: &[MetaFeatureRow], summaries: &[SummaryRow]) -> Result<MetaDataset, AnalysisError> {
    let mut by_name: HashMap<&str, &SummaryRow> = HashMap::new();
    for s in summaries {
        if by_name.insert(s.dataset.as_str(), s).is_some() {
            return Err(AnalysisError::Duplicate(s.dataset.clone()));
        }
    }
    let mut names = HashSet::new();
    if let Some(m) = meta.iter().find(|m| !names.insert(m.name.as_str())) {
        return Err(AnalysisError::Duplicate(m.name.clone()));
    }
    let mut rows = Vec::with_capacity(meta.len());
    for m in meta {
        let s = by_name
            .remove(m.name.as_str())
            .ok_or_else(|| AnalysisError::MissingSummary(m.name.clone()))?;
        rows.push(MetaRow {
            name: m.name.clone(),
            provenance: m.provenance,
            features: m.features,
            nrmse: s.median_test_nrmse,
            train_nrmse: s.median_train_nrmse,
        });
    }
    let md = MetaDataset::new(rows)?;
    // leftover summaries have no meta-features; report the first in input order
    if let Some(s) = summaries.iter().find(|s| by_name.contains_key(s.dataset.as_str())) {
        return Err(AnalysisError::MissingMetaFeatures(s.dataset.clone()));
    }
    Ok(md)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisParams {
    pub forest: ForestParams,
}

/// Every model fitted on one meta-dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub forest: ForestModel,
    pub forest_metrics: FitMetrics,
    pub linear: LinearMeta,
    pub pca: PcaModel,
    pub scores: Vec<[f64; 2]>,
    pub plane: PlaneFit,
}

pub fn analyze(md: &MetaDataset, params: AnalysisParams) -> Result<Analysis, AnalysisError> {
    let cols = md.feature_columns();
    let y = md.target();
    let forest = fit_forest(&cols, &y, params.forest)?;
    let forest_metrics = forest.fit_metrics(&cols, &y);
    let linear = fit_linear_meta(&cols, &y)?;
    let pca = fit_pca2(&cols)?;
    let scores = pca.project(&cols);
    let plane = fit_plane(&scores, &y)?;
    Ok(Analysis {
        forest,
        forest_metrics,
        linear,
        pca,
        scores,
        plane,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(name: &str, v: f64) -> MetaFeatureRow {
        MetaFeatureRow {
            name: name.into(),
            provenance: Provenance::Synthetic,
            features: MetaFeatureVector::from_array([v; 11]),
        }
    }

    fn summary(name: &str, v: f64) -> SummaryRow {
        SummaryRow {
            dataset: name.into(),
            runs: 30,
            median_train_nrmse: v / 2.0,
            median_test_nrmse: v,
        }
    }

    #[test]
    fn joins_in_meta_order() {
        let md = assemble(&[meta("b", 1.0), meta("a", 2.0)], &[summary("a", 0.2), summary("b", 0.1)]).unwrap();
        assert_eq!(md.len(), 2);
        assert_eq!(md.rows()[0].name, "b");
        assert_eq!(md.target(), vec![0.1, 0.2]);
        assert_eq!(md.feature_columns().len(), 11);
    }

    #[test]
    fn join_errors_name_the_dataset() {
        match assemble(&[meta("a", 1.0), meta("b", 1.0)], &[summary("a", 0.1)]) {
            Err(AnalysisError::MissingSummary(n)) => assert_eq!(n, "b"),
            other => panic!("{other:?}"),
        }
        match assemble(&[meta("a", 1.0)], &[summary("a", 0.1), summary("z", 0.1)]) {
            Err(AnalysisError::MissingMetaFeatures(n)) => assert_eq!(n, "z"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            assemble(&[meta("a", 1.0), meta("a", 1.0)], &[summary("a", 0.1)]),
            Err(AnalysisError::Duplicate(_))
        ));
        assert!(matches!(
            assemble(&[meta("a", 1.0)], &[summary("a", 0.1), summary("a", 0.2)]),
            Err(AnalysisError::Duplicate(_))
        ));
        assert!(matches!(
            assemble(&[meta("a", 1.0)], &[summary("a", f64::INFINITY)]),
            Err(AnalysisError::InvalidCell { .. })
        ));
    }
}
