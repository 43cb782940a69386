//! Plot-ready tables and the metrics manifest.
//!
//! Files written to the report directory:
//! - `histograms.csv`: `panel,bin,lower,upper,count` for the eleven
//!   meta-features and the median test NRMSE
//! - `scatter.csv`: training skewness and training size against NRMSE
//! - `pca_scores.csv`, `pca_loadings.csv`, `plane.csv`: the benchmark space
//! - `importances.csv`: forest importances, largest first
//! - `linear_coefficients.csv`: the full linear meta-model
//! - `metrics.json`: fit metrics, seeds, config hash and a SHA-256 of every
//!   table above

use super::{Analysis, AnalysisError, FitMetrics, MetaDataset};
use crate::dataset::{format_float, Provenance};
use crate::metafeatures::FEATURE_NAMES;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const HISTOGRAM_BINS: usize = 10;
pub const METRICS_FILE: &str = "metrics.json";
const NRMSE_PANEL: &str = "median_test_nrmse";

/// Equal-width histogram over `[min, max]`; the last bin is closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Index of the first bin with the largest count.
    pub fn modal_bin(&self) -> usize {
        let top = self.counts.iter().copied().max().unwrap_or(0);
        self.counts.iter().position(|&c| c == top).unwrap_or(0)
    }
}

/// # Panics
///
/// If `values` is empty or `bins` is zero.
pub fn histogram(values: &[f64], bins: usize) -> Histogram {
    assert!(!values.is_empty() && bins > 0, "histogram needs values and bins");
    let mut lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|k| if k == bins { hi } else { lo + k as f64 * width })
        .collect();
    let mut counts = vec![0; bins];
    for &v in values {
        let k = (((v - lo) / width).floor() as usize).min(bins - 1);
        counts[k] += 1;
    }
    Histogram { edges, counts }
}

/// Provenance recorded in the metrics manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMeta {
    pub master_seed: u64,
    pub forest_seed: u64,
    pub config_hash: String,
    pub notes: Vec<String>,
}

#[derive(Serialize)]
struct Importance<'a> {
    feature: &'a str,
    importance: f64,
}

#[derive(Serialize)]
struct Plane {
    intercept: f64,
    pc1: f64,
    pc2: f64,
    metrics: FitMetrics,
}

#[derive(Serialize)]
struct Manifest<'a> {
    #[serde(flatten)]
    meta: &'a ReportMeta,
    n_datasets: usize,
    n_real: usize,
    n_synthetic: usize,
    histogram_bins: usize,
    forest_trees: usize,
    forest: FitMetrics,
    linear: FitMetrics,
    plane: Plane,
    pca_explained_variance_ratio: [f64; 2],
    importances: Vec<Importance<'a>>,
    files: BTreeMap<&'static str, String>,
}

struct Table {
    name: &'static str,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &'static str, header: &[&str]) -> Self {
        Table {
            name,
            header: header.iter().map(|s| (*s).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    fn bytes(&self) -> Result<Vec<u8>, AnalysisError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| AnalysisError::Csv(e.into_error().into()))
    }
}

/// Importances paired with feature names, largest first; ties keep the
/// feature order.
pub fn sorted_importances(importances: &[f64]) -> Vec<(&'static str, f64)> {
    let mut v: Vec<(&'static str, f64)> = FEATURE_NAMES.iter().copied().zip(importances.iter().copied()).collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1));
    v
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, AnalysisError> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|source| AnalysisError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

/// Writes every report table and the metrics manifest into `dir`, creating
/// it if needed. Returns the written paths, manifest last.
pub fn emit_report(
    md: &MetaDataset,
    analysis: &Analysis,
    dir: &Path,
    meta: &ReportMeta,
) -> Result<Vec<PathBuf>, AnalysisError> {
    std::fs::create_dir_all(dir).map_err(|source| AnalysisError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let f = format_float;
    let cols = md.feature_columns();
    let y = md.target();

    let mut hist = Table::new("histograms.csv", &["panel", "bin", "lower", "upper", "count"]);
    let panels = FEATURE_NAMES.iter().zip(&cols).chain(std::iter::once((&NRMSE_PANEL, &y)));
    for (name, values) in panels {
        let h = histogram(values, HISTOGRAM_BINS);
        for (k, c) in h.counts.iter().enumerate() {
            hist.rows.push(vec![
                (*name).to_owned(),
                k.to_string(),
                f(h.edges[k]),
                f(h.edges[k + 1]),
                c.to_string(),
            ]);
        }
    }

    let mut scatter = Table::new(
        "scatter.csv",
        &["dataset", "provenance", "skewness_train", "n_instances_train", NRMSE_PANEL],
    );
    let mut scores = Table::new("pca_scores.csv", &["dataset", "provenance", "pc1", "pc2", NRMSE_PANEL]);
    for (r, s) in md.rows().iter().zip(&analysis.scores) {
        let prov = r.provenance.to_string();
        scatter.rows.push(vec![
            r.name.clone(),
            prov.clone(),
            f(r.features.skewness_train),
            f(r.features.n_instances_train),
            f(r.nrmse),
        ]);
        scores.rows.push(vec![r.name.clone(), prov, f(s[0]), f(s[1]), f(r.nrmse)]);
    }

    let mut loadings = Table::new("pca_loadings.csv", &["feature", "pc1", "pc2"]);
    for (jj, &j) in analysis.pca.kept.iter().enumerate() {
        loadings.rows.push(vec![
            FEATURE_NAMES[j].to_owned(),
            f(analysis.pca.components[0][jj]),
            f(analysis.pca.components[1][jj]),
        ]);
    }

    let p = &analysis.plane;
    let mut plane = Table::new("plane.csv", &["term", "coefficient"]);
    for (term, v) in [("intercept", p.intercept), ("pc1", p.coefficients[0]), ("pc2", p.coefficients[1])] {
        plane.rows.push(vec![term.to_owned(), f(v)]);
    }

    let ranked = sorted_importances(&analysis.forest.importances);
    let mut imp = Table::new("importances.csv", &["rank", "feature", "importance"]);
    for (k, (name, v)) in ranked.iter().enumerate() {
        imp.rows.push(vec![(k + 1).to_string(), (*name).to_owned(), f(*v)]);
    }

    let mut linear = Table::new("linear_coefficients.csv", &["term", "coefficient"]);
    linear.rows.push(vec!["intercept".to_owned(), f(analysis.linear.fit.intercept)]);
    for (name, b) in FEATURE_NAMES.iter().zip(&analysis.linear.fit.coefficients) {
        linear.rows.push(vec![(*name).to_owned(), f(*b)]);
    }

    let mut paths = Vec::new();
    let mut files = BTreeMap::new();
    for t in [hist, scatter, scores, loadings, plane, imp, linear] {
        let bytes = t.bytes()?;
        files.insert(t.name, hex::encode(Sha256::digest(&bytes)));
        paths.push(write(dir, t.name, &bytes)?);
    }

    let manifest = Manifest {
        meta,
        n_datasets: md.len(),
        n_real: md.count(Provenance::Real),
        n_synthetic: md.count(Provenance::Synthetic),
        histogram_bins: HISTOGRAM_BINS,
        forest_trees: analysis.forest.trees.len(),
        forest: analysis.forest_metrics,
        linear: analysis.linear.metrics,
        plane: Plane {
            intercept: p.intercept,
            pc1: p.coefficients[0],
            pc2: p.coefficients[1],
            metrics: p.metrics,
        },
        pca_explained_variance_ratio: analysis.pca.explained_variance_ratio,
        importances: ranked
            .iter()
            .map(|(feature, importance)| Importance {
                feature,
                importance: *importance,
            })
            .collect(),
        files,
    };
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    paths.push(write(dir, METRICS_FILE, &json)?);
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meta_analysis::{analyze, AnalysisParams, ForestParams, MetaRow};
    use crate::metafeatures::MetaFeatureVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn histogram_edges_and_counts() {
        let h = histogram(&[1.0, 1.0, 2.0, 10.0], 9);
        assert_eq!(h.edges.len(), 10);
        assert_eq!(h.edges[0], 1.0);
        assert_eq!(h.edges[9], 10.0);
        assert_eq!(h.counts.iter().sum::<usize>(), 4);
        assert_eq!(h.counts[0], 2);
        assert_eq!(h.counts[1], 1);
        assert_eq!(h.counts[8], 1);
        assert_eq!(h.modal_bin(), 0);
        let c = histogram(&[3.0; 5], 10);
        assert_eq!(c.counts.iter().sum::<usize>(), 5);
    }

    fn toy() -> MetaDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows = (0..20)
            .map(|i| {
                let mut v = [0.0; 11];
                for x in v.iter_mut() {
                    *x = rng.random_range(0.0..3.0);
                }
                v[0] = f64::from(1 + i % 3);
                MetaRow {
                    name: format!("d{i}"),
                    provenance: if i < 5 { Provenance::Real } else { Provenance::Synthetic },
                    features: MetaFeatureVector::from_array(v),
                    nrmse: v[3] * 0.2 + rng.random_range(0.0..0.1),
                    train_nrmse: 0.0,
                }
            })
            .collect();
        MetaDataset::new(rows).unwrap()
    }

    #[test]
    fn report_contents() {
        let md = toy();
        let a = analyze(
            &md,
            AnalysisParams {
                forest: ForestParams {
                    trees: 20,
                    seed: 3,
                    bootstrap: true,
                },
            },
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let meta = ReportMeta {
            master_seed: 1,
            forest_seed: 3,
            config_hash: "abc".into(),
            notes: vec![],
        };
        let paths = emit_report(&md, &a, dir.path(), &meta).unwrap();
        assert_eq!(paths.len(), 8);

        let text = std::fs::read_to_string(dir.path().join("histograms.csv")).unwrap();
        let mut per_panel: BTreeMap<String, usize> = BTreeMap::new();
        for line in text.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            *per_panel.entry(f[0].to_owned()).or_default() += f[4].parse::<usize>().unwrap();
        }
        assert_eq!(per_panel.len(), 12);
        assert!(per_panel.values().all(|&c| c == 20));

        let text = std::fs::read_to_string(dir.path().join("importances.csv")).unwrap();
        let vals: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
        assert_eq!(vals.len(), 11);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        assert!((vals.iter().sum::<f64>() - 1.0).abs() < 1e-9);

        let m: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join(METRICS_FILE)).unwrap()).unwrap();
        assert_eq!(m["n_datasets"], 20);
        assert_eq!(m["n_real"], 5);
        assert_eq!(m["config_hash"], "abc");
        assert!(m["forest"]["r2"].as_f64().is_some());
        assert_eq!(m["files"].as_object().unwrap().len(), 7);

        // identical inputs give identical bytes
        let again = tempfile::tempdir().unwrap();
        emit_report(&md, &a, again.path(), &meta).unwrap();
        for p in &paths {
            let name = p.file_name().unwrap();
            assert_eq!(std::fs::read(p).unwrap(), std::fs::read(again.path().join(name)).unwrap());
        }
    }

    #[test]
    fn unwritable_directory() {
        let md = toy();
        let a = analyze(
            &md,
            AnalysisParams {
                forest: ForestParams {
                    trees: 2,
                    seed: 0,
                    bootstrap: true,
                },
            },
        )
        .unwrap();
        let file = tempfile::NamedTempFile::new().unwrap();
        let meta = ReportMeta {
            master_seed: 0,
            forest_seed: 0,
            config_hash: String::new(),
            notes: vec![],
        };
        assert!(matches!(
            emit_report(&md, &a, &file.path().join("sub"), &meta),
            Err(AnalysisError::Io { .. })
        ));
    }
}
