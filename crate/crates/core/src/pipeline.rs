//! The end-to-end pipeline as independently runnable commands.
//!
//! Output layout under the output directory:
//! - `datasets/<name>/train.csv`, `test.csv`: generated synthetic benchmarks
//! - `datasets/skipped.csv`: excluded benchmarks and why
//! - `datasets/generation.json`: per-benchmark seeds and sampling notes
//! - `metafeatures.csv`: one row per dataset
//! - `runs/<name>.json`: every GP run of one dataset
//! - `gp_summary.csv`: median NRMSE per dataset
//! - `report/`: analysis tables and `metrics.json`
//!
//! CSV outputs get a `<file>.meta.json` sidecar with the config hash and the
//! master seed. All randomness is derived from the master seed and the task
//! name (see [`task_seed`]); results do not depend on the worker count.

use crate::bench_defs::{generate_benchmark, BenchmarkDef, Catalog, CatalogError, GenerateError, GenerateOptions};
use crate::dataset::{make_splits, Dataset, DatasetError, Provenance, RealManifest, Role, SplitPlan};
use crate::gp::{read_summary, run_protocol, write_summary, ConfigError, GpConfig, GpError, SummaryError, SummaryRow};
use crate::meta_analysis::{analyze, assemble, emit_report, AnalysisError, AnalysisParams, ForestParams, ReportMeta};
use crate::metafeatures::{extract, read_table, write_table, MetaFeatureError, MetaFeatureRow, MetaFeatureVector, TableError};
use crate::seed;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const METAFEATURES_FILE: &str = "metafeatures.csv";
pub const SUMMARY_FILE: &str = "gp_summary.csv";
pub const REPORT_DIR: &str = "report";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("catalog: {0}")]
    Catalog(#[from] CatalogError),
    #[error("GP configuration: {0}")]
    GpConfig(#[from] ConfigError),
    #[error("{0}")]
    Config(String),
    #[error("benchmark {name} is excluded: {reason}")]
    Excluded { name: String, reason: String },
    #[error("{context}: {source}")]
    Dataset {
        context: String,
        #[source]
        source: DatasetError,
    },
    #[error("{0}")]
    Generate(#[from] GenerateError),
    #[error("{name}: {source}")]
    MetaFeature {
        name: String,
        #[source]
        source: MetaFeatureError,
    },
    #[error("{name}: {source}")]
    Gp {
        name: String,
        #[source]
        source: GpError,
    },
    #[error("{0}")]
    Analysis(#[from] AnalysisError),
    #[error("{path}: {source}")]
    Table {
        path: String,
        #[source]
        source: TableError,
    },
    #[error("{path}: {source}")]
    Summary {
        path: String,
        #[source]
        source: SummaryError,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PipelineError {
    /// Process exit code: 2 for configuration errors, 3 for data errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Catalog(_)
            | PipelineError::GpConfig(_)
            | PipelineError::Config(_)
            | PipelineError::Excluded { .. } => 2,
            _ => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn data_err(context: impl Into<String>) -> impl FnOnce(DatasetError) -> PipelineError {
    let context = context.into();
    move |source| PipelineError::Dataset { context, source }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out: PathBuf,
    /// Benchmark catalog; the built-in one when `None`.
    pub manifest: Option<PathBuf>,
    pub real_manifest: Option<PathBuf>,
    /// Comma-separated name patterns; `*` matches any run of characters.
    pub filter: Option<String>,
    /// Worker threads; all available cores when `None`.
    pub workers: Option<usize>,
    pub gp: GpConfig,
    pub forest_trees: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            out: PathBuf::from("out"),
            manifest: None,
            real_manifest: None,
            filter: None,
            workers: None,
            gp: GpConfig::default(),
            forest_trees: 120,
        }
    }
}

/// Applies a partial TOML table of GP settings on top of `base`; keys absent
/// from `text` keep their `base` values.
pub fn apply_gp_overrides(base: &GpConfig, text: &str) -> Result<GpConfig, PipelineError> {
    let bad = |e: &dyn std::fmt::Display| PipelineError::Config(format!("GP overrides: {e}"));
    let overrides: toml::Table = toml::from_str(text).map_err(|e| bad(&e))?;
    let mut merged = toml::Table::try_from(base).map_err(|e| bad(&e))?;
    merged.extend(overrides);
    let cfg: GpConfig = merged.try_into().map_err(|e: toml::de::Error| bad(&e))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Seed of one named task, e.g. `task_seed(master, "gp", "Nguyen-1")`.
pub fn task_seed(master: u64, task: &str, dataset: &str) -> u64 {
    seed::derive_named(master, &format!("{task}/{dataset}"), &[])
}

/// Matches `name` against one pattern with `*` wildcards.
pub fn wildcard_match(pattern: &str, name: &str) -> bool {
    let (p, n): (Vec<char>, Vec<char>) = (pattern.chars().collect(), name.chars().collect());
    let (mut pi, mut ni) = (0, 0);
    let mut backtrack: Option<(usize, usize)> = None;
    while ni < n.len() {
        if pi < p.len() && p[pi] == '*' {
            backtrack = Some((pi, ni));
            pi += 1;
        } else if pi < p.len() && p[pi] == n[ni] {
            pi += 1;
            ni += 1;
        } else if let Some((bp, bn)) = backtrack {
            pi = bp + 1;
            ni = bn + 1;
            backtrack = Some((bp, bn + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|&c| c == '*')
}

/// The catalog text, the real manifest text and the loaded objects.
struct Inputs {
    catalog: Catalog,
    catalog_text: String,
    real: Option<RealManifest>,
    real_text: String,
}

fn read_text(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

impl PipelineConfig {
    fn patterns(&self) -> Vec<&str> {
        match &self.filter {
            None => vec!["*"],
            Some(f) => f.split(',').map(str::trim).filter(|s| !s.is_empty()).collect(),
        }
    }

    fn selected(&self, name: &str) -> bool {
        self.patterns().iter().any(|p| wildcard_match(p, name))
    }

    fn inputs(&self) -> Result<Inputs, PipelineError> {
        let catalog_text = match &self.manifest {
            Some(p) => read_text(p)?,
            None => crate::bench_defs::BUILTIN_MANIFEST.to_owned(),
        };
        let catalog = Catalog::parse(&catalog_text)?;
        let (real, real_text) = match &self.real_manifest {
            Some(p) => {
                let text = read_text(p)?;
                let base = p.parent().unwrap_or(Path::new("."));
                let m = RealManifest::parse(&text, base).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?;
                (Some(m), text)
            }
            None => (None, String::new()),
        };
        Ok(Inputs {
            catalog,
            catalog_text,
            real,
            real_text,
        })
    }

    /// SHA-256 over everything that determines results: seed, GP and forest
    /// settings, filter and the contents of both manifests. Paths and the
    /// worker count are excluded.
    pub fn config_hash(&self) -> Result<String, PipelineError> {
        let inputs = self.inputs()?;
        #[derive(Serialize)]
        struct Hashed<'a> {
            seed: u64,
            filter: &'a Option<String>,
            gp: &'a GpConfig,
            forest_trees: usize,
            catalog: &'a str,
            real_manifest: &'a str,
        }
        let bytes = serde_json::to_vec(&Hashed {
            seed: self.seed,
            filter: &self.filter,
            gp: &self.gp,
            forest_trees: self.forest_trees,
            catalog: &inputs.catalog_text,
            real_manifest: &inputs.real_text,
        })?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }

    fn synthetic_defs<'a>(&self, catalog: &'a Catalog) -> Result<(Vec<&'a BenchmarkDef>, Vec<&'a BenchmarkDef>), PipelineError> {
        // an excluded benchmark named without wildcards is refused outright
        for p in self.patterns() {
            if let Some(def) = catalog.get(p) {
                if let Some(reason) = &def.exclusion {
                    return Err(PipelineError::Excluded {
                        name: def.name.clone(),
                        reason: reason.clone(),
                    });
                }
            }
        }
        let included = catalog.included().filter(|d| self.selected(&d.name)).collect();
        let skipped = catalog.excluded().filter(|d| self.selected(&d.name)).collect();
        Ok((included, skipped))
    }

    fn dataset_dir(&self, name: &str) -> PathBuf {
        self.out.join("datasets").join(name)
    }

    fn pool(&self) -> Result<rayon::ThreadPool, PipelineError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(w) = self.workers {
            if w == 0 {
                return Err(PipelineError::Config("--workers must be positive".into()));
            }
            b = b.num_threads(w);
        }
        b.build().map_err(|e| PipelineError::Config(format!("thread pool: {e}")))
    }

    fn write_sidecar(&self, path: &Path, command: &str) -> Result<(), PipelineError> {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            command: &'a str,
            config_hash: String,
            master_seed: u64,
        }
        let mut bytes = serde_json::to_vec_pretty(&Sidecar {
            command,
            config_hash: self.config_hash()?,
            master_seed: self.seed,
        })?;
        bytes.push(b'\n');
        let mut name = path.file_name().unwrap_or_default().to_os_string();
        name.push(".meta.json");
        let side = path.with_file_name(name);
        std::fs::write(&side, bytes).map_err(io_err(&side))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationRecord {
    pub name: String,
    pub seed: u64,
    pub train_rows: usize,
    pub test_rows: usize,
    /// No test specification was given; the test set was drawn from the
    /// training specification with seed `seed ^ 1`.
    pub test_resampled: bool,
    pub rejected_rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateReport {
    pub generated: Vec<GenerationRecord>,
    pub skipped: Vec<(String, String)>,
}

/// Writes train/test CSVs for every selected, non-excluded benchmark.
pub fn cmd_generate(cfg: &PipelineConfig) -> Result<GenerateReport, PipelineError> {
    let inputs = cfg.inputs()?;
    let (defs, skipped) = cfg.synthetic_defs(&inputs.catalog)?;
    let root = cfg.out.join("datasets");
    std::fs::create_dir_all(&root).map_err(io_err(&root))?;
    let mut generated = Vec::new();
    for def in defs {
        let s = task_seed(cfg.seed, "generate", &def.name);
        let g = generate_benchmark(def, s, GenerateOptions::default())?;
        let dir = cfg.dataset_dir(&def.name);
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        g.train.save_csv(&dir.join("train.csv")).map_err(data_err(&def.name))?;
        g.test.save_csv(&dir.join("test.csv")).map_err(data_err(&def.name))?;
        log::info!("generated {} ({} train, {} test rows)", def.name, g.train.n_rows(), g.test.n_rows());
        generated.push(GenerationRecord {
            name: def.name.clone(),
            seed: s,
            train_rows: g.train.n_rows(),
            test_rows: g.test.n_rows(),
            test_resampled: g.test_resampled,
            rejected_rows: g.rejected_rows,
        });
    }
    let skipped: Vec<(String, String)> = skipped
        .iter()
        .map(|d| (d.name.clone(), d.exclusion.clone().unwrap_or_default()))
        .collect();
    let path = root.join("skipped.csv");
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| PipelineError::Io {
        path: path.display().to_string(),
        source: e.into(),
    };
    w.write_record(["dataset", "reason"]).map_err(csv_err)?;
    for (n, r) in &skipped {
        w.write_record([n, r]).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| PipelineError::Io {
        path: path.display().to_string(),
        source: e.into_error(),
    })?;
    std::fs::write(&path, bytes).map_err(io_err(&path))?;
    cfg.write_sidecar(&path, "generate")?;

    #[derive(Serialize)]
    struct Generation<'a> {
        config_hash: String,
        master_seed: u64,
        datasets: &'a [GenerationRecord],
    }
    let path = root.join("generation.json");
    let mut bytes = serde_json::to_vec_pretty(&Generation {
        config_hash: cfg.config_hash()?,
        master_seed: cfg.seed,
        datasets: &generated,
    })?;
    bytes.push(b'\n');
    std::fs::write(&path, bytes).map_err(io_err(&path))?;
    Ok(GenerateReport { generated, skipped })
}

/// One selected dataset, ready for meta-features or GP.
enum Source {
    Synthetic { train: Dataset, test: Dataset },
    Real(Dataset),
}

struct Selected {
    name: String,
    source: Source,
}

fn load_selected(cfg: &PipelineConfig) -> Result<Vec<Selected>, PipelineError> {
    let inputs = cfg.inputs()?;
    let (defs, _) = cfg.synthetic_defs(&inputs.catalog)?;
    let mut out = Vec::new();
    for def in defs {
        let dir = cfg.dataset_dir(&def.name);
        let read = |file: &str, role| {
            let path = dir.join(file);
            Dataset::read_csv(&path, &def.name, Provenance::Synthetic, role)
                .map_err(data_err(format!("{} (run `generate` first?)", path.display())))
        };
        out.push(Selected {
            name: def.name.clone(),
            source: Source::Synthetic {
                train: read("train.csv", Role::Train)?,
                test: read("test.csv", Role::Test)?,
            },
        });
    }
    if let Some(real) = &inputs.real {
        for entry in real.datasets.iter().filter(|e| cfg.selected(&e.name)) {
            let s = task_seed(cfg.seed, "subsample", &entry.name);
            let (ds, shape) = real.load_dataset(entry, s).map_err(data_err(&entry.name))?;
            log::info!(
                "loaded {}: {} rows, {} features ({} before encoding)",
                entry.name,
                shape.rows,
                shape.features,
                shape.raw_features
            );
            out.push(Selected {
                name: entry.name.clone(),
                source: Source::Real(ds),
            });
        }
    }
    Ok(out)
}

fn real_splits(cfg: &PipelineConfig, name: &str, ds: &Dataset) -> Result<Vec<crate::dataset::FoldPair>, PipelineError> {
    make_splits(ds, None, SplitPlan::standard(Provenance::Real), task_seed(cfg.seed, "splits", name))
        .map_err(data_err(name))
}

/// Computes the meta-feature table. Real datasets report the median of each
/// meta-feature over their cross-validation fold pairs.
pub fn cmd_metafeatures(cfg: &PipelineConfig) -> Result<Vec<MetaFeatureRow>, PipelineError> {
    let selected = load_selected(cfg)?;
    let pool = cfg.pool()?;
    let mut rows = Vec::with_capacity(selected.len());
    for sel in &selected {
        let mf = |e| PipelineError::MetaFeature {
            name: sel.name.clone(),
            source: e,
        };
        let (features, provenance) = match &sel.source {
            Source::Synthetic { train, test } => (extract(train, test).map_err(mf)?.features, Provenance::Synthetic),
            Source::Real(ds) => {
                let pairs = real_splits(cfg, &sel.name, ds)?;
                let per_fold = pool.install(|| {
                    use rayon::prelude::*;
                    pairs
                        .par_iter()
                        .map(|p| extract(&p.train, &p.test).map(|e| e.features))
                        .collect::<Result<Vec<_>, _>>()
                });
                (MetaFeatureVector::median_of(&per_fold.map_err(mf)?), Provenance::Real)
            }
        };
        rows.push(MetaFeatureRow {
            name: sel.name.clone(),
            provenance,
            features,
        });
    }
    std::fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    let path = cfg.out.join(METAFEATURES_FILE);
    let mut buf = Vec::new();
    write_table(&rows, &mut buf).map_err(|source| PipelineError::Table {
        path: path.display().to_string(),
        source,
    })?;
    std::fs::write(&path, buf).map_err(io_err(&path))?;
    cfg.write_sidecar(&path, "metafeatures")?;
    Ok(rows)
}

/// Runs the GP protocol on every selected dataset: 30 repeats on the fixed
/// pair for synthetic data, 6 x 5-fold cross-validation for real data.
pub fn cmd_rungp(cfg: &PipelineConfig) -> Result<Vec<SummaryRow>, PipelineError> {
    cfg.gp.validate()?;
    let selected = load_selected(cfg)?;
    let pool = cfg.pool()?;
    let runs_dir = cfg.out.join("runs");
    std::fs::create_dir_all(&runs_dir).map_err(io_err(&runs_dir))?;
    let mut summary = Vec::with_capacity(selected.len());
    for sel in selected {
        let pairs = match &sel.source {
            Source::Synthetic { train, test } => make_splits(
                train,
                Some(test),
                SplitPlan::standard(Provenance::Synthetic),
                task_seed(cfg.seed, "splits", &sel.name),
            )
            .map_err(data_err(&sel.name))?,
            Source::Real(ds) => real_splits(cfg, &sel.name, ds)?,
        };
        let master = task_seed(cfg.seed, "gp", &sel.name);
        let result = pool
            .install(|| run_protocol(&sel.name, &pairs, &cfg.gp, master))
            .map_err(|source| PipelineError::Gp {
                name: sel.name.clone(),
                source,
            })?;
        log::info!(
            "{}: median test NRMSE {} over {} runs",
            sel.name,
            result.median_test_nrmse,
            result.runs.len()
        );
        let path = runs_dir.join(format!("{}.json", sel.name));
        let mut bytes = serde_json::to_vec_pretty(&result)?;
        bytes.push(b'\n');
        std::fs::write(&path, bytes).map_err(io_err(&path))?;
        summary.push(SummaryRow::from(&result));
    }
    let path = cfg.out.join(SUMMARY_FILE);
    let mut buf = Vec::new();
    write_summary(&summary, &mut buf).map_err(|source| PipelineError::Summary {
        path: path.display().to_string(),
        source,
    })?;
    std::fs::write(&path, buf).map_err(io_err(&path))?;
    cfg.write_sidecar(&path, "rungp")?;
    Ok(summary)
}

/// Joins the meta-feature table with the GP summary and writes the report.
pub fn cmd_analyze(cfg: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let mpath = cfg.out.join(METAFEATURES_FILE);
    let meta = read_table(std::fs::File::open(&mpath).map_err(io_err(&mpath))?).map_err(|source| {
        PipelineError::Table {
            path: mpath.display().to_string(),
            source,
        }
    })?;
    let spath = cfg.out.join(SUMMARY_FILE);
    let summary = read_summary(std::fs::File::open(&spath).map_err(io_err(&spath))?).map_err(|source| {
        PipelineError::Summary {
            path: spath.display().to_string(),
            source,
        }
    })?;
    let md = assemble(&meta, &summary)?;
    let forest_seed = task_seed(cfg.seed, "forest", "meta");
    let params = AnalysisParams {
        forest: ForestParams {
            trees: cfg.forest_trees,
            seed: forest_seed,
            bootstrap: true,
        },
    };
    let analysis = cfg.pool()?.install(|| analyze(&md, params))?;
    let mut notes = vec![format!("gp elitism: {}", if cfg.gp.elitism { "on" } else { "off" })];
    if md.count(Provenance::Real) == 0 {
        notes.push("no real datasets in the meta-dataset".to_owned());
    }
    let meta = ReportMeta {
        master_seed: cfg.seed,
        forest_seed,
        config_hash: cfg.config_hash()?,
        notes,
    };
    Ok(emit_report(&md, &analysis, &cfg.out.join(REPORT_DIR), &meta)?)
}

/// Every step in order.
pub fn cmd_all(cfg: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    cmd_generate(cfg)?;
    cmd_metafeatures(cfg)?;
    cmd_rungp(cfg)?;
    cmd_analyze(cfg)
}
