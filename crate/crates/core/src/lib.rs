//! Meta-feature characterization of symbolic regression benchmarks.
//!
//! The pipeline generates (or loads) benchmark datasets, describes each one by
//! eleven meta-features, runs a canonical tree GP to obtain its median test
//! NRMSE, and analyses the resulting meta-dataset with a random forest, a
//! linear meta-model and a two-component PCA.

pub mod bench_defs;
pub mod dataset;
pub mod gp;
pub mod meta_analysis;
pub mod metafeatures;
pub mod pipeline;
pub mod seed;
pub mod stats;
