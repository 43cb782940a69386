//! Repeated GP runs over the splits of one dataset, and their records.

use super::config::GpConfig;
use super::engine::{evolve, GpError};
use crate::dataset::{format_float, FoldPair};
use crate::seed;
use crate::stats::median;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// JSON has no infinities; non-finite scores are written as `null`.
mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub run: usize,
    pub repetition: usize,
    pub fold: usize,
    pub seed: u64,
    #[serde(with = "finite_or_null")]
    pub train_nrmse: f64,
    #[serde(with = "finite_or_null")]
    pub test_nrmse: f64,
    /// Best program in the benchmark expression grammar.
    pub expression: String,
    pub nodes: usize,
    pub depth: usize,
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolResult {
    pub dataset: String,
    pub config: GpConfig,
    pub master_seed: u64,
    pub runs: Vec<RunRecord>,
    pub median_train_nrmse: f64,
    pub median_test_nrmse: f64,
}

/// Runs GP once per split. Run `i` is seeded with `derive(master_seed, [i])`,
/// so results do not depend on scheduling.
pub fn run_protocol(
    dataset: &str,
    pairs: &[FoldPair],
    cfg: &GpConfig,
    master_seed: u64,
) -> Result<ProtocolResult, GpError> {
    if pairs.is_empty() {
        return Err(GpError::NoSplits);
    }
    let runs = pairs
        .par_iter()
        .enumerate()
        .map(|(i, pair)| {
            let s = seed::derive(master_seed, &[i as u64]);
            let r = evolve(&pair.train, &pair.test, cfg, s).map_err(|e| GpError::Run {
                index: i,
                source: Box::new(e),
            })?;
            Ok(RunRecord {
                dataset: dataset.to_owned(),
                run: i,
                repetition: pair.repetition,
                fold: pair.fold,
                seed: s,
                train_nrmse: r.train_nrmse,
                test_nrmse: r.test_nrmse,
                expression: r.best.to_infix(),
                nodes: r.best.len(),
                depth: r.best.depth(),
                trace: r.trace,
            })
        })
        .collect::<Result<Vec<_>, GpError>>()?;
    let train: Vec<f64> = runs.iter().map(|r| r.train_nrmse).collect();
    let test: Vec<f64> = runs.iter().map(|r| r.test_nrmse).collect();
    Ok(ProtocolResult {
        dataset: dataset.to_owned(),
        config: cfg.clone(),
        master_seed,
        median_train_nrmse: median(&train),
        median_test_nrmse: median(&test),
        runs,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum SummaryError {
    #[error("unexpected header {0:?}")]
    Header(Vec<String>),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One line of the performance summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub dataset: String,
    pub runs: usize,
    pub median_train_nrmse: f64,
    pub median_test_nrmse: f64,
}

impl From<&ProtocolResult> for SummaryRow {
    fn from(r: &ProtocolResult) -> Self {
        SummaryRow {
            dataset: r.dataset.clone(),
            runs: r.runs.len(),
            median_train_nrmse: r.median_train_nrmse,
            median_test_nrmse: r.median_test_nrmse,
        }
    }
}

const SUMMARY_HEADER: [&str; 4] = ["dataset", "runs", "median_train_nrmse", "median_test_nrmse"];

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> Result<(), SummaryError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.dataset.clone(),
            r.runs.to_string(),
            format_float(r.median_train_nrmse),
            format_float(r.median_test_nrmse),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_summary<R: Read>(input: R) -> Result<Vec<SummaryRow>, SummaryError> {
    let mut r = csv::ReaderBuilder::new().from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != SUMMARY_HEADER {
        return Err(SummaryError::Header(header));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |k: usize| SummaryError::Row {
            row: i + 1,
            message: format!("bad value `{}` for {}", &rec[k], SUMMARY_HEADER[k]),
        };
        rows.push(SummaryRow {
            dataset: rec[0].to_owned(),
            runs: rec[1].parse().map_err(|_| bad(1))?,
            median_train_nrmse: rec[2].parse().map_err(|_| bad(2))?,
            median_test_nrmse: rec[3].parse().map_err(|_| bad(3))?,
        });
    }
    Ok(rows)
}
