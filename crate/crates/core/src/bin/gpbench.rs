use clap::{Args, Parser, Subcommand};
use gpbench::gp::GpConfig;
use gpbench::pipeline::{self, PipelineConfig, PipelineError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Generates symbolic regression benchmarks, characterizes them with
/// meta-features, runs GP on each and relates the two.
#[derive(Parser, Debug)]
#[command(name = "gpbench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Write train/test CSVs for every selected synthetic benchmark.
    Generate,
    /// Compute the meta-feature table.
    Metafeatures,
    /// Run GP on every selected dataset and summarize.
    Rungp,
    /// Fit the meta-models and write the report.
    Analyze,
    /// All of the above, in order.
    All,
}

#[derive(Args, Debug)]
struct Common {
    /// Master seed.
    #[arg(long, global = true, env = "GPBENCH_SEED", default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, env = "GPBENCH_OUT", default_value = "out")]
    out: PathBuf,
    /// Comma-separated dataset name patterns, `*` as wildcard.
    #[arg(long, global = true, env = "GPBENCH_FILTER")]
    filter: Option<String>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, env = "GPBENCH_WORKERS")]
    workers: Option<usize>,
    /// Small GP budget: population 100, 10 generations.
    #[arg(long, global = true, env = "GPBENCH_SMOKE")]
    smoke: bool,
    /// Benchmark catalog (default: the built-in one).
    #[arg(long, global = true, env = "GPBENCH_MANIFEST")]
    manifest: Option<PathBuf>,
    /// TOML manifest of real-world datasets.
    #[arg(long, global = true, env = "GPBENCH_REAL_MANIFEST")]
    real_manifest: Option<PathBuf>,
    /// TOML file of GP settings overriding the defaults (or the smoke budget).
    #[arg(long, global = true, env = "GPBENCH_GP_CONFIG")]
    gp_config: Option<PathBuf>,
    /// Trees in the meta-level random forest.
    #[arg(long, global = true, env = "GPBENCH_TREES", default_value_t = 120)]
    trees: usize,
}

impl Common {
    fn config(&self) -> Result<PipelineConfig, PipelineError> {
        let base = if self.smoke { GpConfig::smoke() } else { GpConfig::default() };
        let gp = match &self.gp_config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
                pipeline::apply_gp_overrides(&base, &text)?
            }
            None => base,
        };
        gp.validate()?;
        if self.trees == 0 {
            return Err(PipelineError::Config("--trees must be positive".into()));
        }
        Ok(PipelineConfig {
            seed: self.seed,
            out: self.out.clone(),
            manifest: self.manifest.clone(),
            real_manifest: self.real_manifest.clone(),
            filter: self.filter.clone(),
            workers: self.workers,
            gp,
            forest_trees: self.trees,
        })
    }
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    let cfg = cli.common.config()?;
    log::info!("config hash {}", cfg.config_hash()?);
    match cli.command {
        Command::Generate => {
            let r = pipeline::cmd_generate(&cfg)?;
            for (name, reason) in &r.skipped {
                log::warn!("skipped {name}: {reason}");
            }
            println!("generated {} datasets, skipped {}", r.generated.len(), r.skipped.len());
        }
        Command::Metafeatures => {
            let rows = pipeline::cmd_metafeatures(&cfg)?;
            println!("meta-features for {} datasets", rows.len());
        }
        Command::Rungp => {
            let rows = pipeline::cmd_rungp(&cfg)?;
            println!("GP summary for {} datasets", rows.len());
        }
        Command::Analyze => {
            for p in pipeline::cmd_analyze(&cfg)? {
                println!("{}", p.display());
            }
        }
        Command::All => {
            for p in pipeline::cmd_all(&cfg)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => {
            log::error!("internal error");
            ExitCode::from(4)
        }
    }
}
