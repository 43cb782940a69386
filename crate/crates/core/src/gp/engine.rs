use super::config::{ConfigError, GpConfig};
use super::ops::{hoist_mutation, init_population, point_mutation, subtree_crossover, subtree_mutation};
use super::program::Program;
use crate::dataset::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GpError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("need at least 2 target values, got {0}")]
    TooFewRows(usize),
    #[error("prediction length {0} does not match target length {1}")]
    LengthMismatch(usize, usize),
    #[error("target has zero variance")]
    ConstantTarget,
    #[error("train has {train} features, test has {test}")]
    FeatureMismatch { train: usize, test: usize },
    #[error("no splits to run on")]
    NoSplits,
    #[error("run {index}: {source}")]
    Run {
        index: usize,
        #[source]
        source: Box<GpError>,
    },
}

/// Target statistics reused across every fitness evaluation.
#[derive(Debug, Clone)]
pub struct Target<'a> {
    y: &'a [f64],
    /// `1 / sqrt(sum (y - mean)^2)`.
    scale: f64,
}

impl<'a> Target<'a> {
    pub fn new(y: &'a [f64]) -> Result<Self, GpError> {
        let n = y.len();
        if n < 2 {
            return Err(GpError::TooFewRows(n));
        }
        let m = y.iter().sum::<f64>() / n as f64;
        let ss: f64 = y.iter().map(|v| (v - m) * (v - m)).sum();
        if ss == 0.0 || y.iter().all(|v| *v == y[0]) {
            return Err(GpError::ConstantTarget);
        }
        Ok(Target { y, scale: 1.0 / ss.sqrt() })
    }

    /// `sqrt(sum (y - pred)^2 / sum (y - mean)^2)`, equivalently
    /// `rmse * sqrt(n / (n - 1)) / sample_std`. The mean predictor scores 1.
    /// Non-finite predictions give `+inf`.
    pub fn nrmse(&self, pred: &[f64]) -> Result<f64, GpError> {
        if pred.len() != self.y.len() {
            return Err(GpError::LengthMismatch(pred.len(), self.y.len()));
        }
        let ss: f64 = pred.iter().zip(self.y).map(|(p, y)| (p - y) * (p - y)).sum();
        let v = ss.sqrt() * self.scale;
        Ok(if v.is_finite() { v } else { f64::INFINITY })
    }
}

/// NRMSE of `pred` against `y`; see [`Target::nrmse`].
pub fn nrmse(pred: &[f64], y: &[f64]) -> Result<f64, GpError> {
    Target::new(y)?.nrmse(pred)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fitness {
    pub raw: f64,
    /// Raw NRMSE plus the parsimony penalty; minimised by selection.
    pub penalized: f64,
    pub nodes: usize,
}

pub fn fitness(program: &Program, columns: &[Vec<f64>], target: &Target, parsimony: f64) -> Fitness {
    let raw = target
        .nrmse(&program.eval(columns))
        .expect("program output has one value per row");
    Fitness {
        raw,
        penalized: raw + parsimony * program.len() as f64,
        nodes: program.len(),
    }
}

/// Draws `size` contestants uniformly with replacement and returns the index
/// of the winner: lowest penalized fitness, then fewest nodes, then earliest
/// draw.
pub fn tournament_select<R: Rng>(fitness: &[Fitness], size: usize, rng: &mut R) -> usize {
    let mut best = rng.random_range(0..fitness.len());
    for _ in 1..size {
        let c = rng.random_range(0..fitness.len());
        let (a, b) = (&fitness[c], &fitness[best]);
        if a.penalized < b.penalized || (a.penalized == b.penalized && a.nodes < b.nodes) {
            best = c;
        }
    }
    best
}

fn best_raw(fitness: &[Fitness]) -> usize {
    // first minimum wins
    let mut best = 0;
    for (i, f) in fitness.iter().enumerate() {
        if f.raw < fitness[best].raw {
            best = i;
        }
    }
    best
}

/// Outcome of one GP run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub best: Program,
    pub train_nrmse: f64,
    pub test_nrmse: f64,
    /// Best raw training NRMSE of each evaluated population.
    pub trace: Vec<f64>,
}

fn evaluate(pop: &[Program], columns: &[Vec<f64>], target: &Target, parsimony: f64) -> Vec<Fitness> {
    pop.par_iter().map(|p| fitness(p, columns, target, parsimony)).collect()
}

/// Evolves a population on `train` and scores the best program (lowest raw
/// training NRMSE of the final population) on `test`. Deterministic in `seed`.
pub fn evolve(train: &Dataset, test: &Dataset, cfg: &GpConfig, seed: u64) -> Result<RunResult, GpError> {
    cfg.validate()?;
    if train.n_features() != test.n_features() {
        return Err(GpError::FeatureMismatch {
            train: train.n_features(),
            test: test.n_features(),
        });
    }
    let d = train.n_features();
    let target = Target::new(train.target())?;
    let test_target = Target::new(test.target())?;
    let columns = train.columns();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // cumulative operator probabilities; the remainder is reproduction
    let cuts = {
        let c1 = cfg.p_crossover;
        let c2 = c1 + cfg.p_subtree_mutation;
        let c3 = c2 + cfg.p_hoist_mutation;
        [c1, c2, c3, c3 + cfg.p_point_mutation]
    };

    let mut pop = init_population(d, cfg, &mut rng);
    let mut fit = evaluate(&pop, columns, &target, cfg.parsimony_coefficient);
    let mut trace = Vec::with_capacity(cfg.generations);
    for generation in 0..cfg.generations {
        let elite = best_raw(&fit);
        trace.push(fit[elite].raw);
        if generation + 1 == cfg.generations {
            break;
        }
        let mut next = Vec::with_capacity(cfg.population_size);
        if cfg.elitism {
            next.push(pop[elite].clone());
        }
        while next.len() < cfg.population_size {
            let parent = &pop[tournament_select(&fit, cfg.tournament_size, &mut rng)];
            let r: f64 = rng.random();
            let child = if r < cuts[0] {
                let donor = &pop[tournament_select(&fit, cfg.tournament_size, &mut rng)];
                subtree_crossover(parent, donor, &mut rng)
            } else if r < cuts[1] {
                subtree_mutation(parent, d, cfg, &mut rng)
            } else if r < cuts[2] {
                hoist_mutation(parent, &mut rng)
            } else if r < cuts[3] {
                point_mutation(parent, d, cfg, &mut rng)
            } else {
                parent.clone()
            };
            // over-deep offspring are replaced by a copy of the parent
            next.push(if child.depth() > cfg.max_depth {
                parent.clone()
            } else {
                child
            });
        }
        pop = next;
        fit = evaluate(&pop, columns, &target, cfg.parsimony_coefficient);
    }
    let elite = best_raw(&fit);
    let best = pop.swap_remove(elite);
    let test_nrmse = test_target
        .nrmse(&best.eval(test.columns()))
        .expect("program output has one value per row");
    Ok(RunResult {
        train_nrmse: fit[elite].raw,
        test_nrmse,
        trace,
        best,
    })
}
