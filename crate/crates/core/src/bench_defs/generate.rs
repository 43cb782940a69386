use super::catalog::BenchmarkDef;
use super::expr::{DomainViolation, Expr};
use super::sampling::{draw_one, sample_grid, sample_uniform, SamplingSpec};
use crate::dataset::{Dataset, DatasetError, Provenance, Role};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Redraws allowed per row before giving up on a uniform sample.
pub const MAX_REJECTIONS: usize = 1000;

#[derive(Debug, thiserror::Error)]
pub enum GenerateError {
    #[error("uniform inputs have different sizes: {0:?}")]
    InconsistentSizes(Vec<usize>),
    #[error("mixed inputs: uniform size {uniform} does not match the grid size {grid}")]
    MixedSizeMismatch { uniform: usize, grid: usize },
    #[error("`{name}` is excluded from the catalog: {reason}")]
    Excluded { name: String, reason: String },
    #[error("`{name}`: grid row {row} is outside the objective's domain ({violation})")]
    GridViolation {
        name: String,
        row: usize,
        violation: DomainViolation,
    },
    #[error("`{name}`: row {row} still violates the domain after {MAX_REJECTIONS} redraws ({violation})")]
    RejectionLimit {
        name: String,
        row: usize,
        violation: DomainViolation,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Number of rows [`build_inputs`] produces for `specs`, computed without
/// sampling.
pub fn expected_rows(specs: &[SamplingSpec]) -> usize {
    let grid: usize = specs.iter().filter(|s| !s.is_uniform()).map(SamplingSpec::len).product();
    let any_grid = specs.iter().any(|s| !s.is_uniform());
    match specs.iter().find(|s| s.is_uniform()) {
        Some(u) if !any_grid => u.len(),
        _ => grid,
    }
}

/// Builds the input columns for one split.
///
/// All-uniform specs give independent columns of their common size. Grid
/// specs are combined as a Cartesian product, the first variable varying
/// slowest. In a mixed list every uniform column must have as many draws as
/// the grid product has rows; its draws are attached row by row.
pub fn build_inputs<R: rand::Rng + ?Sized>(
    specs: &[SamplingSpec],
    rng: &mut R,
) -> Result<Vec<Vec<f64>>, GenerateError> {
    let uniform_sizes: Vec<usize> = specs
        .iter()
        .filter(|s| s.is_uniform())
        .map(SamplingSpec::len)
        .collect();
    let any_grid = uniform_sizes.len() < specs.len();
    if !any_grid && uniform_sizes.windows(2).any(|w| w[0] != w[1]) {
        return Err(GenerateError::InconsistentSizes(uniform_sizes));
    }
    let rows = expected_rows(specs);
    if any_grid {
        if let Some(&u) = uniform_sizes.iter().find(|&&u| u != rows) {
            return Err(GenerateError::MixedSizeMismatch { uniform: u, grid: rows });
        }
    }

    let axes: Vec<Option<Vec<f64>>> = specs
        .iter()
        .map(|s| (!s.is_uniform()).then(|| sample_grid(s)))
        .collect();
    let mut columns = Vec::with_capacity(specs.len());
    // stride of each grid axis in the product, first axis slowest
    let mut stride = rows;
    for (spec, axis) in specs.iter().zip(&axes) {
        match axis {
            None => columns.push(sample_uniform(spec, rng)),
            Some(points) => {
                stride /= points.len();
                let col = (0..rows).map(|i| points[(i / stride) % points.len()]).collect();
                columns.push(col);
            }
        }
    }
    Ok(columns)
}

/// A generated (train, test) pair.
#[derive(Debug, Clone)]
pub struct GeneratedBenchmark {
    pub train: Dataset,
    pub test: Dataset,
    /// The benchmark has no published test set; `test` was drawn from the
    /// training specs with seed `seed ^ 1`.
    pub test_resampled: bool,
    /// Uniform rows redrawn because they fell outside the objective's domain.
    pub rejected_rows: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GenerateOptions {
    /// Generate benchmarks flagged as excluded in the catalog.
    pub allow_excluded: bool,
}

/// Samples inputs and evaluates the objective for both splits.
///
/// The training split is drawn with `seed` and the test split with `seed ^ 1`.
/// Uniform rows outside the objective's domain are redrawn; a grid row outside
/// it is an error.
pub fn generate_benchmark(
    def: &BenchmarkDef,
    seed: u64,
    opts: GenerateOptions,
) -> Result<GeneratedBenchmark, GenerateError> {
    if let (Some(reason), false) = (&def.exclusion, opts.allow_excluded) {
        return Err(GenerateError::Excluded {
            name: def.name.clone(),
            reason: reason.clone(),
        });
    }
    let mut rejected_rows = 0;
    let train = generate_split(def, &def.train, seed, Role::Train, &mut rejected_rows)?;
    let (test_specs, test_resampled) = match &def.test {
        Some(specs) => (specs, false),
        None => (&def.train, true),
    };
    let test = generate_split(def, test_specs, seed ^ 1, Role::Test, &mut rejected_rows)?;
    Ok(GeneratedBenchmark {
        train,
        test,
        test_resampled,
        rejected_rows,
    })
}

fn generate_split(
    def: &BenchmarkDef,
    specs: &[SamplingSpec],
    seed: u64,
    role: Role,
    rejected: &mut usize,
) -> Result<Dataset, GenerateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns = build_inputs(specs, &mut rng)?;
    let n = columns.first().map_or(0, Vec::len);
    let mut y = Vec::with_capacity(n);
    let mut point = vec![0.0; specs.len()];
    for i in 0..n {
        y.push(eval_row(def, specs, &mut columns, &mut point, i, &mut rng, rejected)?);
    }
    Ok(Dataset::new(def.name.clone(), columns, y, Provenance::Synthetic, role)?)
}

fn eval_row(
    def: &BenchmarkDef,
    specs: &[SamplingSpec],
    columns: &mut [Vec<f64>],
    point: &mut [f64],
    row: usize,
    rng: &mut ChaCha8Rng,
    rejected: &mut usize,
) -> Result<f64, GenerateError> {
    let eval = |point: &mut [f64], columns: &[Vec<f64>], obj: &Expr| {
        for (p, c) in point.iter_mut().zip(columns) {
            *p = c[row];
        }
        obj.eval(point)
    };
    let mut violation = match eval(point, columns, &def.objective) {
        Ok(v) => return Ok(v),
        Err(v) => v,
    };
    if specs.iter().all(|s| !s.is_uniform()) {
        return Err(GenerateError::GridViolation {
            name: def.name.clone(),
            row,
            violation,
        });
    }
    *rejected += 1;
    for _ in 0..MAX_REJECTIONS {
        for (spec, col) in specs.iter().zip(columns.iter_mut()) {
            if spec.is_uniform() {
                col[row] = draw_one(spec, rng);
            }
        }
        match eval(point, columns, &def.objective) {
            Ok(v) => return Ok(v),
            Err(v) => violation = v,
        }
    }
    Err(GenerateError::RejectionLimit {
        name: def.name.clone(),
        row,
        violation,
    })
}
