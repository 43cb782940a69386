//! `U[a,b,c]` and `E[a,b,c]` input sampling.

use rand::distr::{Distribution, Uniform};
use rand::Rng;
use std::fmt;

/// Relative slack when counting grid points, absorbing steps such as 0.1 that
/// have no exact binary representation.
pub const GRID_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingSpec {
    /// `count` i.i.d. draws from `[low, high]`.
    Uniform { low: f64, high: f64, count: usize },
    /// `low, low + step, ...` up to `high` inclusive.
    Grid { low: f64, high: f64, step: f64 },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecError {
    #[error("empty interval [{low}, {high}]")]
    EmptyInterval { low: f64, high: f64 },
    #[error("uniform sample size must be at least 1")]
    ZeroCount,
    #[error("grid step must be positive, got {0}")]
    BadStep(f64),
    #[error("cannot parse sampling spec `{0}`")]
    Syntax(String),
}

impl SamplingSpec {
    pub fn uniform(low: f64, high: f64, count: usize) -> Result<Self, SpecError> {
        check_interval(low, high)?;
        if count == 0 {
            return Err(SpecError::ZeroCount);
        }
        Ok(SamplingSpec::Uniform { low, high, count })
    }

    pub fn grid(low: f64, high: f64, step: f64) -> Result<Self, SpecError> {
        check_interval(low, high)?;
        if !(step > 0.0 && step.is_finite()) {
            return Err(SpecError::BadStep(step));
        }
        Ok(SamplingSpec::Grid { low, high, step })
    }

    /// `points` evenly spaced values from `low` to `high` inclusive.
    pub fn grid_points(low: f64, high: f64, points: usize) -> Result<Self, SpecError> {
        if points < 2 {
            return Err(SpecError::Syntax(format!("grid of {points} points")));
        }
        Self::grid(low, high, (high - low) / (points - 1) as f64)
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, SamplingSpec::Uniform { .. })
    }

    /// Number of values this spec produces.
    pub fn len(&self) -> usize {
        match *self {
            SamplingSpec::Uniform { count, .. } => count,
            SamplingSpec::Grid { low, high, step } => {
                let q = (high - low) / step;
                (q + GRID_EPS * q.max(1.0)).floor() as usize + 1
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parses `U[a,b,c]`, `U(a,b,c)` or `E[a,b,c]`.
    ///
    /// Open intervals are read as closed. An `E` spec whose third value is an
    /// integer of at least 2 exceeding the interval width is read as a point
    /// count (`E[-1,1,20]` is 20 evenly spaced points), since as a step it
    /// would leave a single point.
    pub fn parse(text: &str) -> Result<Self, SpecError> {
        let err = || SpecError::Syntax(text.to_owned());
        let t = text.trim();
        let mut chars = t.chars();
        let kind = chars.next().ok_or_else(err)?;
        let rest = chars.as_str().trim();
        let inner = rest
            .strip_prefix(['[', '('])
            .and_then(|r| r.strip_suffix([']', ')']))
            .ok_or_else(err)?;
        let parts: Vec<f64> = inner
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| err())?;
        let [a, b, c] = parts[..] else {
            return Err(err());
        };
        match kind {
            'U' => {
                if c.fract() != 0.0 || c < 0.0 {
                    return Err(err());
                }
                Self::uniform(a, b, c as usize)
            }
            'E' if c > b - a && c.fract() == 0.0 && c >= 2.0 => Self::grid_points(a, b, c as usize),
            'E' => Self::grid(a, b, c),
            _ => Err(err()),
        }
    }
}

fn check_interval(low: f64, high: f64) -> Result<(), SpecError> {
    if low < high && low.is_finite() && high.is_finite() {
        Ok(())
    } else {
        Err(SpecError::EmptyInterval { low, high })
    }
}

impl fmt::Display for SamplingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SamplingSpec::Uniform { low, high, count } => write!(f, "U[{low}, {high}, {count}]"),
            SamplingSpec::Grid { low, high, step } => write!(f, "E[{low}, {high}, {step}]"),
        }
    }
}

/// Draws `count` values uniformly from `[low, high]`.
///
/// # Panics
///
/// If `spec` is a grid.
pub fn sample_uniform<R: Rng + ?Sized>(spec: &SamplingSpec, rng: &mut R) -> Vec<f64> {
    let SamplingSpec::Uniform { low, high, count } = *spec else {
        panic!("sample_uniform called with {spec}");
    };
    let dist = Uniform::new_inclusive(low, high).expect("validated interval");
    (0..count).map(|_| dist.sample(rng)).collect()
}

pub(crate) fn draw_one<R: Rng + ?Sized>(spec: &SamplingSpec, rng: &mut R) -> f64 {
    let SamplingSpec::Uniform { low, high, .. } = *spec else {
        unreachable!("only uniform columns are redrawn");
    };
    Uniform::new_inclusive(low, high)
        .expect("validated interval")
        .sample(rng)
}

/// Evenly spaced points `low + i * step` for `i` in `0..spec.len()`.
///
/// # Panics
///
/// If `spec` is uniform.
pub fn sample_grid(spec: &SamplingSpec) -> Vec<f64> {
    let SamplingSpec::Grid { low, step, .. } = *spec else {
        panic!("sample_grid called with {spec}");
    };
    (0..spec.len()).map(|i| low + i as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_counts() {
        assert_eq!(sample_grid(&SamplingSpec::grid(-1.0, 1.0, 0.1).unwrap()).len(), 21);
        assert_eq!(sample_grid(&SamplingSpec::grid(-1.0, 1.0, 0.001).unwrap()).len(), 2001);
        let k6 = sample_grid(&SamplingSpec::grid(1.0, 50.0, 1.0).unwrap());
        assert_eq!(k6, (1..=50).map(f64::from).collect::<Vec<_>>());
        assert_eq!(sample_grid(&SamplingSpec::grid(0.0, 2.0, 1.0).unwrap()), vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn grid_last_point_near_high() {
        for (a, b, c) in [(-1.0, 1.0, 0.1), (0.05, 10.05, 0.1), (-3.0, 3.0, 0.01), (-0.05, 6.05, 0.02)] {
            let s = SamplingSpec::grid(a, b, c).unwrap();
            let pts = sample_grid(&s);
            let last = *pts.last().unwrap();
            assert!((last - b).abs() <= GRID_EPS * c.max(1.0) * 100.0, "{s}: {last}");
        }
    }

    #[test]
    fn oversized_step_gives_single_point() {
        let s = SamplingSpec::grid(0.0, 1.0, 5.0).unwrap();
        assert_eq!(sample_grid(&s), vec![0.0]);
        let s = SamplingSpec::grid(0.0, 1.0, 1.0).unwrap();
        assert_eq!(sample_grid(&s), vec![0.0, 1.0]);
    }

    #[test]
    fn uniform_bounds_and_determinism() {
        let s = SamplingSpec::uniform(-1.0, 1.0, 20).unwrap();
        let a = sample_uniform(&s, &mut ChaCha8Rng::seed_from_u64(4));
        let b = sample_uniform(&s, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(a.len(), 20);
        assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn degenerate_uniform_interval() {
        let s = SamplingSpec::uniform(5.0, 5.0 + 1e-12, 3).unwrap();
        let v = sample_uniform(&s, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(v.len(), 3);
        assert!(v.iter().all(|x| (x - 5.0).abs() < 1e-11));
    }

    #[test]
    fn parse_notation() {
        assert_eq!(SamplingSpec::parse("U[-1, 1, 20]"), SamplingSpec::uniform(-1.0, 1.0, 20));
        assert_eq!(SamplingSpec::parse("U(-1, 1, 20)"), SamplingSpec::uniform(-1.0, 1.0, 20));
        assert_eq!(SamplingSpec::parse("E[1, 50, 1]"), SamplingSpec::grid(1.0, 50.0, 1.0));
        let nonic = SamplingSpec::parse("E[-1,1,20]").unwrap();
        assert_eq!(nonic.len(), 20);
        let pts = sample_grid(&nonic);
        assert_eq!(pts[0], -1.0);
        assert!((pts[19] - 1.0).abs() < 1e-12);
        assert!(SamplingSpec::parse("Q[0,1,2]").is_err());
        assert!(SamplingSpec::parse("U[1,0,2]").is_err());
        assert!(SamplingSpec::parse("U[0,1,2.5]").is_err());
        assert!(SamplingSpec::parse("E[0,1]").is_err());
    }
}
