use serde::{Deserialize, Serialize};

/// GP hyper-parameters. Defaults are the canonical configuration used for
/// every benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpConfig {
    pub population_size: usize,
    /// Number of populations evaluated, the random initial one included.
    pub generations: usize,
    pub tournament_size: usize,
    /// Inclusive depth range of the ramped half-and-half initialisation.
    pub init_depth: (usize, usize),
    pub max_depth: usize,
    pub const_range: (f64, f64),
    pub p_crossover: f64,
    pub p_subtree_mutation: f64,
    pub p_hoist_mutation: f64,
    pub p_point_mutation: f64,
    /// Per-node replacement probability of point mutation.
    pub p_point_replace: f64,
    pub parsimony_coefficient: f64,
    /// Carry the best program by raw NRMSE into the next population.
    pub elitism: bool,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            population_size: 1000,
            generations: 50,
            tournament_size: 10,
            init_depth: (2, 6),
            max_depth: 17,
            const_range: (-1.0, 1.0),
            p_crossover: 0.85,
            p_subtree_mutation: 0.05,
            p_hoist_mutation: 0.05,
            p_point_mutation: 0.05,
            p_point_replace: 0.05,
            parsimony_coefficient: 0.001,
            elitism: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("{name} = {value} is not a probability")]
    Probability { name: &'static str, value: f64 },
    #[error("operator probabilities sum to {0} > 1")]
    ProbabilitySum(f64),
    #[error("init depth range {0}..={1} is empty or exceeds max depth {2}")]
    DepthRange(usize, usize, usize),
    #[error("constant range {0}..{1} is empty")]
    ConstRange(f64, f64),
    #[error("parsimony coefficient {0} is negative")]
    Parsimony(f64),
}

impl GpConfig {
    /// A reduced budget for quick end-to-end runs.
    pub fn smoke() -> Self {
        GpConfig {
            population_size: 100,
            generations: 10,
            ..GpConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("population_size", self.population_size),
            ("generations", self.generations),
            ("tournament_size", self.tournament_size),
        ] {
            if v == 0 {
                return Err(ConfigError::NotPositive(name));
            }
        }
        let probs = [
            ("p_crossover", self.p_crossover),
            ("p_subtree_mutation", self.p_subtree_mutation),
            ("p_hoist_mutation", self.p_hoist_mutation),
            ("p_point_mutation", self.p_point_mutation),
            ("p_point_replace", self.p_point_replace),
        ];
        for (name, value) in probs {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::Probability { name, value });
            }
        }
        let sum = self.p_crossover + self.p_subtree_mutation + self.p_hoist_mutation + self.p_point_mutation;
        if sum > 1.0 + 1e-12 {
            return Err(ConfigError::ProbabilitySum(sum));
        }
        let (lo, hi) = self.init_depth;
        if lo == 0 || lo > hi || hi > self.max_depth {
            return Err(ConfigError::DepthRange(lo, hi, self.max_depth));
        }
        let (a, b) = self.const_range;
        // NaN bounds are rejected too
        if a.partial_cmp(&b) != Some(std::cmp::Ordering::Less) {
            return Err(ConfigError::ConstRange(a, b));
        }
        if self.parsimony_coefficient.is_nan() || self.parsimony_coefficient < 0.0 {
            return Err(ConfigError::Parsimony(self.parsimony_coefficient));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = GpConfig::default();
        c.validate().unwrap();
        assert_eq!(c.population_size, 1000);
        assert_eq!(c.generations, 50);
        GpConfig::smoke().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let c = GpConfig {
            p_crossover: 0.9,
            ..GpConfig::default()
        };
        assert!(matches!(c.validate(), Err(ConfigError::ProbabilitySum(_))));
        let c = GpConfig {
            init_depth: (3, 2),
            ..GpConfig::default()
        };
        assert!(matches!(c.validate(), Err(ConfigError::DepthRange(..))));
        let c = GpConfig {
            tournament_size: 0,
            ..GpConfig::default()
        };
        assert_eq!(c.validate(), Err(ConfigError::NotPositive("tournament_size")));
    }

    #[test]
    fn toml_overrides() {
        let c: GpConfig = toml::from_str("generations = 5\nelitism = false").unwrap();
        assert_eq!(c.generations, 5);
        assert!(!c.elitism);
        assert_eq!(c.population_size, 1000);
        assert!(toml::from_str::<GpConfig>("generation = 5").is_err());
    }
}
