//! CART regression trees and a bootstrap forest with impurity importances.
//!
//! Trees grow without a depth limit: a node splits while it holds at least
//! two samples, has non-zero impurity and some feature takes two distinct
//! values in it. Every feature is a split candidate; thresholds are midpoints
//! between consecutive distinct values and samples with `x <= threshold` go
//! left.

use super::{AnalysisError, FitMetrics};
use crate::seed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
enum TreeNode {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<TreeNode>,
    /// Unnormalised impurity decrease per feature, weighted by node size.
    decrease: Vec<f64>,
}

/// Mean squared deviation from the mean (two-pass).
fn impurity(y: &[f64], idx: &[usize]) -> f64 {
    let n = idx.len() as f64;
    let m = idx.iter().map(|&i| y[i]).sum::<f64>() / n;
    idx.iter().map(|&i| (y[i] - m) * (y[i] - m)).sum::<f64>() / n
}

struct Builder<'a> {
    columns: &'a [Vec<f64>],
    y: &'a [f64],
    nodes: Vec<TreeNode>,
    decrease: Vec<f64>,
}

impl Builder<'_> {
    /// Best split of `idx` by impurity decrease. Returns the split of the
    /// first best feature plus every feature whose best decrease ties with it
    /// (within a relative `1e-10`); ties share the importance credit, so
    /// importances do not depend on column order.
    fn best_split(&self, idx: &[usize], node_sse: f64) -> Option<(usize, f64, Vec<usize>)> {
        let n = idx.len();
        let mean = idx.iter().map(|&i| self.y[i]).sum::<f64>() / n as f64;
        let tol = 1e-10 * node_sse;
        let mut per_feature: Vec<Option<(f64, f64)>> = Vec::with_capacity(self.columns.len());
        let mut order = idx.to_vec();
        for col in self.columns {
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            let mut best: Option<(f64, f64)> = None;
            let mut left = 0.0;
            for k in 1..n {
                left += self.y[order[k - 1]] - mean;
                let (lo, hi) = (col[order[k - 1]], col[order[k]]);
                if lo == hi {
                    continue;
                }
                // between-group sum of squares of centred targets = decrease in SSE
                let kf = k as f64;
                let gain = left * left * n as f64 / (kf * (n as f64 - kf));
                if best.is_none_or(|(b, _)| gain > b + tol) {
                    let mut threshold = lo / 2.0 + hi / 2.0;
                    // midpoint can round up to `hi` for adjacent floats
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some((gain, threshold));
                }
            }
            per_feature.push(best);
        }
        let top = per_feature.iter().flatten().map(|b| b.0).fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> = (0..per_feature.len())
            .filter(|&j| per_feature[j].is_some_and(|(g, _)| g >= top - tol))
            .collect();
        let &first = ties.first()?;
        Some((first, per_feature[first].expect("tied feature has a split").1, ties))
    }

    fn grow(&mut self, idx: Vec<usize>) -> usize {
        let at = self.nodes.len();
        let value = idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64;
        self.nodes.push(TreeNode::Leaf(value));
        let imp = impurity(self.y, &idx);
        if idx.len() < 2 || imp <= 0.0 {
            return at;
        }
        let n = idx.len() as f64;
        let Some((feature, threshold, ties)) = self.best_split(&idx, n * imp) else {
            return at;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.columns[feature][i] <= threshold);
        let gain = n * imp - l.len() as f64 * impurity(self.y, &l) - r.len() as f64 * impurity(self.y, &r);
        for &j in &ties {
            self.decrease[j] += gain / ties.len() as f64;
        }
        let left = self.grow(l);
        let right = self.grow(r);
        self.nodes[at] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }
}

impl RegressionTree {
    /// Fits on the rows listed in `sample` (repeats allowed, as in a bootstrap).
    pub fn fit(columns: &[Vec<f64>], y: &[f64], sample: Vec<usize>) -> Self {
        let mut b = Builder {
            columns,
            y,
            nodes: Vec::new(),
            decrease: vec![0.0; columns.len()],
        };
        b.grow(sample);
        RegressionTree {
            nodes: b.nodes,
            decrease: b.decrease,
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf(v) => return v,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Impurity decrease per feature normalised to sum 1; all zero for a
    /// single-leaf tree.
    pub fn importances(&self) -> Vec<f64> {
        let total: f64 = self.decrease.iter().sum();
        if total > 0.0 {
            self.decrease.iter().map(|d| d / total).collect()
        } else {
            vec![0.0; self.decrease.len()]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestParams {
    pub trees: usize,
    pub seed: u64,
    /// Fit each tree on `n` rows drawn with replacement; otherwise on all rows.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 120,
            seed: 0,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<RegressionTree>,
    /// Non-negative, sums to 1.
    pub importances: Vec<f64>,
}

/// Fits a random forest. Tree `t` bootstraps with seed `derive(seed, [t])`.
pub fn fit_forest(columns: &[Vec<f64>], y: &[f64], params: ForestParams) -> Result<ForestModel, AnalysisError> {
    let n = y.len();
    if n < 2 {
        return Err(AnalysisError::TooFewRows { needed: 2, got: n });
    }
    if columns.is_empty() {
        return Err(AnalysisError::NoFeatures);
    }
    if y.iter().all(|v| *v == y[0]) {
        return Err(AnalysisError::ConstantTarget);
    }
    if params.trees == 0 {
        return Err(AnalysisError::NoTrees);
    }
    let trees: Vec<RegressionTree> = (0..params.trees)
        .into_par_iter()
        .map(|t| {
            let sample = if params.bootstrap {
                let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(params.seed, &[t as u64]));
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            RegressionTree::fit(columns, y, sample)
        })
        .collect();
    // trees that never split carry no importance information
    let mut importances = vec![0.0; columns.len()];
    let mut counted = 0;
    for t in trees.iter().filter(|t| t.n_nodes() > 1) {
        for (a, v) in importances.iter_mut().zip(t.importances()) {
            *a += v;
        }
        counted += 1;
    }
    let total: f64 = importances.iter().sum();
    if counted > 0 && total > 0.0 {
        importances.iter_mut().for_each(|v| *v /= total);
    }
    Ok(ForestModel { trees, importances })
}

impl ForestModel {
    /// Mean of the tree predictions.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict(&self, columns: &[Vec<f64>]) -> Vec<f64> {
        let n = columns.first().map_or(0, Vec::len);
        (0..n)
            .map(|i| {
                let row: Vec<f64> = columns.iter().map(|c| c[i]).collect();
                self.predict_row(&row)
            })
            .collect()
    }

    /// In-sample R^2 and RMSE.
    pub fn fit_metrics(&self, columns: &[Vec<f64>], y: &[f64]) -> FitMetrics {
        FitMetrics::of(y, &self.predict(columns))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    /// Oracle tree: exhaustive search over every (feature, midpoint) pair
    /// minimising the summed child squared error, computed directly.
    enum Oracle {
        Leaf(f64),
        Split(usize, f64, Box<Oracle>, Box<Oracle>),
    }

    fn sse(y: &[f64]) -> f64 {
        let m = y.iter().sum::<f64>() / y.len() as f64;
        y.iter().map(|v| (v - m) * (v - m)).sum()
    }

    fn oracle(rows: &[(Vec<f64>, f64)]) -> Oracle {
        let ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        if rows.len() < 2 || sse(&ys) == 0.0 {
            return Oracle::Leaf(mean);
        }
        let tol = 1e-10 * sse(&ys);
        let mut best: Option<(f64, usize, f64)> = None;
        for j in 0..rows[0].0.len() {
            let mut vals: Vec<f64> = rows.iter().map(|r| r.0[j]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let t = w[0] / 2.0 + w[1] / 2.0;
                let l: Vec<f64> = rows.iter().filter(|r| r.0[j] <= t).map(|r| r.1).collect();
                let r: Vec<f64> = rows.iter().filter(|r| r.0[j] > t).map(|r| r.1).collect();
                let cost = sse(&l) + sse(&r);
                if best.is_none_or(|(b, _, _)| cost < b - tol) {
                    best = Some((cost, j, t));
                }
            }
        }
        match best {
            None => Oracle::Leaf(mean),
            Some((_, j, t)) => {
                let (l, r): (Vec<_>, Vec<_>) = rows.iter().cloned().partition(|r| r.0[j] <= t);
                Oracle::Split(j, t, Box::new(oracle(&l)), Box::new(oracle(&r)))
            }
        }
    }

    fn oracle_predict(o: &Oracle, x: &[f64]) -> f64 {
        match o {
            Oracle::Leaf(v) => *v,
            Oracle::Split(j, t, l, r) => oracle_predict(if x[*j] <= *t { l } else { r }, x),
        }
    }

    fn random_data(seed: u64, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols: Vec<Vec<f64>> = (0..d).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let y = (0..n)
            .map(|i| cols[0][i].sin() + cols[d - 1][i] * cols[0][i] + rng.random_range(-0.1..0.1))
            .collect();
        (cols, y)
    }

    proptest! {
        #[test]
        fn tree_matches_exhaustive_oracle(seed in any::<u64>(), n in 3usize..=20, d in 1usize..=3) {
            let (cols, y) = random_data(seed, n, d);
            let tree = RegressionTree::fit(&cols, &y, (0..n).collect());
            let rows: Vec<(Vec<f64>, f64)> = (0..n).map(|i| (cols.iter().map(|c| c[i]).collect(), y[i])).collect();
            let o = oracle(&rows);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            for _ in 0..50 {
                let q: Vec<f64> = (0..d).map(|_| rng.random_range(-1.2..1.2)).collect();
                prop_assert!((tree.predict_row(&q) - oracle_predict(&o, &q)).abs() < 1e-8);
            }
        }

        #[test]
        fn importances_follow_column_permutation(seed in any::<u64>()) {
            let (cols, y) = random_data(seed, 30, 3);
            let p = ForestParams { trees: 10, seed: 1, bootstrap: true };
            let a = fit_forest(&cols, &y, p).unwrap();
            let perm = [2usize, 0, 1];
            let moved: Vec<Vec<f64>> = perm.iter().map(|&j| cols[j].clone()).collect();
            let b = fit_forest(&moved, &y, p).unwrap();
            for (k, &j) in perm.iter().enumerate() {
                prop_assert!((b.importances[k] - a.importances[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_unbootstrapped_tree_interpolates() {
        let (cols, y) = random_data(3, 25, 2);
        let f = fit_forest(
            &cols,
            &y,
            ForestParams {
                trees: 1,
                seed: 0,
                bootstrap: false,
            },
        )
        .unwrap();
        let m = f.fit_metrics(&cols, &y);
        assert_eq!(m.r2, Some(1.0));
        assert_eq!(m.rmse, 0.0);
    }

    #[test]
    fn informative_feature_dominates() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 80;
        let cols: Vec<Vec<f64>> = (0..4).map(|_| (0..n).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let y = cols[2].clone();
        let f = fit_forest(&cols, &y, ForestParams { seed: 4, ..ForestParams::default() }).unwrap();
        assert!(f.importances[2] > 0.8, "{:?}", f.importances);
        assert!((f.importances.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(f.importances.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn duplicated_rows_keep_importances() {
        let (cols, y) = random_data(12, 40, 3);
        let p = ForestParams { seed: 2, ..ForestParams::default() };
        let a = fit_forest(&cols, &y, p).unwrap();
        let dcols: Vec<Vec<f64>> = cols.iter().map(|c| c.iter().chain(c).copied().collect()).collect();
        let dy: Vec<f64> = y.iter().chain(&y).copied().collect();
        let b = fit_forest(&dcols, &dy, p).unwrap();
        for (x, z) in a.importances.iter().zip(&b.importances) {
            assert!((x - z).abs() < 0.02, "{:?} vs {:?}", a.importances, b.importances);
        }
    }

    #[test]
    fn single_feature_has_all_importance() {
        let (cols, y) = random_data(5, 20, 1);
        let f = fit_forest(&cols, &y, ForestParams::default()).unwrap();
        assert_eq!(f.importances, vec![1.0]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            fit_forest(&[vec![1.0, 2.0]], &[1.0, 1.0], ForestParams::default()),
            Err(AnalysisError::ConstantTarget)
        ));
        assert!(matches!(
            fit_forest(&[vec![1.0]], &[1.0], ForestParams::default()),
            Err(AnalysisError::TooFewRows { .. })
        ));
    }

    #[test]
    fn deterministic_per_seed() {
        let (cols, y) = random_data(6, 30, 3);
        let p = ForestParams { trees: 20, seed: 9, bootstrap: true };
        assert_eq!(fit_forest(&cols, &y, p).unwrap(), fit_forest(&cols, &y, p).unwrap());
    }
}
