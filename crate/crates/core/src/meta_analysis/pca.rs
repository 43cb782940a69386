use super::AnalysisError;
use nalgebra::DMatrix;

/// Two-component PCA over min-max scaled features.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    /// Indices of the features that vary; constant ones are dropped.
    pub kept: Vec<usize>,
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    /// Means of the scaled kept features.
    pub means: Vec<f64>,
    /// Unit loading vectors over the kept features, first component first.
    pub components: [Vec<f64>; 2],
    /// Variance of the scores along each component (`n - 1` denominator).
    pub explained_variance: [f64; 2],
    /// Share of the total scaled variance captured by each component.
    pub explained_variance_ratio: [f64; 2],
}

/// Fits the model on column-major features. Each kept feature is scaled to
/// `[0, 1]` and centred; components are the top right singular vectors of the
/// centred matrix, signed so that each one's largest-magnitude loading is
/// positive.
pub fn fit_pca2(columns: &[Vec<f64>]) -> Result<PcaModel, AnalysisError> {
    let n = columns.first().map_or(0, Vec::len);
    if n < 3 {
        return Err(AnalysisError::TooFewRows { needed: 3, got: n });
    }
    let mut kept = Vec::new();
    let (mut mins, mut maxs) = (Vec::new(), Vec::new());
    for (j, c) in columns.iter().enumerate() {
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            kept.push(j);
            mins.push(lo);
            maxs.push(hi);
        } else {
            log::warn!("feature {j} is constant and is left out of the PCA");
        }
    }
    if kept.len() < 2 {
        return Err(AnalysisError::DegenerateFeatures(kept.len()));
    }
    let k = kept.len();
    let scaled: Vec<Vec<f64>> = kept
        .iter()
        .enumerate()
        .map(|(jj, &j)| columns[j].iter().map(|x| (x - mins[jj]) / (maxs[jj] - mins[jj])).collect())
        .collect();
    let means: Vec<f64> = scaled.iter().map(|c| crate::stats::mean(c)).collect();
    let centred = DMatrix::from_fn(n, k, |i, j| scaled[j][i] - means[j]);
    let svd = centred.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    let mut components = [Vec::new(), Vec::new()];
    let mut explained_variance = [0.0; 2];
    let mut explained_variance_ratio = [0.0; 2];
    for c in 0..2 {
        let Some(&r) = order.get(c) else {
            // fewer rows than needed for a second direction
            return Err(AnalysisError::DegenerateFeatures(order.len()));
        };
        let mut v: Vec<f64> = v_t.row(r).iter().copied().collect();
        let lead = v
            .iter()
            .copied()
            .reduce(|a, b| if b.abs() > a.abs() { b } else { a })
            .expect("k >= 2");
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let s = svd.singular_values[r];
        components[c] = v;
        explained_variance[c] = s * s / (n as f64 - 1.0);
        explained_variance_ratio[c] = if total > 0.0 { s * s / total } else { 0.0 };
    }
    Ok(PcaModel {
        kept,
        mins,
        maxs,
        means,
        components,
        explained_variance,
        explained_variance_ratio,
    })
}

impl PcaModel {
    /// Scores of each row on the two components, using the fitted scaling.
    pub fn project(&self, columns: &[Vec<f64>]) -> Vec<[f64; 2]> {
        let n = columns.first().map_or(0, Vec::len);
        (0..n)
            .map(|i| {
                let mut out = [0.0; 2];
                for (jj, &j) in self.kept.iter().enumerate() {
                    let z = (columns[j][i] - self.mins[jj]) / (self.maxs[jj] - self.mins[jj]) - self.means[jj];
                    out[0] += z * self.components[0][jj];
                    out[1] += z * self.components[1][jj];
                }
                out
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Oracle: cyclic Jacobi eigen-decomposition of a symmetric matrix.
    /// Returns (eigenvalues, eigenvectors as columns), sorted descending.
    fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
        let k = a.len();
        let mut v: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| f64::from(u8::from(i == j))).collect()).collect();
        for _sweep in 0..100 {
            let off: f64 = (0..k).flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..k {
                for q in p + 1..k {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for r in 0..k {
                        let (arp, arq) = (a[r][p], a[r][q]);
                        a[r][p] = c * arp - s * arq;
                        a[r][q] = s * arp + c * arq;
                    }
                    for r in 0..k {
                        let (apr, aqr) = (a[p][r], a[q][r]);
                        a[p][r] = c * apr - s * aqr;
                        a[q][r] = s * apr + c * aqr;
                    }
                    for r in 0..k {
                        let (vrp, vrq) = (v[r][p], v[r][q]);
                        v[r][p] = c * vrp - s * vrq;
                        v[r][q] = s * vrp + c * vrq;
                    }
                }
            }
        }
        let mut idx: Vec<usize> = (0..k).collect();
        idx.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
        let vals = idx.iter().map(|&i| a[i][i]).collect();
        let vecs = idx.iter().map(|&i| (0..k).map(|r| v[r][i]).collect()).collect();
        (vals, vecs)
    }

    fn covariance_of_scaled(cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let scaled: Vec<Vec<f64>> = cols
            .iter()
            .map(|c| {
                let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                c.iter().map(|x| (x - lo) / (hi - lo)).collect()
            })
            .collect();
        let n = scaled[0].len() as f64;
        let means: Vec<f64> = scaled.iter().map(|c| c.iter().sum::<f64>() / n).collect();
        (0..cols.len())
            .map(|a| {
                (0..cols.len())
                    .map(|b| {
                        scaled[a].iter().zip(&scaled[b]).map(|(x, y)| (x - means[a]) * (y - means[b])).sum::<f64>()
                            / (n - 1.0)
                    })
                    .collect()
            })
            .collect()
    }

    fn random_cols(seed: u64, n: usize, k: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        (0..k)
            .map(|j| {
                base.iter()
                    .map(|b| b * (j as f64 + 1.0) + rng.random_range(-1.0..1.0) * (1.0 + j as f64 * 0.3))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn matches_eigen_oracle() {
        for seed in 0..5 {
            let cols = random_cols(seed, 40, 5);
            let m = fit_pca2(&cols).unwrap();
            let (vals, vecs) = jacobi_eigen(covariance_of_scaled(&cols));
            for c in 0..2 {
                assert!((m.explained_variance[c] - vals[c]).abs() < 1e-8);
                // align sign with the model's convention
                let dot: f64 = m.components[c].iter().zip(&vecs[c]).map(|(a, b)| a * b).sum();
                for (a, b) in m.components[c].iter().zip(&vecs[c]) {
                    assert!((a - dot.signum() * b).abs() < 1e-8, "component {c}");
                }
            }
            let total: f64 = vals.iter().sum();
            assert!((m.explained_variance_ratio[0] - vals[0] / total).abs() < 1e-8);
        }
    }

    #[test]
    fn orthonormal_and_ordered() {
        let m = fit_pca2(&random_cols(9, 30, 6)).unwrap();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        assert!((dot(&m.components[0], &m.components[0]) - 1.0).abs() < 1e-10);
        assert!((dot(&m.components[1], &m.components[1]) - 1.0).abs() < 1e-10);
        assert!(dot(&m.components[0], &m.components[1]).abs() < 1e-10);
        assert!(m.explained_variance[0] >= m.explained_variance[1]);
        for c in &m.components {
            let lead = c.iter().copied().reduce(|a, b| if b.abs() > a.abs() { b } else { a }).unwrap();
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn correlated_cloud_first_axis() {
        // exchangeable pair a + e/3: corr = 1 / (1 + 1/9) = 0.9, equal spreads,
        // so the principal axis is (1, 1) / sqrt(2)
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 4000;
        let (mut u, mut v) = (Vec::new(), Vec::new());
        for _ in 0..n {
            let a: f64 = rng.random_range(-1.0..1.0);
            u.push(a + rng.random_range(-1.0..1.0) / 3.0);
            v.push(a + rng.random_range(-1.0..1.0) / 3.0);
        }
        let cols = vec![u, v];
        let m = fit_pca2(&cols).unwrap();
        let (_, vecs) = jacobi_eigen(covariance_of_scaled(&cols));
        let h = 0.5f64.sqrt();
        assert!((m.components[0][0] - h).abs() < 0.05 && (m.components[0][1] - h).abs() < 0.05, "{:?}", m.components);
        assert!((m.components[0][0].abs() - vecs[0][0].abs()).abs() < 1e-8);
    }

    #[test]
    fn exact_plane_is_fully_explained() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 25;
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let c: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x - y).collect();
        let cols = vec![a, b, c];
        let m = fit_pca2(&cols).unwrap();
        assert!((m.explained_variance_ratio[0] + m.explained_variance_ratio[1] - 1.0).abs() < 1e-12);
        // reconstruction from two scores recovers the scaled centred data
        let scores = m.project(&cols);
        for (i, s) in scores.iter().enumerate() {
            for (jj, &j) in m.kept.iter().enumerate() {
                let z = (cols[j][i] - m.mins[jj]) / (m.maxs[jj] - m.mins[jj]) - m.means[jj];
                let back = s[0] * m.components[0][jj] + s[1] * m.components[1][jj];
                assert!((z - back).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn row_order_does_not_matter() {
        let cols = random_cols(4, 20, 4);
        let m = fit_pca2(&cols).unwrap();
        let perm: Vec<usize> = (0..20).rev().collect();
        let shuffled: Vec<Vec<f64>> = cols.iter().map(|c| perm.iter().map(|&i| c[i]).collect()).collect();
        let p = fit_pca2(&shuffled).unwrap();
        let a = m.project(&cols);
        let b = p.project(&shuffled);
        for (k, &i) in perm.iter().enumerate() {
            assert!((a[i][0] - b[k][0]).abs() < 1e-10 && (a[i][1] - b[k][1]).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_features_dropped_or_rejected() {
        let mut cols = random_cols(5, 10, 3);
        cols.insert(1, vec![7.0; 10]);
        let m = fit_pca2(&cols).unwrap();
        assert_eq!(m.kept, vec![0, 2, 3]);
        assert!(matches!(
            fit_pca2(&[vec![1.0; 5], vec![2.0; 5]]),
            Err(AnalysisError::DegenerateFeatures(0))
        ));
        assert!(matches!(fit_pca2(&[vec![1.0, 2.0]]), Err(AnalysisError::TooFewRows { .. })));
    }
}
