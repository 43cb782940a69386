use super::MetaFeatureError;
use crate::dataset::Dataset;
use crate::stats::mean;

/// Adjusted Fisher-Pearson skewness
/// `n sqrt(n-1) / (n-2) * sum (x - m)^3 / (sum (x - m)^2)^(3/2)`.
pub fn skewness(v: &[f64]) -> Result<f64, MetaFeatureError> {
    let n = v.len();
    if n < 3 {
        return Err(MetaFeatureError::TooFewValues { needed: 3, got: n });
    }
    if is_constant(v) {
        return Err(MetaFeatureError::ZeroVariance);
    }
    let m = mean(v);
    let (m2, m3) = v.iter().fold((0.0, 0.0), |(s2, s3), x| {
        let d = x - m;
        (s2 + d * d, s3 + d * d * d)
    });
    let nf = n as f64;
    Ok(nf * (nf - 1.0).sqrt() / (nf - 2.0) * m3 / m2.powf(1.5))
}

/// Sample standard deviation with the `n - 1` denominator.
pub fn target_std(v: &[f64]) -> Result<f64, MetaFeatureError> {
    let n = v.len();
    if n < 2 {
        return Err(MetaFeatureError::TooFewValues { needed: 2, got: n });
    }
    let m = mean(v);
    let ss: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
    Ok((ss / (n as f64 - 1.0)).sqrt())
}

fn is_constant(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}

/// 1-based ranks; tied values share the average of the ranks they span.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && v[order[j]] == v[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

fn pearson(u: &[f64], v: &[f64]) -> Option<f64> {
    let (mu, mv) = (mean(u), mean(v));
    let (mut suv, mut suu, mut svv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        let (da, db) = (a - mu, b - mv);
        suv += da * db;
        suu += da * da;
        svv += db * db;
    }
    if suu == 0.0 || svv == 0.0 {
        return None;
    }
    // identical rank vectors give exactly 1: sqrt(fl(s * s)) == s
    Some((suv / (suu * svv).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spearman {
    pub rho: f64,
    /// One of the inputs was constant; `rho` is reported as 0.
    pub degenerate: bool,
}

/// Spearman rank correlation: Pearson correlation of average ranks.
pub fn spearman(u: &[f64], v: &[f64]) -> Result<Spearman, MetaFeatureError> {
    if u.len() != v.len() {
        return Err(MetaFeatureError::LengthMismatch(u.len(), v.len()));
    }
    if u.len() < 2 {
        return Err(MetaFeatureError::TooFewValues { needed: 2, got: u.len() });
    }
    Ok(match pearson(&average_ranks(u), &average_ranks(v)) {
        Some(rho) => Spearman { rho, degenerate: false },
        None => Spearman {
            rho: 0.0,
            degenerate: true,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanAbsCorr {
    pub value: f64,
    /// Feature indices whose correlation was undefined and counted as 0.
    pub degenerate_columns: Vec<usize>,
}

/// Mean over input features of `|spearman(x_j, y)|`.
pub fn mean_abs_corr(ds: &Dataset) -> Result<MeanAbsCorr, MetaFeatureError> {
    let y = ds.target();
    let y_ranks = average_ranks(y);
    let mut total = 0.0;
    let mut degenerate_columns = Vec::new();
    for (j, col) in ds.columns().iter().enumerate() {
        match pearson(&average_ranks(col), &y_ranks) {
            Some(r) => total += r.abs(),
            None => degenerate_columns.push(j),
        }
    }
    if !degenerate_columns.is_empty() {
        log::warn!(
            "{}: constant columns {:?} counted as zero correlation",
            ds.name(),
            degenerate_columns
        );
    }
    Ok(MeanAbsCorr {
        value: total / ds.n_features() as f64,
        degenerate_columns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Provenance, Role};
    use proptest::prelude::*;

    /// Oracle: ranks by counting strictly smaller and equal elements.
    fn brute_ranks(v: &[f64]) -> Vec<f64> {
        v.iter()
            .map(|x| {
                let less = v.iter().filter(|y| *y < x).count() as f64;
                let eq = v.iter().filter(|y| *y == x).count() as f64;
                less + (eq + 1.0) / 2.0
            })
            .collect()
    }

    fn brute_pearson(u: &[f64], v: &[f64]) -> f64 {
        let n = u.len() as f64;
        let (su, sv): (f64, f64) = (u.iter().sum(), v.iter().sum());
        let suv: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
        let suu: f64 = u.iter().map(|a| a * a).sum();
        let svv: f64 = v.iter().map(|a| a * a).sum();
        (n * suv - su * sv) / ((n * suu - su * su).sqrt() * (n * svv - sv * sv).sqrt())
    }

    #[test]
    fn skewness_examples() {
        assert_eq!(skewness(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(), 0.0);
        // hand evaluation: mean 1/3, m2 = 2/3, m3 = 2/9, 3*sqrt(2)*(2/9)/(2/3)^1.5 = sqrt(3)
        assert!((skewness(&[0.0, 0.0, 1.0]).unwrap() - 3f64.sqrt()).abs() < 1e-12);
        assert!(matches!(skewness(&[1.0, 2.0]), Err(MetaFeatureError::TooFewValues { .. })));
        assert!(matches!(skewness(&[0.1; 5]), Err(MetaFeatureError::ZeroVariance)));
    }

    #[test]
    fn std_examples() {
        assert_eq!(target_std(&[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert!((target_std(&[0.0, 2.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        // sqrt(5/3)
        assert!((target_std(&[1.0, 2.0, 3.0, 4.0]).unwrap() - 1.290_994_448_735_805_6).abs() < 1e-12);
        assert!(target_std(&[1.0]).is_err());
    }

    #[test]
    fn spearman_examples() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap().rho, 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap().rho, -1.0);
        let u = [1.0, 2.0, 3.0, 4.0];
        let v = [1.0, 1.0, 3.0, 4.0];
        let oracle = brute_pearson(&brute_ranks(&u), &brute_ranks(&v));
        assert!((oracle - 0.948_683_298_050_513_8).abs() < 1e-12);
        assert!((spearman(&u, &v).unwrap().rho - oracle).abs() < 1e-12);
        let d = spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(d, Spearman { rho: 0.0, degenerate: true });
        assert!(spearman(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn mean_abs_corr_cases() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let ds = Dataset::new("m", vec![x], y.clone(), Provenance::Synthetic, Role::Train).unwrap();
        assert_eq!(mean_abs_corr(&ds).unwrap().value, 1.0);
        let ds = Dataset::new(
            "c",
            vec![vec![1.0; 10], vec![2.0; 10]],
            y,
            Provenance::Synthetic,
            Role::Train,
        )
        .unwrap();
        let m = mean_abs_corr(&ds).unwrap();
        assert_eq!(m.value, 0.0);
        assert_eq!(m.degenerate_columns, vec![0, 1]);
    }

    proptest! {
        #[test]
        fn ranks_match_oracle(v in proptest::collection::vec(-3i32..3, 1..30)) {
            let v: Vec<f64> = v.into_iter().map(f64::from).collect();
            prop_assert_eq!(average_ranks(&v), brute_ranks(&v));
        }

        #[test]
        fn spearman_matches_oracle(pairs in proptest::collection::vec((-5i32..5, -5i32..5), 3..25)) {
            let u: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
            let v: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
            let got = spearman(&u, &v).unwrap();
            if !got.degenerate {
                let oracle = brute_pearson(&brute_ranks(&u), &brute_ranks(&v));
                prop_assert!((got.rho - oracle).abs() < 1e-8);
            }
        }

        #[test]
        fn spearman_monotone_invariant(v in proptest::collection::vec(-10.0f64..10.0, 3..40), w in proptest::collection::vec(-10.0f64..10.0, 40)) {
            let w = &w[..v.len()];
            let base = spearman(&v, w).unwrap().rho;
            let cubed: Vec<f64> = v.iter().map(|x| x.powi(3) + 2.0).collect();
            let expd: Vec<f64> = w.iter().map(|x| x.exp()).collect();
            prop_assert!((spearman(&cubed, &expd).unwrap().rho - base).abs() < 1e-12);
        }

        #[test]
        fn skewness_affine_and_sign(v in proptest::collection::vec(-10.0f64..10.0, 3..40), a in -5.0f64..5.0, b in 0.1f64..5.0) {
            prop_assume!(v.iter().any(|x| *x != v[0]));
            let s = skewness(&v).unwrap();
            let t: Vec<f64> = v.iter().map(|x| a + b * x).collect();
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            prop_assert!((skewness(&t).unwrap() - s).abs() < 1e-7 * (1.0 + s.abs()));
            prop_assert!((skewness(&neg).unwrap() + s).abs() < 1e-9 * (1.0 + s.abs()));
        }
    }
}
