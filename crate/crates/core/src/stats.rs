//! Small descriptive statistics shared across modules.

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Median with the even-count convention of averaging the two central order
/// statistics. Uses a total order, so infinities sort last.
///
/// # Panics
///
/// On an empty slice.
pub fn median(v: &[f64]) -> f64 {
    assert!(!v.is_empty(), "median of empty slice");
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

/// Sum of squared deviations from the mean.
pub fn sum_sq_dev(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum()
}

/// In-sample coefficient of determination `1 - SS_res / SS_tot`; `None` when
/// the target is constant.
pub fn r_squared(y: &[f64], pred: &[f64]) -> Option<f64> {
    let ss_tot = sum_sq_dev(y);
    if ss_tot == 0.0 {
        return None;
    }
    let ss_res: f64 = y.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum();
    Some(1.0 - ss_res / ss_tot)
}

/// `sqrt(SS_res / n)`.
pub fn rmse(y: &[f64], pred: &[f64]) -> f64 {
    let ss: f64 = y.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum();
    (ss / y.len() as f64).sqrt()
}
