use super::MetaFeatureError;
use crate::dataset::Dataset;
use crate::stats::{mean, r_squared};
use nalgebra::{DMatrix, DVector};

/// A least-squares linear fit `y ~ intercept + sum coefficients[j] * x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Numerical rank of the centred design.
    pub rank: usize,
    /// Fewer rows than parameters (`n <= d`); the fit is the minimum-norm one.
    pub degenerate: bool,
}

impl OlsFit {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(row).map(|(b, x)| b * x).sum::<f64>()
    }

    /// Predictions for column-major inputs.
    pub fn predict(&self, columns: &[Vec<f64>]) -> Vec<f64> {
        let n = columns.first().map_or(0, Vec::len);
        let mut out = vec![self.intercept; n];
        for (b, col) in self.coefficients.iter().zip(columns) {
            for (o, x) in out.iter_mut().zip(col) {
                *o += b * x;
            }
        }
        out
    }
}

/// Ordinary least squares with intercept.
///
/// Columns and target are centred and each column scaled to unit norm; the
/// centred system is reduced by Householder QR and solved through the SVD of
/// its triangular factor, discarding singular values below
/// `max(n, d) * eps * s_max`. Rank-deficient designs get the minimum-norm
/// solution (over the scaled coefficients); constant columns get 0.
pub fn fit_ols(columns: &[Vec<f64>], y: &[f64]) -> Result<OlsFit, MetaFeatureError> {
    let n = y.len();
    let d = columns.len();
    if n == 0 {
        return Err(MetaFeatureError::TooFewValues { needed: 1, got: 0 });
    }
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(MetaFeatureError::LengthMismatch(c.len(), n));
    }
    let y_mean = mean(y);
    let means: Vec<f64> = columns.iter().map(|c| mean(c)).collect();
    let norms: Vec<f64> = columns
        .iter()
        .zip(&means)
        .map(|(c, m)| c.iter().map(|x| (x - m) * (x - m)).sum::<f64>().sqrt())
        .collect();
    // active columns have spread; the rest are constant
    let active: Vec<usize> = (0..d).filter(|&j| norms[j] > 0.0).collect();
    let mut coefficients = vec![0.0; d];
    let mut rank = 0;
    if !active.is_empty() && n > 1 {
        let k = active.len();
        let a = DMatrix::from_fn(n, k, |i, jj| {
            let j = active[jj];
            (columns[j][i] - means[j]) / norms[j]
        });
        let mut b = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
        let qr = a.qr();
        let r = qr.r();
        qr.q_tr_mul(&mut b);
        let m = r.nrows();
        let rhs = b.rows(0, m).into_owned();
        let svd = r.svd(true, true);
        let s_max = svd.singular_values.max();
        let tol = (n.max(k) as f64) * f64::EPSILON * s_max;
        rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
        let beta = svd
            .solve(&rhs, tol)
            .map_err(|e| MetaFeatureError::Numerical(e.to_owned()))?;
        for (jj, &j) in active.iter().enumerate() {
            coefficients[j] = beta[jj] / norms[j];
        }
    }
    let intercept = y_mean - coefficients.iter().zip(&means).map(|(b, m)| b * m).sum::<f64>();
    Ok(OlsFit {
        coefficients,
        intercept,
        rank,
        degenerate: n <= d,
    })
}

/// In-sample `R^2` of the OLS fit of the target on all inputs.
pub fn linearity_r2(ds: &Dataset) -> Result<f64, MetaFeatureError> {
    let fit = fit_ols(ds.columns(), ds.target())?;
    if fit.degenerate {
        log::warn!("{}: linear fit has no more rows than features", ds.name());
    }
    r_squared(ds.target(), &fit.predict(ds.columns())).ok_or(MetaFeatureError::ConstantTarget)
}
