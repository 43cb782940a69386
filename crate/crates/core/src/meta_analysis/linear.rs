use super::{AnalysisError, FitMetrics};
use crate::metafeatures::{fit_ols, OlsFit};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearMeta {
    pub fit: OlsFit,
    pub metrics: FitMetrics,
}

/// OLS of `y` on every column, with intercept; in-sample metrics.
pub fn fit_linear_meta(columns: &[Vec<f64>], y: &[f64]) -> Result<LinearMeta, AnalysisError> {
    if y.len() <= columns.len() {
        return Err(AnalysisError::TooFewRows {
            needed: columns.len() + 1,
            got: y.len(),
        });
    }
    let fit = fit_ols(columns, y)?;
    let metrics = FitMetrics::of(y, &fit.predict(columns));
    Ok(LinearMeta { fit, metrics })
}

/// Least-squares plane `y ~ intercept + b1 * pc1 + b2 * pc2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneFit {
    pub intercept: f64,
    pub coefficients: [f64; 2],
    pub metrics: FitMetrics,
}

pub fn fit_plane(scores: &[[f64; 2]], y: &[f64]) -> Result<PlaneFit, AnalysisError> {
    if scores.len() != y.len() {
        return Err(AnalysisError::LengthMismatch(scores.len(), y.len()));
    }
    if y.len() < 4 {
        return Err(AnalysisError::TooFewRows { needed: 4, got: y.len() });
    }
    let columns: Vec<Vec<f64>> = (0..2).map(|c| scores.iter().map(|s| s[c]).collect()).collect();
    let fit = fit_ols(&columns, y)?;
    if fit.rank < 2 {
        return Err(AnalysisError::DegenerateProjection);
    }
    Ok(PlaneFit {
        intercept: fit.intercept,
        coefficients: [fit.coefficients[0], fit.coefficients[1]],
        metrics: FitMetrics::of(y, &fit.predict(&columns)),
    })
}
