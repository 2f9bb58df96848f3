//! Yeo-Johnson power transform: maximum-likelihood lambda per column,
//! followed by standardization.

use super::{FeatureVector, FEATURE_COUNT, FLAG_RANGE};

/// The four-branch Yeo-Johnson transform (pre-standardization).
pub fn yeo_johnson(x: f64, lambda: f64) -> f64 {
    if lambda == 1.0 {
        // Both branches reduce to x; returning it directly keeps the
        // identity exact for values where (x + 1) - 1 would round.
        return x;
    }
    if x >= 0.0 {
        if lambda == 0.0 {
            x.ln_1p()
        } else {
            ((x + 1.0).powf(lambda) - 1.0) / lambda
        }
    } else if lambda == 2.0 {
        -(-x).ln_1p()
    } else {
        -((1.0 - x).powf(2.0 - lambda) - 1.0) / (2.0 - lambda)
    }
}

/// Inverse of [`yeo_johnson`].
pub fn yeo_johnson_inverse(y: f64, lambda: f64) -> f64 {
    if lambda == 1.0 {
        return y;
    }
    if y >= 0.0 {
        if lambda == 0.0 {
            y.exp_m1()
        } else {
            (y * lambda + 1.0).powf(1.0 / lambda) - 1.0
        }
    } else if lambda == 2.0 {
        -(-y).exp_m1()
    } else {
        1.0 - (1.0 - y * (2.0 - lambda)).powf(1.0 / (2.0 - lambda))
    }
}

/// Profile log-likelihood of the transform parameter:
/// `-n/2 ln(sigma^2(lambda)) + (lambda - 1) sum sign(x) ln(|x| + 1)`.
pub fn yeo_johnson_log_likelihood(column: &[f64], lambda: f64) -> f64 {
    let n = column.len() as f64;
    let transformed: Vec<f64> = column.iter().map(|&x| yeo_johnson(x, lambda)).collect();
    let mean = transformed.iter().sum::<f64>() / n;
    let variance = transformed.iter().map(|&t| (t - mean).powi(2)).sum::<f64>() / n;
    if variance <= 0.0 || !variance.is_finite() {
        return f64::NEG_INFINITY;
    }
    let jacobian: f64 = column
        .iter()
        .map(|&x| x.signum() * (x.abs() + 1.0).ln())
        .sum();
    -0.5 * n * variance.ln() + (lambda - 1.0) * jacobian
}

/// Maximum-likelihood lambda by golden-section search on [-5, 5] to 1e-5.
/// A constant column yields lambda = 1 (identity) with a warning.
pub fn fit_yeo_johnson(column: &[f64]) -> f64 {
    assert!(!column.is_empty(), "column must be non-empty");
    assert!(
        column.iter().all(|x| x.is_finite()),
        "column must be finite"
    );
    let first = column[0];
    if column.iter().all(|&x| x == first) {
        log::warn!("constant column; Yeo-Johnson lambda fixed to 1 (identity)");
        return 1.0;
    }

    let golden = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (-5.0f64, 5.0f64);
    let mut mid_lo = hi - golden * (hi - lo);
    let mut mid_hi = lo + golden * (hi - lo);
    let mut ll_lo = yeo_johnson_log_likelihood(column, mid_lo);
    let mut ll_hi = yeo_johnson_log_likelihood(column, mid_hi);
    while hi - lo > 1e-5 {
        if ll_lo > ll_hi {
            hi = mid_hi;
            mid_hi = mid_lo;
            ll_hi = ll_lo;
            mid_lo = hi - golden * (hi - lo);
            ll_lo = yeo_johnson_log_likelihood(column, mid_lo);
        } else {
            lo = mid_lo;
            mid_lo = mid_hi;
            ll_lo = ll_hi;
            mid_hi = lo + golden * (hi - lo);
            ll_hi = yeo_johnson_log_likelihood(column, mid_hi);
        }
    }
    0.5 * (lo + hi)
}

/// Fitted per-column transform state.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnScaler {
    pub lambda: f64,
    pub mean: f64,
    pub sd: f64,
}

/// Per-feature Yeo-Johnson + standardization model. Binary flag columns are
/// passed through untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalerModel {
    columns: Vec<Option<ColumnScaler>>,
}

impl ScalerModel {
    /// Fit on training rows only.
    pub fn fit(rows: &[FeatureVector]) -> ScalerModel {
        assert!(!rows.is_empty(), "cannot fit a scaler on zero rows");
        let mut columns = Vec::with_capacity(FEATURE_COUNT);
        for feature in 0..FEATURE_COUNT {
            if FLAG_RANGE.contains(&feature) {
                columns.push(None);
                continue;
            }
            let column: Vec<f64> = rows.iter().map(|r| r.values[feature]).collect();
            let lambda = fit_yeo_johnson(&column);
            let transformed: Vec<f64> = column.iter().map(|&x| yeo_johnson(x, lambda)).collect();
            let n = transformed.len() as f64;
            let mean = transformed.iter().sum::<f64>() / n;
            let variance = transformed.iter().map(|&t| (t - mean).powi(2)).sum::<f64>() / n;
            let sd = if variance > 0.0 { variance.sqrt() } else { 1.0 };
            columns.push(Some(ColumnScaler { lambda, mean, sd }));
        }
        ScalerModel { columns }
    }

    pub fn lambdas(&self) -> Vec<Option<f64>> {
        self.columns
            .iter()
            .map(|c| c.as_ref().map(|c| c.lambda))
            .collect()
    }

    pub fn transform_value(&self, feature: usize, x: f64) -> f64 {
        match &self.columns[feature] {
            None => x,
            Some(c) => (yeo_johnson(x, c.lambda) - c.mean) / c.sd,
        }
    }

    pub fn transform_vector(&self, row: &FeatureVector) -> FeatureVector {
        let mut out = *row;
        for (feature, value) in out.values.iter_mut().enumerate() {
            *value = self.transform_value(feature, row.values[feature]);
        }
        out
    }

    pub fn transform_rows(&self, rows: &[FeatureVector]) -> Vec<FeatureVector> {
        rows.iter().map(|r| self.transform_vector(r)).collect()
    }
}
