use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{DesignMatrix, ModelError};
use crate::linalg::spd_solve;

pub const DEFAULT_LAMBDA: f64 = 0.1;

/// How the ridge penalty enters the normal equations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaScaling {
    /// `(ZᵀZ + λ·n·I) w = Zᵀy`: the penalty keeps its meaning across cohort sizes.
    #[default]
    N,
    /// `(ZᵀZ + λ·I) w = Zᵀy`.
    Raw,
}

impl LambdaScaling {
    pub fn effective(self, lambda: f64, n_rows: usize) -> f64 {
        match self {
            LambdaScaling::N => lambda * n_rows as f64,
            LambdaScaling::Raw => lambda,
        }
    }
}

/// Standardisation parameters and ridge weights in standardised units.
/// Columns with zero training variance get weight 0 and are listed in
/// `dropped_columns`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub columns: Vec<String>,
    pub column_means: Vec<f64>,
    pub column_stds: Vec<f64>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub ridge_lambda: f64,
    pub scaling: LambdaScaling,
    pub dropped_columns: Vec<String>,
}

/// Fits ridge regression on standardised columns with an unpenalised
/// intercept equal to the training mean of the target.
pub fn ridge_fit(x: &DesignMatrix, lambda: f64, scaling: LambdaScaling) -> Result<RegressionModel, ModelError> {
    let n = x.n_rows();
    let k = x.n_cols();
    if n < 2 {
        return Err(ModelError::TooFewRows { needed: 2, got: n });
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(ModelError::InvalidConfig(format!("ridge lambda must be positive, got {lambda}")));
    }

    let mut means = vec![0.0; k];
    let mut stds = vec![1.0; k];
    let mut kept = Vec::with_capacity(k);
    let mut dropped = Vec::new();
    for c in 0..k {
        let col = x.features.column(c);
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        let scale = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        means[c] = mean;
        if std > 1e-12 * scale {
            stds[c] = std;
            kept.push(c);
        } else {
            dropped.push(x.columns[c].clone());
        }
    }
    if !dropped.is_empty() {
        log::warn!("dropping {} zero-variance column(s): {}", dropped.len(), dropped.join(", "));
    }
    if kept.is_empty() {
        return Err(ModelError::DegenerateDesign);
    }

    let y_mean = x.target.iter().sum::<f64>() / n as f64;
    let z = DMatrix::from_fn(n, kept.len(), |r, j| {
        let c = kept[j];
        (x.features[(r, c)] - means[c]) / stds[c]
    });
    let y = DVector::from_iterator(n, x.target.iter().map(|t| t - y_mean));
    let mut gram = z.tr_mul(&z);
    let penalty = scaling.effective(lambda, n);
    for i in 0..kept.len() {
        gram[(i, i)] += penalty;
    }
    let rhs = z.tr_mul(&y);
    let w = spd_solve(gram, &rhs).ok_or(ModelError::SingularSystem)?;

    let mut weights = vec![0.0; k];
    for (j, &c) in kept.iter().enumerate() {
        weights[c] = w[j];
    }
    Ok(RegressionModel {
        columns: x.columns.clone(),
        column_means: means,
        column_stds: stds,
        weights,
        intercept: y_mean,
        ridge_lambda: lambda,
        scaling,
        dropped_columns: dropped,
    })
}

impl RegressionModel {
    /// `intercept + Σ w_i (f_i - μ_i) / σ_i`. `columns` must equal the
    /// training columns, in order.
    pub fn predict(&self, columns: &[String], features: &[f64]) -> Result<f64, ModelError> {
        if columns != self.columns.as_slice() {
            return Err(ModelError::FeatureMismatch(format!(
                "model has {} columns, input has {}",
                self.columns.len(),
                columns.len()
            )));
        }
        if features.len() != columns.len() {
            return Err(ModelError::LengthMismatch(features.len(), columns.len()));
        }
        Ok(self.predict_unchecked(features.iter().copied()))
    }

    fn predict_unchecked(&self, features: impl Iterator<Item = f64>) -> f64 {
        let mut out = self.intercept;
        for (c, f) in features.enumerate() {
            if self.weights[c] != 0.0 {
                out += self.weights[c] * (f - self.column_means[c]) / self.column_stds[c];
            }
        }
        out
    }

    pub fn predict_design(&self, x: &DesignMatrix) -> Result<Vec<f64>, ModelError> {
        if x.columns != self.columns {
            return Err(ModelError::FeatureMismatch("design columns differ from training columns".into()));
        }
        Ok((0..x.n_rows())
            .map(|r| self.predict_unchecked(x.features.row(r).iter().copied()))
            .collect())
    }

    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

/// Free-function form of [`RegressionModel::predict`].
pub fn ridge_predict(model: &RegressionModel, columns: &[String], features: &[f64]) -> Result<f64, ModelError> {
    model.predict(columns, features)
}
