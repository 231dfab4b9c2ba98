use std::collections::HashSet;

use nalgebra::DMatrix;

use super::ModelError;
use crate::ingest::{Gender, SubjectRecord};

pub const COVARIATE_NAMES: [&str; 6] = [
    "cov_age",
    "cov_gender",
    "cov_height_cm",
    "cov_weight_kg",
    "cov_bmi",
    "cov_waist_cm",
];

pub fn covariate_names() -> Vec<String> {
    COVARIATE_NAMES.iter().map(|s| s.to_string()).collect()
}

/// Age, gender (male 0, female 1), height, weight, BMI and waist.
pub fn covariate_vector(subject: &SubjectRecord) -> Result<[f64; 6], ModelError> {
    let need = |v: Option<f64>, field: &'static str| {
        v.ok_or_else(|| ModelError::MissingCovariate {
            subject_id: subject.subject_id.clone(),
            field,
        })
    };
    let gender = match subject.gender {
        Some(Gender::Male) => 0.0,
        Some(Gender::Female) => 1.0,
        None => {
            return Err(ModelError::MissingCovariate {
                subject_id: subject.subject_id.clone(),
                field: "gender",
            })
        }
    };
    Ok([
        need(subject.age_years, "age")?,
        gender,
        need(subject.height_cm, "height_cm")?,
        need(subject.weight_kg, "weight_kg")?,
        need(subject.bmi_kg_m2, "bmi")?,
        need(subject.waist_cm, "waist_cm")?,
    ])
}

/// Rows are subjects, columns named features, plus the VAT target.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    pub row_ids: Vec<String>,
    pub columns: Vec<String>,
    pub features: DMatrix<f64>,
    pub target: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(
        row_ids: Vec<String>,
        columns: Vec<String>,
        rows: Vec<Vec<f64>>,
        target: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let n = rows.len();
        let k = columns.len();
        if row_ids.len() != n || target.len() != n {
            return Err(ModelError::InvalidDesign(format!(
                "{} ids, {} rows, {} targets",
                row_ids.len(),
                n,
                target.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = columns.iter().find(|c| !seen.insert(c.as_str())) {
            return Err(ModelError::InvalidDesign(format!("duplicate column {dup}")));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(ModelError::InvalidDesign(format!(
                    "row {i} has {} values, expected {k}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) || !target[i].is_finite() {
                return Err(ModelError::InvalidDesign(format!("row {i} has a missing or non-finite value")));
            }
        }
        let features = DMatrix::from_fn(n, k, |r, c| rows[r][c]);
        Ok(DesignMatrix {
            row_ids,
            columns,
            features,
            target,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.features.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.features.row(i).iter().copied().collect()
    }

    /// The subset of rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> DesignMatrix {
        DesignMatrix {
            row_ids: indices.iter().map(|&i| self.row_ids[i].clone()).collect(),
            columns: self.columns.clone(),
            features: self.features.select_rows(indices),
            target: indices.iter().map(|&i| self.target[i]).collect(),
        }
    }
}
