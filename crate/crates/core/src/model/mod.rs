//! VAT estimation: covariates, ridge regression, metrics, repeated random-split
//! cross-validation, estimate fusion and BMI-stratified evaluation.

mod cv;
mod design;
mod metrics;
mod ridge;

pub use cv::{cross_validate, CvConfig, CvResult, EvalReport, FoldDrop, MeanStd, MIN_CV_ROWS};
pub use design::{covariate_names, covariate_vector, DesignMatrix, COVARIATE_NAMES};
pub use metrics::{
    average_ranks, category_spearman, fuse_estimates, metrics, pearson, spearman, stratified_eval, BmiCategory,
    CategoryCorrelation, Metrics, StratifiedReport,
};
pub use ridge::{ridge_fit, ridge_predict, LambdaScaling, RegressionModel, DEFAULT_LAMBDA};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("missing covariate {field} for subject {subject_id}")]
    MissingCovariate { subject_id: String, field: &'static str },
    #[error("invalid design matrix: {0}")]
    InvalidDesign(String),
    #[error("every column has zero variance on the training rows")]
    DegenerateDesign,
    #[error("ridge system is not positive definite")]
    SingularSystem,
    #[error("feature columns do not match the model: {0}")]
    FeatureMismatch(String),
    #[error("input is constant")]
    ConstantInput,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("invalid fusion weights: {0}")]
    WeightMismatch(String),
    #[error("category has {0} members, need at least 3")]
    CategoryTooSmall(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
