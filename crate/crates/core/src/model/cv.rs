use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{metrics, Metrics, StratifiedReport};
use super::ridge::{ridge_fit, LambdaScaling, DEFAULT_LAMBDA};
use super::{DesignMatrix, ModelError};
use crate::Execution;

pub const MIN_CV_ROWS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub n_repeats: usize,
    pub train_frac: f64,
    pub seed: u64,
    pub lambda: f64,
    pub scaling: LambdaScaling,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            n_repeats: 30,
            train_frac: 0.8,
            seed: 0,
            lambda: DEFAULT_LAMBDA,
            scaling: LambdaScaling::N,
        }
    }
}

impl CvConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_repeats == 0 {
            return Err(ModelError::InvalidConfig("n_repeats must be at least 1".into()));
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(ModelError::InvalidConfig(format!(
                "train_frac must lie in (0, 1), got {}",
                self.train_frac
            )));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(ModelError::InvalidConfig(format!("lambda must be positive, got {}", self.lambda)));
        }
        Ok(())
    }

    /// Training rows per split; both sides keep at least two rows.
    pub fn n_train(&self, n_rows: usize) -> usize {
        ((n_rows as f64 * self.train_frac).round() as usize).clamp(2, n_rows - 2)
    }
}

/// Mean and population standard deviation across folds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> MeanStd {
        let (mean, std) = crate::sigproc::mean_std(values);
        MeanStd { mean, std }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldDrop {
    pub repeat: usize,
    pub columns: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_rows: usize,
    pub n_columns: usize,
    pub n_train: usize,
    pub n_repeats: usize,
    pub train_frac: f64,
    pub seed: u64,
    pub lambda: f64,
    pub lambda_scaling: LambdaScaling,
    pub spearman_r: MeanStd,
    pub pearson_r: MeanStd,
    pub mae_g: MeanStd,
    pub rmse_g: MeanStd,
    pub folds: Vec<Metrics>,
    /// BMI-stratified Spearman of the out-of-fold predictions, when BMI is known.
    pub stratified: Option<StratifiedReport>,
    /// Zero-variance training columns dropped per repeat; repeats that
    /// dropped nothing are omitted.
    pub dropped_columns: Vec<FoldDrop>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvResult {
    pub report: EvalReport,
    /// Mean test-fold prediction per row; `None` for rows never drawn into a
    /// test fold.
    pub predictions: Vec<Option<f64>>,
}

struct Fold {
    metrics: Metrics,
    test: Vec<usize>,
    predictions: Vec<f64>,
    dropped: Vec<String>,
}

fn split(n: usize, n_train: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = order.split_off(n_train);
    (order, test)
}

/// Repeated random-split cross-validation of ridge regression. Repeat `r`
/// shuffles the rows with seed `seed + r`, fits on the first
/// `train_frac` share and evaluates on the rest.
pub fn cross_validate(x: &DesignMatrix, cfg: &CvConfig, exec: Execution) -> Result<CvResult, ModelError> {
    cfg.validate()?;
    let n = x.n_rows();
    if n < MIN_CV_ROWS {
        return Err(ModelError::TooFewRows { needed: MIN_CV_ROWS, got: n });
    }
    let n_train = cfg.n_train(n);

    let folds = exec.map_range(cfg.n_repeats, |r| -> Result<Fold, ModelError> {
        let (train, test) = split(n, n_train, cfg.seed.wrapping_add(r as u64));
        let model = ridge_fit(&x.select_rows(&train), cfg.lambda, cfg.scaling)?;
        let test_x = x.select_rows(&test);
        let predictions = model.predict_design(&test_x)?;
        Ok(Fold {
            metrics: metrics(&test_x.target, &predictions)?,
            test,
            predictions,
            dropped: model.dropped_columns,
        })
    });
    let folds = folds.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut sums = vec![0.0; n];
    let mut counts = vec![0usize; n];
    for fold in &folds {
        for (&i, &p) in fold.test.iter().zip(&fold.predictions) {
            sums[i] += p;
            counts[i] += 1;
        }
    }
    let predictions = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
        .collect();

    let column = |f: fn(&Metrics) -> f64| MeanStd::of(&folds.iter().map(|fold| f(&fold.metrics)).collect::<Vec<_>>());
    let report = EvalReport {
        n_rows: n,
        n_columns: x.n_cols(),
        n_train,
        n_repeats: cfg.n_repeats,
        train_frac: cfg.train_frac,
        seed: cfg.seed,
        lambda: cfg.lambda,
        lambda_scaling: cfg.scaling,
        spearman_r: column(|m| m.spearman),
        pearson_r: column(|m| m.pearson),
        mae_g: column(|m| m.mae),
        rmse_g: column(|m| m.rmse),
        folds: folds.iter().map(|f| f.metrics).collect(),
        stratified: None,
        dropped_columns: folds
            .iter()
            .enumerate()
            .filter(|(_, f)| !f.dropped.is_empty())
            .map(|(repeat, f)| FoldDrop {
                repeat,
                columns: f.dropped.clone(),
            })
            .collect(),
    };
    Ok(CvResult { report, predictions })
}
