use serde::{Deserialize, Serialize};

use super::ModelError;

fn check_pair(a: &[f64], b: &[f64]) -> Result<(), ModelError> {
    if a.len() != b.len() {
        return Err(ModelError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(ModelError::TooFewRows { needed: 2, got: a.len() });
    }
    Ok(())
}

/// Pearson correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64, ModelError> {
    check_pair(a, b)?;
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(ModelError::ConstantInput);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64, ModelError> {
    check_pair(a, b)?;
    pearson(&average_ranks(a), &average_ranks(b))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub spearman: f64,
    pub pearson: f64,
    pub mae: f64,
    pub rmse: f64,
}

pub fn metrics(y_true: &[f64], y_pred: &[f64]) -> Result<Metrics, ModelError> {
    check_pair(y_true, y_pred)?;
    let n = y_true.len() as f64;
    let mut abs = 0.0;
    let mut sq = 0.0;
    for (t, p) in y_true.iter().zip(y_pred) {
        let e = p - t;
        abs += e.abs();
        sq += e * e;
    }
    Ok(Metrics {
        spearman: spearman(y_true, y_pred)?,
        pearson: pearson(y_true, y_pred)?,
        mae: abs / n,
        rmse: (sq / n).sqrt(),
    })
}

/// Pointwise weighted average of several per-subject estimate vectors.
pub fn fuse_estimates(estimates: &[&[f64]], weights: &[f64]) -> Result<Vec<f64>, ModelError> {
    if estimates.is_empty() {
        return Err(ModelError::WeightMismatch("no estimates to fuse".into()));
    }
    if estimates.len() != weights.len() {
        return Err(ModelError::WeightMismatch(format!(
            "{} estimates but {} weights",
            estimates.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(ModelError::WeightMismatch("weights must be finite".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(ModelError::WeightMismatch(format!("weights sum to {total}, expected 1")));
    }
    let n = estimates[0].len();
    if let Some(bad) = estimates.iter().find(|e| e.len() != n) {
        return Err(ModelError::LengthMismatch(n, bad.len()));
    }
    Ok((0..n)
        .map(|i| estimates.iter().zip(weights).map(|(e, w)| w * e[i]).sum())
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BmiCategory {
    Normal,
    Overweight,
    Obese,
}

impl BmiCategory {
    pub fn of(bmi: f64) -> BmiCategory {
        if bmi < 25.0 {
            BmiCategory::Normal
        } else if bmi < 30.0 {
            BmiCategory::Overweight
        } else {
            BmiCategory::Obese
        }
    }
}

/// Spearman within one stratum. `spearman` is `None` when the stratum has
/// fewer than three members or a constant input.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryCorrelation {
    pub n: usize,
    pub spearman: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratifiedReport {
    pub all: CategoryCorrelation,
    pub normal: CategoryCorrelation,
    pub overweight: CategoryCorrelation,
    pub obese: CategoryCorrelation,
    pub overweight_or_obese: CategoryCorrelation,
}

/// Spearman over the rows selected by `keep`.
pub fn category_spearman(
    y_true: &[f64],
    y_pred: &[f64],
    keep: impl Fn(usize) -> bool,
) -> Result<f64, ModelError> {
    check_pair(y_true, y_pred)?;
    let (t, p): (Vec<f64>, Vec<f64>) = (0..y_true.len())
        .filter(|&i| keep(i))
        .map(|i| (y_true[i], y_pred[i]))
        .unzip();
    if t.len() < 3 {
        return Err(ModelError::CategoryTooSmall(t.len()));
    }
    spearman(&t, &p)
}

pub fn stratified_eval(y_true: &[f64], y_pred: &[f64], bmi: &[f64]) -> Result<StratifiedReport, ModelError> {
    check_pair(y_true, y_pred)?;
    if bmi.len() != y_true.len() {
        return Err(ModelError::LengthMismatch(y_true.len(), bmi.len()));
    }
    let cats: Vec<BmiCategory> = bmi.iter().map(|&b| BmiCategory::of(b)).collect();
    let stratum = |keep: &dyn Fn(BmiCategory) -> bool| -> Result<CategoryCorrelation, ModelError> {
        let n = cats.iter().filter(|&&c| keep(c)).count();
        match category_spearman(y_true, y_pred, |i| keep(cats[i])) {
            Ok(r) => Ok(CategoryCorrelation { n, spearman: Some(r) }),
            Err(ModelError::CategoryTooSmall(_)) | Err(ModelError::ConstantInput) => {
                Ok(CategoryCorrelation { n, spearman: None })
            }
            Err(e) => Err(e),
        }
    };
    Ok(StratifiedReport {
        all: stratum(&|_| true)?,
        normal: stratum(&|c| c == BmiCategory::Normal)?,
        overweight: stratum(&|c| c == BmiCategory::Overweight)?,
        obese: stratum(&|c| c == BmiCategory::Obese)?,
        overweight_or_obese: stratum(&|c| c != BmiCategory::Normal)?,
    })
}
