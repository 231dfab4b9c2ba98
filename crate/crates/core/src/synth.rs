//! Synthetic accelerometry with known ground truth, and brute-force oracles
//! for the optimised computations.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ingest::{Gender, SubjectRecord, TriaxialRecording};
use crate::DEFAULT_SAMPLE_RATE_HZ;

/// Walking: a sinusoidal arm swing on y at the step period, half-amplitude
/// second harmonics on x and z, a 1 g gravity offset and white noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkSpec {
    pub duration_s: f64,
    pub step_period_s: f64,
    pub swing_amplitude_g: f64,
    pub noise_std_g: f64,
    pub gravity_axis: [f64; 3],
    pub sample_rate_hz: f64,
}

impl Default for WalkSpec {
    fn default() -> Self {
        WalkSpec {
            duration_s: 600.0,
            step_period_s: 0.79,
            swing_amplitude_g: 0.4,
            noise_std_g: 0.02,
            gravity_axis: [0.0, 0.0, 1.0],
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Movement {
    pub onset_s: f64,
    pub duration_s: f64,
    pub amplitude_g: f64,
}

/// A quiet recording with scheduled movement bursts. During a burst the
/// magnitude standard deviation is close to `amplitude_g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SleepSpec {
    pub duration_s: f64,
    pub movements: Vec<Movement>,
    pub baseline_noise_g: f64,
    pub gravity_axis: [f64; 3],
    pub sample_rate_hz: f64,
}

impl Default for SleepSpec {
    fn default() -> Self {
        SleepSpec {
            duration_s: 3.0 * 3600.0,
            movements: Vec::new(),
            baseline_noise_g: 0.002,
            gravity_axis: [0.0, 0.0, 1.0],
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
        }
    }
}

/// Burst carrier frequency.
pub const MOVEMENT_FREQ_HZ: f64 = 1.3;

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    assert!(n > 0.0, "gravity axis must be non-zero");
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Some unit vector orthogonal to `g`.
fn perpendicular(g: [f64; 3]) -> [f64; 3] {
    let helper = if g[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = helper[0] * g[0] + helper[1] * g[1] + helper[2] * g[2];
    unit([helper[0] - d * g[0], helper[1] - d * g[1], helper[2] - d * g[2]])
}

fn noise(std: f64) -> Normal<f64> {
    Normal::new(0.0, std.max(0.0)).expect("finite noise std")
}

fn n_samples(duration_s: f64, fs: f64) -> usize {
    (duration_s * fs).round() as usize
}

pub fn gen_walk(spec: &WalkSpec, seed: u64) -> TriaxialRecording {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fs = spec.sample_rate_hz;
    let n = n_samples(spec.duration_s, fs);
    let g = unit(spec.gravity_axis);
    let a = spec.swing_amplitude_g;
    let omega = 2.0 * PI / spec.step_period_s;
    let phase = rng.random_range(0.0..2.0 * PI);
    let dist = noise(spec.noise_std_g);
    let (mut x, mut y, mut z) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let t = i as f64 / fs;
        let th = omega * t + phase;
        x.push(g[0] + 0.5 * a * (2.0 * th).sin() + dist.sample(&mut rng));
        y.push(g[1] + a * th.sin() + dist.sample(&mut rng));
        z.push(g[2] - 0.5 * a * (2.0 * th).cos() + dist.sample(&mut rng));
    }
    TriaxialRecording::new("synthetic", fs, 0.0, x, y, z).expect("generated walk is valid")
}

pub fn gen_sleep(spec: &SleepSpec, seed: u64) -> TriaxialRecording {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fs = spec.sample_rate_hz;
    let n = n_samples(spec.duration_s, fs);
    let g = unit(spec.gravity_axis);
    let p = perpendicular(g);
    let dist = noise(spec.baseline_noise_g);
    let mut axes = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        for d in 0..3 {
            axes[d][i] = g[d] + dist.sample(&mut rng);
        }
    }
    for m in &spec.movements {
        let phase = rng.random_range(0.0..2.0 * PI);
        let start = n_samples(m.onset_s, fs).min(n);
        let end = n_samples(m.onset_s + m.duration_s, fs).min(n);
        for i in start..end {
            let t = i as f64 / fs;
            let along = m.amplitude_g * 2f64.sqrt() * (2.0 * PI * MOVEMENT_FREQ_HZ * t + phase).sin();
            let across = 0.3 * m.amplitude_g * (2.0 * PI * 0.7 * t + 2.0 * phase).sin();
            for d in 0..3 {
                axes[d][i] += along * g[d] + across * p[d];
            }
        }
    }
    let [x, y, z] = axes;
    TriaxialRecording::new("synthetic", fs, 0.0, x, y, z).expect("generated sleep is valid")
}

/// Joins recordings end to end under one subject id. All parts must share a
/// sample rate.
pub fn concat_recordings(subject_id: &str, parts: &[TriaxialRecording]) -> TriaxialRecording {
    assert!(!parts.is_empty());
    let fs = parts[0].sample_rate_hz;
    assert!(parts.iter().all(|p| p.sample_rate_hz == fs), "sample rates differ");
    let (mut x, mut y, mut z) = (Vec::new(), Vec::new(), Vec::new());
    for p in parts {
        x.extend_from_slice(&p.x);
        y.extend_from_slice(&p.y);
        z.extend_from_slice(&p.z);
    }
    TriaxialRecording::new(subject_id, fs, parts[0].start_epoch_s, x, y, z).expect("concatenation is valid")
}

/// Rounds every sample to a multiple of `step` g, as a device ADC would.
pub fn quantize(rec: &mut TriaxialRecording, step: f64) {
    for v in rec.x.iter_mut().chain(rec.y.iter_mut()).chain(rec.z.iter_mut()) {
        *v = (*v / step).round() * step;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub n_subjects: usize,
    pub walk_bouts: usize,
    pub walk_bout_s: f64,
    pub sleep_s: f64,
    pub sample_rate_hz: f64,
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec {
            n_subjects: 5,
            walk_bouts: 4,
            walk_bout_s: 90.0,
            sleep_s: 2.0 * 3600.0 + 600.0,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkBoutTruth {
    pub onset_s: f64,
    pub duration_s: f64,
    pub step_period_s: f64,
    pub swing_amplitude_g: f64,
}

/// Ground truth of one synthetic subject, written as the JSON sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectTruth {
    pub subject_id: String,
    pub walk_bouts: Vec<WalkBoutTruth>,
    pub sleep_movements: Vec<Movement>,
    pub vat_g: f64,
}

#[derive(Clone, Debug)]
pub struct SyntheticSubject {
    pub record: SubjectRecord,
    pub walk: TriaxialRecording,
    pub sleep: TriaxialRecording,
    pub truth: SubjectTruth,
}

/// Quiet-gap length between walking bouts.
const WALK_GAP_S: f64 = 60.0;

/// A cohort whose VAT depends on covariates and on walking cadence and
/// vigour, so every feature block carries some signal.
pub fn gen_cohort(spec: &CohortSpec, seed: u64) -> Vec<SyntheticSubject> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fs = spec.sample_rate_hz;
    (0..spec.n_subjects)
        .map(|i| {
            let subject_id = format!("S{:03}", i + 1);
            let sub_seed: u64 = rng.random();
            let mut srng = ChaCha8Rng::seed_from_u64(sub_seed);

            let gender = if srng.random_bool(0.5) { Gender::Male } else { Gender::Female };
            let age = srng.random_range(20.0..60.0f64).round();
            let height = if gender == Gender::Male {
                srng.random_range(165.0..190.0f64)
            } else {
                srng.random_range(152.0..175.0f64)
            };
            let bmi = srng.random_range(19.0..38.0f64);
            let weight = bmi * (height / 100.0).powi(2);
            let waist = 40.0 + 2.0 * bmi + srng.random_range(-4.0..4.0f64);

            let period = srng.random_range(0.45..0.85f64);
            let amplitude = srng.random_range(0.3..0.6f64);
            let quiet = SleepSpec {
                duration_s: WALK_GAP_S,
                sample_rate_hz: fs,
                ..SleepSpec::default()
            };
            let mut parts = Vec::new();
            let mut bouts = Vec::new();
            let mut t = 0.0;
            for b in 0..spec.walk_bouts {
                parts.push(gen_sleep(&quiet, srng.random()));
                t += WALK_GAP_S;
                let p = period * srng.random_range(0.95..1.05);
                let a = amplitude * srng.random_range(0.7..1.3);
                let walk = WalkSpec {
                    duration_s: spec.walk_bout_s,
                    step_period_s: p,
                    swing_amplitude_g: a,
                    sample_rate_hz: fs,
                    gravity_axis: if b % 2 == 0 { [0.0, 0.2, 1.0] } else { [0.1, 0.0, 1.0] },
                    ..WalkSpec::default()
                };
                parts.push(gen_walk(&walk, srng.random()));
                bouts.push(WalkBoutTruth {
                    onset_s: t,
                    duration_s: spec.walk_bout_s,
                    step_period_s: p,
                    swing_amplitude_g: a,
                });
                t += spec.walk_bout_s;
            }
            parts.push(gen_sleep(&quiet, srng.random()));
            let mut walk = concat_recordings(&subject_id, &parts);

            let mut movements = Vec::new();
            let mut onset = 300.0;
            while onset + 400.0 < spec.sleep_s {
                let duration = srng.random_range(12.0..90.0f64).round();
                movements.push(Movement {
                    onset_s: onset,
                    duration_s: duration,
                    amplitude_g: srng.random_range(0.07..0.13),
                });
                onset += duration + srng.random_range(180.0..1500.0f64).round();
            }
            let sleep_spec = SleepSpec {
                duration_s: spec.sleep_s,
                movements: movements.clone(),
                sample_rate_hz: fs,
                ..SleepSpec::default()
            };
            let mut sleep = gen_sleep(&sleep_spec, srng.random());
            sleep.subject_id = subject_id.clone();
            sleep.start_epoch_s = 86_400.0;

            quantize(&mut walk, 1e-6);
            quantize(&mut sleep, 1e-6);

            let vat = (100.0
                + 12.0 * (waist - 75.0)
                + 5.0 * (age - 20.0)
                + 800.0 * (amplitude - 0.3)
                - 600.0 * (period - 0.65)
                + if gender == Gender::Male { 80.0 } else { 0.0 }
                + 40.0 * srng.sample::<f64, _>(rand_distr::StandardNormal))
            .max(20.0);

            let round1 = |v: f64| (v * 10.0).round() / 10.0;
            let record = SubjectRecord {
                subject_id: subject_id.clone(),
                age_years: Some(age),
                gender: Some(gender),
                height_cm: Some(round1(height)),
                weight_kg: Some(round1(weight)),
                bmi_kg_m2: Some(round1(bmi)),
                waist_cm: Some(round1(waist)),
                vat_g: Some(round1(vat)),
            };
            SyntheticSubject {
                record,
                walk,
                sleep,
                truth: SubjectTruth {
                    subject_id,
                    walk_bouts: bouts,
                    sleep_movements: movements,
                    vat_g: round1(vat),
                },
            }
        })
        .collect()
}

/// Direct, unoptimised reference implementations.
pub mod oracle {
    use thiserror::Error;

    #[derive(Debug, Error, Clone, PartialEq)]
    pub enum OracleError {
        #[error("oracle system is singular")]
        Singular,
        #[error("oracle input is empty or ragged")]
        BadInput,
    }

    fn population_std(values: &[f64]) -> f64 {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
    }

    /// Population std over the window `[i - w/2, i - w/2 + w)`, clipped to the
    /// series, recomputed from scratch at every index.
    pub fn rolling_std_direct(values: &[f64], w: usize) -> Vec<f64> {
        let n = values.len() as isize;
        (0..n)
            .map(|i| {
                let lo = (i - (w / 2) as isize).max(0);
                let hi = (i - (w / 2) as isize + w as isize).min(n);
                population_std(&values[lo as usize..hi as usize])
            })
            .collect()
    }

    fn euclid(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
    }

    /// Trimmed mean pairwise distance by an all-ordered-pairs loop. Points
    /// farther than `trim_sigma * sqrt(mean r^2 / D)` from the centroid are
    /// dropped first; an infinite `trim_sigma` keeps everything. `None` when
    /// no point survives.
    pub fn oracle_mad(points: &[Vec<f64>], trim_sigma: f64) -> Option<f64> {
        let n = points.len();
        let d = points.first()?.len();
        let centroid: Vec<f64> = (0..d).map(|k| points.iter().map(|p| p[k]).sum::<f64>() / n as f64).collect();
        let r2: f64 = points.iter().map(|p| euclid(p, &centroid).powi(2)).sum::<f64>() / n as f64;
        let sigma = (r2 / d as f64).sqrt();
        let kept: Vec<&Vec<f64>> = points
            .iter()
            .filter(|p| trim_sigma.is_infinite() || euclid(p, &centroid) <= trim_sigma * sigma)
            .collect();
        match kept.len() {
            0 => None,
            1 => Some(0.0),
            k => {
                let mut total = 0.0;
                for i in 0..k {
                    for j in 0..k {
                        if i != j {
                            total += euclid(kept[i], kept[j]);
                        }
                    }
                }
                Some(total / (k * (k - 1)) as f64)
            }
        }
    }

    pub fn oracle_pearson(a: &[f64], b: &[f64]) -> Option<f64> {
        if a.len() != b.len() || a.len() < 2 {
            return None;
        }
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        if va == 0.0 || vb == 0.0 {
            return None;
        }
        Some(cov / (va * vb).sqrt())
    }

    /// Rank of each value: one plus the number of strictly smaller values,
    /// plus half the number of other equal values.
    pub fn rank_table(values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .map(|v| {
                let below = values.iter().filter(|w| *w < v).count() as f64;
                let equal = values.iter().filter(|w| *w == v).count() as f64;
                1.0 + below + (equal - 1.0) / 2.0
            })
            .collect()
    }

    pub fn oracle_spearman(a: &[f64], b: &[f64]) -> Option<f64> {
        oracle_pearson(&rank_table(a), &rank_table(b))
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn invert(m: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, OracleError> {
        let n = m.len();
        if m.iter().any(|r| r.len() != n) {
            return Err(OracleError::BadInput);
        }
        let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut aug: Vec<Vec<f64>> = m
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut row = r.clone();
                row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
                row
            })
            .collect();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs()))
                .unwrap();
            if aug[pivot][col].abs() <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
                return Err(OracleError::Singular);
            }
            aug.swap(col, pivot);
            let p = aug[col][col];
            for v in aug[col].iter_mut() {
                *v /= p;
            }
            for r in 0..n {
                if r != col {
                    let f = aug[r][col];
                    if f != 0.0 {
                        for c in 0..2 * n {
                            aug[r][c] -= f * aug[col][c];
                        }
                    }
                }
            }
        }
        Ok(aug.into_iter().map(|r| r[n..].to_vec()).collect())
    }

    /// Ridge on standardised columns through an explicit matrix inverse.
    /// Returns (weights in standardised units, intercept = mean(y)). With
    /// `scale_by_n` the penalty is `lambda * n`. Zero-variance columns get
    /// weight 0.
    pub fn oracle_ridge(
        rows: &[Vec<f64>],
        y: &[f64],
        lambda: f64,
        scale_by_n: bool,
    ) -> Result<(Vec<f64>, f64), OracleError> {
        let n = rows.len();
        if n == 0 || y.len() != n {
            return Err(OracleError::BadInput);
        }
        let k = rows[0].len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(OracleError::BadInput);
        }
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let mut keep = Vec::new();
        let mut z_cols: Vec<Vec<f64>> = Vec::new();
        for c in 0..k {
            let col: Vec<f64> = rows.iter().map(|r| r[c]).collect();
            let sd = population_std(&col);
            let scale = col.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if sd > 1e-12 * scale {
                let mean = col.iter().sum::<f64>() / n as f64;
                z_cols.push(col.iter().map(|v| (v - mean) / sd).collect());
                keep.push(c);
            }
        }
        if keep.is_empty() {
            return Err(OracleError::Singular);
        }
        let m = keep.len();
        let penalty = if scale_by_n { lambda * n as f64 } else { lambda };
        let gram: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let dot: f64 = z_cols[i].iter().zip(&z_cols[j]).map(|(a, b)| a * b).sum();
                        dot + if i == j { penalty } else { 0.0 }
                    })
                    .collect()
            })
            .collect();
        let inv = invert(&gram)?;
        let zty: Vec<f64> = z_cols
            .iter()
            .map(|col| col.iter().zip(y).map(|(a, t)| a * (t - y_mean)).sum())
            .collect();
        let mut weights = vec![0.0; k];
        for (i, &c) in keep.iter().enumerate() {
            weights[c] = inv[i].iter().zip(&zty).map(|(a, b)| a * b).sum();
        }
        Ok((weights, y_mean))
    }
}
