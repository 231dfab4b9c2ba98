//! Signal primitives shared by gait and sleep analysis.

use nalgebra::Matrix3;
use thiserror::Error;

use crate::frame::{Axis, Frame, FrameView};
use crate::ingest::TriaxialRecording;
use crate::linalg::principal_eigenpair_3x3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("window of {window_s} s at {sample_rate_hz} Hz spans fewer than 2 samples")]
    WindowTooShort { window_s: f64, sample_rate_hz: f64 },
    #[error("frame has zero covariance")]
    DegenerateFrame,
    #[error("series of {len} samples is too short for lag {max_lag}")]
    SeriesTooShort { len: usize, max_lag: usize },
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("axis {0} has zero variance")]
    ZeroVarianceAxis(Axis),
    #[error("frame needs at least {needed} samples, got {len}")]
    FrameTooShort { needed: usize, len: usize },
}

/// Acceleration magnitude per sample, in g.
#[derive(Clone, Debug, PartialEq)]
pub struct MagnitudeSeries {
    pub values: Vec<f64>,
    pub sample_rate_hz: f64,
}

/// Rolling standard deviation of the magnitude over a centred window.
#[derive(Clone, Debug, PartialEq)]
pub struct MsdSeries {
    pub values: Vec<f64>,
    pub sample_rate_hz: f64,
    pub window_s: f64,
}

impl MsdSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcfPeak {
    pub lag_samples: usize,
    pub lag_s: f64,
    pub height: f64,
    pub prominence: f64,
}

/// Window used for the MSD activity signal.
pub const MSD_WINDOW_S: f64 = 10.0;

#[inline]
pub fn norm3(x: f64, y: f64, z: f64) -> f64 {
    (x * x + y * y + z * z).sqrt()
}

pub fn magnitude(recording: &TriaxialRecording) -> MagnitudeSeries {
    MagnitudeSeries {
        values: magnitude_of(&recording.view()),
        sample_rate_hz: recording.sample_rate_hz,
    }
}

pub fn magnitude_of(frame: &FrameView<'_>) -> Vec<f64> {
    frame
        .x
        .iter()
        .zip(frame.y)
        .zip(frame.z)
        .map(|((&x, &y), &z)| norm3(x, y, z))
        .collect()
}

/// Mean and population standard deviation, two-pass.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Population standard deviation of the magnitude over a window centred on
/// each sample, truncated at the recording edges.
///
/// For a window of `w` samples the window at index `i` covers
/// `[i - w/2, i - w/2 + w)`. Runs in O(n): sums are updated incrementally
/// relative to a local reference value and recomputed exactly every `w`
/// steps to keep rounding drift bounded on long recordings.
pub fn rolling_msd(mag: &MagnitudeSeries, window_s: f64) -> Result<MsdSeries, SignalError> {
    let w = (window_s * mag.sample_rate_hz).round();
    if !(w >= 2.0) {
        return Err(SignalError::WindowTooShort {
            window_s,
            sample_rate_hz: mag.sample_rate_hz,
        });
    }
    let w = w as usize;
    let m = &mag.values;
    let n = m.len();
    let half = w / 2;
    let bounds = |i: usize| (i.saturating_sub(half), (i + w - half).min(n));

    let mut out = Vec::with_capacity(n);
    let (mut lo, mut hi) = (0usize, 0usize);
    let (mut reference, mut s1, mut s2) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        let (start, end) = bounds(i);
        if i % w == 0 {
            reference = m[i];
            s1 = 0.0;
            s2 = 0.0;
            for &v in &m[start..end] {
                let d = v - reference;
                s1 += d;
                s2 += d * d;
            }
        } else {
            for &v in &m[hi..end] {
                let d = v - reference;
                s1 += d;
                s2 += d * d;
            }
            for &v in &m[lo..start] {
                let d = v - reference;
                s1 -= d;
                s2 -= d * d;
            }
        }
        lo = start;
        hi = end;
        let c = (end - start) as f64;
        let mean = s1 / c;
        let var = (s2 / c - mean * mean).max(0.0);
        out.push(var.sqrt());
    }
    Ok(MsdSeries {
        values: out,
        sample_rate_hz: mag.sample_rate_hz,
        window_s,
    })
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Mean-centred projection onto the leading eigenvector of the 3x3 sample
/// covariance. The sign makes the largest-magnitude sample positive.
pub fn first_principal_component(frame: &FrameView<'_>) -> Result<Vec<f64>, SignalError> {
    let n = frame.len();
    if n < 2 {
        return Err(SignalError::FrameTooShort { needed: 2, len: n });
    }
    let means = Axis::ALL.map(|a| mean_std(frame.axis(a)).0);
    let mut cov = Matrix3::zeros();
    for t in 0..n {
        let d = [frame.x[t] - means[0], frame.y[t] - means[1], frame.z[t] - means[2]];
        for r in 0..3 {
            for c in r..3 {
                cov[(r, c)] += d[r] * d[c];
            }
        }
    }
    for r in 0..3 {
        for c in r..3 {
            cov[(r, c)] /= n as f64;
            cov[(c, r)] = cov[(r, c)];
        }
    }
    let scale = max_abs(frame.x).max(max_abs(frame.y)).max(max_abs(frame.z));
    let (lambda, v) = principal_eigenpair_3x3(cov);
    if !(lambda > (1e-10 * scale).powi(2)) {
        return Err(SignalError::DegenerateFrame);
    }
    let mut proj: Vec<f64> = (0..n)
        .map(|t| {
            (frame.x[t] - means[0]) * v[0] + (frame.y[t] - means[1]) * v[1] + (frame.z[t] - means[2]) * v[2]
        })
        .collect();
    let mut peak = 0;
    for (i, p) in proj.iter().enumerate() {
        if p.abs() > proj[peak].abs() {
            peak = i;
        }
    }
    if proj[peak] < 0.0 {
        proj.iter_mut().for_each(|p| *p = -*p);
    }
    Ok(proj)
}

/// Biased autocorrelation for lags `0..=max_lag` samples: the lag-k sum of
/// centred products divided by the zero-lag sum, so `acf[0] == 1`.
pub fn autocorrelation_lags(series: &[f64], max_lag: usize) -> Result<Vec<f64>, SignalError> {
    if series.len() <= max_lag {
        return Err(SignalError::SeriesTooShort {
            len: series.len(),
            max_lag,
        });
    }
    let (mean, _) = mean_std(series);
    let centred: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let energy: f64 = centred.iter().map(|v| v * v).sum();
    if !(energy > (1e-10 * max_abs(series)).powi(2) * series.len() as f64) {
        return Err(SignalError::ZeroVariance);
    }
    let n = centred.len();
    Ok((0..=max_lag)
        .map(|k| {
            if k == 0 {
                return 1.0;
            }
            let s: f64 = centred[..n - k].iter().zip(&centred[k..]).map(|(a, b)| a * b).sum();
            s / energy
        })
        .collect())
}

/// [`autocorrelation_lags`] with the maximum lag given in seconds (rounded up
/// to whole samples).
pub fn autocorrelation(series: &[f64], sample_rate_hz: f64, max_lag_s: f64) -> Result<Vec<f64>, SignalError> {
    let max_lag = (max_lag_s * sample_rate_hz - 1e-9).ceil().max(0.0) as usize;
    autocorrelation_lags(series, max_lag)
}

/// Thresholds for autocorrelation peak selection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakCriteria {
    pub lag_min_s: f64,
    pub lag_max_s: f64,
    pub min_prominence: f64,
    pub min_height: f64,
}

impl Default for PeakCriteria {
    /// Plausible step and stride delays for gait.
    fn default() -> Self {
        PeakCriteria {
            lag_min_s: 0.35,
            lag_max_s: 1.70,
            min_prominence: 0.2,
            min_height: 0.01,
        }
    }
}

impl PeakCriteria {
    /// Inclusive sample-lag range, clamped to the acf length.
    pub fn lag_range(&self, sample_rate_hz: f64, acf_len: usize) -> Option<(usize, usize)> {
        let lo = (self.lag_min_s * sample_rate_hz - 1e-9).ceil().max(0.0) as usize;
        let hi = ((self.lag_max_s * sample_rate_hz + 1e-9).floor() as usize).min(acf_len.checked_sub(1)?);
        (lo <= hi).then_some((lo, hi))
    }
}

/// Indices of local maxima in `values[lo..=hi]`: strictly above the left
/// neighbour and, after any plateau, strictly above the next differing value.
/// Plateaus report their leftmost index. Neighbours may lie outside the range
/// but must exist.
pub fn local_maxima(values: &[f64], lo: usize, hi: usize) -> Vec<usize> {
    let mut peaks = Vec::new();
    let mut i = lo.max(1);
    while i <= hi && i + 1 < values.len() {
        if values[i] > values[i - 1] {
            let mut j = i + 1;
            while j < values.len() && values[j] == values[i] {
                j += 1;
            }
            if j < values.len() && values[j] < values[i] {
                peaks.push(i);
            }
            i = j;
        } else {
            i += 1;
        }
    }
    peaks
}

/// Topographic prominence of the peak at `peak`, restricted to `[lo, hi]`:
/// height minus the higher of the lowest points passed on each side before
/// reaching strictly higher terrain or the range edge.
pub fn prominence(values: &[f64], peak: usize, lo: usize, hi: usize) -> f64 {
    let h = values[peak];
    let mut left_min = h;
    let mut k = peak;
    while k > lo {
        k -= 1;
        if values[k] > h {
            break;
        }
        left_min = left_min.min(values[k]);
    }
    let mut right_min = h;
    let mut k = peak;
    while k < hi {
        k += 1;
        if values[k] > h {
            break;
        }
        right_min = right_min.min(values[k]);
    }
    h - left_min.max(right_min)
}

/// Local maxima of `acf` within the lag range that pass both thresholds
/// (strict inequalities), sorted by height descending. Only peak positions are
/// limited to the lag range; prominence is measured over the whole of `acf`.
pub fn find_acf_peaks(acf: &[f64], sample_rate_hz: f64, criteria: &PeakCriteria) -> Vec<AcfPeak> {
    let Some((lo, hi)) = criteria.lag_range(sample_rate_hz, acf.len()) else {
        return Vec::new();
    };
    let mut peaks: Vec<AcfPeak> = local_maxima(acf, lo, hi)
        .into_iter()
        .map(|i| AcfPeak {
            lag_samples: i,
            lag_s: i as f64 / sample_rate_hz,
            height: acf[i],
            prominence: prominence(acf, i, 0, acf.len() - 1),
        })
        .filter(|p| p.prominence > criteria.min_prominence && p.height > criteria.min_height)
        .collect();
    peaks.sort_by(|a, b| b.height.total_cmp(&a.height).then(a.lag_samples.cmp(&b.lag_samples)));
    peaks
}

/// Per-axis standardisation to mean 0 and population standard deviation 1.
pub fn zscore_frame(frame: &FrameView<'_>) -> Result<Frame, SignalError> {
    let mut out = Frame::default();
    for axis in Axis::ALL {
        let values = frame.axis(axis);
        let (mean, std) = mean_std(values);
        if !(std > 1e-10 * max_abs(values)) {
            return Err(SignalError::ZeroVarianceAxis(axis));
        }
        let z: Vec<f64> = values.iter().map(|v| (v - mean) / std).collect();
        match axis {
            Axis::X => out.x = z,
            Axis::Y => out.y = z,
            Axis::Z => out.z = z,
        }
    }
    Ok(out)
}
