//! Movement-dynamics and raw-intensity frame features.
//!
//! Dynamics features are computed on per-axis z-scored frames, so they carry
//! no information about acceleration magnitude: path length, mean absolute
//! distance (MAD) in 3-d and in six 2-d axis pairs, and time-delay-embedding
//! (TDE) correlation eigenspectra at four delay scales.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::frame::{Axis, FrameView};
use crate::linalg::symmetric_eigenvalues_desc;
use crate::sigproc::{magnitude_of, mean_std, zscore_frame, SignalError};

/// Delay spacings in samples, one per scale.
pub const TDE_SPACINGS: [usize; 4] = [3, 7, 15, 31];
/// Delays per axis at every scale.
pub const TDE_DELAYS: usize = 7;
/// Embedding channels per scale (3 axes x 7 delays).
pub const TDE_CHANNELS: usize = 3 * TDE_DELAYS;
pub const TRIM_SIGMA_3D: f64 = 4.0;
pub const TRIM_SIGMA_PAIR: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("frame needs at least {needed} samples, got {len}")]
    FrameTooShort { needed: usize, len: usize },
    #[error("every point was trimmed as an outlier")]
    AllPointsTrimmed,
    #[error("frame of {len} samples is too short for delay spacing {spacing}")]
    FrameTooShortForScale { len: usize, spacing: usize },
    #[error("embedding channel {channel} has zero variance")]
    ZeroVarianceChannel { channel: usize },
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// The six 2-d axis pairs. Same-axis pairs use the point `(a_t, a_t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisPair {
    XX,
    XY,
    XZ,
    YY,
    YZ,
    ZZ,
}

impl AxisPair {
    pub const ALL: [AxisPair; 6] = [
        AxisPair::XX,
        AxisPair::XY,
        AxisPair::XZ,
        AxisPair::YY,
        AxisPair::YZ,
        AxisPair::ZZ,
    ];

    pub fn axes(self) -> (Axis, Axis) {
        match self {
            AxisPair::XX => (Axis::X, Axis::X),
            AxisPair::XY => (Axis::X, Axis::Y),
            AxisPair::XZ => (Axis::X, Axis::Z),
            AxisPair::YY => (Axis::Y, Axis::Y),
            AxisPair::YZ => (Axis::Y, Axis::Z),
            AxisPair::ZZ => (Axis::Z, Axis::Z),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AxisPair::XX => "xx",
            AxisPair::XY => "xy",
            AxisPair::XZ => "xz",
            AxisPair::YY => "yy",
            AxisPair::YZ => "yz",
            AxisPair::ZZ => "zz",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsFeatures {
    pub pl_z: f64,
    pub mad3_z: f64,
    /// In [`AxisPair::ALL`] order.
    pub mad_pair: [f64; 6],
    /// One descending spectrum per entry of [`TDE_SPACINGS`].
    pub tde_eig: [[f64; TDE_CHANNELS]; 4],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RawIntensityFeatures {
    pub msd_g: f64,
    pub pl_raw: f64,
    pub mad_raw: f64,
}

/// Summed Euclidean distance between successive 3-d samples.
pub fn path_length(frame: &FrameView<'_>) -> Result<f64, DynamicsError> {
    let n = frame.len();
    if n < 2 {
        return Err(DynamicsError::FrameTooShort { needed: 2, len: n });
    }
    let mut total = 0.0;
    for t in 1..n {
        let dx = frame.x[t] - frame.x[t - 1];
        let dy = frame.y[t] - frame.y[t - 1];
        let dz = frame.z[t] - frame.z[t - 1];
        total += (dx * dx + dy * dy + dz * dz).sqrt();
    }
    Ok(total)
}

fn dist<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Mean pairwise distance after a single outlier-trimming pass.
///
/// Points farther from the centroid than `trim_sigma` times the pooled
/// per-axis standard deviation (`sqrt(mean |p - c|^2 / D)`) are removed, then
/// the mean over all remaining unordered pairs is returned. A single surviving
/// point gives 0.
pub fn trimmed_mean_pairwise_distance<const D: usize>(
    points: &[[f64; D]],
    trim_sigma: f64,
) -> Result<f64, DynamicsError> {
    let n = points.len();
    if n < 2 {
        return Err(DynamicsError::FrameTooShort { needed: 2, len: n });
    }
    let mut centroid = [0.0; D];
    for p in points {
        for d in 0..D {
            centroid[d] += p[d];
        }
    }
    centroid.iter_mut().for_each(|c| *c /= n as f64);
    let radii: Vec<f64> = points.iter().map(|p| dist(p, &centroid)).collect();
    let pooled_sigma = (radii.iter().map(|r| r * r).sum::<f64>() / (n * D) as f64).sqrt();
    let limit = trim_sigma * pooled_sigma;
    let kept: Vec<&[f64; D]> = points
        .iter()
        .zip(&radii)
        .filter(|(_, &r)| r <= limit)
        .map(|(p, _)| p)
        .collect();
    match kept.len() {
        0 => Err(DynamicsError::AllPointsTrimmed),
        1 => Ok(0.0),
        k => {
            let mut total = 0.0;
            for i in 0..k {
                let pi = kept[i];
                total += kept[i + 1..].iter().map(|pj| dist(pi, pj)).sum::<f64>();
            }
            Ok(total / (k * (k - 1) / 2) as f64)
        }
    }
}

pub fn mad_3d(frame: &FrameView<'_>, trim_sigma: f64) -> Result<f64, DynamicsError> {
    trimmed_mean_pairwise_distance(&frame.points(), trim_sigma)
}

pub fn mad_axis_pair(frame: &FrameView<'_>, pair: AxisPair, trim_sigma: f64) -> Result<f64, DynamicsError> {
    let (a, b) = pair.axes();
    let (a, b) = (frame.axis(a), frame.axis(b));
    let points: Vec<[f64; 2]> = a.iter().zip(b).map(|(&p, &q)| [p, q]).collect();
    trimmed_mean_pairwise_distance(&points, trim_sigma)
}

/// Correlation eigenspectrum of the delay embedding of a frame.
///
/// Channel `(axis, k)` holds the axis delayed by `k * spacing` samples over
/// the common support of `len - (n_delays - 1) * spacing` samples; channels are
/// ordered axis-major. Returns the `3 * n_delays` eigenvalues of the Pearson
/// correlation matrix, descending and clamped at zero. They sum to the channel
/// count.
pub fn tde_eigenspectrum(
    frame_z: &FrameView<'_>,
    spacing_samples: usize,
    n_delays: usize,
) -> Result<Vec<f64>, DynamicsError> {
    let channels = 3 * n_delays;
    let span = (n_delays.saturating_sub(1)) * spacing_samples;
    let len = frame_z.len();
    if len < span + channels {
        return Err(DynamicsError::FrameTooShortForScale {
            len,
            spacing: spacing_samples,
        });
    }
    let support = len - span;

    let mut centred: Vec<Vec<f64>> = Vec::with_capacity(channels);
    let mut norms = Vec::with_capacity(channels);
    for axis in Axis::ALL {
        let values = frame_z.axis(axis);
        for k in 0..n_delays {
            let start = k * spacing_samples;
            let slice = &values[start..start + support];
            let (mean, _) = mean_std(slice);
            let c: Vec<f64> = slice.iter().map(|v| v - mean).collect();
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            let scale = slice.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !(norm > 1e-10 * scale * (support as f64).sqrt()) {
                return Err(DynamicsError::ZeroVarianceChannel { channel: centred.len() });
            }
            norms.push(norm);
            centred.push(c);
        }
    }

    let mut corr = DMatrix::<f64>::identity(channels, channels);
    for i in 0..channels {
        for j in i + 1..channels {
            let dot: f64 = centred[i].iter().zip(&centred[j]).map(|(a, b)| a * b).sum();
            let r = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            corr[(i, j)] = r;
            corr[(j, i)] = r;
        }
    }
    Ok(symmetric_eigenvalues_desc(corr)
        .into_iter()
        .map(|v| v.max(0.0))
        .collect())
}

/// All dynamics features of a raw frame (z-scored internally).
pub fn dynamics_features(frame: &FrameView<'_>) -> Result<DynamicsFeatures, DynamicsError> {
    let z = zscore_frame(frame)?;
    let zv = z.view();
    let pl_z = path_length(&zv)?;
    let mad3_z = mad_3d(&zv, TRIM_SIGMA_3D)?;
    let mut mad_pair = [0.0; 6];
    for (slot, pair) in mad_pair.iter_mut().zip(AxisPair::ALL) {
        *slot = mad_axis_pair(&zv, pair, TRIM_SIGMA_PAIR)?;
    }
    let mut tde_eig = [[0.0; TDE_CHANNELS]; 4];
    for (row, &spacing) in tde_eig.iter_mut().zip(&TDE_SPACINGS) {
        let spectrum = tde_eigenspectrum(&zv, spacing, TDE_DELAYS)?;
        row.copy_from_slice(&spectrum);
    }
    Ok(DynamicsFeatures {
        pl_z,
        mad3_z,
        mad_pair,
        tde_eig,
    })
}

/// Magnitude standard deviation, path length and 4-sigma-trimmed MAD of the
/// raw (not z-scored) frame.
pub fn raw_intensity(frame: &FrameView<'_>) -> Result<RawIntensityFeatures, DynamicsError> {
    let (_, msd_g) = mean_std(&magnitude_of(frame));
    Ok(RawIntensityFeatures {
        msd_g,
        pl_raw: path_length(frame)?,
        mad_raw: mad_3d(frame, TRIM_SIGMA_3D)?,
    })
}

/// Number of per-subject values produced by [`dynamics_summary`].
pub const DYNAMICS_SUMMARY_LEN: usize = 2 + 2 + 12 + 2 * 4 * TDE_CHANNELS;

/// Column names for [`dynamics_summary`], each prefixed with `prefix`.
pub fn dynamics_summary_names(prefix: &str) -> Vec<String> {
    let mut names = Vec::with_capacity(DYNAMICS_SUMMARY_LEN);
    for stat in ["mean", "std"] {
        names.push(format!("{prefix}dyn_pl_{stat}"));
    }
    for stat in ["mean", "std"] {
        names.push(format!("{prefix}dyn_mad_{stat}"));
    }
    for pair in AxisPair::ALL {
        for stat in ["mean", "std"] {
            names.push(format!("{prefix}dyn_mad_{}_{stat}", pair.name()));
        }
    }
    for stat in ["mean", "std"] {
        for scale in 1..=TDE_SPACINGS.len() {
            for rank in 1..=TDE_CHANNELS {
                names.push(format!("{prefix}tde_{stat}_s{scale}_r{rank:02}"));
            }
        }
    }
    names
}

/// Mean and population standard deviation of every dynamics feature across
/// frames: PL, MAD, six pair MADs (mean/std interleaved), then all 84 TDE
/// means followed by all 84 TDE standard deviations (scale-major, rank-minor).
pub fn dynamics_summary<'a, I>(frames: I) -> Vec<f64>
where
    I: IntoIterator<Item = &'a DynamicsFeatures>,
{
    let frames: Vec<&DynamicsFeatures> = frames.into_iter().collect();
    let stat = |f: &dyn Fn(&DynamicsFeatures) -> f64| {
        let values: Vec<f64> = frames.iter().map(|d| f(d)).collect();
        mean_std(&values)
    };
    let mut out = Vec::with_capacity(DYNAMICS_SUMMARY_LEN);
    let (m, s) = stat(&|d| d.pl_z);
    out.extend([m, s]);
    let (m, s) = stat(&|d| d.mad3_z);
    out.extend([m, s]);
    for i in 0..6 {
        let (m, s) = stat(&|d| d.mad_pair[i]);
        out.extend([m, s]);
    }
    let mut means = Vec::with_capacity(4 * TDE_CHANNELS);
    let mut stds = Vec::with_capacity(4 * TDE_CHANNELS);
    for scale in 0..TDE_SPACINGS.len() {
        for rank in 0..TDE_CHANNELS {
            let (m, s) = stat(&|d| d.tde_eig[scale][rank]);
            means.push(m);
            stds.push(s);
        }
    }
    out.extend(means);
    out.extend(stds);
    out
}
