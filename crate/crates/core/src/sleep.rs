//! Sleep bouts, within-sleep movement segments, fragmentation and the
//! 206-value per-subject sleep summary.

use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{
    dynamics_features, dynamics_summary, dynamics_summary_names, raw_intensity, DynamicsFeatures,
    RawIntensityFeatures,
};
use crate::exec::Execution;
use crate::frame::{Axis, FrameView};
use crate::ingest::{seconds_to_samples, TriaxialRecording};
use crate::segment::{merged_runs, tile_frames};
use crate::sigproc::{magnitude, mean_std, rolling_msd, MsdSeries, SignalError, MSD_WINDOW_S};
use crate::FRAME_SECONDS;

pub const SLEEP_SUMMARY_LEN: usize = 206;
/// Upper edges (minutes) of the first four quiet-interval bins.
pub const SLEEP_INTERVAL_EDGES_MIN: [f64; 4] = [4.0, 8.0, 16.0, 32.0];
/// Upper edges (seconds) of the first four movement-duration bins.
pub const MOVEMENT_EDGES_S: [f64; 4] = [12.0, 25.0, 100.0, 200.0];
/// Movement frames at or below this MSD (g) carry no features.
pub const MOVEMENT_FRAME_MIN_MSD_G: f64 = 0.005;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SleepError {
    #[error("need at least 2 qualifying sleep movement frames, found {0}")]
    InsufficientFrames(usize),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SleepParams {
    pub quiet_threshold_g: f64,
    pub max_interruption_s: f64,
    pub min_bout_s: f64,
    pub movement_threshold_g: f64,
    pub min_movement_s: f64,
}

impl Default for SleepParams {
    fn default() -> Self {
        SleepParams {
            quiet_threshold_g: 0.01,
            max_interruption_s: 120.0,
            min_bout_s: 2.0 * 3600.0,
            movement_threshold_g: 0.05,
            min_movement_s: 10.0,
        }
    }
}

/// A sleep bout `[start_idx, end_idx)` with its movement segments, each a
/// half-open sample interval inside the bout.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SleepBout {
    pub start_idx: usize,
    pub end_idx: usize,
    pub movement_segments: Vec<(usize, usize)>,
}

/// Regions with MSD below 0.01 g, merged across supra-threshold interruptions
/// of at most 2 min, kept when the merged span is at least 2 h. Movement
/// segments are filled in with [`detect_sleep_movements`].
pub fn segment_sleep_bouts(msd: &MsdSeries) -> Vec<SleepBout> {
    segment_sleep_bouts_with(msd, &SleepParams::default())
}

pub fn segment_sleep_bouts_with(msd: &MsdSeries, params: &SleepParams) -> Vec<SleepBout> {
    let fs = msd.sample_rate_hz;
    let max_gap = seconds_to_samples(params.max_interruption_s, fs);
    let min_span = seconds_to_samples(params.min_bout_s, fs);
    merged_runs(msd.len(), max_gap, |i| msd.values[i] < params.quiet_threshold_g)
        .into_iter()
        .filter(|g| g.end - g.start >= min_span)
        .map(|g| {
            let mut bout = SleepBout {
                start_idx: g.start,
                end_idx: g.end,
                movement_segments: Vec::new(),
            };
            bout.movement_segments = detect_sleep_movements_with(&bout, msd, params);
            bout
        })
        .collect()
}

/// Maximal runs inside the bout with MSD above 0.05 g lasting at least 10 s.
pub fn detect_sleep_movements(bout: &SleepBout, msd: &MsdSeries) -> Vec<(usize, usize)> {
    detect_sleep_movements_with(bout, msd, &SleepParams::default())
}

pub fn detect_sleep_movements_with(bout: &SleepBout, msd: &MsdSeries, params: &SleepParams) -> Vec<(usize, usize)> {
    let min_len = seconds_to_samples(params.min_movement_s, msd.sample_rate_hz);
    let values = &msd.values[bout.start_idx..bout.end_idx];
    merged_runs(values.len(), 0, |i| values[i] > params.movement_threshold_g)
        .into_iter()
        .filter(|g| g.end - g.start >= min_len)
        .map(|g| (bout.start_idx + g.start, bout.start_idx + g.end))
        .collect()
}

/// Start indices of the 5 s frames tiling each movement segment.
pub fn movement_frame_starts(bout: &SleepBout, frame_len: usize) -> Vec<usize> {
    bout.movement_segments
        .iter()
        .flat_map(|&(s, e)| tile_frames(s, e, frame_len))
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FragmentationFeatures {
    pub sleep_dur_prob: [f64; 5],
    pub move_dur_prob: [f64; 5],
}

fn bin_index(value: f64, edges: &[f64; 4]) -> usize {
    edges.iter().position(|&e| value <= e).unwrap_or(4)
}

fn normalise(counts: [usize; 5]) -> [f64; 5] {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return [0.0; 5];
    }
    counts.map(|c| c as f64 / total as f64)
}

/// Quiet-interval durations (s) of a bout: the gaps between consecutive
/// movement segments plus the leading and trailing gaps. Empty gaps are
/// skipped.
pub fn sleep_intervals_s(bout: &SleepBout, sample_rate_hz: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut cursor = bout.start_idx;
    for &(s, e) in &bout.movement_segments {
        if s > cursor {
            out.push((s - cursor) as f64 / sample_rate_hz);
        }
        cursor = e;
    }
    if bout.end_idx > cursor {
        out.push((bout.end_idx - cursor) as f64 / sample_rate_hz);
    }
    out
}

/// Normalised histograms of quiet-interval durations (bins at 4, 8, 16, 32
/// min) and movement durations (bins at 12, 25, 100, 200 s). Bins are
/// right-closed; a block with no intervals is all zeros.
pub fn fragmentation_features(bouts: &[SleepBout], sample_rate_hz: f64) -> FragmentationFeatures {
    fragmentation_features_pooled([(bouts, sample_rate_hz)])
}

/// [`fragmentation_features`] over the bouts of several recordings, each
/// with its own sample rate.
pub fn fragmentation_features_pooled<'a>(
    parts: impl IntoIterator<Item = (&'a [SleepBout], f64)>,
) -> FragmentationFeatures {
    let mut sleep_counts = [0usize; 5];
    let mut move_counts = [0usize; 5];
    for (bouts, sample_rate_hz) in parts {
        for bout in bouts {
            for interval in sleep_intervals_s(bout, sample_rate_hz) {
                sleep_counts[bin_index(interval / 60.0, &SLEEP_INTERVAL_EDGES_MIN)] += 1;
            }
            for &(s, e) in &bout.movement_segments {
                let seconds = (e - s) as f64 / sample_rate_hz;
                move_counts[bin_index(seconds, &MOVEMENT_EDGES_S)] += 1;
            }
        }
    }
    FragmentationFeatures {
        sleep_dur_prob: normalise(sleep_counts),
        move_dur_prob: normalise(move_counts),
    }
}

/// Median with the even-length convention of averaging the two central values.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SleepMovementFrame {
    pub start_idx: usize,
    pub intensity: RawIntensityFeatures,
    /// Raw per-axis medians in x, y, z order.
    pub median: [f64; 3],
    pub dynamics: DynamicsFeatures,
}

/// Features of one movement frame, or `None` when its MSD is at most 0.005 g
/// or a dynamics feature is undefined.
pub fn sleep_movement_features(frame: &FrameView<'_>, start_idx: usize) -> Option<SleepMovementFrame> {
    let intensity = raw_intensity(frame).ok()?;
    if intensity.msd_g <= MOVEMENT_FRAME_MIN_MSD_G {
        return None;
    }
    let dynamics = dynamics_features(frame).ok()?;
    Some(SleepMovementFrame {
        start_idx,
        intensity,
        median: Axis::ALL.map(|a| median(frame.axis(a))),
        dynamics,
    })
}

#[derive(Clone, Debug, Default)]
pub struct SleepExtraction {
    pub bouts: Vec<SleepBout>,
    pub frames: Vec<SleepMovementFrame>,
}

pub fn extract_sleep(recording: &TriaxialRecording, exec: Execution) -> Result<SleepExtraction, SleepError> {
    let msd = rolling_msd(&magnitude(recording), MSD_WINDOW_S)?;
    let bouts = segment_sleep_bouts(&msd);
    let frame_len = recording.samples(FRAME_SECONDS);
    let starts: Vec<usize> = bouts.iter().flat_map(|b| movement_frame_starts(b, frame_len)).collect();
    let frames = exec
        .map(&starts, |&s| sleep_movement_features(&recording.segment(s, frame_len), s))
        .into_iter()
        .flatten()
        .collect();
    Ok(SleepExtraction { bouts, frames })
}

static SLEEP_NAMES: LazyLock<Vec<String>> = LazyLock::new(|| {
    let mut names = Vec::with_capacity(SLEEP_SUMMARY_LEN);
    for i in 1..=5 {
        names.push(format!("sleep_dur_prob_{i}"));
    }
    for i in 1..=5 {
        names.push(format!("sleep_move_dur_prob_{i}"));
    }
    for feature in ["accel_msd", "accel_pl", "accel_mad", "median_x", "median_y", "median_z"] {
        for stat in ["mean", "std"] {
            names.push(format!("sleep_{feature}_{stat}"));
        }
    }
    names.extend(dynamics_summary_names("sleep_"));
    assert_eq!(names.len(), SLEEP_SUMMARY_LEN);
    names
});

pub fn sleep_feature_names() -> &'static [String] {
    &SLEEP_NAMES
}

/// Per-subject sleep summary in [`sleep_feature_names`] order: fragmentation
/// (10), movement intensity and medians (12), dynamics (184).
#[derive(Clone, Debug, PartialEq)]
pub struct SleepSummary {
    pub values: Vec<f64>,
}

impl SleepSummary {
    pub fn fragmentation(&self) -> &[f64] {
        &self.values[0..10]
    }
    pub fn intensity(&self) -> &[f64] {
        &self.values[10..22]
    }
    pub fn dynamics(&self) -> &[f64] {
        &self.values[22..]
    }
}

pub fn sleep_summary(
    frames: &[SleepMovementFrame],
    fragmentation: &FragmentationFeatures,
) -> Result<SleepSummary, SleepError> {
    if frames.len() < 2 {
        return Err(SleepError::InsufficientFrames(frames.len()));
    }
    let mut values = Vec::with_capacity(SLEEP_SUMMARY_LEN);
    values.extend(fragmentation.sleep_dur_prob);
    values.extend(fragmentation.move_dur_prob);
    let per_frame: [fn(&SleepMovementFrame) -> f64; 6] = [
        |f| f.intensity.msd_g,
        |f| f.intensity.pl_raw,
        |f| f.intensity.mad_raw,
        |f| f.median[0],
        |f| f.median[1],
        |f| f.median[2],
    ];
    for get in per_frame {
        let column: Vec<f64> = frames.iter().map(get).collect();
        let (m, s) = mean_std(&column);
        values.extend([m, s]);
    }
    values.extend(dynamics_summary(frames.iter().map(|f| &f.dynamics)));
    debug_assert_eq!(values.len(), SLEEP_SUMMARY_LEN);
    Ok(SleepSummary { values })
}
