//! Gait bouts, gait-frame detection and the 214-value per-subject gait summary.

use std::sync::LazyLock;

use thiserror::Error;

use crate::dynamics::{
    dynamics_features, dynamics_summary, dynamics_summary_names, raw_intensity, DynamicsFeatures,
    RawIntensityFeatures, DYNAMICS_SUMMARY_LEN,
};
use crate::exec::Execution;
use crate::frame::FrameView;
use crate::ingest::{seconds_to_samples, TriaxialRecording};
use crate::segment::{merged_runs, tile_frames};
pub use crate::segment::{Bout, BoutKind};
use crate::sigproc::{
    autocorrelation_lags, find_acf_peaks, first_principal_component, magnitude, mean_std, rolling_msd, MsdSeries,
    PeakCriteria, SignalError, MSD_WINDOW_S,
};
use crate::FRAME_SECONDS;

pub const GAIT_SUMMARY_LEN: usize = 214;
/// Step duration above which the acf lag is taken to be a stride and halved.
pub const MAX_STEP_DURATION_S: f64 = 0.85;
/// Upper MSD edges (g) of intensity levels 1..=3; level 4 is everything above.
pub const INTENSITY_EDGES_G: [f64; 3] = [0.125, 0.375, 1.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaitError {
    #[error("need at least 2 gait frames, found {0}")]
    InsufficientFrames(usize),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaitBoutParams {
    pub msd_threshold_g: f64,
    pub max_gap_s: f64,
    pub min_active_s: f64,
}

impl Default for GaitBoutParams {
    fn default() -> Self {
        GaitBoutParams {
            msd_threshold_g: 0.1,
            max_gap_s: 15.0,
            min_active_s: 10.0,
        }
    }
}

/// Regions where the MSD exceeds 0.1 g, merged across sub-threshold gaps of at
/// most 15 s, kept when they hold at least 10 s of supra-threshold time.
pub fn segment_gait_bouts(msd: &MsdSeries) -> Vec<Bout> {
    segment_gait_bouts_with(msd, &GaitBoutParams::default())
}

pub fn segment_gait_bouts_with(msd: &MsdSeries, params: &GaitBoutParams) -> Vec<Bout> {
    let fs = msd.sample_rate_hz;
    let max_gap = seconds_to_samples(params.max_gap_s, fs);
    let min_active = seconds_to_samples(params.min_active_s, fs);
    merged_runs(msd.len(), max_gap, |i| msd.values[i] > params.msd_threshold_g)
        .into_iter()
        .filter(|g| g.active >= min_active)
        .map(|g| Bout {
            start_idx: g.start,
            end_idx: g.end,
            kind: BoutKind::Gait,
        })
        .collect()
}

/// Cadence and periodicity read off the selected autocorrelation peak.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepFeatures {
    pub step_duration1_s: f64,
    pub step_duration2_s: f64,
    pub step_periodicity: f64,
}

/// The periodicity test on one frame: PC1, autocorrelation, then the highest
/// qualifying peak between 0.35 s and 1.70 s. `None` when no peak qualifies or
/// the frame is degenerate.
pub fn detect_gait_frame(frame: &FrameView<'_>, sample_rate_hz: f64) -> Option<StepFeatures> {
    detect_gait_frame_with(frame, sample_rate_hz, &PeakCriteria::default())
}

pub fn detect_gait_frame_with(
    frame: &FrameView<'_>,
    sample_rate_hz: f64,
    criteria: &PeakCriteria,
) -> Option<StepFeatures> {
    let pc = first_principal_component(frame).ok()?;
    let acf = autocorrelation_lags(&pc, pc.len().checked_sub(1)?).ok()?;
    let best = *find_acf_peaks(&acf, sample_rate_hz, criteria).first()?;
    Some(StepFeatures {
        step_duration1_s: best.lag_s,
        step_duration2_s: stride_corrected(best.lag_s),
        step_periodicity: best.height,
    })
}

/// Halves a lag that is too long to be a single step.
pub fn stride_corrected(lag_s: f64) -> f64 {
    if lag_s > MAX_STEP_DURATION_S {
        lag_s / 2.0
    } else {
        lag_s
    }
}

/// Intensity level 1..=4 from a frame MSD (bin edges are right-closed).
pub fn intensity_bin(msd_g: f64) -> u8 {
    INTENSITY_EDGES_G
        .iter()
        .position(|&edge| msd_g <= edge)
        .map_or(4, |i| i as u8 + 1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaitFrame {
    /// Unique per subject across all of the subject's recordings.
    pub bout_id: usize,
    /// Position of the frame within its bout's tiling.
    pub frame_index: usize,
    pub start_idx: usize,
    pub length: usize,
    pub steps: StepFeatures,
    pub intensity: RawIntensityFeatures,
    pub intensity_level: u8,
    pub dynamics: DynamicsFeatures,
}

impl GaitFrame {
    /// Runs every per-frame computation. `None` if the frame fails the
    /// periodicity test or any feature is undefined.
    pub fn analyze(
        frame: &FrameView<'_>,
        sample_rate_hz: f64,
        bout_id: usize,
        frame_index: usize,
        start_idx: usize,
    ) -> Option<GaitFrame> {
        let steps = detect_gait_frame(frame, sample_rate_hz)?;
        let intensity = raw_intensity(frame).ok()?;
        let dynamics = dynamics_features(frame).ok()?;
        Some(GaitFrame {
            bout_id,
            frame_index,
            start_idx,
            length: frame.len(),
            steps,
            intensity,
            intensity_level: intensity_bin(intensity.msd_g),
            dynamics,
        })
    }
}

/// 4x4 joint distribution of intensity levels over pairs of frames that are
/// consecutive tiles of the same bout. Row is the earlier frame's level.
pub fn transition_matrix(frames: &[GaitFrame]) -> [[f64; 4]; 4] {
    let mut counts = [[0usize; 4]; 4];
    let mut total = 0usize;
    for pair in frames.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.bout_id == b.bout_id && b.frame_index == a.frame_index + 1 {
            counts[a.intensity_level as usize - 1][b.intensity_level as usize - 1] += 1;
            total += 1;
        }
    }
    let mut out = [[0.0; 4]; 4];
    if total > 0 {
        for (row, counts) in out.iter_mut().zip(&counts) {
            for (p, &c) in row.iter_mut().zip(counts) {
                *p = c as f64 / total as f64;
            }
        }
    }
    out
}

/// Hours of detected gait: five seconds per gait frame.
pub fn total_gait_hours(frames: &[GaitFrame]) -> f64 {
    frames.len() as f64 * FRAME_SECONDS / 3600.0
}

/// Bouts and detected gait frames of one recording.
#[derive(Clone, Debug, Default)]
pub struct GaitExtraction {
    pub bouts: Vec<Bout>,
    pub frames: Vec<GaitFrame>,
}

/// Segments gait bouts, tiles them into 5 s frames and keeps the frames that
/// pass the periodicity test. Bout ids start at `first_bout_id`.
pub fn extract_gait_frames(
    recording: &TriaxialRecording,
    first_bout_id: usize,
    exec: Execution,
) -> Result<GaitExtraction, GaitError> {
    let msd = rolling_msd(&magnitude(recording), MSD_WINDOW_S)?;
    let bouts = segment_gait_bouts(&msd);
    Ok(GaitExtraction {
        frames: analyze_bouts(recording, &bouts, first_bout_id, exec),
        bouts,
    })
}

pub(crate) fn analyze_bouts(
    recording: &TriaxialRecording,
    bouts: &[Bout],
    first_bout_id: usize,
    exec: Execution,
) -> Vec<GaitFrame> {
    let frame_len = recording.samples(FRAME_SECONDS);
    let candidates: Vec<(usize, usize, usize)> = bouts
        .iter()
        .enumerate()
        .flat_map(|(b, bout)| {
            tile_frames(bout.start_idx, bout.end_idx, frame_len)
                .enumerate()
                .map(move |(k, start)| (first_bout_id + b, k, start))
        })
        .collect();
    let fs = recording.sample_rate_hz;
    exec.map(&candidates, |&(bout_id, k, start)| {
        GaitFrame::analyze(&recording.segment(start, frame_len), fs, bout_id, k, start)
    })
    .into_iter()
    .flatten()
    .collect()
}

static GAIT_NAMES: LazyLock<Vec<String>> = LazyLock::new(|| {
    let mut names = Vec::with_capacity(GAIT_SUMMARY_LEN);
    for feature in [
        "step_duration1",
        "step_duration2",
        "step_periodicity",
        "accel_msd",
        "accel_pl",
        "accel_mad",
    ] {
        for stat in ["mean", "std"] {
            names.push(format!("gait_{feature}_{stat}"));
        }
    }
    for from in 1..=4 {
        for to in 1..=4 {
            names.push(format!("gait_transition_{from}_{to}"));
        }
    }
    names.push("gait_frame_count".into());
    names.push("gait_frame_msd_sum".into());
    names.extend(dynamics_summary_names("gait_"));
    assert_eq!(names.len(), GAIT_SUMMARY_LEN);
    names
});

/// Column names of [`GaitSummary::values`].
pub fn gait_feature_names() -> &'static [String] {
    &GAIT_NAMES
}

/// Per-subject gait summary in [`gait_feature_names`] order.
///
/// | block                               | values |
/// |-------------------------------------|--------|
/// | cadence and periodicity (mean, std) | 6      |
/// | raw intensity MSD/PL/MAD (mean, std)| 6      |
/// | intensity transition probabilities  | 16     |
/// | frame count, frame MSD sum          | 2      |
/// | dynamics                            | 184    |
#[derive(Clone, Debug, PartialEq)]
pub struct GaitSummary {
    pub values: Vec<f64>,
}

impl GaitSummary {
    pub fn cadence(&self) -> &[f64] {
        &self.values[0..6]
    }
    pub fn intensity(&self) -> &[f64] {
        &self.values[6..12]
    }
    pub fn transitions(&self) -> &[f64] {
        &self.values[12..28]
    }
    pub fn patterns(&self) -> &[f64] {
        &self.values[12..30]
    }
    pub fn dynamics(&self) -> &[f64] {
        &self.values[30..]
    }
}

/// Aggregates a subject's gait frames (chronological) into the summary.
pub fn gait_summary(frames: &[GaitFrame]) -> Result<GaitSummary, GaitError> {
    if frames.len() < 2 {
        return Err(GaitError::InsufficientFrames(frames.len()));
    }
    let mut values = Vec::with_capacity(GAIT_SUMMARY_LEN);
    let per_frame: [fn(&GaitFrame) -> f64; 6] = [
        |f| f.steps.step_duration1_s,
        |f| f.steps.step_duration2_s,
        |f| f.steps.step_periodicity,
        |f| f.intensity.msd_g,
        |f| f.intensity.pl_raw,
        |f| f.intensity.mad_raw,
    ];
    for get in per_frame {
        let column: Vec<f64> = frames.iter().map(get).collect();
        let (m, s) = mean_std(&column);
        values.extend([m, s]);
    }
    values.extend(transition_matrix(frames).iter().flatten());
    values.push(frames.len() as f64);
    values.push(frames.iter().map(|f| f.intensity.msd_g).sum());
    let dynamics = dynamics_summary(frames.iter().map(|f| &f.dynamics));
    debug_assert_eq!(dynamics.len(), DYNAMICS_SUMMARY_LEN);
    values.extend(dynamics);
    debug_assert_eq!(values.len(), GAIT_SUMMARY_LEN);
    Ok(GaitSummary { values })
}
