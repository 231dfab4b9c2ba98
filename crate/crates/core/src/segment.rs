//! Threshold segmentation of the MSD activity signal into bouts.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoutKind {
    Gait,
    Sleep,
}

/// A half-open sample interval `[start_idx, end_idx)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bout {
    pub start_idx: usize,
    pub end_idx: usize,
    pub kind: BoutKind,
}

impl Bout {
    pub fn len(&self) -> usize {
        self.end_idx - self.start_idx
    }

    pub fn is_empty(&self) -> bool {
        self.end_idx == self.start_idx
    }
}

/// Maximal runs of samples satisfying a predicate, merged across gaps of at
/// most `max_gap` samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunGroup {
    /// First sample of the first run.
    pub start: usize,
    /// One past the last sample of the last run.
    pub end: usize,
    /// Samples satisfying the predicate (gaps excluded).
    pub active: usize,
}

/// Runs of `active(i)` over `0..n`, where consecutive runs separated by at most
/// `max_gap` inactive samples are merged into one group.
pub fn merged_runs(n: usize, max_gap: usize, active: impl Fn(usize) -> bool) -> Vec<RunGroup> {
    let mut groups: Vec<RunGroup> = Vec::new();
    let mut i = 0;
    while i < n {
        if !active(i) {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && active(i) {
            i += 1;
        }
        let run = RunGroup {
            start,
            end: i,
            active: i - start,
        };
        match groups.last_mut() {
            Some(last) if start - last.end <= max_gap => {
                last.end = run.end;
                last.active += run.active;
            }
            _ => groups.push(run),
        }
    }
    groups
}

/// Start indices of contiguous, non-overlapping frames of `frame_len` samples
/// tiled from `start`; any trailing remainder is dropped.
pub fn tile_frames(start: usize, end: usize, frame_len: usize) -> impl Iterator<Item = usize> {
    let count = end.saturating_sub(start).checked_div(frame_len).unwrap_or(0);
    (0..count).map(move |k| start + k * frame_len)
}
