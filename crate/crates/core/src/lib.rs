//! Gait and sleep feature extraction from raw triaxial wrist accelerometry,
//! and ridge-regression estimation of visceral adipose tissue (VAT).
//!
//! The pipeline runs in four stages:
//!
//! 1. [`ingest`] loads recordings and subject metadata.
//! 2. [`sigproc`] turns the raw stream into magnitude and rolling magnitude
//!    standard deviation (MSD), the activity primitive every segmenter uses.
//! 3. [`gait`] and [`sleep`] segment bouts, tile them into 5 s frames and
//!    compute frame features (with [`dynamics`] supplying the magnitude-free
//!    features). Frames are summarised per subject into 214 gait and 206 sleep
//!    features.
//! 4. [`model`] fits ridge regression on summaries and covariates and runs
//!    repeated random-split cross-validation.
//!
//! Per-frame work is data-parallel. With the default `parallel` feature the
//! frame and fold loops run on rayon; without it they run sequentially with
//! identical results.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod exec;
pub mod frame;
pub mod gait;
pub mod ingest;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod segment;
pub mod sigproc;
pub mod sleep;
pub mod synth;

pub use exec::Execution;
pub use frame::{Axis, Frame, FrameView};
pub use ingest::{CohortDataset, Gender, SubjectRecord, TriaxialRecording};

/// Nominal device sample rate.
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 80.0;

/// Analysis frame length shared by gait and sleep movement features.
pub const FRAME_SECONDS: f64 = 5.0;
