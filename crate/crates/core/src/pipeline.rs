//! Cohort-level orchestration: per-subject feature extraction, feature and
//! prediction tables on disk, and evaluation of feature configurations.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::gait::{extract_gait_frames, gait_feature_names, gait_summary, total_gait_hours, GaitError, GaitFrame};
use crate::ingest::{load_recording, IngestError, RecordingFormat, SubjectFilter, SubjectRecord, TriaxialRecording};
use crate::model::{
    covariate_names, covariate_vector, cross_validate, metrics, stratified_eval, CvConfig, DesignMatrix, EvalReport,
    Metrics, ModelError,
};
use crate::sleep::{
    extract_sleep, fragmentation_features_pooled, sleep_feature_names, sleep_summary, SleepBout, SleepError,
    SleepMovementFrame,
};
use crate::Execution;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const FEATURES_FILE: &str = "features.csv";
pub const EXCLUSIONS_FILE: &str = "exclusions.csv";
pub const REPORT_FILE: &str = "report.json";
pub const PREDICTIONS_FILE: &str = "predictions.csv";

const MISSING: &str = "NA";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {message}")]
    Table { path: PathBuf, message: String },
    #[error("unknown feature class '{0}' (expected gait, sleep, cov or one of the seven class names)")]
    UnknownFeatureClass(String),
    #[error("empty feature selection")]
    EmptyFeatureSet,
    #[error("configuration '{name}'")]
    Model { name: String, source: ModelError },
    #[error("prediction sets disagree: {0}")]
    IdMismatch(String),
    #[error(transparent)]
    Fusion(ModelError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

impl PipelineError {
    /// True for errors caused by the invocation rather than by the data.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            PipelineError::UnknownFeatureClass(_)
                | PipelineError::EmptyFeatureSet
                | PipelineError::Fusion(ModelError::WeightMismatch(_))
                | PipelineError::Model {
                    source: ModelError::InvalidConfig(_),
                    ..
                }
        )
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> PipelineError + '_ {
    move |source| PipelineError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Provenance written as the first line of every output file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMeta {
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub config_hash: String,
}

impl RunMeta {
    /// `config` is any canonical serialisation of the run's settings.
    pub fn new(command: &str, seed: Option<u64>, config: &str) -> RunMeta {
        let digest = Sha256::digest(config.as_bytes());
        RunMeta {
            version: VERSION.to_string(),
            command: command.to_string(),
            seed,
            config_hash: digest.iter().take(8).map(|b| format!("{b:02x}")).collect(),
        }
    }

    pub fn header_line(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        format!(
            "# vat-activity {} command={} seed={} config={}",
            self.version, self.command, seed, self.config_hash
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExclusionReason {
    #[serde(rename = "NO_GAIT")]
    NoGait,
    #[serde(rename = "NO_SLEEP")]
    NoSleep,
    #[serde(rename = "LOAD_ERROR")]
    LoadError,
}

impl ExclusionReason {
    pub fn code(self) -> &'static str {
        match self {
            ExclusionReason::NoGait => "NO_GAIT",
            ExclusionReason::NoSleep => "NO_SLEEP",
            ExclusionReason::LoadError => "LOAD_ERROR",
        }
    }
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub subject_id: String,
    pub reason: ExclusionReason,
    pub detail: String,
}

/// Pooled features of one subject. A subject without a gait summary gets no
/// feature row; a missing sleep summary leaves the sleep block empty.
#[derive(Clone, Debug, PartialEq)]
pub struct SubjectFeatures {
    pub subject_id: String,
    pub gait_hours: f64,
    pub gait: Option<Vec<f64>>,
    pub sleep: Option<Vec<f64>>,
}

/// Gait and sleep summaries over all of a subject's recordings, taken in
/// chronological order.
pub fn extract_subject(
    subject_id: &str,
    recordings: &[TriaxialRecording],
    exec: Execution,
) -> (SubjectFeatures, Vec<Exclusion>) {
    let mut ordered: Vec<&TriaxialRecording> = recordings.iter().collect();
    ordered.sort_by(|a, b| a.start_epoch_s.total_cmp(&b.start_epoch_s));
    let exclusion = |reason, detail: String| Exclusion {
        subject_id: subject_id.to_string(),
        reason,
        detail,
    };
    let mut exclusions = Vec::new();

    let mut gait_frames: Vec<GaitFrame> = Vec::new();
    let mut sleep_frames: Vec<SleepMovementFrame> = Vec::new();
    let mut sleep_bouts: Vec<(Vec<SleepBout>, f64)> = Vec::new();
    let mut next_bout = 0;
    let mut signal_errors = Vec::new();
    for rec in &ordered {
        match extract_gait_frames(rec, next_bout, exec) {
            Ok(ex) => {
                next_bout += ex.bouts.len();
                gait_frames.extend(ex.frames);
            }
            Err(e) => signal_errors.push(e.to_string()),
        }
        match extract_sleep(rec, exec) {
            Ok(ex) => {
                sleep_frames.extend(ex.frames);
                sleep_bouts.push((ex.bouts, rec.sample_rate_hz));
            }
            Err(e) => signal_errors.push(e.to_string()),
        }
    }
    for e in &signal_errors {
        log::warn!("{subject_id}: {e}");
    }

    let gait = match gait_summary(&gait_frames) {
        Ok(s) => Some(s.values),
        Err(GaitError::InsufficientFrames(n)) => {
            exclusions.push(exclusion(ExclusionReason::NoGait, format!("{n} gait frames detected")));
            None
        }
        Err(e) => {
            exclusions.push(exclusion(ExclusionReason::NoGait, e.to_string()));
            None
        }
    };
    let fragmentation = fragmentation_features_pooled(sleep_bouts.iter().map(|(b, fs)| (b.as_slice(), *fs)));
    let sleep = match sleep_summary(&sleep_frames, &fragmentation) {
        Ok(s) => Some(s.values),
        Err(SleepError::InsufficientFrames(n)) => {
            let bouts: usize = sleep_bouts.iter().map(|(b, _)| b.len()).sum();
            exclusions.push(exclusion(
                ExclusionReason::NoSleep,
                format!("{bouts} sleep bouts, {n} movement frames"),
            ));
            None
        }
        Err(e) => {
            exclusions.push(exclusion(ExclusionReason::NoSleep, e.to_string()));
            None
        }
    };
    let features = SubjectFeatures {
        subject_id: subject_id.to_string(),
        gait_hours: total_gait_hours(&gait_frames),
        gait,
        sleep,
    };
    (features, exclusions)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExtractOutput {
    /// Subjects with a gait summary, sorted by id.
    pub features: Vec<SubjectFeatures>,
    pub exclusions: Vec<Exclusion>,
}

/// Loads and extracts every subject. Failures are per subject and end up in
/// `exclusions`; output order is by subject id.
pub fn extract_cohort(recordings: &BTreeMap<String, Vec<PathBuf>>, exec: Execution) -> ExtractOutput {
    let subjects: Vec<(&String, &Vec<PathBuf>)> = recordings.iter().collect();
    let results = exec.map(&subjects, |(id, paths)| {
        let loaded: Result<Vec<TriaxialRecording>, IngestError> = paths
            .iter()
            .map(|p| {
                let format = RecordingFormat::detect(p)?;
                let mut rec = load_recording(p, format)?;
                rec.subject_id = (*id).clone();
                Ok(rec)
            })
            .collect();
        match loaded {
            Ok(recs) => extract_subject(id, &recs, exec),
            Err(e) => {
                log::warn!("{id}: {e}");
                let features = SubjectFeatures {
                    subject_id: (*id).clone(),
                    gait_hours: 0.0,
                    gait: None,
                    sleep: None,
                };
                let ex = Exclusion {
                    subject_id: (*id).clone(),
                    reason: ExclusionReason::LoadError,
                    detail: e.to_string(),
                };
                (features, vec![ex])
            }
        }
    });
    let mut out = ExtractOutput::default();
    for (features, exclusions) in results {
        let load_failed = exclusions.iter().any(|e| e.reason == ExclusionReason::LoadError);
        if features.gait.is_some() && !load_failed {
            out.features.push(features);
        }
        out.exclusions.extend(exclusions);
    }
    out
}

/// Canonical description of the extraction settings, hashed into the header.
pub fn extract_config_string(recordings: &BTreeMap<String, Vec<PathBuf>>) -> String {
    let mut s = format!("extract v{VERSION}\n");
    for (id, paths) in recordings {
        for p in paths {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            s.push_str(&format!("{id}\t{name}\n"));
        }
    }
    s
}

fn format_value(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v}"),
        None => MISSING.to_string(),
    }
}

pub fn feature_table_columns() -> Vec<String> {
    let mut cols = vec!["gait_hours".to_string()];
    cols.extend(gait_feature_names().iter().cloned());
    cols.extend(sleep_feature_names().iter().cloned());
    cols
}

fn write_with_header(path: &Path, meta: &RunMeta, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), PipelineError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{}", meta.header_line())
        .and_then(|_| body(&mut out))
        .and_then(|_| out.flush())
        .map_err(io_err(path))
}

fn write_csv_rows(out: &mut dyn Write, rows: impl IntoIterator<Item = Vec<String>>) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(out);
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()
}

/// `features.csv`: subject_id, gait_hours, 214 gait and 206 sleep columns.
pub fn write_features(path: &Path, meta: &RunMeta, rows: &[SubjectFeatures]) -> Result<(), PipelineError> {
    let mut header = vec!["subject_id".to_string()];
    header.extend(feature_table_columns());
    let n_sleep = sleep_feature_names().len();
    let records = std::iter::once(header).chain(rows.iter().map(|r| {
        let mut rec = vec![r.subject_id.clone(), format_value(Some(r.gait_hours))];
        rec.extend(r.gait.iter().flatten().map(|v| format_value(Some(*v))));
        match &r.sleep {
            Some(s) => rec.extend(s.iter().map(|v| format_value(Some(*v)))),
            None => rec.extend(std::iter::repeat_n(MISSING.to_string(), n_sleep)),
        }
        rec
    }));
    write_with_header(path, meta, |out| write_csv_rows(out, records))
}

pub fn write_exclusions(path: &Path, meta: &RunMeta, rows: &[Exclusion]) -> Result<(), PipelineError> {
    let header = vec!["subject_id".to_string(), "reason".to_string(), "detail".to_string()];
    let records = std::iter::once(header).chain(
        rows.iter()
            .map(|e| vec![e.subject_id.clone(), e.reason.code().to_string(), e.detail.clone()]),
    );
    write_with_header(path, meta, |out| write_csv_rows(out, records))
}

/// A numeric table keyed by subject id; `None` marks a missing value.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    pub columns: Vec<String>,
    pub rows: BTreeMap<String, Vec<Option<f64>>>,
}

impl FeatureTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

fn parse_cell(cell: &str) -> Option<Result<f64, String>> {
    let cell = cell.trim();
    if cell.is_empty() || cell == MISSING {
        return None;
    }
    Some(cell.parse::<f64>().map_err(|_| format!("not a number: '{cell}'")))
}

pub fn read_feature_table(path: &Path) -> Result<FeatureTable, PipelineError> {
    let file = File::open(path).map_err(io_err(path))?;
    read_feature_table_from(file, path)
}

fn table_err(path: &Path, message: String) -> PipelineError {
    PipelineError::Table {
        path: path.to_path_buf(),
        message,
    }
}

fn read_feature_table_from(reader: impl Read, path: &Path) -> Result<FeatureTable, PipelineError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
    let headers = r.headers().map_err(csv_err(path))?.clone();
    if headers.get(0) != Some("subject_id") {
        return Err(table_err(path, "first column must be subject_id".into()));
    }
    let columns: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut rows = BTreeMap::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(csv_err(path))?;
        let id = record.get(0).unwrap_or_default().to_string();
        let values = record
            .iter()
            .skip(1)
            .map(|c| parse_cell(c).transpose())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|m| table_err(path, format!("row {}: {m}", line + 1)))?;
        if rows.insert(id.clone(), values).is_some() {
            return Err(table_err(path, format!("duplicate subject {id}")));
        }
    }
    Ok(FeatureTable { columns, rows })
}

/// The seven feature classes, plus subject covariates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureClass {
    GaitCadence,
    GaitIntensity,
    GaitPatterns,
    GaitDynamics,
    SleepDurations,
    SleepIntensity,
    SleepDynamics,
    Covariates,
}

impl FeatureClass {
    pub const ALL: [FeatureClass; 8] = [
        FeatureClass::GaitCadence,
        FeatureClass::GaitIntensity,
        FeatureClass::GaitPatterns,
        FeatureClass::GaitDynamics,
        FeatureClass::SleepDurations,
        FeatureClass::SleepIntensity,
        FeatureClass::SleepDynamics,
        FeatureClass::Covariates,
    ];

    pub fn token(self) -> &'static str {
        match self {
            FeatureClass::GaitCadence => "gait-cadence",
            FeatureClass::GaitIntensity => "gait-intensity",
            FeatureClass::GaitPatterns => "gait-patterns",
            FeatureClass::GaitDynamics => "gait-dynamics",
            FeatureClass::SleepDurations => "sleep-durations",
            FeatureClass::SleepIntensity => "sleep-intensity",
            FeatureClass::SleepDynamics => "sleep-dynamics",
            FeatureClass::Covariates => "cov",
        }
    }

    pub fn columns(self) -> Vec<String> {
        let gait = gait_feature_names();
        let sleep = sleep_feature_names();
        match self {
            FeatureClass::GaitCadence => gait[0..6].to_vec(),
            FeatureClass::GaitIntensity => gait[6..12].to_vec(),
            FeatureClass::GaitPatterns => gait[12..30].to_vec(),
            FeatureClass::GaitDynamics => gait[30..].to_vec(),
            FeatureClass::SleepDurations => sleep[0..10].to_vec(),
            FeatureClass::SleepIntensity => sleep[10..22].to_vec(),
            FeatureClass::SleepDynamics => sleep[22..].to_vec(),
            FeatureClass::Covariates => covariate_names(),
        }
    }
}

/// A named union of feature classes, parsed from tokens joined by `+`, e.g.
/// `gait+sleep+cov` or `gait-dynamics+cov`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSelection {
    pub name: String,
    pub classes: Vec<FeatureClass>,
}

impl FeatureSelection {
    pub fn parse(spec: &str) -> Result<FeatureSelection, PipelineError> {
        let mut classes = Vec::new();
        for token in spec.split('+').map(str::trim) {
            if token.is_empty() {
                return Err(PipelineError::EmptyFeatureSet);
            }
            let expanded: &[FeatureClass] = match token {
                "gait" => &FeatureClass::ALL[0..4],
                "sleep" => &FeatureClass::ALL[4..7],
                "cov" | "covariates" => &FeatureClass::ALL[7..8],
                "all" => &FeatureClass::ALL,
                other => {
                    let class = FeatureClass::ALL
                        .iter()
                        .find(|c| c.token() == other)
                        .ok_or_else(|| PipelineError::UnknownFeatureClass(other.to_string()))?;
                    std::slice::from_ref(class)
                }
            };
            for c in expanded {
                if !classes.contains(c) {
                    classes.push(*c);
                }
            }
        }
        classes.sort();
        Ok(FeatureSelection {
            name: spec.trim().to_string(),
            classes,
        })
    }

    /// The default comparison: each class alone, then the gait, sleep and
    /// covariate blocks and their unions.
    pub fn table_rows() -> Vec<FeatureSelection> {
        [
            "gait-cadence",
            "gait-intensity",
            "gait-patterns",
            "gait-dynamics",
            "sleep-durations",
            "sleep-intensity",
            "sleep-dynamics",
            "gait",
            "sleep",
            "gait+sleep",
            "cov",
            "gait+sleep+cov",
        ]
        .iter()
        .map(|s| FeatureSelection::parse(s).expect("built-in selections parse"))
        .collect()
    }

    pub fn columns(&self) -> Vec<String> {
        self.classes.iter().flat_map(|c| c.columns()).collect()
    }

    pub fn uses_covariates(&self) -> bool {
        self.classes.contains(&FeatureClass::Covariates)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluateConfig {
    pub cv: CvConfig,
    pub filter: SubjectFilter,
    pub selections: Vec<FeatureSelection>,
}

impl EvaluateConfig {
    pub fn canonical_string(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationReport {
    pub name: String,
    pub classes: Vec<FeatureClass>,
    pub n_subjects: usize,
    pub n_columns: usize,
    pub result: EvalReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub meta: RunMeta,
    pub config: EvaluateConfig,
    pub n_subjects_with_features: usize,
    pub n_subjects_after_filter: usize,
    pub configurations: Vec<ConfigurationReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub subject_id: String,
    pub vat_true: f64,
    pub vat_pred: f64,
    pub configuration: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationOutput {
    pub report: EvaluationReport,
    pub predictions: Vec<PredictionRow>,
}

/// Builds the design matrix of one selection over the filtered subjects.
/// Subjects missing any selected feature are left out.
pub fn design_for(
    selection: &FeatureSelection,
    table: &FeatureTable,
    subjects: &[&SubjectRecord],
) -> Result<(DesignMatrix, Vec<f64>), PipelineError> {
    let columns = selection.columns();
    if columns.is_empty() {
        return Err(PipelineError::EmptyFeatureSet);
    }
    let table_cols: Vec<Option<usize>> = columns.iter().map(|c| table.column_index(c)).collect();
    let cov_names = covariate_names();
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut target = Vec::new();
    let mut bmi = Vec::new();
    for subject in subjects {
        let Some(values) = table.rows.get(&subject.subject_id) else {
            continue;
        };
        let Some(vat) = subject.vat_g else { continue };
        let cov = if selection.uses_covariates() {
            match covariate_vector(subject) {
                Ok(v) => Some(v),
                Err(_) => continue,
            }
        } else {
            None
        };
        let mut row = Vec::with_capacity(columns.len());
        for (name, idx) in columns.iter().zip(&table_cols) {
            let v = match idx {
                Some(i) => values.get(*i).copied().flatten(),
                None => cov_names
                    .iter()
                    .position(|c| c == name)
                    .and_then(|k| cov.map(|c| c[k])),
            };
            match v {
                Some(v) => row.push(v),
                None => break,
            }
        }
        if row.len() != columns.len() {
            continue;
        }
        ids.push(subject.subject_id.clone());
        rows.push(row);
        target.push(vat);
        bmi.push(subject.bmi_kg_m2.or_else(|| subject.derived_bmi()).unwrap_or(f64::NAN));
    }
    let design = DesignMatrix::new(ids, columns, rows, target).map_err(|source| PipelineError::Model {
        name: selection.name.clone(),
        source,
    })?;
    Ok((design, bmi))
}

/// Cross-validates every selection on the subjects that pass `cfg.filter`.
pub fn evaluate(
    table: &FeatureTable,
    subjects: &[SubjectRecord],
    cfg: &EvaluateConfig,
    exec: Execution,
) -> Result<EvaluationOutput, PipelineError> {
    if cfg.selections.is_empty() {
        return Err(PipelineError::EmptyFeatureSet);
    }
    let hours_col = table.column_index("gait_hours");
    let mut kept: Vec<&SubjectRecord> = subjects
        .iter()
        .filter(|s| {
            let hours = table
                .rows
                .get(&s.subject_id)
                .and_then(|r| hours_col.and_then(|i| r.get(i).copied().flatten()));
            cfg.filter.accepts(s, hours)
        })
        .collect();
    kept.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));

    let mut configurations = Vec::new();
    let mut predictions = Vec::new();
    for selection in &cfg.selections {
        let model_err = |source| PipelineError::Model {
            name: selection.name.clone(),
            source,
        };
        let (design, bmi) = design_for(selection, table, &kept)?;
        let cv = cross_validate(&design, &cfg.cv, exec).map_err(model_err)?;
        let mut result = cv.report;
        let (mut t, mut p, mut b) = (Vec::new(), Vec::new(), Vec::new());
        for (i, pred) in cv.predictions.iter().enumerate() {
            if let Some(pred) = pred {
                predictions.push(PredictionRow {
                    subject_id: design.row_ids[i].clone(),
                    vat_true: design.target[i],
                    vat_pred: *pred,
                    configuration: selection.name.clone(),
                });
                if bmi[i].is_finite() {
                    t.push(design.target[i]);
                    p.push(*pred);
                    b.push(bmi[i]);
                }
            }
        }
        result.stratified = stratified_eval(&t, &p, &b).ok();
        configurations.push(ConfigurationReport {
            name: selection.name.clone(),
            classes: selection.classes.clone(),
            n_subjects: design.n_rows(),
            n_columns: design.n_cols(),
            result,
        });
    }
    let report = EvaluationReport {
        meta: RunMeta::new("evaluate", Some(cfg.cv.seed), &cfg.canonical_string()),
        config: cfg.clone(),
        n_subjects_with_features: table.rows.len(),
        n_subjects_after_filter: kept.len(),
        configurations,
    };
    Ok(EvaluationOutput { report, predictions })
}

pub fn write_report(path: &Path, report: &EvaluationReport) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(report).expect("report serialises");
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

/// `subject_id,vat_true,vat_pred,configuration`.
pub fn write_predictions(path: &Path, meta: &RunMeta, rows: &[PredictionRow]) -> Result<(), PipelineError> {
    let header = ["subject_id", "vat_true", "vat_pred", "configuration"].map(str::to_string).to_vec();
    let records = std::iter::once(header).chain(rows.iter().map(|r| {
        vec![
            r.subject_id.clone(),
            format!("{}", r.vat_true),
            format!("{}", r.vat_pred),
            r.configuration.clone(),
        ]
    }));
    write_with_header(path, meta, |out| write_csv_rows(out, records))
}

/// Reads a predictions file. When `configuration` is given only its rows are
/// kept; otherwise the file must hold a single configuration.
pub fn read_predictions(path: &Path, configuration: Option<&str>) -> Result<Vec<PredictionRow>, PipelineError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let mut rows: Vec<PredictionRow> = Vec::new();
    for record in r.deserialize() {
        let row: PredictionRow = record.map_err(csv_err(path))?;
        if configuration.is_none_or(|c| c == row.configuration) {
            rows.push(row);
        }
    }
    if configuration.is_none() {
        if let Some(first) = rows.first() {
            if rows.iter().any(|r| r.configuration != first.configuration) {
                return Err(table_err(
                    path,
                    "file holds several configurations; select one with FILE:CONFIG".into(),
                ));
            }
        }
    }
    if rows.is_empty() {
        return Err(table_err(path, "no prediction rows".into()));
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FuseOutput {
    pub rows: Vec<PredictionRow>,
    pub metrics: Metrics,
    pub input_metrics: Vec<Metrics>,
}

/// Weighted average of aligned prediction sets. Every set must cover the same
/// subjects with the same measured VAT.
pub fn fuse_prediction_sets(sets: &[Vec<PredictionRow>], weights: &[f64], name: &str) -> Result<FuseOutput, PipelineError> {
    if sets.is_empty() {
        return Err(PipelineError::Fusion(ModelError::WeightMismatch("no prediction sets".into())));
    }
    let index: Vec<HashMap<&str, &PredictionRow>> = sets
        .iter()
        .map(|s| s.iter().map(|r| (r.subject_id.as_str(), r)).collect())
        .collect();
    let mut ids: Vec<&str> = index[0].keys().copied().collect();
    ids.sort();
    for (k, idx) in index.iter().enumerate().skip(1) {
        if idx.len() != ids.len() || ids.iter().any(|id| !idx.contains_key(id)) {
            return Err(PipelineError::IdMismatch(format!("set {} covers different subjects than set 1", k + 1)));
        }
    }
    let truth: Vec<f64> = ids.iter().map(|id| index[0][id].vat_true).collect();
    for (k, idx) in index.iter().enumerate().skip(1) {
        for (id, t) in ids.iter().zip(&truth) {
            if (idx[id].vat_true - t).abs() > 1e-9 * t.abs().max(1.0) {
                return Err(PipelineError::IdMismatch(format!("set {} has a different vat_true for {id}", k + 1)));
            }
        }
    }
    let preds: Vec<Vec<f64>> = index
        .iter()
        .map(|idx| ids.iter().map(|id| idx[id].vat_pred).collect())
        .collect();
    let refs: Vec<&[f64]> = preds.iter().map(Vec::as_slice).collect();
    let fused = crate::model::fuse_estimates(&refs, weights).map_err(PipelineError::Fusion)?;
    let metrics_of = |p: &[f64]| {
        metrics(&truth, p).map_err(|source| PipelineError::Model {
            name: name.to_string(),
            source,
        })
    };
    let input_metrics = refs.iter().map(|p| metrics_of(p)).collect::<Result<Vec<_>, _>>()?;
    let m = metrics_of(&fused)?;
    Ok(FuseOutput {
        rows: ids
            .iter()
            .zip(&truth)
            .zip(&fused)
            .map(|((id, t), p)| PredictionRow {
                subject_id: id.to_string(),
                vat_true: *t,
                vat_pred: *p,
                configuration: name.to_string(),
            })
            .collect(),
        metrics: m,
        input_metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::COVARIATE_NAMES;

    #[test]
    fn selection_parsing() {
        let s = FeatureSelection::parse("gait+sleep").unwrap();
        assert_eq!(s.columns().len(), 214 + 206);
        let s = FeatureSelection::parse("cov+gait-cadence+gait").unwrap();
        assert_eq!(s.columns().len(), 214 + 6);
        assert_eq!(FeatureSelection::parse("cov").unwrap().columns(), COVARIATE_NAMES.map(String::from).to_vec());
        assert!(matches!(FeatureSelection::parse("gait+steps"), Err(PipelineError::UnknownFeatureClass(_))));
        assert!(matches!(FeatureSelection::parse("gait+"), Err(PipelineError::EmptyFeatureSet)));
    }

    #[test]
    fn class_columns_partition_blocks() {
        let total: usize = FeatureClass::ALL[..7].iter().map(|c| c.columns().len()).sum();
        assert_eq!(total, 420);
        let sizes: Vec<usize> = FeatureClass::ALL.iter().map(|c| c.columns().len()).collect();
        assert_eq!(sizes, vec![6, 6, 18, 184, 10, 12, 184, 6]);
    }

    #[test]
    fn header_line_is_stable() {
        let a = RunMeta::new("extract", None, "x");
        let b = RunMeta::new("extract", None, "x");
        assert_eq!(a.header_line(), b.header_line());
        assert!(a.header_line().starts_with("# vat-activity "));
        assert_ne!(a.config_hash, RunMeta::new("extract", None, "y").config_hash);
    }

    #[test]
    fn feature_table_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(FEATURES_FILE);
        let rows = vec![
            SubjectFeatures {
                subject_id: "A".into(),
                gait_hours: 3.5,
                gait: Some((0..214).map(|i| i as f64 * 0.1).collect()),
                sleep: None,
            },
            SubjectFeatures {
                subject_id: "B".into(),
                gait_hours: 0.25,
                gait: Some(vec![1.0 / 3.0; 214]),
                sleep: Some(vec![-2.5e-7; 206]),
            },
        ];
        write_features(&path, &RunMeta::new("extract", None, ""), &rows).unwrap();
        let t = read_feature_table(&path).unwrap();
        assert_eq!(t.columns.len(), 1 + 214 + 206);
        assert_eq!(t.rows["A"][0], Some(3.5));
        assert_eq!(t.rows["A"][215], None);
        assert_eq!(t.rows["B"][1], Some(1.0 / 3.0));
        assert_eq!(t.rows["B"][300], Some(-2.5e-7));
    }

    fn pred(id: &str, t: f64, p: f64) -> PredictionRow {
        PredictionRow {
            subject_id: id.into(),
            vat_true: t,
            vat_pred: p,
            configuration: "c".into(),
        }
    }

    #[test]
    fn fusion_alignment() {
        let a = vec![pred("x", 100.0, 110.0), pred("y", 200.0, 190.0), pred("z", 300.0, 330.0)];
        let b = vec![pred("z", 300.0, 300.0), pred("x", 100.0, 90.0), pred("y", 200.0, 230.0)];
        let out = fuse_prediction_sets(&[a.clone(), b.clone()], &[1.0, 0.0], "f").unwrap();
        assert_eq!(out.metrics, out.input_metrics[0]);
        let out = fuse_prediction_sets(&[a.clone(), b.clone()], &[0.5, 0.5], "f").unwrap();
        assert_eq!(out.rows[0].vat_pred, 100.0);
        let short = vec![pred("x", 100.0, 1.0), pred("y", 200.0, 2.0)];
        assert!(matches!(fuse_prediction_sets(&[a.clone(), short], &[0.5, 0.5], "f"), Err(PipelineError::IdMismatch(_))));
        let err = fuse_prediction_sets(&[a, b], &[0.5, 0.6], "f").unwrap_err();
        assert!(err.is_config_error());
    }
}
