//! Recording and subject-metadata ingestion, plus the cohort inclusion filter.
//!
//! Two recording layouts are supported:
//!
//! * `csv_txyz`: header `t,x,y,z`, one sample per line, `t` in seconds. The
//!   sample rate is inferred from the first and last timestamps.
//! * `csv_xyz_with_header_rate`: a metadata comment line such as
//!   `# sample_rate_hz=80,start_epoch_s=0,subject_id=S01` followed by the header
//!   `x,y,z`.
//!
//! Acceleration values are written with the shortest representation that
//! round-trips (at least six decimals), so write-then-read is bit-exact.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::FrameView;
use crate::DEFAULT_SAMPLE_RATE_HZ;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("recording contains no samples")]
    EmptyRecording,
    #[error("non-finite sample at line {line}")]
    NonFiniteSample { line: u64 },
    #[error("invalid recording: {0}")]
    InvalidRecording(String),
    #[error("recording references unknown subject {0}")]
    UnknownSubject(String),
}

impl IngestError {
    fn parse(line: u64, message: impl Into<String>) -> Self {
        IngestError::Parse {
            line,
            message: message.into(),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One subject-device recording: three acceleration channels in g.
#[derive(Clone, Debug, PartialEq)]
pub struct TriaxialRecording {
    pub subject_id: String,
    pub sample_rate_hz: f64,
    pub start_epoch_s: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl TriaxialRecording {
    pub fn new(
        subject_id: impl Into<String>,
        sample_rate_hz: f64,
        start_epoch_s: f64,
        x: Vec<f64>,
        y: Vec<f64>,
        z: Vec<f64>,
    ) -> Result<Self, IngestError> {
        if x.len() != y.len() || y.len() != z.len() {
            return Err(IngestError::InvalidRecording(format!(
                "channel lengths differ: {}, {}, {}",
                x.len(),
                y.len(),
                z.len()
            )));
        }
        if x.is_empty() {
            return Err(IngestError::EmptyRecording);
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(IngestError::InvalidRecording(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if !start_epoch_s.is_finite() {
            return Err(IngestError::InvalidRecording("start time is not finite".into()));
        }
        for (i, ((a, b), c)) in x.iter().zip(&y).zip(&z).enumerate() {
            if !(a.is_finite() && b.is_finite() && c.is_finite()) {
                return Err(IngestError::NonFiniteSample { line: i as u64 + 1 });
            }
        }
        Ok(TriaxialRecording {
            subject_id: subject_id.into(),
            sample_rate_hz,
            start_epoch_s,
            x,
            y,
            z,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate_hz
    }

    pub fn view(&self) -> FrameView<'_> {
        FrameView::new(&self.x, &self.y, &self.z)
    }

    /// Samples `[start, start + len)`.
    pub fn segment(&self, start: usize, len: usize) -> FrameView<'_> {
        let end = start + len;
        FrameView::new(&self.x[start..end], &self.y[start..end], &self.z[start..end])
    }

    /// Number of samples in `seconds`, rounded to the nearest sample.
    pub fn samples(&self, seconds: f64) -> usize {
        seconds_to_samples(seconds, self.sample_rate_hz)
    }
}

pub(crate) fn seconds_to_samples(seconds: f64, sample_rate_hz: f64) -> usize {
    (seconds * sample_rate_hz).round().max(0.0) as usize
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecordingFormat {
    #[serde(rename = "csv_txyz")]
    CsvTxyz,
    #[serde(rename = "csv_xyz_with_header_rate")]
    CsvXyzWithHeaderRate,
}

impl RecordingFormat {
    /// Sniffs the layout from the first line of the file.
    pub fn detect(path: &Path) -> Result<Self, IngestError> {
        let mut reader = BufReader::new(File::open(path).map_err(io_err(path))?);
        let mut first = String::new();
        reader.read_line(&mut first).map_err(io_err(path))?;
        Ok(if first.trim_start().starts_with('#') {
            RecordingFormat::CsvXyzWithHeaderRate
        } else {
            RecordingFormat::CsvTxyz
        })
    }
}

/// Subject id implied by a recording file name: the stem up to an optional
/// `__` day suffix (`S01__day2.csv` belongs to `S01`).
pub fn subject_id_from_path(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    match stem.split_once("__") {
        Some((id, _)) => id.to_string(),
        None => stem,
    }
}

pub fn load_recording(path: &Path, format: RecordingFormat) -> Result<TriaxialRecording, IngestError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut rec = read_recording(BufReader::new(file), format)?;
    if rec.subject_id.is_empty() {
        rec.subject_id = subject_id_from_path(path);
    }
    Ok(rec)
}

/// Parses a recording from any buffered reader. The subject id is empty unless
/// the metadata line carries one.
pub fn read_recording<R: BufRead>(
    mut reader: R,
    format: RecordingFormat,
) -> Result<TriaxialRecording, IngestError> {
    let mut subject_id = String::new();
    let mut sample_rate = None;
    let mut start_epoch = 0.0;
    let mut line_offset = 1u64;

    if format == RecordingFormat::CsvXyzWithHeaderRate {
        let mut meta = String::new();
        reader
            .read_line(&mut meta)
            .map_err(|e| IngestError::parse(1, e.to_string()))?;
        let body = meta
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| IngestError::parse(1, "expected '# key=value,...' metadata line"))?;
        for pair in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| IngestError::parse(1, format!("malformed metadata entry '{pair}'")))?;
            let value = value.trim();
            match key.trim() {
                "sample_rate_hz" => {
                    sample_rate = Some(parse_f64(value, 1)?);
                }
                "start_epoch_s" => start_epoch = parse_f64(value, 1)?,
                "subject_id" => subject_id = value.to_string(),
                _ => {}
            }
        }
        if sample_rate.is_none() {
            return Err(IngestError::parse(1, "metadata line lacks sample_rate_hz"));
        }
        line_offset = 2;
    }

    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let expected: &[&str] = match format {
        RecordingFormat::CsvTxyz => &["t", "x", "y", "z"],
        RecordingFormat::CsvXyzWithHeaderRate => &["x", "y", "z"],
    };
    let headers = csv
        .headers()
        .map_err(|e| IngestError::parse(line_offset, e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(IngestError::parse(
            line_offset,
            format!("expected header '{}'", expected.join(",")),
        ));
    }

    let (mut t, mut x, mut y, mut z) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut record = csv::StringRecord::new();
    let mut line = line_offset;
    loop {
        match csv.read_record(&mut record) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => return Err(IngestError::parse(line + 1, e.to_string())),
        }
        line += 1;
        if record.len() != expected.len() {
            return Err(IngestError::parse(
                line,
                format!("expected {} fields, found {}", expected.len(), record.len()),
            ));
        }
        let mut values = [0.0; 4];
        for (slot, field) in values.iter_mut().zip(record.iter()) {
            let v = parse_f64(field, line)?;
            if !v.is_finite() {
                return Err(IngestError::NonFiniteSample { line });
            }
            *slot = v;
        }
        let xyz = match format {
            RecordingFormat::CsvTxyz => {
                t.push(values[0]);
                &values[1..4]
            }
            RecordingFormat::CsvXyzWithHeaderRate => &values[0..3],
        };
        x.push(xyz[0]);
        y.push(xyz[1]);
        z.push(xyz[2]);
    }
    if x.is_empty() {
        return Err(IngestError::EmptyRecording);
    }

    if format == RecordingFormat::CsvTxyz {
        start_epoch = t[0];
        sample_rate = Some(infer_sample_rate(&t)?);
    }
    TriaxialRecording::new(subject_id, sample_rate.unwrap(), start_epoch, x, y, z)
}

fn parse_f64(field: &str, line: u64) -> Result<f64, IngestError> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| IngestError::parse(line, format!("not a number: '{field}'")))
}

/// Rate from the overall timestamp span, rounded to 1e-6 Hz. Individual
/// timestamps are not trusted beyond that.
fn infer_sample_rate(t: &[f64]) -> Result<f64, IngestError> {
    if t.len() < 2 {
        log::warn!("single-sample recording; assuming {DEFAULT_SAMPLE_RATE_HZ} Hz");
        return Ok(DEFAULT_SAMPLE_RATE_HZ);
    }
    let span = t[t.len() - 1] - t[0];
    if !(span > 0.0) {
        return Err(IngestError::parse(
            2,
            "timestamps must increase to infer a sample rate",
        ));
    }
    let rate = (t.len() - 1) as f64 / span;
    Ok((rate * 1e6).round() / 1e6)
}

/// Formats a sample so that parsing it back yields the same bits, with at
/// least six decimal digits.
pub fn format_sample(v: f64) -> String {
    let s = v.to_string();
    let decimals = s.split_once('.').map_or(0, |(_, frac)| frac.len());
    if decimals >= 6 {
        s
    } else {
        format!("{v:.6}")
    }
}

pub fn write_recording(
    path: &Path,
    rec: &TriaxialRecording,
    format: RecordingFormat,
) -> Result<(), IngestError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    serialize_recording(&mut out, rec, format)
        .and_then(|_| out.flush())
        .map_err(io_err(path))
}

pub fn serialize_recording<W: Write>(
    out: &mut W,
    rec: &TriaxialRecording,
    format: RecordingFormat,
) -> io::Result<()> {
    match format {
        RecordingFormat::CsvTxyz => {
            writeln!(out, "t,x,y,z")?;
            for i in 0..rec.len() {
                let t = rec.start_epoch_s + i as f64 / rec.sample_rate_hz;
                writeln!(
                    out,
                    "{},{},{},{}",
                    format_sample(t),
                    format_sample(rec.x[i]),
                    format_sample(rec.y[i]),
                    format_sample(rec.z[i])
                )?;
            }
        }
        RecordingFormat::CsvXyzWithHeaderRate => {
            write!(
                out,
                "# sample_rate_hz={},start_epoch_s={}",
                rec.sample_rate_hz, rec.start_epoch_s
            )?;
            if !rec.subject_id.is_empty() {
                write!(out, ",subject_id={}", rec.subject_id)?;
            }
            writeln!(out)?;
            writeln!(out, "x,y,z")?;
            for i in 0..rec.len() {
                writeln!(
                    out,
                    "{},{},{}",
                    format_sample(rec.x[i]),
                    format_sample(rec.y[i]),
                    format_sample(rec.z[i])
                )?;
            }
        }
    }
    Ok(())
}

/// Finds recordings under `dir`. Accepted layouts are `dir/<subject>.csv`,
/// `dir/<subject>__<suffix>.csv` and `dir/<subject>/<any>.csv`. Paths are
/// sorted so day order follows file names.
pub fn discover_recordings(dir: &Path) -> Result<BTreeMap<String, Vec<PathBuf>>, IngestError> {
    let mut found: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    let is_csv = |p: &Path| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.is_dir() {
            let id = path.file_name().unwrap().to_string_lossy().into_owned();
            for inner in std::fs::read_dir(&path).map_err(io_err(&path))? {
                let inner = inner.map_err(io_err(&path))?.path();
                if inner.is_file() && is_csv(&inner) {
                    found.entry(id.clone()).or_default().push(inner);
                }
            }
        } else if is_csv(&path) {
            found.entry(subject_id_from_path(&path)).or_default().push(path);
        }
    }
    for paths in found.values_mut() {
        paths.sort();
    }
    Ok(found)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub fn code(self) -> &'static str {
        match self {
            Gender::Male => "M",
            Gender::Female => "F",
        }
    }

    pub fn parse(s: &str) -> Option<Gender> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m" | "male" => Some(Gender::Male),
            "f" | "female" => Some(Gender::Female),
            _ => None,
        }
    }
}

/// Demographics, body measurements and the DXA VAT target. Missing values are
/// `None`; the inclusion filter drops subjects with any gap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub age_years: Option<f64>,
    pub gender: Option<Gender>,
    pub height_cm: Option<f64>,
    pub weight_kg: Option<f64>,
    pub bmi_kg_m2: Option<f64>,
    pub waist_cm: Option<f64>,
    pub vat_g: Option<f64>,
}

impl SubjectRecord {
    /// BMI implied by height and weight.
    pub fn derived_bmi(&self) -> Option<f64> {
        let h = self.height_cm? / 100.0;
        Some(self.weight_kg? / (h * h))
    }

    pub fn is_complete(&self) -> bool {
        self.age_years.is_some()
            && self.gender.is_some()
            && self.height_cm.is_some()
            && self.weight_kg.is_some()
            && self.bmi_kg_m2.is_some()
            && self.waist_cm.is_some()
            && self.vat_g.is_some()
    }
}

const SUBJECT_HEADER: [&str; 8] = [
    "subject_id", "age", "gender", "height_cm", "weight_kg", "bmi", "waist_cm", "vat_g",
];

pub fn load_subjects(path: &Path) -> Result<Vec<SubjectRecord>, IngestError> {
    let file = File::open(path).map_err(io_err(path))?;
    read_subjects(file)
}

/// Reads subject metadata. Empty cells are missing values; a missing BMI is
/// filled from height and weight. Lines starting with `#` are ignored.
pub fn read_subjects<R: Read>(reader: R) -> Result<Vec<SubjectRecord>, IngestError> {
    let mut csv = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv
        .headers()
        .map_err(|e| IngestError::parse(1, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != SUBJECT_HEADER {
        return Err(IngestError::parse(
            1,
            format!("expected header '{}'", SUBJECT_HEADER.join(",")),
        ));
    }
    let mut subjects = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| IngestError::parse(line, e.to_string()))?;
        let opt = |idx: usize| -> Result<Option<f64>, IngestError> {
            let field = record.get(idx).unwrap_or("");
            if field.is_empty() || field.eq_ignore_ascii_case("na") {
                return Ok(None);
            }
            let v = parse_f64(field, line)?;
            if !v.is_finite() {
                return Err(IngestError::NonFiniteSample { line });
            }
            Ok(Some(v))
        };
        let gender_field = record.get(2).unwrap_or("");
        let gender = if gender_field.is_empty() {
            None
        } else {
            Some(Gender::parse(gender_field).ok_or_else(|| {
                IngestError::parse(line, format!("gender must be M or F, got '{gender_field}'"))
            })?)
        };
        let mut subject = SubjectRecord {
            subject_id: record.get(0).unwrap_or("").to_string(),
            age_years: opt(1)?,
            gender,
            height_cm: opt(3)?,
            weight_kg: opt(4)?,
            bmi_kg_m2: opt(5)?,
            waist_cm: opt(6)?,
            vat_g: opt(7)?,
        };
        if subject.subject_id.is_empty() {
            return Err(IngestError::parse(line, "empty subject_id"));
        }
        if subject.bmi_kg_m2.is_none() {
            subject.bmi_kg_m2 = subject.derived_bmi();
        }
        subjects.push(subject);
    }
    Ok(subjects)
}

pub fn write_subjects<W: Write>(out: W, subjects: &[SubjectRecord]) -> Result<(), csv::Error> {
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(SUBJECT_HEADER)?;
    let num = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for s in subjects {
        csv.write_record([
            s.subject_id.clone(),
            num(s.age_years),
            s.gender.map(|g| g.code().to_string()).unwrap_or_default(),
            num(s.height_cm),
            num(s.weight_kg),
            num(s.bmi_kg_m2),
            num(s.waist_cm),
            num(s.vat_g),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

/// Subjects plus their recordings. Immutable once built.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CohortDataset {
    subjects: Vec<SubjectRecord>,
    recordings: BTreeMap<String, Vec<TriaxialRecording>>,
}

impl CohortDataset {
    pub fn new(
        subjects: Vec<SubjectRecord>,
        recordings: BTreeMap<String, Vec<TriaxialRecording>>,
    ) -> Result<Self, IngestError> {
        for (id, recs) in &recordings {
            if !subjects.iter().any(|s| &s.subject_id == id) {
                return Err(IngestError::UnknownSubject(id.clone()));
            }
            if let Some(bad) = recs.iter().find(|r| &r.subject_id != id) {
                return Err(IngestError::UnknownSubject(bad.subject_id.clone()));
            }
        }
        Ok(CohortDataset {
            subjects,
            recordings,
        })
    }

    pub fn subjects(&self) -> &[SubjectRecord] {
        &self.subjects
    }

    pub fn recordings(&self, subject_id: &str) -> &[TriaxialRecording] {
        self.recordings.get(subject_id).map_or(&[], Vec::as_slice)
    }

    pub fn subject(&self, subject_id: &str) -> Option<&SubjectRecord> {
        self.subjects.iter().find(|s| s.subject_id == subject_id)
    }
}

/// Cohort inclusion criteria.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectFilter {
    pub min_age_years: f64,
    pub max_age_years: f64,
    pub min_gait_hours: f64,
}

impl Default for SubjectFilter {
    fn default() -> Self {
        SubjectFilter {
            min_age_years: 20.0,
            max_age_years: 60.0,
            min_gait_hours: 3.0,
        }
    }
}

impl SubjectFilter {
    pub fn accepts(&self, subject: &SubjectRecord, gait_hours: Option<f64>) -> bool {
        let age_ok = subject
            .age_years
            .is_some_and(|a| a >= self.min_age_years && a <= self.max_age_years);
        age_ok && subject.is_complete() && gait_hours.unwrap_or(0.0) >= self.min_gait_hours
    }

    pub fn apply(&self, dataset: &CohortDataset, gait_hours: &HashMap<String, f64>) -> CohortDataset {
        let subjects: Vec<SubjectRecord> = dataset
            .subjects
            .iter()
            .filter(|s| self.accepts(s, gait_hours.get(&s.subject_id).copied()))
            .cloned()
            .collect();
        let recordings = dataset
            .recordings
            .iter()
            .filter(|(id, _)| subjects.iter().any(|s| &s.subject_id == *id))
            .map(|(id, r)| (id.clone(), r.clone()))
            .collect();
        CohortDataset {
            subjects,
            recordings,
        }
    }
}

/// Keeps subjects aged 20 to 60 with complete covariates, a VAT measurement and
/// at least three hours of detected gait.
pub fn apply_subject_filters(
    dataset: &CohortDataset,
    total_gait_hours: &HashMap<String, f64>,
) -> CohortDataset {
    SubjectFilter::default().apply(dataset, total_gait_hours)
}
