use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use vat_activity::ingest::{discover_recordings, load_subjects, write_recording, write_subjects, RecordingFormat, SubjectFilter};
use vat_activity::model::{CvConfig, LambdaScaling, DEFAULT_LAMBDA};
use vat_activity::pipeline::{
    self, extract_cohort, EvaluateConfig, FeatureSelection, PipelineError, RunMeta, EXCLUSIONS_FILE, FEATURES_FILE,
    PREDICTIONS_FILE, REPORT_FILE,
};
use vat_activity::synth::{gen_cohort, CohortSpec, SubjectTruth};
use vat_activity::Execution;

/// Gait and sleep features from wrist accelerometry, and ridge-regression
/// estimates of visceral adipose tissue.
#[derive(Parser, Debug)]
#[command(name = "vatest", version)]
struct Cli {
    /// Worker threads for subject- and frame-level parallelism (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract per-subject gait and sleep feature rows from recordings.
    Extract(ExtractArgs),
    /// Cross-validate ridge regression for one or more feature configurations.
    Evaluate(EvaluateArgs),
    /// Fuse prediction files by weighted average and score the result.
    Fuse(FuseArgs),
    /// Write a synthetic cohort with ground truth.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct ExtractArgs {
    /// Directory of recordings: `<subject>__<name>.csv` files or one
    /// subdirectory per subject.
    #[arg(long)]
    recordings: PathBuf,
    /// Restrict extraction to subjects listed in this metadata file.
    #[arg(long)]
    subjects: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Scaling {
    N,
    Raw,
}

impl From<Scaling> for LambdaScaling {
    fn from(s: Scaling) -> Self {
        match s {
            Scaling::N => LambdaScaling::N,
            Scaling::Raw => LambdaScaling::Raw,
        }
    }
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Feature table written by `extract`.
    #[arg(long, conflicts_with = "recordings")]
    feature_table: Option<PathBuf>,
    /// Extract from these recordings first instead of reading a feature table.
    #[arg(long)]
    recordings: Option<PathBuf>,
    #[arg(long)]
    subjects: PathBuf,
    /// Feature configuration, e.g. `gait+sleep+cov`; repeat for several.
    /// Defaults to every class alone plus the block unions.
    #[arg(long = "features")]
    features: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, value_enum, default_value_t = Scaling::N)]
    lambda_scaling: Scaling,
    #[arg(long, default_value_t = 30)]
    repeats: usize,
    #[arg(long, default_value_t = 0.8)]
    train_frac: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3.0)]
    min_gait_hours: f64,
    #[arg(long, default_value_t = 20.0)]
    min_age: f64,
    #[arg(long, default_value_t = 60.0)]
    max_age: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct FuseArgs {
    /// Predictions file, optionally `FILE:CONFIGURATION`; repeat per estimator.
    #[arg(long = "predictions", required = true)]
    predictions: Vec<String>,
    /// Comma-separated weights, one per predictions file, summing to 1.
    #[arg(long, conflicts_with = "weights_file")]
    weights: Option<String>,
    /// File holding the weights, comma or whitespace separated.
    #[arg(long)]
    weights_file: Option<PathBuf>,
    #[arg(long, default_value = "fused")]
    name: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 5)]
    n_subjects: usize,
    #[arg(long, default_value_t = 4)]
    walk_bouts: usize,
    #[arg(long, default_value_t = 90.0)]
    walk_bout_s: f64,
    #[arg(long, default_value_t = 7800.0)]
    sleep_s: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Config(anyhow::Error),
    Data(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) | Failure::Data(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_config_error() {
            Failure::Config(e.into())
        } else {
            Failure::Data(e.into())
        }
    }
}

trait ResultExt<T> {
    fn config(self) -> Result<T, Failure>;
    fn data(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ResultExt<T> for Result<T, E> {
    fn config(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Config(e.into()))
    }
    fn data(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Data(e.into()))
    }
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .config()
}

fn require_exists(path: &Path) -> Result<(), Failure> {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure::Config(anyhow!("{} does not exist", path.display())))
    }
}

fn extract(args: &ExtractArgs, exec: Execution) -> Result<(), Failure> {
    require_exists(&args.recordings)?;
    let mut recordings = discover_recordings(&args.recordings).data()?;
    if let Some(path) = &args.subjects {
        require_exists(path)?;
        let subjects = load_subjects(path).data()?;
        recordings.retain(|id, _| subjects.iter().any(|s| &s.subject_id == id));
    }
    if recordings.is_empty() {
        return Err(Failure::Data(anyhow!("no recordings found in {}", args.recordings.display())));
    }
    ensure_dir(&args.out)?;
    let meta = RunMeta::new("extract", None, &pipeline::extract_config_string(&recordings));
    let out = extract_cohort(&recordings, exec);
    pipeline::write_features(&args.out.join(FEATURES_FILE), &meta, &out.features)?;
    pipeline::write_exclusions(&args.out.join(EXCLUSIONS_FILE), &meta, &out.exclusions)?;
    log::info!(
        "extracted {} of {} subjects; {} exclusion entries",
        out.features.len(),
        recordings.len(),
        out.exclusions.len()
    );
    println!("{}", args.out.join(FEATURES_FILE).display());
    Ok(())
}

fn evaluate(args: &EvaluateArgs, exec: Execution) -> Result<(), Failure> {
    let selections = if args.features.is_empty() {
        FeatureSelection::table_rows()
    } else {
        args.features
            .iter()
            .map(|f| FeatureSelection::parse(f))
            .collect::<Result<Vec<_>, _>>()?
    };
    let cfg = EvaluateConfig {
        cv: CvConfig {
            n_repeats: args.repeats,
            train_frac: args.train_frac,
            seed: args.seed,
            lambda: args.lambda,
            scaling: args.lambda_scaling.into(),
        },
        filter: SubjectFilter {
            min_age_years: args.min_age,
            max_age_years: args.max_age,
            min_gait_hours: args.min_gait_hours,
        },
        selections,
    };
    cfg.cv.validate().config()?;
    require_exists(&args.subjects)?;
    ensure_dir(&args.out)?;

    let table_path = match (&args.feature_table, &args.recordings) {
        (Some(t), _) => {
            require_exists(t)?;
            t.clone()
        }
        (None, Some(dir)) => {
            extract(
                &ExtractArgs {
                    recordings: dir.clone(),
                    subjects: Some(args.subjects.clone()),
                    out: args.out.clone(),
                },
                exec,
            )?;
            args.out.join(FEATURES_FILE)
        }
        (None, None) => return Err(Failure::Config(anyhow!("pass --feature-table or --recordings"))),
    };
    let table = pipeline::read_feature_table(&table_path)?;
    let subjects = load_subjects(&args.subjects).data()?;
    let output = pipeline::evaluate(&table, &subjects, &cfg, exec)?;
    pipeline::write_report(&args.out.join(REPORT_FILE), &output.report)?;
    pipeline::write_predictions(&args.out.join(PREDICTIONS_FILE), &output.report.meta, &output.predictions)?;
    for c in &output.report.configurations {
        let r = &c.result;
        println!(
            "{:<24} n={:<4} spearman {:.3} ± {:.3}  MAE {:.1} ± {:.1} g",
            c.name, c.n_subjects, r.spearman_r.mean, r.spearman_r.std, r.mae_g.mean, r.mae_g.std
        );
    }
    Ok(())
}

fn parse_weights(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().with_context(|| format!("bad weight '{t}'")).config())
        .collect()
}

fn fuse(args: &FuseArgs) -> Result<(), Failure> {
    let weights = match (&args.weights, &args.weights_file) {
        (Some(w), _) => parse_weights(w)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .config()?;
            parse_weights(&text)?
        }
        (None, None) => return Err(Failure::Config(anyhow!("pass --weights or --weights-file"))),
    };
    let mut sets = Vec::new();
    for spec in &args.predictions {
        let (path, configuration) = match spec.rsplit_once(':') {
            Some((p, c)) if !Path::new(spec).exists() => (PathBuf::from(p), Some(c)),
            _ => (PathBuf::from(spec), None),
        };
        require_exists(&path)?;
        sets.push(pipeline::read_predictions(&path, configuration)?);
    }
    let out = pipeline::fuse_prediction_sets(&sets, &weights, &args.name)?;
    ensure_dir(&args.out)?;
    let config = format!("fuse {:?} {:?}", args.predictions, weights);
    let meta = RunMeta::new("fuse", None, &config);
    pipeline::write_predictions(&args.out.join("fused_predictions.csv"), &meta, &out.rows)?;
    let summary = serde_json::json!({
        "meta": meta,
        "weights": weights,
        "inputs": args.predictions,
        "input_metrics": out.input_metrics,
        "fused_metrics": out.metrics,
    });
    let path = args.out.join("fused_metrics.json");
    let mut text = serde_json::to_string_pretty(&summary).expect("json");
    text.push('\n');
    fs::write(&path, text)
        .with_context(|| format!("writing {}", path.display()))
        .data()?;
    let m = out.metrics;
    println!(
        "spearman {:.4}  pearson {:.4}  MAE {:.2} g  RMSE {:.2} g",
        m.spearman, m.pearson, m.mae, m.rmse
    );
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<(), Failure> {
    if args.n_subjects == 0 {
        return Err(Failure::Config(anyhow!("--n-subjects must be positive")));
    }
    let spec = CohortSpec {
        n_subjects: args.n_subjects,
        walk_bouts: args.walk_bouts,
        walk_bout_s: args.walk_bout_s,
        sleep_s: args.sleep_s,
        ..CohortSpec::default()
    };
    let rec_dir = args.out.join("recordings");
    ensure_dir(&rec_dir)?;
    let cohort = gen_cohort(&spec, args.seed);
    for s in &cohort {
        let id = &s.record.subject_id;
        write_recording(&rec_dir.join(format!("{id}__walk.csv")), &s.walk, RecordingFormat::CsvTxyz).data()?;
        write_recording(&rec_dir.join(format!("{id}__sleep.csv")), &s.sleep, RecordingFormat::CsvTxyz).data()?;
    }
    let subjects_path = args.out.join("subjects.csv");
    let file = fs::File::create(&subjects_path)
        .with_context(|| format!("creating {}", subjects_path.display()))
        .data()?;
    let records: Vec<_> = cohort.iter().map(|s| s.record.clone()).collect();
    write_subjects(file, &records).data()?;
    let truth: Vec<&SubjectTruth> = cohort.iter().map(|s| &s.truth).collect();
    let sidecar = serde_json::json!({ "seed": args.seed, "spec": spec, "subjects": truth });
    let mut text = serde_json::to_string_pretty(&sidecar).expect("json");
    text.push('\n');
    fs::write(args.out.join("truth.json"), text).context("writing truth.json").data()?;
    println!("{}", args.out.display());
    Ok(())
}

fn configure_threads(threads: usize) -> Result<(), Failure> {
    #[cfg(feature = "parallel")]
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the worker pool")
            .config()?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads(cli.threads)?;
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match &cli.command {
        Command::Extract(a) => extract(a, exec),
        Command::Evaluate(a) => evaluate(a, exec),
        Command::Fuse(a) => fuse(a),
        Command::Synth(a) => synth(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
