//! Command-line interface.
//!
//! Exit codes: 0 on success (including `--help`/`--version`), 1 on usage
//! errors, 2 on data or solver errors (printed to standard error with the
//! error kind).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::centroid::FlowConfig;
use crate::classifier::{
    load_model, save_model, score_document, train, CentroidMethod, SklSolver, TrainOptions,
};
use crate::corpus::{load_corpus, Distribution, InputFormat, SmoothingConfig, TokenizerConfig};
use crate::divergence::{divergence_profile, profile_to_csv, MeasureKind};
use crate::evaluation::{
    class_distance_table, curve_to_csv, evaluate, learning_curve, report_text, CurveSpec,
};
use crate::{Error, Result};

#[derive(Parser)]
#[command(
    name = "sklnb",
    version,
    about = "Text classification with symmetric-KL class centroids",
    propagate_version = true
)]
struct Cli {
    /// Worker threads (0 = one per core); never changes output bytes
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on a labeled corpus and write it as JSON
    Train(TrainArgs),
    /// Predict labels for documents using a trained model
    Classify(ClassifyArgs),
    /// Score a trained model against a labeled test set
    Evaluate(EvaluateArgs),
    /// Measure accuracy across training fractions and repeats
    Curve(CurveArgs),
    /// Tabulate pairwise symmetric KL distances between class centroids
    Distances(DistancesArgs),
    /// Evaluate divergence measures against a fixed two-bin reference
    Profile(ProfileArgs),
}

/// Which numerical routine computes SKL centroids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SolverChoice {
    Flow,
    Dual,
}

impl FromStr for SolverChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flow" => Ok(SolverChoice::Flow),
            "dual" => Ok(SolverChoice::Dual),
            other => Err(Error::InvalidConfig(format!(
                "unknown solver {other:?} (expected flow or dual)"
            ))),
        }
    }
}

#[derive(Args)]
struct CorpusArgs {
    /// Labeled corpus (.jsonl with {"label","text"} records, or .tsv)
    #[arg(long)]
    input: PathBuf,

    /// Input format; by default inferred from the file extension
    #[arg(long, value_parser = InputFormat::from_str)]
    format: Option<InputFormat>,
}

#[derive(Args)]
struct FitArgs {
    /// Centroid estimator: mean (pooled counts) or skl
    #[arg(long, default_value = "skl", value_parser = CentroidMethod::from_str)]
    centroid: CentroidMethod,

    /// SKL solver: flow (gradient flow) or dual (bisection cross-check)
    #[arg(long, default_value = "flow", value_parser = SolverChoice::from_str)]
    solver: SolverChoice,

    /// Additive smoothing strength
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,

    /// Drop tokens seen fewer times than this across the corpus
    #[arg(long, default_value_t = 1)]
    min_count: u64,

    /// Solver tolerance: gradient norm for flow [default 1e-8], mass gap
    /// for dual [default 1e-12]
    #[arg(long)]
    tol: Option<f64>,

    /// Iteration cap for the flow solver
    #[arg(long, default_value_t = 200_000)]
    max_iters: usize,

    /// Drop tokens shorter than this many characters
    #[arg(long, default_value_t = 1)]
    min_token_length: usize,

    /// Keep the original letter case instead of lowercasing
    #[arg(long, default_value_t = false)]
    keep_case: bool,
}

impl FitArgs {
    fn to_options(&self) -> Result<TrainOptions> {
        let solver = match self.solver {
            SolverChoice::Flow => SklSolver::Flow(FlowConfig {
                tol_grad: self.tol.unwrap_or(1e-8),
                max_iters: self.max_iters,
                ..FlowConfig::default()
            }),
            SolverChoice::Dual => SklSolver::Dual {
                tol: self.tol.unwrap_or(1e-12),
            },
        };
        Ok(TrainOptions {
            tokenizer: TokenizerConfig {
                lowercase: !self.keep_case,
                min_token_length: self.min_token_length,
            },
            smoothing: SmoothingConfig::new(self.alpha)?,
            min_count: self.min_count,
            centroid_method: self.centroid,
            solver,
        })
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    corpus: CorpusArgs,

    /// Where to write the model JSON
    #[arg(long)]
    output: PathBuf,

    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Trained model JSON
    #[arg(long)]
    model: PathBuf,

    #[command(flatten)]
    corpus: CorpusArgs,

    /// Predictions file (JSONL); standard output when omitted
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Trained model JSON
    #[arg(long)]
    model: PathBuf,

    #[command(flatten)]
    corpus: CorpusArgs,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    corpus: CorpusArgs,

    /// Training fractions, comma separated, strictly increasing
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.1,0.2,0.4,0.8",
        num_args = 1..
    )]
    fractions: Vec<f64>,

    /// Stratified resamples per fraction
    #[arg(long, default_value_t = 5)]
    repeats: u32,

    /// Base seed; repeat r uses seed + r * 10007
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Centroid estimators to compare, comma separated
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "mean,skl",
        value_parser = CentroidMethod::from_str,
        num_args = 1..
    )]
    methods: Vec<CentroidMethod>,

    /// CSV destination; standard output when omitted
    #[arg(long)]
    output: Option<PathBuf>,

    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Args)]
struct DistancesArgs {
    /// Trained model JSON
    #[arg(long)]
    model: PathBuf,

    /// Summary CSV destination (label,avg_skl)
    #[arg(long)]
    output: PathBuf,

    /// Pairwise-matrix CSV destination [default: <output stem>_matrix.csv]
    #[arg(long)]
    matrix_output: Option<PathBuf>,
}

#[derive(Args)]
struct ProfileArgs {
    /// Reference distribution, two comma-separated probabilities
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    q: Vec<f64>,

    /// Measures to evaluate, comma separated (kl, skl, cosine, euclidean)
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "skl,cosine,euclidean",
        value_parser = MeasureKind::from_str,
        num_args = 1..
    )]
    measures: Vec<MeasureKind>,

    /// Number of grid points for the first coordinate of p
    #[arg(long, default_value_t = 999)]
    grid: usize,

    /// CSV destination; standard output when omitted
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Parses arguments and executes the chosen subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    if cli.threads > 0 {
        // ignore the error: a pool may already exist when run is called
        // twice in one process, and the pool size never affects results
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            2
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Train(args) => cmd_train(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Curve(args) => cmd_curve(args),
        Command::Distances(args) => cmd_distances(args),
        Command::Profile(args) => cmd_profile(args),
    }
}

fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(path) => std::fs::write(path, content).map_err(|e| Error::File {
            path: path.display().to_string(),
            source: e,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .map_err(|e| Error::File {
                    path: "<stdout>".into(),
                    source: e,
                })
        }
    }
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let docs = load_corpus(&args.corpus.input, args.corpus.format)?;
    let opts = args.fit.to_options()?;
    let model = train(&docs, &opts)?;
    save_model(&model, &args.output)
}

#[derive(Serialize)]
struct Prediction<'a> {
    label: &'a str,
    scores: BTreeMap<&'a str, f64>,
}

fn cmd_classify(args: ClassifyArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let docs = load_corpus(&args.corpus.input, args.corpus.format)?;
    let mut lines = Vec::with_capacity(docs.len());
    for (i, doc) in docs.iter().enumerate() {
        let breakdown = score_document(&model, doc).map_err(|e| match e {
            Error::EmptyDocument => {
                Error::InsufficientData(format!("document {} has no in-vocabulary tokens", i + 1))
            }
            other => other,
        })?;
        let prediction = Prediction {
            label: &breakdown.best().label,
            scores: breakdown
                .scores
                .iter()
                .map(|s| (s.label.as_str(), s.total))
                .collect(),
        };
        let mut line = Vec::new();
        crate::classifier::write_json_sig17(&mut line, &prediction)?;
        lines.push(String::from_utf8(line).expect("serde_json emits UTF-8"));
    }
    let mut content = lines.join("\n");
    content.push('\n');
    write_output(args.output.as_deref(), &content)
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let docs = load_corpus(&args.corpus.input, args.corpus.format)?;
    let report = evaluate(&model, &docs)?;
    write_output(None, &report_text(&report))
}

fn cmd_curve(args: CurveArgs) -> Result<()> {
    let docs = load_corpus(&args.corpus.input, args.corpus.format)?;
    let spec = CurveSpec {
        fractions: args.fractions.clone(),
        repeats: args.repeats,
        seed: args.seed,
        methods: args.methods.clone(),
    };
    let opts = args.fit.to_options()?;
    let rows = learning_curve(&docs, &spec, &opts)?;
    write_output(args.output.as_deref(), &curve_to_csv(&rows))
}

fn default_matrix_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "distances".to_owned());
    output.with_file_name(format!("{stem}_matrix.csv"))
}

fn cmd_distances(args: DistancesArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let tables = class_distance_table(&model)?;
    write_output(Some(&args.output), &tables.summary_csv())?;
    let matrix_path = args
        .matrix_output
        .unwrap_or_else(|| default_matrix_path(&args.output));
    write_output(Some(&matrix_path), &tables.matrix_csv())
}

fn cmd_profile(args: ProfileArgs) -> Result<()> {
    let q = Distribution::new(args.q.clone())?;
    let rows = divergence_profile(&q, &args.measures, args.grid)?;
    write_output(args.output.as_deref(), &profile_to_csv(&rows))
}
