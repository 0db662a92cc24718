//! `dialprog`: ingest → embed → acceptability → GDS → PF → planning → evaluation.

mod artifact;
mod commands;
mod providers;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dialprog_core::{Metric, ProbScaling, ProximityConfig};
use serde::Serialize;

use providers::ProviderArgs;

const EXIT_VALIDATION: u8 = 1;
const EXIT_PROVIDER: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(name = "dialprog", version, about = "Dialogue progression modelling and rollout planning")]
struct Cli {
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load (or synthesise) a corpus, optionally filter it, write JSONL.
    Ingest(IngestArgs),
    /// Embed every utterance into the cache.
    Embed(EmbedArgs),
    /// Split, standardise, fit the acceptability profile and score dialogues.
    Acceptability(AcceptabilityArgs),
    #[command(subcommand)]
    Gds(GdsCommand),
    /// Alias of `gds map`.
    Map(MapArgs),
    #[command(subcommand)]
    Pf(PfCommand),
    #[command(subcommand)]
    Plan(PlanCommand),
    #[command(subcommand)]
    Eval(EvalCommand),
    #[command(subcommand)]
    Tune(TuneCommand),
}

#[derive(Debug, Subcommand)]
enum GdsCommand {
    /// Fit the dialogue state space on a scored training corpus.
    Train(GdsTrainArgs),
    /// Render the 2-D map of a fitted model.
    Map(MapArgs),
}

#[derive(Debug, Subcommand)]
enum PfCommand {
    /// Progression after every utterance of one dialogue.
    Curve(PfCurveArgs),
    /// Slope and final progression for every dialogue.
    Score(PfScoreArgs),
}

#[derive(Debug, Subcommand)]
enum PlanCommand {
    /// Pick the next persuader response for a history.
    Respond(PlanRespondArgs),
    /// Continue seed dialogues with the generator playing both roles.
    Selfplay(SelfPlayArgs),
}

#[derive(Debug, Subcommand)]
enum EvalCommand {
    /// PF against acceptability: MAE and slope correlations.
    Auto(EvalAutoArgs),
    /// PF curves against cumulative human ratings.
    Manual(EvalManualArgs),
}

#[derive(Debug, Subcommand)]
enum TuneCommand {
    /// Grid search over pooling, reduction, clustering and proximity settings.
    Grid(TuneGridArgs),
}

#[derive(Debug, Args, Serialize)]
struct IngestArgs {
    /// Input corpus (JSONL, one dialogue per line).
    #[arg(long, required_unless_present = "synthetic", conflicts_with = "synthetic")]
    corpus: Option<PathBuf>,
    /// Generate a synthetic corpus with this many dialogues instead.
    #[arg(long)]
    synthetic: Option<usize>,
    /// With --synthetic, also write a matching scripted generator tree.
    #[arg(long, requires = "synthetic")]
    #[serde(skip)]
    scripted_tree: Option<PathBuf>,
    /// Keep dialogues whose primary attribute lies in [--lower, --upper] and
    /// drop persuadees who pledged money but gave nothing.
    #[arg(long)]
    filter: bool,
    #[arg(long, default_value = "donation")]
    primary: String,
    #[arg(long, default_value_t = 0.0)]
    lower: f64,
    #[arg(long, default_value_t = 2.0)]
    upper: f64,
    /// Add er_sentiment/ee_sentiment attributes from the provider's /sentiment endpoint.
    #[arg(long, requires = "provider_url")]
    sentiment: bool,
    #[arg(long, env = "DP_PROVIDER_URL")]
    provider_url: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct EmbedArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    provider: ProviderArgs,
}

#[derive(Debug, Args, Serialize)]
struct AcceptabilityArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "donation")]
    primary: String,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for train/test corpora, profile and weights.
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Method {
    Kmeans,
    Hdbscan,
}

#[derive(Debug, Clone, Args, Serialize)]
struct ProximityArgs {
    /// Use -distance instead of 1/distance as Euclidean proximity.
    #[arg(long)]
    no_inverse_distance: bool,
    /// z-score proximities across clusters before the softmax.
    #[arg(long)]
    standardized: bool,
    #[arg(long, default_value = "sum", value_parser = clap::value_parser!(ProbScaling))]
    prob_scaling: ProbScaling,
}

impl ProximityArgs {
    fn config(&self) -> ProximityConfig {
        ProximityConfig {
            inverse_distance: !self.no_inverse_distance,
            standardized: self.standardized,
            prob_scaling: self.prob_scaling,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct GdsTrainArgs {
    /// Training corpus with an `acceptability` attribute.
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    provider: ProviderArgs,
    #[arg(long, value_enum, default_value_t = Method::Kmeans)]
    method: Method,
    #[arg(long, default_value_t = 21)]
    k: usize,
    #[arg(long, default_value_t = 10)]
    n_init: usize,
    #[arg(long, default_value_t = 10)]
    min_cluster_size: usize,
    /// Recency weight of utterance pooling.
    #[arg(long, default_value_t = 0.3)]
    beta: f64,
    #[arg(long)]
    no_normalize: bool,
    /// Reduce pooled embeddings to this many dimensions.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value = "euclidean", value_parser = clap::value_parser!(Metric))]
    metric: Metric,
    #[command(flatten)]
    proximity: ProximityArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct MapArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, required_unless_present = "csv")]
    #[serde(skip)]
    svg: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    csv: Option<PathBuf>,
    /// Corpus holding the dialogue to overlay as a path.
    #[arg(long, requires = "dialogue")]
    corpus: Option<PathBuf>,
    #[arg(long, requires = "corpus")]
    dialogue: Option<String>,
    #[command(flatten)]
    provider: ProviderArgs,
}

#[derive(Debug, Args, Serialize)]
struct PfCurveArgs {
    /// Fitted model; not needed with --pf-provider-url.
    #[arg(long, required_unless_present = "pf_provider_url")]
    model: Option<PathBuf>,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    dialogue: String,
    #[command(flatten)]
    provider: ProviderArgs,
    /// Score with a remote progression model instead of the GDS model.
    #[arg(long)]
    pf_provider_url: Option<String>,
    /// Curve CSV (turn,value,fit).
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct PfScoreArgs {
    #[arg(long, required_unless_present = "pf_provider_url")]
    model: Option<PathBuf>,
    #[arg(long)]
    corpus: PathBuf,
    /// Score only this dialogue.
    #[arg(long)]
    dialogue: Option<String>,
    #[command(flatten)]
    provider: ProviderArgs,
    #[arg(long)]
    pf_provider_url: Option<String>,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct GeneratorArgs {
    /// Scripted generator tree (JSON); overrides the provider's /generate.
    #[arg(long)]
    scripted: Option<PathBuf>,
    /// Without a provider URL or script, replay corpus utterances.
    #[arg(long)]
    sample_corpus: bool,
}

#[derive(Debug, Args, Serialize)]
struct PlanRespondArgs {
    #[arg(long, required_unless_present = "pf_provider_url")]
    model: Option<PathBuf>,
    /// History as a JSON array of {speaker, text}.
    #[arg(long, required_unless_present = "dialogue", conflicts_with = "dialogue")]
    history: Option<PathBuf>,
    /// Take the history from this corpus dialogue.
    #[arg(long, requires = "dialogue")]
    corpus: Option<PathBuf>,
    #[arg(long, requires = "corpus")]
    dialogue: Option<String>,
    /// Number of leading utterances of --dialogue used as history.
    #[arg(long)]
    context: Option<usize>,
    /// `none` or candidates x rollouts x utterances, e.g. 2x2x3.
    #[arg(long, default_value = "2x2x3")]
    mode: String,
    #[command(flatten)]
    generator: GeneratorArgs,
    #[command(flatten)]
    provider: ProviderArgs,
    #[arg(long)]
    pf_provider_url: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SelfPlayArgs {
    #[arg(long, required_unless_present = "pf_provider_url")]
    model: Option<PathBuf>,
    /// Seed dialogues.
    #[arg(long)]
    corpus: PathBuf,
    /// Use only the first N seed dialogues.
    #[arg(long)]
    dialogues: Option<usize>,
    #[arg(long, default_value_t = 10)]
    context: usize,
    #[arg(long, default_value_t = 10)]
    turns: usize,
    #[arg(long, default_value = "none")]
    mode: String,
    /// Number of repetitions, each with its own derived seed.
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    /// Score generated utterances with the provider's /sentiment endpoint.
    #[arg(long, requires = "provider_url")]
    sentiment: bool,
    #[command(flatten)]
    generator: GeneratorArgs,
    #[command(flatten)]
    provider: ProviderArgs,
    #[arg(long)]
    pf_provider_url: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct EvalAutoArgs {
    #[arg(long)]
    model: PathBuf,
    /// Held-out corpus with an `acceptability` attribute.
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    provider: ProviderArgs,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
    /// Per-dialogue slopes and final values.
    #[arg(long)]
    #[serde(skip)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct EvalManualArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    /// Ratings JSONL: {dialogue_id, annotator, ratings}.
    #[arg(long)]
    annotations: PathBuf,
    #[command(flatten)]
    provider: ProviderArgs,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct TuneGridArgs {
    /// Grid specification (JSON); omitted fields take the full default grid.
    #[arg(long)]
    spec: PathBuf,
    /// Training corpus with an `acceptability` attribute; a validation part is split off.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    val_fraction: f64,
    #[command(flatten)]
    provider: ProviderArgs,
    /// Evaluate configurations one at a time.
    #[arg(long)]
    serial: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    csv: Option<PathBuf>,
    /// Refit the best configuration on the whole corpus and save it here.
    #[arg(long)]
    #[serde(skip)]
    model_out: Option<PathBuf>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let provider = err
        .chain()
        .filter_map(|e| e.downcast_ref::<dialprog_core::Error>())
        .any(dialprog_core::Error::is_provider);
    if provider {
        EXIT_PROVIDER
    } else {
        EXIT_VALIDATION
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
