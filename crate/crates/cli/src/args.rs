use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "genderprobe", version, about = "Structural gender-bias probes for masked language models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select probe sentences from a corpus and mask their pronoun.
    Filter(FilterArgs),
    /// Score masked samples against a fill-mask model.
    Audit(AuditArgs),
    /// Summarize audit results and bin their scores.
    Report(ReportArgs),
    /// Compute the WEAT statistic and its permutation p-value.
    Weat(WeatArgs),
    /// Human review of filtered samples.
    #[command(subcommand)]
    Annotate(AnnotateCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// `.csv` files are read as SWAG, anything else as plain text.
    Auto,
    /// SWAG-layout CSV; sentences come from the `sent1` column.
    Swag,
    /// One sentence per line.
    Plain,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FilterArgs {
    /// Corpus file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,
    /// Directory holding the four word lists; the bundled lists are used when omitted.
    #[arg(long)]
    pub lexicon_dir: Option<PathBuf>,
    /// Accepted samples, JSON lines.
    #[arg(long)]
    pub output: PathBuf,
    /// Rejected sentences with their reason, JSON lines.
    #[arg(long)]
    pub rejected: Option<PathBuf>,
    /// `heuristic`, or the URL of a coreference service.
    #[arg(long, env = "GENDERPROBE_COREF_URL", default_value = "heuristic")]
    pub coref: String,
    /// Seconds to wait for the coreference service.
    #[arg(long, default_value_t = 30.0)]
    pub coref_timeout: f64,
    #[arg(long, default_value = "[MASK]")]
    pub mask_token: String,
    /// Accept clusters whose antecedent is "someone".
    #[arg(long)]
    pub allow_someone: bool,
    /// Skip the coreference stage entirely.
    #[arg(long)]
    pub no_coref: bool,
    #[arg(long, default_value_t = 4)]
    pub threads: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AuditArgs {
    /// Masked samples from `filter`, JSON lines.
    #[arg(long)]
    pub input: PathBuf,
    /// Bias results, JSON lines.
    #[arg(long)]
    pub output: PathBuf,
    /// Fill-mask endpoint URL.
    #[arg(long, env = "GENDERPROBE_MLM_ENDPOINT")]
    pub endpoint: Option<String>,
    /// JSON map from masked text to predictions, used instead of an endpoint.
    #[arg(long)]
    pub stub_fixture: Option<PathBuf>,
    /// Bearer token sent to the endpoint.
    #[arg(long, env = "GENDERPROBE_API_TOKEN", hide_env_values = true)]
    #[serde(skip)]
    pub api_token: Option<String>,
    /// Name recorded in every result; defaults to the endpoint or fixture name.
    #[arg(long)]
    pub model_tag: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    /// Half-width of the neutral band around 0.5.
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    /// Below this, the larger gender probability makes a sample undetermined.
    #[arg(long, default_value_t = 0.05)]
    pub min_prob: f64,
    /// Mask token of the audited model.
    #[arg(long, default_value = "[MASK]")]
    pub mask_token: String,
    /// Mask string the samples were written with.
    #[arg(long, default_value = "[MASK]")]
    pub sample_mask: String,
    #[arg(long, default_value_t = 30.0)]
    pub timeout: f64,
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
    #[arg(long)]
    pub lexicon_dir: Option<PathBuf>,
    /// Keep successful results already in the output file and query only the rest.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    /// Bias results, JSON lines.
    #[arg(long)]
    pub input: PathBuf,
    /// Summary and histogram as JSON.
    #[arg(long)]
    pub output: PathBuf,
    /// Histogram as `lower_edge,count` CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = genderprobe_core::report::DEFAULT_BIN_WIDTH)]
    pub bin_width: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WeatArgs {
    /// JSON with keys X, Y, A, B.
    #[arg(long)]
    pub spec: PathBuf,
    /// Word vectors, one word per line followed by its components.
    #[arg(long)]
    pub vectors: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Repartitions drawn when exhaustive enumeration is too large; 0 skips the p-value.
    #[arg(long, default_value_t = 10_000)]
    pub permutations: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum AnnotateCommand {
    /// Serve the labeling API and the review UI.
    Serve(ServeArgs),
    /// Consensus accuracy of a label log.
    Accuracy(AccuracyArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ServeArgs {
    /// Samples under review, JSON lines.
    #[arg(long)]
    pub samples: PathBuf,
    /// Label log; replayed at startup and appended to.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Built UI assets to serve at `/`.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
    #[arg(long, default_value_t = genderprobe_core::annotation::DEFAULT_QUORUM)]
    pub quorum: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AccuracyArgs {
    /// Label log, JSON lines.
    #[arg(long)]
    pub labels: PathBuf,
    /// Samples under review; unlabeled ones then count as not biased.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[arg(long, default_value_t = genderprobe_core::annotation::DEFAULT_QUORUM)]
    pub quorum: usize,
    /// Consensus report as JSON.
    #[arg(long)]
    pub output: Option<PathBuf>,
}
