use std::path::PathBuf;

use affecton_core::decoder::{AffectTarget, Renorm};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "affecton", version, about = "Affect-steered decoding pipeline")]
pub struct Cli {
    /// Root for relative paths.
    #[arg(long, env = "AFFECTON_DATA_DIR", global = true)]
    pub data_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the generator model, and optionally a reference model on a held-out split.
    Train(TrainArgs),
    /// Generate a response to one source utterance.
    Generate(GenerateArgs),
    /// Rewrite every response of a corpus toward a target.
    Map(MapArgs),
    /// Valence, perplexity and BLEU for mapped corpora.
    Eval(EvalArgs),
    /// Pick the most-changed pairs per target and write rating items.
    Select(SelectArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Pair TSV: id, source, response.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Also train a reference model on the held-out part of the split.
    #[arg(long)]
    pub ref_model: Option<PathBuf>,
    /// Fraction of pairs used for the generator when --ref-model is given.
    #[arg(long, default_value_t = 0.5)]
    pub split: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..=5))]
    pub order: u8,
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RenormArg {
    Softmax,
    Sum,
}

impl From<RenormArg> for Renorm {
    fn from(r: RenormArg) -> Self {
        match r {
            RenormArg::Softmax => Renorm::SoftmaxLiteral,
            RenormArg::Sum => Renorm::SumRenormalize,
        }
    }
}

#[derive(Debug, Args)]
pub struct SteeringArgs {
    /// Preset (LML, LLL, MLM, HHH) or "v,a,d" with each value in [0, 1].
    #[arg(long, value_parser = parse_target)]
    pub target: AffectTarget,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, default_value_t = 30)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = RenormArg::Softmax)]
    pub renorm: RenormArg,
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    #[arg(long, required_unless_present = "server")]
    pub model: Option<PathBuf>,
    #[arg(long, required_unless_present = "server")]
    pub lexicon: Option<PathBuf>,
    /// Extra token-to-lemma exceptions, one `token<TAB>lemma` per line.
    #[arg(long)]
    pub lemmas: Option<PathBuf>,
    /// Run on a service at this URL instead of in-process.
    #[arg(long)]
    pub server: Option<String>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub engine: EngineArgs,
    #[command(flatten)]
    pub steering: SteeringArgs,
    #[arg(long, default_value_t = affecton_core::decoder::DEFAULT_MAX_LEN)]
    pub max_len: usize,
    /// Write one JSON record per decoding step.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    pub source: String,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[command(flatten)]
    pub engine: EngineArgs,
    #[command(flatten)]
    pub steering: SteeringArgs,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Mapped TSV: id, target, original, mapped.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
    /// n-gram order of the reported mean difference.
    #[arg(long, default_value_t = 2)]
    pub ngram: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub ref_model: PathBuf,
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub lemmas: Option<PathBuf>,
    /// JSON report destination; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Mapped TSV files, one target each.
    #[arg(required = true)]
    pub mapped: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Pair TSV supplying the preceding utterance of each item.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Golden TSV: id, positive, negative.
    #[arg(long)]
    pub golden: Option<PathBuf>,
    #[arg(long, default_value_t = 60)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub ngram: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(required = true)]
    pub mapped: Vec<PathBuf>,
}

fn parse_target(s: &str) -> Result<AffectTarget, String> {
    s.parse()
        .map_err(|e: affecton_core::decoder::DecodeError| e.to_string())
}
