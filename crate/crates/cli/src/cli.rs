use clap::{Args, Parser, Subcommand};
use mutscore::evalbench::{BootstrapScheme, GroupBy};
use mutscore::scoring::DEFAULT_ALPHA;
use std::path::PathBuf;

pub const LONG_VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    "\ntarget: ",
    env!("MUTSCORE_BUILD_TARGET"),
    "\nprofile: ",
    env!("MUTSCORE_BUILD_PROFILE"),
);

#[derive(Debug, Parser)]
#[command(
    name = "mutscore",
    version,
    long_version = LONG_VERSION,
    about = "Zero-shot mutation effect scoring from structure-aware and evolutionary log-probabilities"
)]
pub struct Cli {
    /// key = value file with defaults for subcommand flags
    #[arg(long, global = true, value_name = "FILE", display_order = 900)]
    pub config: Option<PathBuf>,

    /// Worker threads [default: available parallelism]
    #[arg(long, global = true, value_name = "N", env = "MUTSCORE_JOBS", display_order = 901)]
    pub jobs: Option<usize>,

    /// More log output (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count, display_order = 902)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score mutants against a wild type
    Score(ScoreArgs),
    /// Fit a structure codebook from PDB files
    BuildCodebook(BuildCodebookArgs),
    /// Convert an a3m alignment to a2m
    Reformat(ReformatArgs),
    /// Search structural homologs through a Foldseek server
    Retrieve(RetrieveArgs),
    /// Rank-correlation benchmark over one or more assays
    Evaluate(EvaluateArgs),
    /// Benchmark across blend ratios
    SweepAlpha(SweepArgs),
    /// Train the toy language model
    TrainToy(TrainArgs),
}

pub const SUBCOMMANDS: &[&str] = &[
    "score",
    "build-codebook",
    "reformat",
    "retrieve",
    "evaluate",
    "sweep-alpha",
    "train-toy",
];

pub fn parse_alpha(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 1]"))
    }
}

fn parse_positive_secs(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err("must be a positive number of seconds".into())
    }
}

/// Where per-residue native log-probabilities come from.
#[derive(Debug, Clone, Args)]
pub struct NativeArgs {
    /// Precomputed native log-probabilities (CSV, one column per token)
    #[arg(long, value_name = "CSV")]
    pub native_logits: Option<PathBuf>,
    /// Trained model file
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Structure of the wild type, tokenized with --codebook
    #[arg(long, value_name = "PDB")]
    pub pdb: Option<PathBuf>,
    /// Chain to read from --pdb [default: first chain]
    #[arg(long)]
    pub chain: Option<char>,
    #[arg(long, value_name = "FILE")]
    pub codebook: Option<PathBuf>,
    /// Mask each position in turn instead of reading wild-type marginals
    #[arg(long)]
    pub masked_marginals: bool,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Wild-type sequence (first FASTA record)
    #[arg(long, value_name = "FASTA")]
    pub wt_fasta: PathBuf,
    /// CSV listing mutants
    #[arg(long, value_name = "CSV")]
    pub mutants: PathBuf,
    #[arg(long, default_value = "mutant")]
    pub mutant_column: String,
    /// Homolog alignment (.a2m or .a3m)
    #[arg(long, value_name = "FILE")]
    pub alignment: Option<PathBuf>,
    /// Saved Foldseek result document; merged with --alignment if both given
    #[arg(long, value_name = "JSON")]
    pub foldseek_json: Option<PathBuf>,
    /// 0-based query position of the alignment's first column
    #[arg(long)]
    pub column_offset: Option<usize>,
    /// Weight of the evolutionary log-probabilities
    #[arg(long, default_value_t = DEFAULT_ALPHA, value_parser = parse_alpha)]
    pub alpha: f64,
    /// Use evolutionary log-probabilities only (alpha = 1)
    #[arg(long)]
    pub no_native: bool,
    #[command(flatten)]
    pub native: NativeArgs,
    /// Also write the native log-probabilities used
    #[arg(long, value_name = "CSV")]
    pub native_out: Option<PathBuf>,
    #[arg(short, long, value_name = "CSV")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildCodebookArgs {
    /// Training structures
    #[arg(long = "pdb", value_name = "PDB", required = true, num_args = 1..)]
    pub pdbs: Vec<PathBuf>,
    #[arg(long)]
    pub chain: Option<char>,
    /// Number of centroids
    #[arg(long, default_value_t = 64)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Descriptor dimension
    #[arg(long, default_value_t = 256)]
    pub dim: usize,
    #[arg(short, long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReformatArgs {
    #[arg(short, long, value_name = "A3M")]
    pub input: PathBuf,
    /// Check the result against this wild type
    #[arg(long, value_name = "FASTA")]
    pub wt_fasta: Option<PathBuf>,
    #[arg(short, long, value_name = "A2M")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    /// Query structure to upload
    #[arg(long, value_name = "PDB")]
    pub pdb: PathBuf,
    /// Comma-separated database names
    #[arg(long, value_delimiter = ',', default_value = "afdb50")]
    pub databases: Vec<String>,
    #[arg(long, default_value = "3diaa")]
    pub mode: String,
    /// Seconds between status requests
    #[arg(long, default_value_t = 5.0, value_parser = parse_positive_secs)]
    pub poll_interval: f64,
    #[arg(long, default_value_t = 120)]
    pub max_polls: usize,
    /// Server base URL
    #[arg(long, env = "MUTSCORE_FOLDSEEK_URL", default_value = mutscore::retrieval::DEFAULT_FOLDSEEK_URL)]
    pub endpoint: String,
    /// Reuse and store raw results here
    #[arg(long, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Raw result document
    #[arg(short, long, value_name = "JSON")]
    pub output: PathBuf,
    /// Also project the hits onto this wild type and write an a2m
    #[arg(long, value_name = "FASTA", requires = "a2m_out")]
    pub wt_fasta: Option<PathBuf>,
    #[arg(long, value_name = "A2M", requires = "wt_fasta")]
    pub a2m_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GroupingArgs {
    /// protein: mean within proteins then across; flat: plain mean
    #[arg(long, default_value = "protein")]
    pub group_by: GroupBy,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep this fraction of mutants per assay (seeded)
    #[arg(long, value_parser = parse_fraction)]
    pub subsample: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// CSV with assay_id, csv_path, prediction_path and optional protein_key
    #[arg(long, value_name = "CSV", conflicts_with_all = ["truth", "pred"])]
    pub manifest: Option<PathBuf>,
    /// Single assay: experimental scores
    #[arg(long, value_name = "CSV", requires = "pred")]
    pub truth: Option<PathBuf>,
    /// Single assay: predictions (mutant,fitness)
    #[arg(long, value_name = "CSV", requires = "truth")]
    pub pred: Option<PathBuf>,
    #[arg(long, default_value = "mutant")]
    pub mutant_column: String,
    #[arg(long, default_value = "DMS_score")]
    pub score_column: String,
    #[command(flatten)]
    pub grouping: GroupingArgs,
    /// Bootstrap replicates
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    #[arg(long, default_value = "groups")]
    pub bootstrap_scheme: BootstrapScheme,
    /// Report CSV
    #[arg(short, long, value_name = "CSV")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// CSV with assay_id, wt_fasta, alignment, csv_path and optional
    /// protein_key, native_logits, pdb
    #[arg(long, value_name = "CSV")]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_name = "FASTA", conflicts_with = "manifest")]
    pub wt_fasta: Option<PathBuf>,
    #[arg(long, value_name = "FILE", conflicts_with = "manifest")]
    pub alignment: Option<PathBuf>,
    /// Single assay: experimental scores
    #[arg(long, value_name = "CSV", conflicts_with = "manifest")]
    pub assay: Option<PathBuf>,
    #[arg(long, default_value = "mutant")]
    pub mutant_column: String,
    #[arg(long, default_value = "DMS_score")]
    pub score_column: String,
    #[command(flatten)]
    pub native: NativeArgs,
    /// Blend ratios to evaluate
    #[arg(long, value_delimiter = ',', value_parser = parse_alpha,
          default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    pub alphas: Vec<f64>,
    #[command(flatten)]
    pub grouping: GroupingArgs,
    #[arg(short, long, value_name = "CSV")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training structures, tokenized with --codebook
    #[arg(long = "pdb", value_name = "PDB", num_args = 1.., requires = "codebook")]
    pub pdbs: Vec<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub codebook: Option<PathBuf>,
    /// Train on this many generated sequences instead of structures
    #[arg(long, value_name = "N", conflicts_with = "pdbs")]
    pub synthetic: Option<usize>,
    /// Length of generated sequences
    #[arg(long, default_value_t = 40)]
    pub length: usize,
    /// Structure vocabulary of generated sequences
    #[arg(long, default_value_t = 16)]
    pub struct_vocab: usize,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub heads: usize,
    #[arg(long, default_value_t = 16)]
    pub head_dim: usize,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 128)]
    pub ffn_dim: usize,
    #[arg(long, default_value_t = 32)]
    pub rel_window: usize,
    #[arg(long, default_value_t = 0.15)]
    pub mask_rate: f64,
    #[arg(short, long, value_name = "FILE")]
    pub output: PathBuf,
    /// Per-step loss CSV
    #[arg(long, value_name = "CSV")]
    pub loss_log: Option<PathBuf>,
}
