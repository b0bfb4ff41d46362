//! `metaemb`: synthetic data, training, baselines, embedding and STS
//! evaluation for sentence meta-embeddings.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use metaemb::{CoeffMode, Method, Pooling};

#[derive(Parser)]
#[command(
    name = "metaemb",
    version,
    about = "Sentence meta-embeddings from multiple word-embedding sources"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with a shared latent structure, plus gold pairs.
    Synth(SynthArgs),
    /// Train the unsupervised projection model.
    TrainUnsup(TrainUnsupArgs),
    /// Train projections on gold-scored sentence pairs.
    TrainSup(TrainSupArgs),
    /// Fit the SVD or GCCA baseline.
    FitBaseline(FitArgs),
    /// Write one sentence embedding per corpus sentence.
    Embed(EmbedArgs),
    /// Score sentence embeddings against gold STS pairs.
    Eval(EvalArgs),
    /// Compare analytic and finite-difference gradients on random problems.
    Gradcheck(GradcheckArgs),
    /// Tabulate saved evaluation reports.
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    sources: Option<usize>,
    /// Comma-separated source dimensions.
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    #[arg(long)]
    sentences: usize,
    /// Number of gold pairs written to `pairs.jsonl`.
    #[arg(long, default_value_t = 100)]
    pairs: usize,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 3)]
    min_words: usize,
    #[arg(long, default_value_t = 8)]
    max_words: usize,
    #[arg(long, default_value_t = 40)]
    vocab: usize,
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StsColumnArgs {
    /// 0-based TSV column holding the gold score.
    #[arg(long, default_value_t = 4)]
    score_col: usize,
    #[arg(long, default_value_t = 5)]
    sent_a_col: usize,
    #[arg(long, default_value_t = 6)]
    sent_b_col: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Corpus holding the dev sentences; defaults to the training corpus.
    #[arg(long)]
    dev_corpus: Option<PathBuf>,
    /// Dev pairs (`.jsonl`, or an STS `.tsv` resolved against the dev corpus);
    /// defaults to `pairs.jsonl` inside the dev corpus.
    #[arg(long)]
    dev_pairs: Option<PathBuf>,
    #[command(flatten)]
    columns: StsColumnArgs,
    /// Meta-embedding dimension; defaults to the largest source dimension.
    #[arg(long)]
    dm: Option<usize>,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-2)]
    lr: f64,
    #[arg(long, default_value_t = 1e-4)]
    weight_decay: f64,
    #[arg(long, default_value_t = 512)]
    batch_size: usize,
    #[arg(long, default_value_t = 5)]
    patience: usize,
    #[arg(long, default_value_t = 1.0)]
    init_range: f64,
    #[arg(long, value_enum, default_value_t = PoolArg::Max)]
    pool: PoolArg,
    /// Drop the softmax source weights.
    #[arg(long)]
    unweighted: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Write the per-epoch training log as JSON lines.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct TrainUnsupArgs {
    #[command(flatten)]
    train: TrainArgs,
    #[arg(long, value_enum, default_value_t = CoeffArg::Fixed)]
    coeff_mode: CoeffArg,
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    mu: f64,
    #[arg(long, default_value_t = 0.1)]
    nu: f64,
    #[arg(long, default_value_t = 1.0)]
    xi: f64,
}

#[derive(Args)]
struct TrainSupArgs {
    #[command(flatten)]
    train: TrainArgs,
    /// Gold-scored training pairs (`.jsonl`, or an STS `.tsv`).
    #[arg(long)]
    train_pairs: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, value_enum)]
    method: FitMethod,
    #[arg(long)]
    corpus: PathBuf,
    /// Output dimension; defaults to the largest source dimension.
    #[arg(long)]
    k: Option<usize>,
    /// Pooling used to form the fit sentence vectors.
    #[arg(long, value_enum, default_value_t = PoolArg::Mean)]
    pool: PoolArg,
    /// GCCA ridge; defaults to 1e-3 times the mean covariance diagonal.
    #[arg(long)]
    ridge: Option<f64>,
    /// Divide SVD components by their singular values.
    #[arg(long)]
    whiten: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long, value_enum)]
    pool: PoolArg,
    #[arg(long)]
    corpus: PathBuf,
    /// Trained model, for `unsup` and `sup`.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Fitted basis, for `svd` and `gcca`.
    #[arg(long)]
    basis: Option<PathBuf>,
    /// Source id, for `sse`.
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    embeddings: PathBuf,
    /// Gold pairs: `.jsonl`, or STS `.tsv` files (one subset each, resolved
    /// against `--corpus`).
    #[arg(long, required = true, num_args = 1..)]
    pairs: Vec<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[command(flatten)]
    columns: StsColumnArgs,
    /// Row name in comparison tables; defaults to `<method>-<pooling>`.
    #[arg(long)]
    label: Option<String>,
    /// Column name in comparison tables.
    #[arg(long, default_value = "sts")]
    dataset: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    configs: usize,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PoolArg {
    Mean,
    Max,
}

impl From<PoolArg> for Pooling {
    fn from(p: PoolArg) -> Self {
        match p {
            PoolArg::Mean => Pooling::Mean,
            PoolArg::Max => Pooling::Max,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CoeffArg {
    Fixed,
    Learnable,
}

impl From<CoeffArg> for CoeffMode {
    fn from(c: CoeffArg) -> Self {
        match c {
            CoeffArg::Fixed => CoeffMode::Fixed,
            CoeffArg::Learnable => CoeffMode::Learnable,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FitMethod {
    Svd,
    Gcca,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Sse,
    Conc,
    Avg,
    Svd,
    Gcca,
    Unsup,
    Sup,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Sse => Method::Sse,
            MethodArg::Conc => Method::Conc,
            MethodArg::Avg => Method::Avg,
            MethodArg::Svd => Method::Svd,
            MethodArg::Gcca => Method::Gcca,
            MethodArg::Unsup => Method::Unsup,
            MethodArg::Sup => Method::Sup,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            eprintln!("{}", rendered.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::TrainUnsup(a) => commands::train_unsup(a),
        Command::TrainSup(a) => commands::train_sup(a),
        Command::FitBaseline(a) => commands::fit_baseline(a),
        Command::Embed(a) => commands::embed(a),
        Command::Eval(a) => commands::eval(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", diagnostic(&e));
            ExitCode::FAILURE
        }
    }
}

/// The error chain on one line, skipping causes already quoted by their parent.
fn diagnostic(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out.replace('\n', " ")
}
