//! `scriptgap` command-line front end.

mod commands;
mod support;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use support::{Io, Manifest, Status};

#[derive(Debug, Parser)]
#[command(
    name = "scriptgap",
    version,
    about = "Measure retrieval quality gaps between native-script and romanized queries"
)]
struct Cli {
    /// Write a JSON record of inputs, outputs, seeds and table versions here.
    #[arg(long, global = true, value_name = "FILE")]
    manifest: Option<PathBuf>,

    /// Worker threads for parallel ranking (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Romanize text lines or a `qid<TAB>text` query file.
    Romanize(RomanizeArgs),
    /// Build a BM25 index from a `docno<TAB>text` collection.
    Index(IndexArgs),
    /// Rank a query file against an index and write a TREC run.
    Search(SearchArgs),
    /// Print an index in readable form.
    DumpIndex(DumpIndexArgs),
    /// Score a run against qrels.
    Evaluate(EvaluateArgs),
    /// Compare native and romanized runs of the same queries.
    GapReport(GapReportArgs),
    /// Top-k overlap between two runs.
    Overlap(OverlapArgs),
    /// Produce native, mixed or fully romanized training queries.
    MixTrain(MixTrainArgs),
    /// Generate a synthetic corpus with queries, qrels and triples.
    GenSynth(GenSynthArgs),
    /// Train the toy hashed-trigram encoder.
    TrainToy(TrainToyArgs),
    /// Rank queries with a trained toy encoder.
    RankToy(RankToyArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Romanize(_) => "romanize",
            Command::Index(_) => "index",
            Command::Search(_) => "search",
            Command::DumpIndex(_) => "dump-index",
            Command::Evaluate(_) => "evaluate",
            Command::GapReport(_) => "gap-report",
            Command::Overlap(_) => "overlap",
            Command::MixTrain(_) => "mix-train",
            Command::GenSynth(_) => "gen-synth",
            Command::TrainToy(_) => "train-toy",
            Command::RankToy(_) => "rank-toy",
        }
    }
}

#[derive(Debug, Args)]
struct TableArgs {
    /// Rule table file; repeat for several scripts. Overrides $SCRIPTGAP_TABLES.
    #[arg(long = "table", value_name = "FILE")]
    tables: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct RomanizeArgs {
    /// Input file, `-` for stdin.
    #[arg(long, short, default_value = "-")]
    input: PathBuf,
    /// Output file (default stdout).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Treat input as `qid<TAB>text` and romanize only the text.
    #[arg(long)]
    queries: bool,
    /// Lowercase the output.
    #[arg(long)]
    lowercase: bool,
    /// Fail when more unmapped characters than this remain.
    #[arg(long, value_name = "N")]
    max_unmapped: Option<usize>,
    #[command(flatten)]
    tables: TableArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TokenizerArg {
    Word,
    HanChar,
    Ngram,
}

#[derive(Debug, Args)]
struct IndexArgs {
    /// `docno<TAB>text` collection.
    #[arg(long)]
    docs: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "word")]
    tokenizer: TokenizerArg,
    /// n for the `ngram` tokenizer.
    #[arg(long, default_value_t = 3)]
    ngram: usize,
    /// Keep case instead of lowercasing terms.
    #[arg(long)]
    cased: bool,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(long)]
    index: PathBuf,
    /// `qid<TAB>text` query file.
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, short, default_value_t = 1000)]
    k: usize,
    #[arg(long, default_value_t = 0.9)]
    k1: f64,
    #[arg(long, default_value_t = 0.4)]
    b: f64,
    /// Run tag written in the last column.
    #[arg(long, default_value = "bm25")]
    tag: String,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DumpIndexArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Kv,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    /// Measure such as `mrr@10`, `recall@1000`, `ndcg@20`, `ndcg_exp@20`; repeatable.
    #[arg(long = "metric", default_values = ["mrr@10", "recall@1000"])]
    metrics: Vec<String>,
    /// Include per-query values.
    #[arg(long)]
    per_query: bool,
    /// Reject runs with rank gaps or increasing scores.
    #[arg(long)]
    strict: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GapReportArgs {
    /// Run of the native-script queries.
    #[arg(long)]
    native: PathBuf,
    /// Run of the romanized queries.
    #[arg(long)]
    translit: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long, default_value = "mrr@10")]
    metric: String,
    /// Size of the comparison family for Bonferroni correction.
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long)]
    strict: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OverlapArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, short, default_value_t = 10)]
    k: usize,
    /// Count queries whose overlap is at or below this value.
    #[arg(long, default_value_t = 3)]
    threshold: usize,
    #[arg(long)]
    per_query: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MixTrainArgs {
    /// `qid<TAB>text` training queries.
    #[arg(long)]
    queries: PathBuf,
    /// `N`, `50` or `T`.
    #[arg(long, default_value = "50")]
    config: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Romanize exactly half (rounded up) of the queries.
    #[arg(long)]
    exact_half: bool,
    #[arg(long, value_name = "N")]
    max_unmapped: Option<usize>,
    #[command(flatten)]
    tables: TableArgs,
    /// Mixed query file; a `<out>.meta.json` sidecar is written next to it.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScriptArg {
    Cyrillic,
    Han,
}

#[derive(Debug, Args)]
struct GenSynthArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    n_docs: usize,
    #[arg(long, default_value_t = 30)]
    doc_len: usize,
    #[arg(long, default_value_t = 200)]
    n_queries: usize,
    #[arg(long, default_value_t = 4)]
    query_len: usize,
    /// Held-out evaluation queries drawn from the same documents.
    #[arg(long, default_value_t = 200)]
    n_eval: usize,
    #[arg(long, value_enum, default_value = "cyrillic")]
    script: ScriptArg,
    /// Directory for docs.tsv, queries.tsv, qrels.txt, triples.tsv,
    /// eval_queries.tsv and eval_qrels.txt.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct TrainToyArgs {
    #[arg(long)]
    docs: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    /// `qid<TAB>pos_docno<TAB>neg_docno` triples.
    #[arg(long)]
    triples: PathBuf,
    /// Mix applied to the training queries: `N`, `50` or `T`.
    #[arg(long, default_value = "N")]
    config: String,
    /// Seeds initialisation, batch order and the mix.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 0.05)]
    temperature: f64,
    #[arg(long, default_value_t = 1 << 15)]
    hash_dim: usize,
    #[arg(long, default_value_t = 64)]
    emb_dim: usize,
    #[arg(long, default_value_t = 3)]
    ngram: usize,
    /// Check the analytic gradient on the first batch before training.
    #[arg(long)]
    grad_check: bool,
    #[command(flatten)]
    tables: TableArgs,
    /// Checkpoint file.
    #[arg(long, short)]
    out: PathBuf,
    /// `epoch<TAB>mean_loss` log (default stdout).
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RankToyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    docs: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, short, default_value_t = 1000)]
    k: usize,
    #[arg(long, default_value = "toy")]
    tag: String,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(Status::Usage as u8) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.status as u8)
        }
    }
}

fn run(cli: Cli, argv: Vec<String>) -> support::CmdResult {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(support::usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| support::usage(format!("--threads: {e}")))?;
    }
    let mut io = Io { manifest: Manifest::new(argv, cli.command.name()) };
    match &cli.command {
        Command::Romanize(a) => commands::romanize(&mut io, a)?,
        Command::Index(a) => commands::index(&mut io, a)?,
        Command::Search(a) => commands::search(&mut io, a)?,
        Command::DumpIndex(a) => commands::dump_index(&mut io, a)?,
        Command::Evaluate(a) => commands::evaluate(&mut io, a)?,
        Command::GapReport(a) => commands::gap_report(&mut io, a)?,
        Command::Overlap(a) => commands::overlap(&mut io, a)?,
        Command::MixTrain(a) => commands::mix_train(&mut io, a)?,
        Command::GenSynth(a) => commands::gen_synth(&mut io, a)?,
        Command::TrainToy(a) => commands::train_toy(&mut io, a)?,
        Command::RankToy(a) => commands::rank_toy(&mut io, a)?,
    }
    if let Some(path) = &cli.manifest {
        std::fs::write(path, io.manifest.to_json()).map_err(|e| support::Failure {
            status: Status::Input,
            error: anyhow::anyhow!("writing {}: {e}", path.display()),
        })?;
    }
    Ok(())
}
