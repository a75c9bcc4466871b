//! `pwe` — train and evaluate part-of-speech weighted word embeddings.
//!
//! Subcommands cover the full pipeline: `vocab` builds a frequency/tag
//! vocabulary from a tagged corpus, `train` fits vectors with the weighted
//! model or a cbow/sg baseline, `eval` scores analogy and similarity sets,
//! `purity` clusters frequent words and scores them against coarse
//! part-of-speech groups, and `export` dumps coordinates for plotting.
//!
//! Reports go to standard output as JSON; progress and logs go to standard
//! error. Every file-producing subcommand writes a `<output>.manifest.json`
//! beside its output with the resolved flags, seed, and input checksums, so
//! a run can be reproduced exactly from its artifacts.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sha2::{Digest, Sha256};

use pwe::corpus::{build_vocabulary, ParseOptions, TagSet, TagStats, Vocabulary};
use pwe::eval::{
    cluster_purity, coarse_tag, eval_analogy, eval_similarity, export_coords, kmeans, load_analogy,
    load_similarity, CoarseGroup, EvalReport,
};
use pwe::io::{
    load_vectors_binary, load_vectors_text, load_vocab, save_phi, save_vectors_binary,
    save_vectors_text, save_vocab, WordVectors,
};
use pwe::model::ModelKind;
use pwe::negative::{NegativeTable, DEFAULT_ALPHA, DEFAULT_TABLE_SIZE};
use pwe::trainer::{train, TrainOptions};

#[derive(Parser)]
#[command(
    name = "pwe",
    version,
    about = "Part-of-speech weighted word embeddings: training and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a vocabulary with per-word tag statistics from a corpus
    Vocab(VocabArgs),
    /// Train word vectors on a tagged corpus
    Train(TrainArgs),
    /// Score a vectors file on an analogy or similarity dataset
    Eval(EvalArgs),
    /// Cluster the most frequent words and score part-of-speech purity
    Purity(PurityArgs),
    /// Export word coordinates with coarse part-of-speech groups
    Export(ExportArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    Pwe,
    Cbow,
    Sg,
}

impl Model {
    fn kind(self) -> ModelKind {
        match self {
            Model::Pwe => ModelKind::Pwe,
            Model::Cbow => ModelKind::Cbow,
            Model::Sg => ModelKind::SkipGram,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Model::Pwe => "pwe",
            Model::Cbow => "cbow",
            Model::Sg => "sg",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Analogy,
    Sim,
}

#[derive(Args)]
struct VocabArgs {
    /// Corpus file: one sentence per line, tokens as word_TAG
    corpus: PathBuf,
    /// Drop words seen fewer than this many times
    #[arg(long, default_value_t = 50)]
    min_count: u64,
    /// Corpus is untagged plain text; every token gets the catch-all tag
    #[arg(long)]
    plain: bool,
    /// Keep original case instead of lowercasing words
    #[arg(long)]
    no_lowercase: bool,
    /// Output vocabulary file
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Corpus file: one sentence per line, tokens as word_TAG
    corpus: PathBuf,
    /// Vocabulary file produced by `pwe vocab`
    #[arg(long)]
    vocab: PathBuf,
    /// Model variant to train
    #[arg(long, value_enum, default_value_t = Model::Pwe)]
    model: Model,
    /// Vector dimensionality
    #[arg(long, default_value_t = 300)]
    dim: usize,
    /// Context window size
    #[arg(long, default_value_t = 5)]
    window: usize,
    /// Negative samples per example
    #[arg(long, default_value_t = 5)]
    negatives: usize,
    /// Initial learning rate
    #[arg(long, default_value_t = 0.025)]
    lr0: f64,
    /// Training passes over the corpus
    #[arg(long, default_value_t = 1)]
    epochs: usize,
    /// Parallel training threads
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Seed for initialization and sampling
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Subsample frequent words with this threshold (e.g. 1e-4)
    #[arg(long)]
    subsample: Option<f64>,
    /// Draw each center's window size from {1..window} (default for cbow/sg)
    #[arg(long, overrides_with = "no_dynamic_window")]
    dynamic_window: bool,
    /// Use the full window at every position (default for pwe)
    #[arg(long, overrides_with = "dynamic_window")]
    no_dynamic_window: bool,
    /// Learn position-dependent tag-pair weights (pwe only; on by default)
    #[arg(long, overrides_with = "no_phi")]
    phi: bool,
    /// Freeze the tag-pair weights at 1 (pwe ablation)
    #[arg(long, overrides_with = "phi")]
    no_phi: bool,
    /// Corpus is untagged plain text; every token gets the catch-all tag
    #[arg(long)]
    plain: bool,
    /// Keep original case instead of lowercasing words
    #[arg(long)]
    no_lowercase: bool,
    /// Write vectors in the binary format instead of text
    #[arg(long)]
    binary: bool,
    /// Suppress progress reporting
    #[arg(long)]
    quiet: bool,
    /// Output vectors file
    #[arg(long, short)]
    out: PathBuf,
    /// Output file for the learned tag-pair weights (default: <out>.phi)
    #[arg(long)]
    phi_out: Option<PathBuf>,
    /// Also write the output-side matrix to this file, same format
    #[arg(long)]
    w2_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Vectors file to score
    #[arg(long)]
    vectors: PathBuf,
    /// Dataset file: analogy questions or scored word pairs
    #[arg(long)]
    dataset: PathBuf,
    /// What the dataset contains
    #[arg(long, value_enum)]
    mode: Mode,
    /// Vectors file is in the binary format
    #[arg(long)]
    binary: bool,
    /// Threads for answering analogy questions
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct PurityArgs {
    /// Vectors file to cluster
    #[arg(long)]
    vectors: PathBuf,
    /// Vocabulary file with tag statistics, from `pwe vocab`
    #[arg(long)]
    vocab: PathBuf,
    /// Cluster this many of the most frequent words
    #[arg(long, default_value_t = 500)]
    top_n: usize,
    /// Number of clusters
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Seed for centroid initialization
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Vectors file is in the binary format
    #[arg(long)]
    binary: bool,
}

#[derive(Args)]
struct ExportArgs {
    /// Vectors file to export from
    #[arg(long)]
    vectors: PathBuf,
    /// Vocabulary file with tag statistics, from `pwe vocab`
    #[arg(long)]
    vocab: PathBuf,
    /// Export this many of the most frequent words
    #[arg(long, default_value_t = 500)]
    top_n: usize,
    /// Vectors file is in the binary format
    #[arg(long)]
    binary: bool,
    /// Output coordinates file
    #[arg(long, short)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Vocab(args) => cmd_vocab(&args),
        Command::Train(args) => cmd_train(&args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Purity(args) => cmd_purity(&args),
        Command::Export(args) => cmd_export(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| {
        format!("cannot open {}", path.display())
    })?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("cannot create {}", path.display())
    })?))
}

fn sha256_hex(path: &Path) -> Result<String> {
    let mut file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut hasher = Sha256::new();
    std::io::copy(&mut file, &mut hasher)?;
    let mut hex = String::with_capacity(64);
    for byte in hasher.finalize() {
        hex.push_str(&format!("{byte:02x}"));
    }
    Ok(hex)
}

/// Write the run manifest beside an output file as `<name>.manifest.json`.
fn write_manifest(out: &Path, manifest: &serde_json::Value) -> Result<()> {
    let mut name = out
        .file_name()
        .with_context(|| format!("output path {} has no file name", out.display()))?
        .to_os_string();
    name.push(".manifest.json");
    let path = out.with_file_name(name);
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn load_vectors(path: &Path, binary: bool) -> Result<WordVectors<f32>> {
    let name = path.display().to_string();
    let reader = open(path)?;
    let vectors = if binary {
        load_vectors_binary(reader, &name)?
    } else {
        load_vectors_text(reader, &name)?
    };
    Ok(vectors)
}

fn load_vocab_file(path: &Path, tags: &TagSet) -> Result<(Vocabulary, TagStats)> {
    let name = path.display().to_string();
    let reader = open(path)?;
    Ok(load_vocab(reader, tags, &name)?)
}

fn print_report(report: &EvalReport) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(report)?);
    Ok(())
}

fn cmd_vocab(args: &VocabArgs) -> Result<()> {
    let tags = TagSet::penn_treebank();
    let opts = ParseOptions {
        plain: args.plain,
        lowercase: !args.no_lowercase,
    };
    let (vocab, stats) = build_vocabulary(open(&args.corpus)?, args.min_count, &opts, &tags)?;

    let mut out = create(&args.out)?;
    save_vocab(&vocab, &stats, &tags, &mut out)?;
    out.flush()?;

    write_manifest(
        &args.out,
        &json!({
            "command": "vocab",
            "corpus": args.corpus.display().to_string(),
            "corpus_sha256": sha256_hex(&args.corpus)?,
            "min_count": args.min_count,
            "plain": args.plain,
            "lowercase": !args.no_lowercase,
            "out": args.out.display().to_string(),
        }),
    )?;
    eprintln!(
        "kept {} words covering {} tokens -> {}",
        vocab.len(),
        vocab.total_tokens(),
        args.out.display()
    );
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let kind = args.model.kind();
    if args.phi && kind != ModelKind::Pwe {
        bail!("--phi requires --model pwe; the baselines have no tag-pair weights");
    }

    let tags = TagSet::penn_treebank();
    let (vocab, _stats) = load_vocab_file(&args.vocab, &tags)?;

    let mut options = TrainOptions::new(kind);
    options.config.dim = args.dim;
    options.config.window = args.window;
    options.config.negatives = args.negatives;
    options.config.lr0 = args.lr0;
    options.config.epochs = args.epochs;
    options.config.seed = args.seed;
    if args.dynamic_window || args.no_dynamic_window {
        options.config.dynamic_window = args.dynamic_window;
    }
    if kind == ModelKind::Pwe && (args.phi || args.no_phi) {
        options.config.phi_enabled = args.phi;
    }
    options.workers = args.workers;
    options.subsample = args.subsample;
    options.parse = ParseOptions {
        plain: args.plain,
        lowercase: !args.no_lowercase,
    };
    options.quiet = args.quiet;

    let table_size = DEFAULT_TABLE_SIZE.max(vocab.len());
    let table = NegativeTable::build(&vocab, DEFAULT_ALPHA, table_size)?;

    let output = train::<f32>(&args.corpus, &vocab, &tags, &table, &options)?;

    let vectors = WordVectors::from_model(&vocab, args.dim, output.model.input());
    let mut out = create(&args.out)?;
    if args.binary {
        save_vectors_binary(&vectors, &mut out)?;
    } else {
        save_vectors_text(&vectors, &mut out)?;
    }
    out.flush()?;
    eprintln!(
        "saved {} vectors (dim {}) -> {}",
        vectors.len(),
        args.dim,
        args.out.display()
    );

    let phi_path = if kind == ModelKind::Pwe {
        let path = args
            .phi_out
            .clone()
            .unwrap_or_else(|| args.out.with_extension("phi"));
        let mut out = create(&path)?;
        save_phi(&output.phi, &mut out)?;
        out.flush()?;
        eprintln!("saved tag-pair weights -> {}", path.display());
        Some(path)
    } else {
        None
    };

    if let Some(path) = &args.w2_out {
        let w2 = WordVectors::from_model(&vocab, args.dim, output.model.output());
        let mut out = create(path)?;
        if args.binary {
            save_vectors_binary(&w2, &mut out)?;
        } else {
            save_vectors_text(&w2, &mut out)?;
        }
        out.flush()?;
        eprintln!("saved output-side matrix -> {}", path.display());
    }

    write_manifest(
        &args.out,
        &json!({
            "command": "train",
            "corpus": args.corpus.display().to_string(),
            "corpus_sha256": sha256_hex(&args.corpus)?,
            "vocab": args.vocab.display().to_string(),
            "vocab_sha256": sha256_hex(&args.vocab)?,
            "model": args.model.as_str(),
            "dim": args.dim,
            "window": args.window,
            "negatives": args.negatives,
            "lr0": args.lr0,
            "epochs": args.epochs,
            "workers": args.workers,
            "seed": args.seed,
            "subsample": args.subsample,
            "dynamic_window": options.config.dynamic_window,
            "phi": options.config.phi_enabled,
            "plain": args.plain,
            "lowercase": !args.no_lowercase,
            "binary": args.binary,
            "out": args.out.display().to_string(),
            "phi_out": phi_path.as_ref().map(|p| p.display().to_string()),
            "w2_out": args.w2_out.as_ref().map(|p| p.display().to_string()),
        }),
    )?;
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let vectors = load_vectors(&args.vectors, args.binary)?;
    let name = file_label(&args.dataset);
    let dataset_path = args.dataset.display().to_string();
    let report = match args.mode {
        Mode::Analogy => {
            let questions = load_analogy(open(&args.dataset)?, &dataset_path)?;
            eval_analogy(&questions, &vectors, &name, args.workers.max(1))?
        }
        Mode::Sim => {
            let pairs = load_similarity(open(&args.dataset)?, &dataset_path)?;
            eval_similarity(&pairs, &vectors, &name)?
        }
    };
    print_report(&report)
}

/// The most frequent `top_n` vocabulary words present in the vectors file,
/// with their rows concatenated and their coarse gold groups.
fn top_words<'a>(
    vocab: &'a Vocabulary,
    stats: &TagStats,
    tags: &TagSet,
    vectors: &WordVectors<f32>,
    top_n: usize,
) -> (Vec<(&'a str, CoarseGroup)>, Vec<f32>) {
    let mut entries = Vec::new();
    let mut data = Vec::new();
    for id in 0..vocab.len() as u32 {
        if entries.len() == top_n {
            break;
        }
        let word = vocab.word(id);
        let Some(row) = vectors.id(word) else {
            continue;
        };
        data.extend_from_slice(vectors.row(row));
        entries.push((word, coarse_tag(tags.name(stats.dominant_tag(id)))));
    }
    (entries, data)
}

fn cmd_purity(args: &PurityArgs) -> Result<()> {
    let tags = TagSet::penn_treebank();
    let (vocab, stats) = load_vocab_file(&args.vocab, &tags)?;
    let vectors = load_vectors(&args.vectors, args.binary)?;

    let (entries, data) = top_words(&vocab, &stats, &tags, &vectors, args.top_n);
    let gold: Vec<usize> = entries.iter().map(|(_, group)| group.index()).collect();
    let assignment = kmeans(&data, vectors.dim(), args.k, args.seed)?;
    let purity = cluster_purity(&assignment, &gold);

    eprintln!(
        "clustered {} words into {} clusters (seed {})",
        entries.len(),
        args.k,
        args.seed
    );
    print_report(&EvalReport::purity(
        &file_label(&args.vectors),
        entries.len(),
        purity,
    ))
}

fn cmd_export(args: &ExportArgs) -> Result<()> {
    let tags = TagSet::penn_treebank();
    let (vocab, stats) = load_vocab_file(&args.vocab, &tags)?;
    let vectors = load_vectors(&args.vectors, args.binary)?;

    let (entries, data) = top_words(&vocab, &stats, &tags, &vectors, args.top_n);
    let mut out = create(&args.out)?;
    export_coords(&entries, &data, vectors.dim(), &mut out)?;
    out.flush()?;

    write_manifest(
        &args.out,
        &json!({
            "command": "export",
            "vectors": args.vectors.display().to_string(),
            "vectors_sha256": sha256_hex(&args.vectors)?,
            "vocab": args.vocab.display().to_string(),
            "vocab_sha256": sha256_hex(&args.vocab)?,
            "top_n": args.top_n,
            "binary": args.binary,
            "out": args.out.display().to_string(),
        }),
    )?;
    eprintln!("exported {} words -> {}", entries.len(), args.out.display());
    Ok(())
}
