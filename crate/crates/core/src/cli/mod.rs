//! The `scribo` command line. [`run`] parses arguments, dispatches and
//! maps failures to exit codes: 0 success, 1 usage, 2 data error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::corpus::{
    clean_corpus, compute_stats, download_dataset, read_dataset, read_manifest, split_dataset, write_dataset_with,
    write_manifest, Codecs, DatasetFormat, DatasetItem, LocalFetcher, Metric, SplitKey, SplitPolicy, WriteOptions,
};
use crate::ctc::edit_distance;
use crate::features::FeatureConfig;
use crate::lm::{parse_arpa, prune_model, write_arpa, NgramModel};
use crate::net::{
    adapt_alphabet, fold_batchnorm, load_logits, AdaptMode, AdaptPolicy, Model, NetConfig, NewRowInit,
};
use crate::textnorm::{normalize_text, NormRules};
use crate::AlphabetSpec;

mod pipeline;

pub use pipeline::{
    bench, decode_logits, mean_median, summarize, transcribe, BenchReport, DecodeOptions, Measurement, RtfReport,
    TranscribeOptions, Transcription,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

macro_rules! data_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}

data_errors!(
    crate::corpus::CorpusError,
    crate::ctc::CtcError,
    crate::features::FeatureError,
    crate::lm::LmError,
    crate::net::NetError,
    crate::textnorm::NormError,
    crate::alphabet::AlphabetError
);

#[derive(Debug, Parser)]
#[command(name = "scribo", version, about = "Speech recognition inference and corpus tooling")]
struct Cli {
    /// Print one JSON object per result line.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dataset conversion, cleaning, statistics and splits.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Normalize transcripts (arguments, or stdin lines) to an alphabet.
    Normalize(NormalizeArgs),
    /// Score, evaluate or prune ARPA language models.
    #[command(subcommand)]
    Lm(LmCommand),
    /// Decode a stored logit matrix.
    Decode(DecodeArgs),
    /// Transcribe a WAV file.
    Transcribe(TranscribeArgs),
    /// Resize a model's output layer to another alphabet.
    AdaptAlphabet(AdaptArgs),
    /// Word error rate between line-aligned reference and hypothesis files.
    Eval(EvalArgs),
    /// Real-time factor over the clips of a manifest.
    Bench(BenchArgs),
    /// Write a model with seeded random weights.
    InitModel(InitArgs),
    /// Fold batch norm into the convolution kernels of a model.
    FoldBn(FoldArgs),
}

#[derive(Debug, Subcommand)]
enum CorpusCommand {
    /// Read a dataset, convert its audio to 16 kHz mono WAV and write a manifest.
    Convert {
        /// commonvoice-tsv, folder-txt or manifest-csv.
        #[arg(long)]
        format: String,
        /// Dataset directory, metadata file or archive.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// manifest-csv or nemo-json.
        #[arg(long, default_value = "manifest-csv")]
        out_format: String,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Apply the six exclusion metrics.
    Clean {
        #[arg(long)]
        manifest: PathBuf,
        /// Write the kept items to this manifest.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Stats {
        #[arg(long)]
        manifest: PathBuf,
        /// Speakers to list.
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    Split {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum, default_value_t = SplitBy::None)]
        by: SplitBy,
        #[arg(long, value_delimiter = ',', default_value = "0.8,0.1,0.1")]
        fractions: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for the partition manifests (default: next to the input).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SplitBy {
    None,
    Speaker,
}

#[derive(Debug, Args)]
struct NormalizeArgs {
    /// Rule preset (language tag) or rule file.
    #[arg(long, default_value = "en")]
    rules: String,
    /// Alphabet preset or JSON file; defaults to the preset of the rule language.
    #[arg(long)]
    alphabet: Option<String>,
    text: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum LmCommand {
    /// log10 score of each sentence (arguments or stdin lines).
    Score {
        #[arg(long)]
        arpa: PathBuf,
        /// Do not add <s> and </s>.
        #[arg(long)]
        no_markers: bool,
        text: Vec<String>,
    },
    /// Perplexity over all sentences of a text file.
    Ppl {
        #[arg(long)]
        arpa: PathBuf,
        #[arg(long)]
        text: PathBuf,
        #[arg(long)]
        no_markers: bool,
    },
    /// Keep at most `max` n-grams.
    Prune {
        #[arg(long)]
        arpa: PathBuf,
        #[arg(long)]
        max: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct DecodeFlags {
    /// Beam width; greedy decoding unless this or --lm is given.
    #[arg(long)]
    beam: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// ARPA language model for shallow fusion.
    #[arg(long)]
    lm: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DecodeArgs {
    /// Logit store directory.
    #[arg(long)]
    logits: PathBuf,
    #[command(flatten)]
    decode: DecodeFlags,
}

#[derive(Debug, Args)]
struct ModelArg {
    /// Model store directory.
    #[arg(long, env = "SCRIBO_MODEL_DIR")]
    model: PathBuf,
}

#[derive(Debug, Args)]
struct TranscribeArgs {
    #[command(flatten)]
    model: ModelArg,
    wav: PathBuf,
    /// Stream in chunks of this many seconds.
    #[arg(long)]
    chunk: Option<f64>,
    #[command(flatten)]
    decode: DecodeFlags,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Extend,
    Shrink,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InitArg {
    Zero,
    Uniform,
}

#[derive(Debug, Args)]
struct AdaptArgs {
    #[command(flatten)]
    model: ModelArg,
    /// Target alphabet preset or JSON file.
    #[arg(long)]
    to: String,
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = InitArg::Zero)]
    init: InitArg,
    #[arg(long, default_value_t = 0.01)]
    scale: f32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tab-separated `target<TAB>source` lines (`NEW` for new symbols);
    /// default maps equal symbols.
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    hyp: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 1)]
    repetitions: usize,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    chunk: Option<f64>,
}

#[derive(Debug, Args)]
struct InitArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "quartznet15x5")]
    preset: String,
    #[arg(long, default_value = "en")]
    alphabet: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct FoldArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long)]
    out: PathBuf,
}

/// Writes human-readable lines, or one JSON object per line with `--json`.
struct Output<'a> {
    w: &'a mut dyn Write,
    json: bool,
}

impl Output<'_> {
    fn emit(&mut self, human: impl AsRef<str>, value: serde_json::Value) -> Result<(), CliError> {
        let r = if self.json {
            writeln!(self.w, "{value}")
        } else {
            writeln!(self.w, "{}", human.as_ref())
        };
        r.map_err(|e| CliError::Data(format!("writing output: {e}")))
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut io::stdout().lock(), &mut io::stderr().lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let mut output = Output { w: out, json: cli.json };
    match dispatch(cli.command, &mut output) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, out: &mut Output) -> Result<(), CliError> {
    match command {
        Command::Corpus(c) => corpus(c, out),
        Command::Normalize(a) => normalize(a, out),
        Command::Lm(c) => lm(c, out),
        Command::Decode(a) => decode(a, out),
        Command::Transcribe(a) => transcribe_cmd(a, out),
        Command::AdaptAlphabet(a) => adapt(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Bench(a) => bench_cmd(a, out),
        Command::InitModel(a) => init_model(a, out),
        Command::FoldBn(a) => fold_bn(a, out),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Command-line text arguments, or stdin lines when there are none.
fn input_lines(args: Vec<String>) -> Result<Vec<String>, CliError> {
    if !args.is_empty() {
        return Ok(args);
    }
    io::stdin()
        .lock()
        .lines()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Data(format!("reading stdin: {e}")))
}

fn parse_format(tag: &str) -> Result<DatasetFormat, CliError> {
    tag.parse().map_err(|_| {
        CliError::Usage(format!(
            "unknown format {tag:?}; expected commonvoice-tsv, folder-txt, manifest-csv or nemo-json"
        ))
    })
}

/// Rewrites item paths so they resolve from `to_dir` instead of `from_root`.
fn rebase(items: &[DatasetItem], from_root: &Path, to_dir: &Path) -> Vec<DatasetItem> {
    let same = fs::canonicalize(from_root).ok() == fs::canonicalize(to_dir).ok();
    items
        .iter()
        .map(|it| {
            let mut it = it.clone();
            if !same {
                let abs = fs::canonicalize(from_root).unwrap_or_else(|_| from_root.to_path_buf());
                it.filepath = abs.join(&it.filepath).to_string_lossy().into_owned();
            }
            it
        })
        .collect()
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn corpus(command: CorpusCommand, out: &mut Output) -> Result<(), CliError> {
    match command {
        CorpusCommand::Convert {
            format,
            input,
            out: out_dir,
            out_format,
            workers,
        } => {
            let format = parse_format(&format)?;
            let out_format = parse_format(&out_format)?;
            let work = out_dir.join(".work");
            let mut source = download_dataset(&LocalFetcher, &input.to_string_lossy(), &work)?;
            if source.is_dir() && format == DatasetFormat::CommonVoiceTsv {
                source = ["validated.tsv", "train.tsv"]
                    .iter()
                    .map(|n| source.join(n))
                    .find(|p| p.is_file())
                    .ok_or_else(|| CliError::Data(format!("{}: no validated.tsv or train.tsv", source.display())))?;
            }
            if source.is_dir() && format == DatasetFormat::ManifestCsv {
                source = source.join("manifest.tsv");
            }
            let dataset = read_dataset(format, &source)?;
            let mut options = WriteOptions::for_format(out_format);
            options.workers = workers;
            let manifest = write_dataset_with(&dataset.items, &dataset.root, &out_dir, &options, &Codecs::default())?;
            if work.exists() {
                let _ = fs::remove_dir_all(&work);
            }
            out.emit(
                format!(
                    "converted {} items ({} rows skipped, {} unprobed) -> {}",
                    dataset.items.len(),
                    dataset.skipped_rows,
                    dataset.unprobed,
                    manifest.display()
                ),
                json!({
                    "items": dataset.items.len(),
                    "skipped_rows": dataset.skipped_rows,
                    "unprobed": dataset.unprobed,
                    "manifest": manifest,
                }),
            )
        }
        CorpusCommand::Clean { manifest, out: kept_path } => {
            let dataset = read_manifest(&manifest)?;
            let report = clean_corpus(&dataset.items);
            if let Some(path) = &kept_path {
                write_manifest(path, &rebase(&report.kept, &dataset.root, &parent_dir(path)))?;
            }
            let mut human = format!("kept {} of {}", report.kept.len(), dataset.items.len());
            let mut counts = serde_json::Map::new();
            for m in Metric::ALL {
                let n = report.count(m);
                human.push_str(&format!("\nmetric {m}: {n}"));
                counts.insert(m.id().to_string(), n.into());
            }
            out.emit(
                human,
                json!({
                    "items": dataset.items.len(),
                    "kept": report.kept.len(),
                    "excluded": report.excluded.len(),
                    "excluded_by_metric": counts,
                    "mean_chars_per_second": report.mean_chars_per_second,
                    "mean_duration": report.mean_duration,
                }),
            )
        }
        CorpusCommand::Stats { manifest, top } => {
            let mut stats = compute_stats(&read_manifest(&manifest)?.items);
            stats.top_speakers.truncate(top);
            let mut human = format!(
                "items {}\ntotal duration {:.3} s\nmean duration {:.3} s\nmean chars/s {:.3}",
                stats.item_count, stats.total_duration, stats.mean_duration, stats.mean_chars_per_second
            );
            for (s, n) in &stats.top_speakers {
                human.push_str(&format!("\nspeaker {s}\t{n}"));
            }
            out.emit(human, serde_json::to_value(&stats).unwrap())
        }
        CorpusCommand::Split {
            manifest,
            by,
            fractions,
            seed,
            out: out_dir,
        } => {
            let dataset = read_manifest(&manifest)?;
            let policy = match by {
                SplitBy::None => SplitPolicy::Random { fractions, seed },
                SplitBy::Speaker => SplitPolicy::ByKey {
                    key: SplitKey::Speaker,
                    fractions,
                    seed,
                },
            };
            let parts = split_dataset(&dataset.items, &policy).map_err(|e| match e {
                crate::corpus::CorpusError::InvalidFractions(m) => CliError::Usage(format!("--fractions: {m}")),
                other => other.into(),
            })?;
            let dir = out_dir.unwrap_or_else(|| parent_dir(&manifest));
            fs::create_dir_all(&dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
            for p in parts {
                let path = dir.join(format!("{}.tsv", p.name));
                write_manifest(&path, &rebase(&p.items, &dataset.root, &dir))?;
                let duration: f64 = p.items.iter().map(|i| i.duration).sum();
                out.emit(
                    format!("{}\t{} items\t{:.3} s\t{}", p.name, p.items.len(), duration, path.display()),
                    json!({"partition": p.name, "items": p.items.len(), "duration": duration, "manifest": path}),
                )?;
            }
            Ok(())
        }
    }
}

fn normalize(args: NormalizeArgs, out: &mut Output) -> Result<(), CliError> {
    let rules = NormRules::resolve(&args.rules)?;
    let alphabet = match &args.alphabet {
        Some(a) => AlphabetSpec::resolve(a)?,
        None => AlphabetSpec::preset(rules.number_language())?,
    };
    for line in input_lines(args.text)? {
        let normalized = normalize_text(&line, &rules, &alphabet);
        out.emit(&normalized, json!({"input": line, "normalized": normalized}))?;
    }
    Ok(())
}

fn lm(command: LmCommand, out: &mut Output) -> Result<(), CliError> {
    match command {
        LmCommand::Score { arpa, no_markers, text } => {
            let model = parse_arpa(&arpa)?;
            for line in input_lines(text)? {
                let words: Vec<&str> = line.split_whitespace().collect();
                let s = model.score_sequence(&words, !no_markers);
                out.emit(
                    format!("{:.6}\t{line}", s.log10_total),
                    json!({"text": line, "log10": s.log10_total, "oov": s.oov_count, "tokens": s.tokens}),
                )?;
            }
            Ok(())
        }
        LmCommand::Ppl { arpa, text, no_markers } => {
            let model = parse_arpa(&arpa)?;
            let (log10, tokens, oov, sentences) = corpus_score(&model, &read_text(&text)?, !no_markers);
            if tokens == 0 {
                return Err(CliError::Data(format!("{}: no words to score", text.display())));
            }
            let ppl = 10f64.powf(-log10 / tokens as f64);
            out.emit(
                format!("perplexity {ppl:.4} over {tokens} tokens in {sentences} sentences ({oov} OOV)"),
                json!({"perplexity": ppl, "log10": log10, "tokens": tokens, "oov": oov, "sentences": sentences}),
            )
        }
        LmCommand::Prune { arpa, max, out: path } => {
            let model = parse_arpa(&arpa)?;
            let pruned = prune_model(&model, max)?;
            write_arpa(&pruned, &path)?;
            out.emit(
                format!("kept {} of {} n-grams -> {}", pruned.total_entries(), model.total_entries(), path.display()),
                json!({"before": model.total_entries(), "after": pruned.total_entries(), "counts": pruned.counts(), "out": path}),
            )
        }
    }
}

fn corpus_score(model: &NgramModel, text: &str, markers: bool) -> (f64, usize, usize, usize) {
    let (mut log10, mut tokens, mut oov, mut sentences) = (0.0, 0, 0, 0);
    for line in text.lines() {
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.is_empty() {
            continue;
        }
        let s = model.score_sequence(&words, markers);
        log10 += s.log10_total;
        tokens += s.tokens;
        oov += s.oov_count;
        sentences += 1;
    }
    (log10, tokens, oov, sentences)
}

fn load_lm(flags: &DecodeFlags) -> Result<Option<NgramModel>, CliError> {
    flags.lm.as_deref().map(parse_arpa).transpose().map_err(Into::into)
}

fn decode_options<'a>(flags: &DecodeFlags, lm: Option<&'a NgramModel>) -> Result<DecodeOptions<'a>, CliError> {
    if flags.beam == Some(0) {
        return Err(CliError::Usage("--beam must be at least 1".into()));
    }
    Ok(DecodeOptions {
        beam_width: flags.beam,
        alpha: flags.alpha,
        beta: flags.beta,
        lm,
    })
}

fn decode(args: DecodeArgs, out: &mut Output) -> Result<(), CliError> {
    let (logits, alphabet) = load_logits(&args.logits)?;
    let lm = load_lm(&args.decode)?;
    let text = decode_logits(&logits, &alphabet, &decode_options(&args.decode, lm.as_ref())?)?;
    out.emit(&text, json!({"text": text, "frames": logits.frames()}))
}

fn transcribe_cmd(args: TranscribeArgs, out: &mut Output) -> Result<(), CliError> {
    let model = Model::load(&args.model.model)?;
    let lm = load_lm(&args.decode)?;
    let opts = TranscribeOptions {
        chunk_seconds: args.chunk,
        decode: decode_options(&args.decode, lm.as_ref())?,
    };
    let t = transcribe(&model, &args.wav, &opts)?;
    let r = &t.report;
    let stages: Vec<String> = r.stage_breakdown.iter().map(|(k, v)| format!("{k} {v:.3}s")).collect();
    out.emit(
        format!(
            "{}\nduration {:.3}s wall {:.3}s rtf {:.4} ({})",
            t.text,
            r.clip_duration,
            r.wall_time,
            r.rtf,
            stages.join(", ")
        ),
        serde_json::to_value(&t).unwrap(),
    )
}

fn read_mapping(path: &Path) -> Result<Vec<(String, Option<String>)>, CliError> {
    let mut mapping = Vec::new();
    for (n, line) in read_text(path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (target, source) = line
            .split_once('\t')
            .ok_or_else(|| CliError::Data(format!("{}:{}: expected target<TAB>source", path.display(), n + 1)))?;
        let source = (source != "NEW").then(|| source.to_string());
        mapping.push((target.to_string(), source));
    }
    Ok(mapping)
}

fn adapt(args: AdaptArgs, out: &mut Output) -> Result<(), CliError> {
    let model = Model::load(&args.model.model)?;
    let target = AlphabetSpec::resolve(&args.to)?;
    let mode = match args.mode {
        ModeArg::Extend => AdaptMode::Extend,
        ModeArg::Shrink => AdaptMode::Shrink,
    };
    let init = match args.init {
        InitArg::Zero => NewRowInit::Zero,
        InitArg::Uniform => NewRowInit::Uniform {
            scale: args.scale,
            seed: args.seed,
        },
    };
    let policy = match &args.map {
        Some(path) => AdaptPolicy {
            mode,
            init,
            mapping: read_mapping(path)?,
        },
        None => AdaptPolicy::by_symbol(mode, init, &model.alphabet, &target),
    };
    let (config, weights) = adapt_alphabet(&model.config, &model.weights, &model.alphabet, &target, &policy)?;
    let adapted = Model {
        config,
        weights,
        alphabet: target,
        ..model
    };
    adapted.save(&args.out)?;
    out.emit(
        format!("output width {} -> {}", adapted.alphabet.output_width(), args.out.display()),
        json!({"vocab_size": adapted.config.vocab_size, "out": args.out}),
    )
}

fn eval(args: EvalArgs, out: &mut Output) -> Result<(), CliError> {
    let reference = read_text(&args.reference)?;
    let hypothesis = read_text(&args.hyp)?;
    let refs: Vec<&str> = reference.lines().collect();
    let hyps: Vec<&str> = hypothesis.lines().collect();
    if refs.len() != hyps.len() {
        return Err(CliError::Data(format!(
            "{} reference lines but {} hypothesis lines",
            refs.len(),
            hyps.len()
        )));
    }
    let (mut errors, mut words) = (0, 0);
    for (r, h) in refs.iter().zip(&hyps) {
        let r: Vec<&str> = r.split_whitespace().collect();
        let h: Vec<&str> = h.split_whitespace().collect();
        errors += edit_distance(&r, &h);
        words += r.len();
    }
    if words == 0 {
        return Err(CliError::Data("reference has no words".into()));
    }
    let wer = errors as f64 / words as f64;
    out.emit(
        format!("WER {wer:?} ({errors} errors / {words} words, {} lines)", refs.len()),
        json!({"wer": wer, "errors": errors, "words": words, "lines": refs.len()}),
    )
}

fn bench_cmd(args: BenchArgs, out: &mut Output) -> Result<(), CliError> {
    let model = Model::load(&args.model.model)?;
    let dataset = read_manifest(&args.manifest)?;
    let clips: Vec<(String, PathBuf)> = dataset
        .items
        .iter()
        .map(|i| (i.filepath.clone(), dataset.root.join(&i.filepath)))
        .collect();
    if let Some((name, _)) = clips.iter().find(|(_, p)| !p.is_file()) {
        return Err(CliError::Data(format!("audio not found: {name}")));
    }
    let opts = TranscribeOptions {
        chunk_seconds: args.chunk,
        decode: DecodeOptions::default(),
    };
    let report = bench(&model, &clips, args.repetitions, args.workers, &opts)?;
    for m in &report.measurements {
        out.emit(
            format!("{}\trep {}\trtf {:.4}", m.filepath, m.repetition, m.rtf),
            serde_json::to_value(m).unwrap(),
        )?;
    }
    out.emit(
        format!(
            "{} measurements\tmean rtf {:.4}\tmedian rtf {:.4}",
            report.measurements.len(),
            report.mean_rtf,
            report.median_rtf
        ),
        json!({"measurements": report.measurements.len(), "mean_rtf": report.mean_rtf, "median_rtf": report.median_rtf, "aggregate": report.aggregate}),
    )
}

fn init_model(args: InitArgs, out: &mut Output) -> Result<(), CliError> {
    let alphabet = AlphabetSpec::resolve(&args.alphabet)?;
    let config = NetConfig::preset(&args.preset, alphabet.len())
        .ok_or_else(|| CliError::Usage(format!("unknown preset {:?}; expected quartznet15x5 or quartznet5x5", args.preset)))?;
    let features = FeatureConfig {
        mel_bins: config.input_features,
        ..Default::default()
    };
    let model = Model::random(&args.preset, config, features, alphabet, args.seed);
    model.save(&args.out)?;
    out.emit(
        format!("{} with {} values -> {}", args.preset, model.weights.total_values(), args.out.display()),
        json!({"preset": args.preset, "values": model.weights.total_values(), "out": args.out}),
    )
}

fn fold_bn(args: FoldArgs, out: &mut Output) -> Result<(), CliError> {
    let model = Model::load(&args.model.model)?;
    let weights = fold_batchnorm(&model.config, &model.weights)?;
    let folded = Model { weights, ..model };
    folded.save(&args.out)?;
    out.emit(format!("folded -> {}", args.out.display()), json!({"out": args.out}))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_with(std::iter::once("scribo").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn help_and_usage_codes() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("transcribe"));
        assert_eq!(run_capture(&["--bogus"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&[]).0, EXIT_USAGE);
    }

    #[test]
    fn missing_file_is_data_error() {
        let (code, _, err) = run_capture(&["eval", "--ref", "/nonexistent/r", "--hyp", "/nonexistent/h"]);
        assert_eq!(code, EXIT_DATA);
        assert!(err.starts_with("error:"));
    }
}
