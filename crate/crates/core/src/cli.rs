//! The `ave` command line: JSONL in, JSONL out, one subcommand per stage.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 I/O error. Every
//! output file gets a `<file>.manifest.json` sibling recording the resolved
//! configuration of the run.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::decode::decode;
use crate::encode::{encode, shuffle_pairs, EncodeError, EncodeOptions, OnMissing, PairOrder};
use crate::metrics::{evaluate, EvalOptions, MetricsError};
use crate::oracle::{NoiseSpec, Oracle, OracleError};
use crate::preprocess::{derive, read_raw_tuples, split, stats_by_split, PipelineConfig, PreprocessError, SplitRatios};
use crate::record::{synthesize_id, AvPair, Normalizer, Paradigm, ProductRecord, RecordError, RecordReader};
use crate::rng::SeededRng;
use crate::tokenize::Scheme;

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Io(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Invalid(m) | CliError::Io(m) => m,
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<RecordError> for CliError {
    fn from(e: RecordError) -> Self {
        match e {
            RecordError::Io(e) => e.into(),
            other => invalid(other),
        }
    }
}

impl From<PreprocessError> for CliError {
    fn from(e: PreprocessError) -> Self {
        match e {
            PreprocessError::Io(e) => e.into(),
            other => invalid(other),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Record(RecordError::Io(e)) => e.into(),
            other => invalid(other),
        }
    }
}

impl From<EncodeError> for CliError {
    fn from(e: EncodeError) -> Self {
        invalid(e)
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        invalid(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            invalid(e)
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ave", version, about = "Generative attribute-value extraction toolkit")]
pub struct Cli {
    /// Seed for every random choice (split, shuffle, oracle noise).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Compare strings without lowercasing.
    #[arg(long, global = true)]
    pub case_sensitive: bool,
    /// Only report errors.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive records from raw (title, attribute, value) tuples.
    Preprocess(PreprocessArgs),
    /// Split records into train/valid/test files.
    Split(SplitArgs),
    /// Sentence, cardinality and attribute counts.
    Stats(StatsArgs),
    /// Encode records into target strings.
    Encode(EncodeArgs),
    /// Decode generated strings into attribute-value pairs.
    Decode(DecodeArgs),
    /// Score predicted pairs against gold records.
    Evaluate(EvaluateArgs),
    /// Emit gold targets, optionally with seeded noise, as a generation file.
    Oracle(OracleArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct PreprocessArgs {
    /// Named rule set: `av-data-v1` or `av-mae`.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    pub preset: Option<String>,
    /// JSON file with the pipeline config fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Raw tuples; `.tsv`/`.txt` are read as tab-separated, anything else as JSONL.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "out")]
    pub output: Option<PathBuf>,
    /// Where to write the stage-by-stage attrition report (JSON).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SplitArgs {
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "0.8,0.1,0.1")]
    pub ratios: String,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Prepended to `train.jsonl`, `valid.jsonl` and `test.jsonl`.
    #[arg(long, default_value = "")]
    pub prefix: String,
}

#[derive(Debug, Args, Serialize)]
pub struct StatsArgs {
    /// One or more record files; each is reported as a split named by its file stem.
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long = "out")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EncodeArgs {
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long = "out")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub paradigm: Paradigm,
    /// `whitespace` or `mock-subword:<max_piece_len>`.
    #[arg(long, default_value = "whitespace")]
    pub tokenizer: String,
    #[arg(long, value_enum, default_value_t = OnMissing::Skip)]
    pub on_missing: OnMissing,
    #[arg(long, value_enum, default_value_t = PairOrder::Title)]
    pub pair_order: PairOrder,
    /// Shuffle pairs per record with the global seed (implies input order).
    #[arg(long)]
    pub shuffle: bool,
    /// Shuffle with this seed instead of the global one.
    #[arg(long)]
    pub shuffle_seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct DecodeArgs {
    /// Generation file with `{id, title, generated}` lines.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long = "out")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub paradigm: Paradigm,
    #[arg(long, default_value = "whitespace")]
    pub tokenizer: String,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub gold: PathBuf,
    /// Lines with `{id, pairs}`; decode output and record files both qualify.
    #[arg(long)]
    pub pred: PathBuf,
    /// Also print joint scores for single- and multi-pair records.
    #[arg(long)]
    pub by_cardinality: bool,
    /// Fail when a gold record has no prediction line.
    #[arg(long)]
    pub strict_ids: bool,
    /// Write the full report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct OracleArgs {
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long = "out")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub paradigm: Paradigm,
    #[arg(long, default_value = "whitespace")]
    pub tokenizer: String,
    #[arg(long, value_enum, default_value_t = OnMissing::Skip)]
    pub on_missing: OnMissing,
    #[arg(long, value_enum, default_value_t = PairOrder::Title)]
    pub pair_order: PairOrder,
    #[arg(long, default_value_t = 0.0)]
    pub p_drop: f64,
    #[arg(long, default_value_t = 0.0)]
    pub p_attr: f64,
    #[arg(long, default_value_t = 0.0)]
    pub p_val: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: Value,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub seed: u64,
    pub case_sensitive: bool,
    pub tool_version: String,
    pub duration_ms: u128,
}

/// Output line of `encode`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedLine {
    pub id: String,
    pub title: String,
    pub target: String,
}

/// Output line of `decode`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodedLine {
    pub id: String,
    pub pairs: Vec<AvPair>,
    pub discards: Vec<crate::decode::Discard>,
    pub duplicates_removed: usize,
}

#[derive(Debug, Deserialize)]
struct GenerationLine {
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    title: String,
    generated: String,
}

#[derive(Debug, Deserialize)]
struct PredictionLine {
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    pairs: Vec<AvPair>,
}

struct Context {
    seed: u64,
    quiet: bool,
    normalizer: Normalizer,
    started: Instant,
}

impl Context {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead>, CliError> {
    match path {
        None => Ok(Box::new(BufReader::new(io::stdin()))),
        Some(p) if p == Path::new("-") => Ok(Box::new(BufReader::new(io::stdin()))),
        Some(p) => Ok(Box::new(BufReader::new(File::open(p).map_err(|e| io_error(p, e))?))),
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
        Some(p) if p == Path::new("-") => Ok(Box::new(BufWriter::new(io::stdout()))),
        Some(p) => Ok(Box::new(BufWriter::new(File::create(p).map_err(|e| io_error(p, e))?))),
    }
}

fn write_json_line<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn path_label(path: Option<&Path>, stdio: &str) -> String {
    path.map_or_else(|| stdio.to_owned(), |p| p.display().to_string())
}

fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn write_manifests<C: Serialize>(
    ctx: &Context,
    subcommand: &str,
    config: &C,
    inputs: Vec<String>,
    outputs: &[PathBuf],
) -> Result<(), CliError> {
    let manifest = RunManifest {
        subcommand: subcommand.to_owned(),
        config: serde_json::to_value(config)?,
        inputs,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        seed: ctx.seed,
        case_sensitive: ctx.normalizer.case_sensitive,
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        duration_ms: ctx.started.elapsed().as_millis(),
    };
    for out in outputs.iter().filter(|p| p.as_path() != Path::new("-")) {
        let path = manifest_path(out);
        let file = File::create(&path).map_err(|e| io_error(&path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(file), &manifest)?;
    }
    Ok(())
}

fn parse_scheme(key: &str) -> Result<Scheme, CliError> {
    key.parse().map_err(invalid)
}

fn load_records(path: Option<&Path>, norm: Normalizer) -> Result<Vec<ProductRecord>, CliError> {
    let reader = open_input(path)?;
    RecordReader::new(reader, norm)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| match (e, path) {
            (RecordError::Io(e), Some(p)) => io_error(p, e),
            (other, Some(p)) => CliError::Invalid(format!("{}: {other}", p.display())),
            (other, None) => other.into(),
        })
}

fn write_records(path: Option<&Path>, records: &[ProductRecord]) -> Result<(), CliError> {
    let mut out = open_output(path)?;
    for r in records {
        write_json_line(&mut *out, r)?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_preprocess(ctx: &Context, args: &PreprocessArgs) -> Result<(), CliError> {
    let config = match (&args.preset, &args.config) {
        (Some(name), _) => PipelineConfig::preset(name)?,
        (None, Some(path)) => {
            let file = File::open(path).map_err(|e| io_error(path, e))?;
            serde_json::from_reader(BufReader::new(file))
                .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?
        }
        (None, None) => return Err(invalid("either --preset or --config is required")),
    };
    let tsv = matches!(
        args.input.extension().and_then(|e| e.to_str()),
        Some("tsv" | "txt" | "tab")
    );
    let raw = read_raw_tuples(open_input(Some(&args.input))?, tsv)?;
    let derived = derive(&raw, &config, &ctx.normalizer)?;
    ctx.note(format!("preprocess: {}", derived.attrition));
    write_records(args.output.as_deref(), &derived.records)?;
    let mut outputs: Vec<PathBuf> = args.output.iter().cloned().collect();
    if let Some(report) = &args.report {
        let file = File::create(report).map_err(|e| io_error(report, e))?;
        serde_json::to_writer_pretty(BufWriter::new(file), &derived.attrition)?;
        outputs.push(report.clone());
    }
    let resolved = serde_json::json!({ "args": args, "pipeline": config });
    write_manifests(ctx, "preprocess", &resolved, vec![args.input.display().to_string()], &outputs)
}

fn cmd_split(ctx: &Context, args: &SplitArgs) -> Result<(), CliError> {
    let ratios: SplitRatios = args.ratios.parse()?;
    let records = load_records(args.input.as_deref(), ctx.normalizer)?;
    let splits = split(&records, ratios, ctx.seed)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| io_error(&args.out_dir, e))?;
    let mut outputs = Vec::new();
    for (name, part) in [("train", &splits.train), ("valid", &splits.valid), ("test", &splits.test)] {
        let path = args.out_dir.join(format!("{}{name}.jsonl", args.prefix));
        write_records(Some(&path), part)?;
        outputs.push(path);
    }
    ctx.note(format!(
        "split: {} records → train {}, valid {}, test {}",
        records.len(),
        splits.train.len(),
        splits.valid.len(),
        splits.test.len()
    ));
    write_manifests(ctx, "split", args, vec![path_label(args.input.as_deref(), "<stdin>")], &outputs)
}

fn cmd_stats(ctx: &Context, args: &StatsArgs) -> Result<(), CliError> {
    let mut named = Vec::with_capacity(args.inputs.len());
    for path in &args.inputs {
        let name = path
            .file_stem()
            .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        named.push((name, load_records(Some(path), ctx.normalizer)?));
    }
    let s = stats_by_split(&named, &ctx.normalizer);
    let mut out = io::stdout().lock();
    writeln!(out, "{:<12} {:>8} {:>8} {:>8} {:>8} {:>10}", "split", "#sent", "single", "multi", "pairs", "attributes")?;
    let row = |out: &mut dyn Write, name: &str, s: &crate::preprocess::DatasetStats| {
        writeln!(
            out,
            "{name:<12} {:>8} {:>8} {:>8} {:>8} {:>10}",
            s.n_sentences, s.n_single, s.n_multi, s.n_pairs, s.n_attributes
        )
    };
    for (name, part) in &s.per_split {
        row(&mut out, name, part)?;
    }
    row(&mut out, "total", &s)?;
    if let Some(path) = &args.output {
        let file = File::create(path).map_err(|e| io_error(path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(file), &s)?;
        let inputs = args.inputs.iter().map(|p| p.display().to_string()).collect();
        write_manifests(ctx, "stats", args, inputs, std::slice::from_ref(path))?;
    }
    Ok(())
}

fn cmd_encode(ctx: &Context, args: &EncodeArgs) -> Result<(), CliError> {
    let shuffle_seed = args.shuffle_seed.or(args.shuffle.then_some(ctx.seed));
    let opts = EncodeOptions {
        paradigm: args.paradigm,
        scheme: parse_scheme(&args.tokenizer)?,
        on_missing: args.on_missing,
        pair_order: if shuffle_seed.is_some() { PairOrder::Input } else { args.pair_order },
        normalizer: ctx.normalizer,
    };
    let reader = RecordReader::new(open_input(args.input.as_deref())?, ctx.normalizer);
    let mut out = open_output(args.output.as_deref())?;
    let (mut written, mut skipped) = (0usize, 0usize);
    for (index, record) in reader.enumerate() {
        let mut record = record?;
        if let Some(seed) = shuffle_seed {
            record = shuffle_pairs(&record, SeededRng::derive_seed(seed, index as u64));
        }
        let target = match encode(&record, &opts) {
            Ok(t) => t,
            Err(EncodeError::AllUnfindable(id)) if opts.on_missing == OnMissing::Skip => {
                log::warn!("record {id}: no value found in title, record skipped");
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        write_json_line(
            &mut *out,
            &EncodedLine {
                id: record.id,
                title: record.title,
                target,
            },
        )?;
        written += 1;
    }
    out.flush()?;
    ctx.note(format!("encode: {written} lines written, {skipped} records skipped"));
    let outputs: Vec<PathBuf> = args.output.iter().cloned().collect();
    write_manifests(ctx, "encode", args, vec![path_label(args.input.as_deref(), "<stdin>")], &outputs)
}

fn cmd_decode(ctx: &Context, args: &DecodeArgs) -> Result<(), CliError> {
    let scheme = parse_scheme(&args.tokenizer)?;
    let reader = open_input(args.input.as_deref())?;
    let mut out = open_output(args.output.as_deref())?;
    let mut index = 0usize;
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let gen: GenerationLine =
            serde_json::from_str(&line).map_err(|e| CliError::Invalid(format!("line {}: {e}", line_no + 1)))?;
        let report = decode(&gen.generated, args.paradigm, &gen.title, scheme, &ctx.normalizer);
        write_json_line(
            &mut *out,
            &DecodedLine {
                id: gen.id.unwrap_or_else(|| synthesize_id(index)),
                pairs: report.pairs,
                discards: report.discards,
                duplicates_removed: report.duplicates_removed,
            },
        )?;
        index += 1;
    }
    out.flush()?;
    ctx.note(format!("decode: {index} lines"));
    let outputs: Vec<PathBuf> = args.output.iter().cloned().collect();
    write_manifests(ctx, "decode", args, vec![path_label(args.input.as_deref(), "<stdin>")], &outputs)
}

fn load_predictions(path: &Path) -> Result<HashMap<String, Vec<AvPair>>, CliError> {
    let reader = open_input(Some(path))?;
    let mut predictions = HashMap::new();
    let mut index = 0usize;
    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_error(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let pred: PredictionLine = serde_json::from_str(&line)
            .map_err(|e| CliError::Invalid(format!("{}:{}: {e}", path.display(), line_no + 1)))?;
        let id = pred.id.unwrap_or_else(|| synthesize_id(index));
        index += 1;
        if predictions.insert(id.clone(), pred.pairs).is_some() {
            return Err(CliError::Invalid(format!("{}: duplicate prediction id `{id}`", path.display())));
        }
    }
    Ok(predictions)
}

fn cmd_evaluate(ctx: &Context, args: &EvaluateArgs) -> Result<(), CliError> {
    let gold = load_records(Some(&args.gold), ctx.normalizer)?;
    let predictions = load_predictions(&args.pred)?;
    let opts = EvalOptions {
        normalizer: ctx.normalizer,
        strict_ids: args.strict_ids,
    };
    let report = evaluate(&gold, &predictions, &opts)?;
    let mut out = io::stdout().lock();
    writeln!(out, "{report}")?;
    if args.by_cardinality {
        write!(out, "{}", report.cardinality_table())?;
    }
    if let Some(path) = &args.report {
        let file = File::create(path).map_err(|e| io_error(path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(file), &report)?;
        let inputs = vec![args.gold.display().to_string(), args.pred.display().to_string()];
        write_manifests(ctx, "evaluate", args, inputs, std::slice::from_ref(path))?;
    }
    Ok(())
}

fn cmd_oracle(ctx: &Context, args: &OracleArgs) -> Result<(), CliError> {
    let opts = EncodeOptions {
        paradigm: args.paradigm,
        scheme: parse_scheme(&args.tokenizer)?,
        on_missing: args.on_missing,
        pair_order: args.pair_order,
        normalizer: ctx.normalizer,
    };
    let noise = NoiseSpec {
        p_drop: args.p_drop,
        p_attr: args.p_attr,
        p_val: args.p_val,
    };
    let mut oracle = Oracle::new(opts, noise, ctx.seed)?;
    let reader = RecordReader::new(open_input(args.input.as_deref())?, ctx.normalizer);
    let mut out = open_output(args.output.as_deref())?;
    let mut written = 0usize;
    for record in reader {
        let record = record?;
        let generation = match oracle.generate(&record) {
            Ok(g) => g,
            // keep one line per record so predictions still join by id
            Err(OracleError::Encode(EncodeError::AllUnfindable(id))) if opts.on_missing == OnMissing::Skip => {
                log::warn!("record {id}: no value found in title, emitting empty generation");
                crate::oracle::Generation {
                    id: record.id.clone(),
                    title: record.title.clone(),
                    generated: String::new(),
                }
            }
            Err(e) => return Err(e.into()),
        };
        write_json_line(&mut *out, &generation)?;
        written += 1;
    }
    out.flush()?;
    ctx.note(format!("oracle: {written} lines"));
    let outputs: Vec<PathBuf> = args.output.iter().cloned().collect();
    write_manifests(ctx, "oracle", args, vec![path_label(args.input.as_deref(), "<stdin>")], &outputs)
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let ctx = Context {
        seed: cli.seed,
        quiet: cli.quiet,
        normalizer: Normalizer::new(cli.case_sensitive),
        started: Instant::now(),
    };
    match &cli.command {
        Command::Preprocess(a) => cmd_preprocess(&ctx, a),
        Command::Split(a) => cmd_split(&ctx, a),
        Command::Stats(a) => cmd_stats(&ctx, a),
        Command::Encode(a) => cmd_encode(&ctx, a),
        Command::Decode(a) => cmd_decode(&ctx, a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, a),
        Command::Oracle(a) => cmd_oracle(&ctx, a),
    }
}

/// Parses `argv` (program name first) and runs the subcommand, returning the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.quiet { log::LevelFilter::Error } else { log::LevelFilter::Warn };
    let _ = env_logger::Builder::new().filter_level(level).format_target(false).try_init();
    log::set_max_level(level);
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
