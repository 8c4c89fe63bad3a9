//! Command-line front end. `run` parses arguments, executes one subcommand
//! and returns the process exit code.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::classifier::{
    self, encode_bytes, Architecture, Checkpoint, ClassifierError, TrainConfig, IMAGE_SIDE,
};
use crate::corpus::{
    self, build_manifest, discover_documents, parse_adapter_config, read_fragment, sample_chunks, synthetic,
    BackendPreference, ChunkIndex, CompressorSpec, CorpusError, DatasetManifest, Fragment, SamplerConfig, ToolId,
    FRAGMENT_SIZE,
};
use crate::evaluation::{self, emit_reports, EvalError};
use crate::randtest::{run_suite, ChunkResult, MultiPRule, StsConfig, StsError, StsReport};
use crate::rng::Seed;
use crate::tensor::AdamConfig;

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const INDEX_FILE: &str = "index.txt";
pub const MODEL_FILE: &str = "model.fslc";

/// Error category, printed as `error[category]` and mapped to an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Io,
    Environment,
    Data,
    Contract,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Io => 1,
            Category::Environment => 2,
            Category::Data => 3,
            Category::Contract => 4,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Category::Io => "io",
            Category::Environment => "environment",
            Category::Data => "data",
            Category::Contract => "contract",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub category: Category,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.category.as_str(), self.message)
    }
}

impl CliError {
    fn new(category: Category, message: impl Into<String>) -> Self {
        CliError {
            category,
            message: message.into().replace('\n', " "),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new(Category::Io, format!("{}: {e}", path.display()))
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        let category = match &e {
            CorpusError::Io { .. } => Category::Io,
            CorpusError::ToolNotFound { .. } | CorpusError::ToolFailed { .. } | CorpusError::BadTemplate { .. } => {
                Category::Environment
            }
            CorpusError::InsufficientSamples { .. } => Category::Data,
            _ => Category::Contract,
        };
        CliError::new(category, e.to_string())
    }
}

impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        match e {
            ClassifierError::Corpus(inner) => inner.into(),
            ClassifierError::Io { .. } => CliError::new(Category::Io, e.to_string()),
            ClassifierError::InsufficientData { .. } => CliError::new(Category::Data, e.to_string()),
            _ => CliError::new(Category::Contract, e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Model(inner) => inner.into(),
            EvalError::Io { .. } => CliError::new(Category::Io, e.to_string()),
            EvalError::EmptySet => CliError::new(Category::Data, e.to_string()),
            EvalError::UnknownLabel(_) => CliError::new(Category::Contract, e.to_string()),
        }
    }
}

impl From<StsError> for CliError {
    fn from(e: StsError) -> Self {
        let category = match e {
            StsError::SequenceTooShort { .. } | StsError::EmptyGroup(_) => Category::Data,
            _ => Category::Contract,
        };
        CliError::new(category, e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "fragsleuth", version, about = "Compressed-fragment corpus, randomness tests and tool classifier")]
#[command(args_override_self = true)]
pub struct Cli {
    /// key=value file supplying defaults for any long flag; flags given on
    /// the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a seeded synthetic document corpus.
    GenSynthetic(GenArgs),
    /// Compress every source document with every tool and write a manifest.
    BuildCorpus(BuildArgs),
    /// Split the compressed files of a manifest into a chunk index.
    Index(IndexArgs),
    /// Run the randomness suite on sampled chunks or a raw file.
    Sts(StsArgs),
    /// Train the classifier.
    Train(TrainArgs),
    /// Evaluate a checkpoint on an index.
    Eval(EvalArgs),
    /// Classify 4096-byte files.
    Predict(PredictArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub documents: usize,
    #[arg(long, default_value_t = 16 * 1024)]
    pub min_size: usize,
    #[arg(long, default_value_t = 512 * 1024)]
    pub max_size: usize,
    #[arg(long, default_value = crate::rng::DEFAULT_SEED)]
    pub seed: Seed,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[arg(long)]
    pub source: PathBuf,
    /// Comma-separated tool names, or `all`.
    #[arg(long, default_value = "all")]
    pub tools: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = crate::rng::DEFAULT_SEED)]
    pub seed: Seed,
    /// auto, external or builtin.
    #[arg(long, default_value = "auto")]
    pub backend: String,
    /// File of `tool=command template` overrides.
    #[arg(long)]
    pub adapters: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct IndexArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Defaults to `index.txt` next to the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Leave out chunk 0 of every file (container headers).
    #[arg(long, num_args = 0..=1, default_value_t = false, default_missing_value = "true", require_equals = true)]
    pub skip_first: bool,
}

#[derive(Args, Debug)]
pub struct StsArgs {
    #[arg(long, required_unless_present = "raw", conflicts_with = "raw")]
    pub index: Option<PathBuf>,
    /// Directory the index paths are relative to; defaults to the index's directory.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub per_class: usize,
    /// Test the first 4096 bytes of this file instead of sampled chunks.
    #[arg(long)]
    pub raw: Option<PathBuf>,
    #[arg(long, default_value = crate::rng::DEFAULT_SEED)]
    pub seed: Seed,
    /// Output directory for the report CSVs.
    #[arg(long)]
    pub report: PathBuf,
    /// Force-run tests whose length recommendations are violated (they
    /// fail); `--paper-mode=false` reports them as inapplicable instead.
    #[arg(long, num_args = 0..=1, default_value_t = true, default_missing_value = "true", require_equals = true)]
    pub paper_mode: bool,
    /// Require every sub-p-value of multi-p tests to clear alpha.
    #[arg(long, num_args = 0..=1, default_value_t = false, default_missing_value = "true", require_equals = true)]
    pub all_pass: bool,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Output directory for the checkpoint and logs.
    #[arg(long)]
    pub out: PathBuf,
    /// Use this many sampled chunks per class instead of the whole index.
    #[arg(long)]
    pub per_class: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    /// Training share of each class.
    #[arg(long, default_value_t = 0.9)]
    pub train_fraction: f64,
    /// Epochs at the random baseline before stopping; 0 disables.
    #[arg(long, default_value_t = 30)]
    pub patience: usize,
    #[arg(long, num_args = 0..=1, default_value_t = false, default_missing_value = "true", require_equals = true)]
    pub split_by_file: bool,
    #[arg(long, default_value_t = Architecture::default().to_string())]
    pub arch: String,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long, default_value = crate::rng::DEFAULT_SEED)]
    pub seed: Seed,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Evaluate this many sampled chunks per class instead of the whole index.
    #[arg(long)]
    pub per_class: Option<usize>,
    #[arg(long, default_value = crate::rng::DEFAULT_SEED)]
    pub seed: Seed,
    /// Also render PGM images of the confusion matrix and sample gallery.
    #[arg(long, num_args = 0..=1, default_value_t = false, default_missing_value = "true", require_equals = true)]
    pub images: bool,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Print the full probability vector.
    #[arg(long, num_args = 0..=1, default_value_t = false, default_missing_value = "true", require_equals = true)]
    pub verbose: bool,
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

/// Reads `key=value` lines into `--key=value` arguments. `#` starts a
/// comment; boolean flags take `true` or `false`.
pub fn config_args(text: &str) -> Result<Vec<OsString>, String> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value", n + 1))?;
        let key = k.trim().replace('_', "-");
        out.push(format!("--{key}={}", v.trim()).into());
    }
    Ok(out)
}

/// Splices config-file arguments in right after the subcommand name, so
/// anything on the real command line overrides them.
fn expand_config(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let mut config = None;
    let mut iter = args.iter().enumerate();
    while let Some((_, a)) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            config = iter.next().map(|(_, v)| PathBuf::from(v));
        } else if let Some(v) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(v));
        }
    }
    let Some(path) = config else { return Ok(args) };
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let extra = config_args(&text).map_err(|m| CliError::new(Category::Contract, format!("{}: {m}", path.display())))?;
    let names: Vec<String> = <Cli as clap::CommandFactory>::command()
        .get_subcommands()
        .map(|c| c.get_name().to_string())
        .collect();
    let sub = args
        .iter()
        .skip(1)
        .position(|a| names.iter().any(|n| *n == a.to_string_lossy()))
        .map(|i| i + 1);
    let mut out = args.clone();
    if let Some(i) = sub {
        out.splice(i + 1..i + 1, extra);
    }
    Ok(out)
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let result = expand_config(args).and_then(|args| {
        Cli::try_parse_from(args).map_err(|e| {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return CliError::new(Category::Io, String::new());
            }
            CliError::new(Category::Contract, e.to_string().lines().next().unwrap_or("").trim_start_matches("error: "))
        })
    });
    let outcome = match result {
        Ok(cli) => dispatch(cli),
        Err(e) if e.message.is_empty() => return 0,
        Err(e) => Err(e),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.category.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::GenSynthetic(a) => cmd_gen(a),
        Command::BuildCorpus(a) => cmd_build(a),
        Command::Index(a) => cmd_index(a),
        Command::Sts(a) => cmd_sts(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Predict(a) => cmd_predict(a),
    }
}

fn version_tag() -> String {
    format!("fragsleuth-{}", env!("CARGO_PKG_VERSION"))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn cmd_gen(a: GenArgs) -> CliResult {
    let cfg = synthetic::SyntheticConfig {
        seed: a.seed,
        documents: a.documents,
        min_size: a.min_size,
        max_size: a.max_size,
    };
    let paths = synthetic::generate(&a.out, &cfg)?;
    println!("wrote {} documents to {}", paths.len(), a.out.display());
    Ok(())
}

fn parse_tools(list: &str) -> CliResult<Vec<ToolId>> {
    if list.trim() == "all" {
        return Ok(ToolId::ALL.to_vec());
    }
    list.split(',')
        .map(|t| t.trim().parse::<ToolId>().map_err(CliError::from))
        .collect()
}

fn cmd_build(a: BuildArgs) -> CliResult {
    let preference = match a.backend.as_str() {
        "auto" => BackendPreference::Auto,
        "external" => BackendPreference::External,
        "builtin" => BackendPreference::Builtin,
        other => return Err(CliError::new(Category::Contract, format!("unknown backend {other:?}"))),
    };
    let overrides = match &a.adapters {
        Some(p) => parse_adapter_config(&fs::read_to_string(p).map_err(|e| CliError::io(p, e))?)?,
        None => Default::default(),
    };
    let docs = discover_documents(&a.source)?;
    if docs.is_empty() {
        return Err(CliError::new(
            Category::Environment,
            format!("no documents under {}", a.source.display()),
        ));
    }
    let mut specs = Vec::new();
    for tool in parse_tools(&a.tools)? {
        match CompressorSpec::resolve(tool, preference, overrides.get(&tool).map(String::as_str)) {
            Ok(spec) => specs.push(spec),
            Err(e) => eprintln!("skipping {tool}: {e}"),
        }
    }
    if specs.is_empty() {
        return Err(CliError::new(Category::Environment, "no compression tool could be resolved"));
    }
    let outcome = build_manifest(&docs, &specs, &a.out, &a.seed);
    for f in &outcome.failures {
        eprintln!("failed {} with {}: {}", f.source_id, f.tool, f.error);
    }
    if outcome.manifest.entries.is_empty() {
        return Err(CliError::new(Category::Environment, "every compression attempt failed"));
    }
    let path = a.out.join(MANIFEST_FILE);
    outcome.manifest.write(&path)?;
    println!(
        "{} entries, {} chunks, manifest {}",
        outcome.manifest.entries.len(),
        outcome.manifest.total_chunks(),
        path.display()
    );
    Ok(())
}

fn cmd_index(a: IndexArgs) -> CliResult {
    let manifest = DatasetManifest::read(&a.manifest)?;
    let index = ChunkIndex::from_manifest(&manifest, a.skip_first);
    let out = a
        .out
        .unwrap_or_else(|| a.manifest.parent().unwrap_or(Path::new(".")).join(INDEX_FILE));
    index.write(&out)?;
    for (label, recs) in index.by_label() {
        println!("{label}: {} chunks", recs.len());
    }
    Ok(())
}

fn corpus_dir(corpus: Option<PathBuf>, index: &Path) -> PathBuf {
    corpus.unwrap_or_else(|| index.parent().unwrap_or(Path::new(".")).to_path_buf())
}

fn load_fragments(base: &Path, records: &[corpus::ChunkRecord]) -> CliResult<Vec<Fragment>> {
    records
        .iter()
        .map(|r| read_fragment(base, r).map(|f| f.with_origin(r.compressed_path.clone(), r.chunk_ordinal)))
        .collect::<Result<_, _>>()
        .map_err(Into::into)
}

fn cmd_sts(a: StsArgs) -> CliResult {
    let cfg = StsConfig {
        alpha: a.alpha,
        paper_mode: a.paper_mode,
        multi_p_rule: if a.all_pass { MultiPRule::AllPass } else { MultiPRule::Sidak },
        ..StsConfig::default()
    };
    cfg.validate()?;
    let mut provenance = vec![
        ("seed", a.seed.to_string()),
        ("alpha", a.alpha.to_string()),
        ("paper_mode", a.paper_mode.to_string()),
        ("multi_p", if a.all_pass { "all" } else { "sidak" }.to_string()),
        ("version", version_tag()),
    ];
    let rows: Vec<ChunkResult> = if let Some(raw) = &a.raw {
        let bytes = fs::read(raw).map_err(|e| CliError::io(raw, e))?;
        if bytes.len() < FRAGMENT_SIZE {
            return Err(CliError::new(
                Category::Data,
                format!("{} has {} bytes, {FRAGMENT_SIZE} needed", raw.display(), bytes.len()),
            ));
        }
        let frag = Fragment::new(&bytes[..FRAGMENT_SIZE], "raw").expect("exact size");
        provenance.push(("source", raw.display().to_string()));
        vec![ChunkResult {
            chunk_id: raw.display().to_string(),
            tool: "raw".into(),
            results: run_suite(&frag, &cfg),
        }]
    } else {
        let index_path = a.index.as_ref().expect("clap enforces index or raw");
        let index = ChunkIndex::read(index_path)?;
        let picks = sample_chunks(&index, &SamplerConfig::new(a.seed.clone(), a.per_class)?)?;
        let frags = load_fragments(&corpus_dir(a.corpus.clone(), index_path), &picks)?;
        provenance.push(("per_class", a.per_class.to_string()));
        picks
            .par_iter()
            .zip(frags.par_iter())
            .map(|(r, f)| ChunkResult {
                chunk_id: r.id(),
                tool: r.label.clone(),
                results: run_suite(f, &cfg),
            })
            .collect()
    };
    let report = StsReport::new(rows);
    let outputs = [
        ("sts_chunks.csv", report.to_csv(&provenance)),
        ("sts_raw.csv", report.to_raw_csv(&provenance)),
        ("sts_summary.csv", report.summary_csv(&provenance)?),
    ];
    for (name, text) in outputs {
        write_file(&a.report.join(name), text.as_bytes())?;
    }
    for (tool, rate) in report.per_tool_pass_rate()? {
        println!("{tool}: {}/{} passed ({:.1}%)", rate.passes, rate.chunks * 15, 100.0 * rate.rate);
    }
    Ok(())
}

fn cmd_train(a: TrainArgs) -> CliResult {
    let architecture: Architecture = a.arch.parse()?;
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        train_fraction: a.train_fraction,
        seed: a.seed.clone(),
        early_stop_patience: (a.patience > 0).then_some(a.patience),
        split_by_file: a.split_by_file,
        architecture,
    };
    cfg.validate()?;
    let adam = AdamConfig {
        learning_rate: a.learning_rate,
        ..AdamConfig::default()
    };
    adam.validate().map_err(ClassifierError::from)?;
    let mut index = ChunkIndex::read(&a.index)?;
    if let Some(n) = a.per_class {
        let picks = sample_chunks(&index, &SamplerConfig::new(a.seed.clone(), n)?)?;
        index = ChunkIndex::new(index.seed.clone(), picks)?;
    }
    let base = corpus_dir(a.corpus, &a.index);
    let mut outcome = classifier::train(&index, &base, &cfg, &adam)?;
    let mut provenance = cfg.provenance();
    provenance.push(("learning_rate", a.learning_rate.to_string()));
    provenance.push(("version", version_tag()));
    outcome.best.meta.provenance = provenance
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ");
    fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    outcome.best.save(&a.out.join(MODEL_FILE))?;
    write_file(&a.out.join("epoch_log.csv"), outcome.log.to_csv(&provenance).as_bytes())?;
    write_file(&a.out.join("epoch_accuracy.pgm"), &evaluation::epoch_plot(&outcome.log))?;
    let val = ChunkIndex::new(index.seed.clone(), outcome.val_records.clone())?;
    val.write(&a.out.join("val_index.txt"))?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "best epoch {} with validation accuracy {:.4}; checkpoint {}",
        outcome.best.meta.epoch,
        outcome.best.meta.val_accuracy,
        a.out.join(MODEL_FILE).display()
    );
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> CliResult {
    let ck = Checkpoint::load(&a.model)?;
    let mut index = ChunkIndex::read(&a.index)?;
    ck.network.check_classes(&index.labels())?;
    if let Some(n) = a.per_class {
        let picks = sample_chunks(&index, &SamplerConfig::new(a.seed.clone(), n)?)?;
        index = ChunkIndex::new(index.seed.clone(), picks)?;
    }
    let frags = load_fragments(&corpus_dir(a.corpus, &a.index), &index.records)?;
    let eval = evaluation::evaluate(&ck.network, &frags, a.batch_size)?;
    let provenance = vec![
        ("seed", a.seed.to_string()),
        ("model_seed", ck.meta.seed.clone()),
        ("model_epoch", ck.meta.epoch.to_string()),
        ("samples", frags.len().to_string()),
        ("version", version_tag()),
    ];
    emit_reports(&eval, &a.out, &provenance, a.images.then_some(frags.as_slice()))?;
    println!("accuracy {:.4} over {} chunks", eval.accuracy(), frags.len());
    for (i, c) in eval.matrix.classes().iter().enumerate() {
        match eval.matrix.recall(i) {
            Some(r) => println!("  {c}: recall {r:.4}"),
            None => println!("  {c}: absent"),
        }
    }
    Ok(())
}

fn cmd_predict(a: PredictArgs) -> CliResult {
    let ck = Checkpoint::load(&a.model)?;
    let net = &ck.network;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for path in &a.files {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        let image = encode_bytes(&bytes).map_err(|e| CliError::new(Category::Contract, format!("{}: {e}", path.display())))?;
        let batch = crate::tensor::Tensor::new(vec![1, IMAGE_SIDE, IMAGE_SIDE, 1], image.pixels().to_vec())
            .map_err(ClassifierError::from)?;
        let p = net.predict(&batch)?.remove(0);
        let mut line = format!("{} {:.6}", net.classes()[p.label], p.confidence);
        if a.files.len() > 1 {
            line = format!("{}: {line}", path.display());
        }
        if a.verbose {
            for (c, q) in net.classes().iter().zip(&p.probabilities) {
                line.push_str(&format!(" {c}={q:.6}"));
            }
        }
        writeln!(out, "{line}").map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines_become_flags() {
        let args = config_args("# comment\nepochs = 3\npaper_mode=true\nsplit-by-file=false\n").unwrap();
        assert_eq!(
            args,
            vec![OsString::from("--epochs=3"), "--paper-mode=true".into(), "--split-by-file=false".into()]
        );
        assert!(config_args("nonsense").is_err());
    }

    #[test]
    fn command_line_beats_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "epochs=3\nbatch_size=8\nsplit_by_file=true\n").unwrap();
        let args: Vec<OsString> = ["fragsleuth", "--config", cfg.to_str().unwrap(), "train", "--index", "i", "--out", "o", "--epochs", "5"]
            .iter()
            .map(OsString::from)
            .collect();
        let cli = Cli::try_parse_from(expand_config(args).unwrap()).unwrap();
        let Command::Train(t) = cli.command else { panic!() };
        assert_eq!(t.epochs, 5);
        assert_eq!(t.batch_size, 8);
        assert!(t.split_by_file);
        let sts = |extra: &[&str]| {
            let mut args = vec!["fragsleuth", "sts", "--raw", "f", "--report", "r"];
            args.extend(extra);
            match Cli::try_parse_from(args).unwrap().command {
                Command::Sts(s) => s.paper_mode,
                _ => unreachable!(),
            }
        };
        assert!(sts(&[]));
        assert!(sts(&["--paper-mode"]));
        assert!(!sts(&["--paper-mode=false"]));
    }

    #[test]
    fn categories_map_to_exit_codes() {
        let e: CliError = CorpusError::InsufficientSamples {
            class: "lz4".into(),
            available: 2,
            requested: 10,
        }
        .into();
        assert_eq!(e.category.exit_code(), 3);
        assert!(e.to_string().starts_with("error[data]: class lz4"));
        let e: CliError = ClassifierError::ClassMismatch {
            model: vec!["a".into()],
            data: vec!["b".into()],
        }
        .into();
        assert_eq!(e.category.exit_code(), 4);
        assert_eq!(run(["fragsleuth", "no-such-command"]), 4);
        assert_eq!(run(["fragsleuth", "--version"]), 0);
    }
}
