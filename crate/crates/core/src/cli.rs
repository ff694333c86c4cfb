//! The `xlit` command line.
//!
//! Machine-readable output goes to stdout or `-o`; summaries and errors go
//! to stderr. Exit codes: 0 success, 2 usage or configuration error, 3 data
//! or module error, 4 output could not be written.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::corpus::{self, sample_to_budget, InputType, DEFAULT_BUDGET, DEFAULT_SEED};
use crate::langselect::{
    self, FeatureRegistry, MissingFeatures, Regime, SelectionSpec, SimilarityMatrix, DEFAULT_ALPHA, DEFAULT_SET_SIZE,
};
use crate::metrics::{self, OverlapVariant};
use crate::pipeline::{self, AnalysisReport, ExperimentConfig, PipelineError};
use crate::report::{self, write_report, Format, QualityEntry, StatsRow, StatsTable, TidyReport, TidyRow};
use crate::stats::{self, PairedSample, SIGNIFICANCE_LEVEL};
use crate::tokenizer::{SubwordModel, TokenSet, Trainer, DEFAULT_MIN_CHAR_FREQ, DEFAULT_VOCAB_SIZE};
use crate::translit::{
    is_latin_letter, keys_from_json, romanize_with, CipherKey, RuleTable, TableMode, TableRegistry, TranslitError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_OUTPUT: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "xlit", version, about = "Corpus transliteration and tokenizer overlap analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert text line by line (G2P, romanization or Caesar shift).
    Translit(TranslitArgs),
    /// Train a subword tokenizer on one or more corpora.
    TrainTokenizer(TrainArgs),
    /// Segment text line by line with a trained tokenizer.
    Encode(EncodeArgs),
    /// Extract the set of tokens a tokenizer emits on a corpus.
    TokenSet(TokenSetArgs),
    /// Token overlap of a target language with source languages.
    Overlap(OverlapArgs),
    /// UNK ratio, fertility and vocabulary coverage of a corpus.
    Quality(QualityArgs),
    /// Choose a language set by typological similarity.
    SelectLangs(SelectArgs),
    /// Correlations and paired t-tests over metric and score tables.
    Stats(StatsArgs),
    /// Run a full experiment from a config file.
    Run(RunArgs),
    /// Compare experiment reports across input types.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct IoArgs {
    /// Input file (stdin when omitted).
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OutArgs {
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    G2p,
    Rom,
    Cipher,
}

#[derive(Debug, Args)]
struct TranslitArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long)]
    lang: Option<String>,
    /// Rule table file, used instead of the registry.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Caesar shift (0..=25).
    #[arg(long)]
    shift: Option<u8>,
    /// JSON map of language codes to shifts.
    #[arg(long)]
    keys: Option<PathBuf>,
    /// Undo the shift instead of applying it.
    #[arg(long)]
    decipher: bool,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Training corpora, one document per line.
    #[arg(short, long = "input", num_args = 1..)]
    inputs: Vec<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_VOCAB_SIZE)]
    vocab_size: usize,
    #[arg(long, default_value_t = DEFAULT_MIN_CHAR_FREQ)]
    min_char_freq: u64,
    /// Per-file word budget.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Debug, Args)]
struct EncodeArgs {
    #[arg(long)]
    model: PathBuf,
    /// Print token ids instead of token strings.
    #[arg(long)]
    ids: bool,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Debug, Args)]
struct TokenSetArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    lang: String,
    #[arg(long, default_value = "ortho")]
    input_type: InputType,
    #[arg(short, long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct OverlapArgs {
    /// Target token set (`.tokens`).
    #[arg(long)]
    target: PathBuf,
    /// Comma-separated source token sets.
    #[arg(long, value_delimiter = ',', required = true)]
    sources: Vec<PathBuf>,
    #[arg(long, default_value = "max")]
    variant: OverlapVariant,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct QualityArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    lang: String,
    #[arg(long, default_value = "ortho")]
    input_type: InputType,
    #[arg(short, long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MissingArg {
    Rescale,
    Error,
}

#[derive(Debug, Args)]
struct SelectArgs {
    /// Feature CSV: `lang,kind,values`.
    #[arg(long)]
    features: PathBuf,
    /// Script CSV: `lang,script`.
    #[arg(long)]
    scripts: PathBuf,
    /// Directory of `<lang>.txt` corpora for lexical similarity.
    #[arg(long)]
    corpus_dir: PathBuf,
    /// Candidate languages (default: every language in the feature file).
    #[arg(long, value_delimiter = ',')]
    pool: Vec<String>,
    /// Keep only pool languages written in this script.
    #[arg(long)]
    script: Option<String>,
    #[arg(long)]
    regime: Regime,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_SET_SIZE)]
    set_size: usize,
    #[arg(long, value_enum, default_value_t = MissingArg::Rescale)]
    missing: MissingArg,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum StatsTest {
    Correlation,
    Ttest,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Score CSV: `lang,input_type,score[,group]` with a header row.
    #[arg(long)]
    scores: PathBuf,
    /// Tidy metric CSV as written by `run --format csv`.
    #[arg(long)]
    metrics: Option<PathBuf>,
    #[arg(long, value_enum)]
    test: StatsTest,
    /// Test each score group separately instead of pooling.
    #[arg(long)]
    per_group: bool,
    #[arg(long, default_value_t = SIGNIFICANCE_LEVEL)]
    threshold: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment config (`.json` or `.toml`).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    vocab_size: Option<usize>,
    /// Directory for the model, token sets, converted corpora and manifests.
    #[arg(long)]
    artifacts: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Report JSON files; the first is the baseline.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Output(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Output(_) => EXIT_OUTPUT,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Output(m) => m,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        if e.is_config() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

fn data<E: std::fmt::Display>(context: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Data(format!("{context}: {e}"))
}

type CliResult<T> = Result<T, CliError>;

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    let mut io = Io { stdin, stdout, stderr };
    let result = match cli.command {
        Command::Translit(a) => translit(a, &mut io),
        Command::TrainTokenizer(a) => train_tokenizer(a, &mut io),
        Command::Encode(a) => encode(a, &mut io),
        Command::TokenSet(a) => token_set(a, &mut io),
        Command::Overlap(a) => overlap(a, &mut io),
        Command::Quality(a) => quality(a, &mut io),
        Command::SelectLangs(a) => select_langs(a, &mut io),
        Command::Stats(a) => stats_cmd(a, &mut io),
        Command::Run(a) => run_cmd(a, &mut io),
        Command::Compare(a) => compare(a, &mut io),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(io.stderr, "error: {}", e.message());
            e.code()
        }
    }
}

struct Io<'a> {
    stdin: &'a mut dyn BufRead,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Io<'_> {
    fn note(&mut self, msg: impl AsRef<str>) {
        let _ = writeln!(self.stderr, "{}", msg.as_ref());
    }

    fn reader(&mut self, path: Option<&Path>) -> CliResult<Box<dyn BufRead + '_>> {
        Ok(match path {
            Some(p) => Box::new(BufReader::new(
                fs::File::open(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?,
            )),
            None => Box::new(&mut *self.stdin),
        })
    }

    fn writer(&mut self, path: Option<&Path>) -> CliResult<Box<dyn Write + '_>> {
        Ok(match path {
            Some(p) => Box::new(std::io::BufWriter::new(
                fs::File::create(p).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))?,
            )),
            None => Box::new(&mut *self.stdout),
        })
    }

    fn emit(&mut self, path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
        let mut w = self.writer(path)?;
        w.write_all(bytes)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::Output(e.to_string()))
    }

    fn emit_report<R: TidyReport + ?Sized>(&mut self, out: &OutArgs, report: &R) -> CliResult<()> {
        let bytes = write_report(report, out.format).map_err(|e| CliError::Data(e.to_string()))?;
        self.emit(out.output.as_deref(), &bytes)
    }
}

fn read_lines(path: &Path) -> CliResult<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(text.lines().map(str::to_string).collect())
}

fn load_model(path: &Path) -> CliResult<SubwordModel> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    SubwordModel::from_json(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Applies `f` to each line, keeping the original line terminators.
fn stream_lines(
    reader: &mut dyn BufRead,
    writer: &mut dyn Write,
    mut f: impl FnMut(&str) -> CliResult<String>,
) -> CliResult<u64> {
    let mut buf = String::new();
    let mut count = 0;
    loop {
        buf.clear();
        let n = reader
            .read_line(&mut buf)
            .map_err(|e| CliError::Data(format!("reading input: {e}")))?;
        if n == 0 {
            break;
        }
        let (body, end) = match buf.strip_suffix("\r\n") {
            Some(b) => (b, "\r\n"),
            None => match buf.strip_suffix('\n') {
                Some(b) => (b, "\n"),
                None => (buf.as_str(), ""),
            },
        };
        count += 1;
        let out = f(body).map_err(|e| match e {
            CliError::Data(m) => CliError::Data(format!("line {count}: {m}")),
            other => other,
        })?;
        writer
            .write_all(out.as_bytes())
            .and_then(|_| writer.write_all(end.as_bytes()))
            .map_err(|e| CliError::Output(e.to_string()))?;
    }
    writer.flush().map_err(|e| CliError::Output(e.to_string()))?;
    Ok(count)
}

fn translit(a: TranslitArgs, io: &mut Io) -> CliResult<()> {
    let registry = || TableRegistry::from_env().map_err(|e| CliError::Usage(e.to_string()));
    let table_for = |mode: TableMode| -> CliResult<Option<RuleTable>> {
        if let Some(path) = &a.table {
            return RuleTable::load(path).map(Some).map_err(|e| CliError::Usage(e.to_string()));
        }
        match &a.lang {
            Some(lang) => Ok(registry()?.get(lang, mode).cloned()),
            None => Ok(None),
        }
    };

    type Transform = Box<dyn Fn(&str) -> Result<String, TranslitError>>;
    let transform: Transform = match a.mode {
        Mode::G2p | Mode::Rom => {
            let mode = if a.mode == Mode::G2p { TableMode::G2p } else { TableMode::Romanize };
            if a.table.is_none() && a.lang.is_none() {
                return Err(CliError::Usage("--lang or --table is required".into()));
            }
            let table = table_for(mode)?.ok_or_else(|| {
                CliError::Data(
                    TranslitError::MissingTable {
                        lang: a.lang.clone().unwrap_or_default(),
                        mode,
                    }
                    .to_string(),
                )
            })?;
            if mode == TableMode::G2p {
                Box::new(move |s: &str| table.apply(s))
            } else {
                Box::new(move |s: &str| romanize_with(&table, s))
            }
        }
        Mode::Cipher => {
            let key = match (a.shift, &a.keys) {
                (Some(shift), _) => CipherKey::new(a.lang.clone().unwrap_or_default(), shift)
                    .map_err(|e| CliError::Usage(e.to_string()))?,
                (None, Some(path)) => {
                    let lang = a
                        .lang
                        .as_ref()
                        .ok_or_else(|| CliError::Usage("--keys needs --lang".into()))?;
                    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                    let keys = keys_from_json(&text).map_err(|e| CliError::Usage(e.to_string()))?;
                    keys.get(lang)
                        .cloned()
                        .ok_or_else(|| CliError::Usage(TranslitError::MissingKey(lang.clone()).to_string()))?
                }
                (None, None) => return Err(CliError::Usage("--shift or --keys is required".into())),
            };
            if a.decipher {
                Box::new(move |s: &str| Ok(key.decipher(s)))
            } else if let Some(lang) = &a.lang {
                let table = table_for(TableMode::Romanize)?
                    .ok_or_else(|| CliError::Data(TranslitError::UnsupportedLanguage(lang.clone()).to_string()))?;
                Box::new(move |s: &str| Ok(key.encipher(&romanize_with(&table, s)?)))
            } else {
                Box::new(move |s: &str| {
                    if let Some(ch) = s.chars().find(|&c| c.is_alphabetic() && !is_latin_letter(c)) {
                        return Err(TranslitError::NonLatinOutput {
                            lang: String::new(),
                            ch,
                        });
                    }
                    Ok(key.encipher(s))
                })
            }
        }
    };

    let input = a.io.input.clone();
    let output = a.io.output.clone();
    let Io { stdin, stdout, stderr } = io;
    let mut reader: Box<dyn BufRead> = match &input {
        Some(p) => Box::new(BufReader::new(
            fs::File::open(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(&mut **stdin),
    };
    let mut writer: Box<dyn Write> = match &output {
        Some(p) => Box::new(std::io::BufWriter::new(
            fs::File::create(p).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(&mut **stdout),
    };
    let n = stream_lines(&mut *reader, &mut *writer, |line| {
        transform(line).map_err(|e| CliError::Data(e.to_string()))
    })?;
    let _ = writeln!(stderr, "translit: {n} lines");
    Ok(())
}

fn train_tokenizer(a: TrainArgs, io: &mut Io) -> CliResult<()> {
    let mut trainer = Trainer::new(a.vocab_size, a.min_char_freq);
    let mut sources: Vec<(String, Vec<corpus::Document>)> = Vec::new();
    if a.inputs.is_empty() {
        let docs = corpus::read_documents("stdin", &mut *io.stdin).map_err(|e| CliError::Data(e.to_string()))?;
        sources.push(("stdin".into(), docs));
    }
    for path in &a.inputs {
        let name = path.display().to_string();
        let file = fs::File::open(path).map_err(|e| CliError::Data(format!("{name}: {e}")))?;
        let docs = corpus::read_documents(&name, BufReader::new(file)).map_err(data(&name))?;
        sources.push((name, docs));
    }
    for (name, docs) in &sources {
        if docs.is_empty() {
            io.note(format!("train-tokenizer: {name} is empty, skipped"));
            continue;
        }
        let (manifest, sample) = sample_to_budget(docs, a.budget, a.seed).map_err(data(name))?;
        for d in &sample {
            trainer.feed(&d.text, 1);
        }
        io.note(format!(
            "train-tokenizer: {name}: {} documents, {} words",
            manifest.doc_count, manifest.word_count
        ));
    }
    let model = trainer.finish().map_err(data("training"))?;
    io.note(format!(
        "train-tokenizer: vocabulary {} ({} merges, {} characters), digest {}",
        model.len(),
        model.merges().len(),
        model.alphabet().len(),
        model.digest()
    ));
    let mut json = model.to_json();
    json.push('\n');
    io.emit(a.output.as_deref(), json.as_bytes())
}

fn encode(a: EncodeArgs, io: &mut Io) -> CliResult<()> {
    let model = load_model(&a.model)?;
    let input = a.io.input.clone();
    let output = a.io.output.clone();
    let Io { stdin, stdout, stderr } = io;
    let mut reader: Box<dyn BufRead> = match &input {
        Some(p) => Box::new(BufReader::new(
            fs::File::open(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(&mut **stdin),
    };
    let mut writer: Box<dyn Write> = match &output {
        Some(p) => Box::new(std::io::BufWriter::new(
            fs::File::create(p).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(&mut **stdout),
    };
    let mut cache = std::collections::HashMap::new();
    let n = stream_lines(&mut *reader, &mut *writer, |line| {
        let ids = model.encode_cached(line, &mut cache);
        Ok(if a.ids {
            ids.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")
        } else {
            ids.iter()
                .map(|&id| model.token(id).expect("encoded id in vocab"))
                .collect::<Vec<_>>()
                .join(" ")
        })
    })?;
    let _ = writeln!(stderr, "encode: {n} lines");
    Ok(())
}

fn read_corpus(io: &mut Io, path: Option<&Path>) -> CliResult<Vec<String>> {
    let reader = io.reader(path)?;
    reader
        .lines()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Data(format!("reading input: {e}")))
}

fn token_set(a: TokenSetArgs, io: &mut Io) -> CliResult<()> {
    let model = load_model(&a.model)?;
    let lines = read_corpus(io, a.input.as_deref())?;
    let set = model.token_set(&lines, &a.lang, a.input_type);
    io.note(format!("token-set: {} tokens for {}", set.len(), a.lang));
    io.emit_report(&a.out, &set)
}

/// Reads a token set: TokenSet JSON, or one token per line with the
/// language taken from the file name.
pub fn read_token_set(path: &Path) -> Result<TokenSet, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()));
    }
    let lang = path
        .file_name()
        .and_then(|n| n.to_str())
        .and_then(|n| n.split('.').next())
        .unwrap_or_default();
    Ok(TokenSet::new(lang, text.lines().filter(|l| !l.is_empty())))
}

fn overlap(a: OverlapArgs, io: &mut Io) -> CliResult<()> {
    let target = read_token_set(&a.target).map_err(CliError::Data)?;
    let sources = a
        .sources
        .iter()
        .map(|p| read_token_set(p))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::Data)?;
    let report = metrics::overlap_report(&target, &sources, a.variant).map_err(data("overlap"))?;
    io.note(format!(
        "overlap: {} best source {} ratio {}",
        report.target_lang, report.best_source_lang, report.overall_ratio
    ));
    io.emit_report(&a.out, &report)
}

fn quality(a: QualityArgs, io: &mut Io) -> CliResult<()> {
    let model = load_model(&a.model)?;
    let lines = read_corpus(io, a.input.as_deref())?;
    let report = metrics::quality_report(&model, &lines).map_err(data("quality"))?;
    io.note(format!(
        "quality: {} unk {} fertility {} coverage {}",
        a.lang, report.unk_ratio, report.fertility, report.vocab_coverage
    ));
    let entry = QualityEntry {
        lang: a.lang,
        input_type: a.input_type,
        report,
    };
    io.emit_report(&a.out, &entry)
}

fn select_langs(a: SelectArgs, io: &mut Io) -> CliResult<()> {
    let file = fs::File::open(&a.features).map_err(|e| CliError::Data(format!("{}: {e}", a.features.display())))?;
    let features = FeatureRegistry::from_csv(file).map_err(data("features"))?;

    #[derive(Deserialize)]
    struct ScriptRow {
        lang: String,
        script: String,
    }
    let mut rdr = csv::Reader::from_path(&a.scripts).map_err(data("scripts"))?;
    let script_map: BTreeMap<String, String> = rdr
        .deserialize::<ScriptRow>()
        .map(|r| r.map(|r| (r.lang, r.script)))
        .collect::<Result<_, _>>()
        .map_err(data("scripts"))?;

    let mut pool: Vec<String> = if a.pool.is_empty() {
        features.langs().map(str::to_string).collect()
    } else {
        a.pool.clone()
    };
    if let Some(script) = &a.script {
        pool = langselect::restrict_to_script(&pool, &script_map, script);
    }
    let mut corpora = BTreeMap::new();
    for lang in &pool {
        corpora.insert(lang.clone(), read_lines(&a.corpus_dir.join(format!("{lang}.txt")))?);
    }
    let missing = match a.missing {
        MissingArg::Rescale => MissingFeatures::Rescale,
        MissingArg::Error => MissingFeatures::Error,
    };
    let sims = SimilarityMatrix::build(&pool, &features, &corpora, missing).map_err(data("similarity"))?;
    let mut spec = SelectionSpec::new(a.regime, script_map);
    spec.alpha = a.alpha;
    spec.set_size = a.set_size;
    let selection = langselect::select_subset(&pool, &spec, &sims).map_err(|e| match e {
        langselect::SelectError::SetTooSmall | langselect::SelectError::PoolTooSmall { .. } => {
            CliError::Usage(e.to_string())
        }
        other => CliError::Data(other.to_string()),
    })?;
    io.note(format!(
        "select-langs: {} -> {} (objective {:.6})",
        selection.regime,
        selection.langs.join(","),
        selection.objective
    ));
    io.emit_report(&a.out, &selection)
}

#[derive(Debug, Deserialize)]
struct ScoreRow {
    lang: String,
    input_type: InputType,
    score: f64,
    #[serde(default)]
    group: Option<String>,
}

fn stats_cmd(a: StatsArgs, io: &mut Io) -> CliResult<()> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(&a.scores)
        .map_err(data("scores"))?;
    let scores: Vec<ScoreRow> = rdr
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(data("scores"))?;
    let group_of = |s: &ScoreRow| -> String {
        if a.per_group {
            s.group.clone().unwrap_or_else(|| "all".into())
        } else {
            "all".into()
        }
    };
    let mut rows = Vec::new();
    match a.test {
        StatsTest::Correlation => {
            let path = a
                .metrics
                .as_ref()
                .ok_or_else(|| CliError::Usage("--metrics is required for correlation".into()))?;
            let bytes = fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let metric_rows: Vec<TidyRow> = report::read_rows(&bytes).map_err(data("metrics"))?;
            let mut values: BTreeMap<(String, String, String), f64> = BTreeMap::new();
            for r in metric_rows.into_iter().filter(|r| r.length.is_none()) {
                values.insert((r.metric, r.target_lang, r.input_type), r.value);
            }
            let metric_names: BTreeSet<String> = values.keys().map(|k| k.0.clone()).collect();
            let groups: BTreeSet<String> = scores.iter().map(group_of).collect();
            for group in &groups {
                for metric in &metric_names {
                    let (mut xs, mut ys) = (Vec::new(), Vec::new());
                    for s in scores.iter().filter(|s| &group_of(s) == group) {
                        let key = (metric.clone(), s.lang.clone(), s.input_type.as_str().to_string());
                        if let Some(&v) = values.get(&key) {
                            xs.push(v);
                            ys.push(s.score);
                        }
                    }
                    for (name, f) in [
                        ("pearson", stats::pearson as fn(&[f64], &[f64]) -> _),
                        ("spearman", stats::spearman),
                    ] {
                        match f(&xs, &ys) {
                            Ok(c) => {
                                let c = c.with_threshold(a.threshold);
                                rows.push(StatsRow {
                                    group: group.clone(),
                                    test: name.into(),
                                    metric: metric.clone(),
                                    input_type_a: String::new(),
                                    input_type_b: String::new(),
                                    statistic: c.coefficient,
                                    p_value: c.p_value,
                                    n: c.n,
                                    masked: c.masked,
                                });
                            }
                            Err(e) => io.note(format!("stats: {name} {metric} ({group}) skipped: {e}")),
                        }
                    }
                }
            }
        }
        StatsTest::Ttest => {
            let mut by_key: BTreeMap<(String, InputType, String), f64> = BTreeMap::new();
            for s in &scores {
                by_key.insert((group_of(s), s.input_type, s.lang.clone()), s.score);
            }
            let groups: BTreeSet<String> = scores.iter().map(group_of).collect();
            let types: BTreeSet<InputType> = scores.iter().map(|s| s.input_type).collect();
            let types: Vec<InputType> = types.into_iter().collect();
            for group in &groups {
                for (i, &ta) in types.iter().enumerate() {
                    for &tb in &types[i + 1..] {
                        let mut sample = PairedSample::new(Vec::new(), Vec::new());
                        for ((g, t, lang), &va) in &by_key {
                            if g != group || *t != ta {
                                continue;
                            }
                            if let Some(&vb) = by_key.get(&(g.clone(), tb, lang.clone())) {
                                sample.labels.push(lang.clone());
                                sample.a.push(va);
                                sample.b.push(vb);
                            }
                        }
                        match stats::paired_t_test(&sample) {
                            Ok(t) => rows.push(StatsRow {
                                group: group.clone(),
                                test: "ttest".into(),
                                metric: "score".into(),
                                input_type_a: ta.to_string(),
                                input_type_b: tb.to_string(),
                                statistic: t.t,
                                p_value: t.p_value,
                                n: t.n,
                                masked: t.p_value > a.threshold,
                            }),
                            Err(e) => io.note(format!("stats: ttest {ta} vs {tb} ({group}) skipped: {e}")),
                        }
                    }
                }
            }
        }
    }
    io.note(format!("stats: {} results", rows.len()));
    let table = StatsTable {
        threshold: a.threshold,
        rows,
    };
    io.emit_report(&a.out, &table)
}

fn run_cmd(a: RunArgs, io: &mut Io) -> CliResult<()> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(budget) = a.budget {
        cfg.budget = budget;
    }
    if let Some(v) = a.vocab_size {
        cfg.vocab_size = v;
    }
    cfg.validate()?;
    let corpora = cfg.load_corpora()?;
    let artifacts = pipeline::run_experiment_with_artifacts(&cfg, &corpora)?;
    if let Some(dir) = &a.artifacts {
        write_artifacts(dir, &artifacts)?;
    }
    let r = &artifacts.report;
    io.note(format!(
        "run: {} input, {} seen, {} unseen, model {}",
        r.header.input_type,
        r.results.seen_langs.len(),
        r.results.unseen_langs.len(),
        r.results.model_digest
    ));
    io.emit_report(&a.out, r)
}

fn write_artifacts(dir: &Path, art: &pipeline::ExperimentArtifacts) -> CliResult<()> {
    let out_err = |p: &Path, e: std::io::Error| CliError::Output(format!("{}: {e}", p.display()));
    fs::create_dir_all(dir).map_err(|e| out_err(dir, e))?;
    let it = art.report.header.input_type;
    let mut files: Vec<(PathBuf, Vec<u8>)> = vec![(dir.join("model.json"), art.model.to_json().into_bytes())];
    let manifests = serde_json::to_vec_pretty(&art.report.header.manifests).expect("manifests serialize");
    files.push((dir.join("manifest.json"), manifests));
    for (lang, lines) in &art.corpora {
        let mut text = lines.join("\n");
        text.push('\n');
        files.push((dir.join(format!("{lang}.{it}.txt")), text.into_bytes()));
    }
    for (lang, set) in &art.token_sets {
        let json = serde_json::to_vec_pretty(set).expect("token set serializes");
        files.push((dir.join(format!("{lang}.{it}.tokens")), json));
    }
    for (path, bytes) in files {
        fs::write(&path, bytes).map_err(|e| out_err(&path, e))?;
    }
    Ok(())
}

fn compare(a: CompareArgs, io: &mut Io) -> CliResult<()> {
    let reports = a
        .reports
        .iter()
        .map(|p| {
            let bytes = fs::read(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            report::read_json::<AnalysisReport>(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let table = pipeline::compare_input_types(&reports)?;
    io.note(format!("compare: {} reports, {} rows", reports.len(), table.rows.len()));
    io.emit_report(&a.out, &table)
}
