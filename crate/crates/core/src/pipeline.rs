//! End-to-end experiment preparation for one language set and input type.
//!
//! A run samples every language to the word budget, converts the samples
//! into the configured input type, trains one tokenizer on the seen
//! languages (under-budget corpora repeated to match exposure), extracts a
//! token set per language and computes every metric. Runs are
//! deterministic under the configured seed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{
    self, oversampling_weights, sample_to_budget, CorpusManifest, Document, InputType, DEFAULT_BUDGET, DEFAULT_SEED,
};
use crate::fraction::Fraction;
use crate::metrics::{self, OverlapReport, OverlapVariant, TokenizerQualityReport};
use crate::report::{overlap_rows, quality_rows, TidyReport, TidyRow, TIDY_COLUMNS};
use crate::tokenizer::{SubwordModel, TokenSet, Trainer, DEFAULT_MIN_CHAR_FREQ, DEFAULT_VOCAB_SIZE};
use crate::translit::{keys_from_json, CipherKey, TableRegistry, TextTransform, Transliterator};

/// Pipeline stage named in error messages.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Load,
    Sample,
    Transliterate,
    Train,
    TokenSet,
    Metrics,
    Cache,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Load => "load",
            Stage::Sample => "sample",
            Stage::Transliterate => "transliterate",
            Stage::Train => "train",
            Stage::TokenSet => "token-set",
            Stage::Metrics => "metrics",
            Stage::Cache => "cache",
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{stage} stage failed{}: {message}", lang.as_ref().map(|l| format!(" for `{l}`")).unwrap_or_default())]
    Stage {
        stage: Stage,
        lang: Option<String>,
        message: String,
    },
    #[error("cannot compare reports: {0}")]
    Compare(String),
}

impl PipelineError {
    fn stage(stage: Stage, lang: Option<&str>, err: impl fmt::Display) -> Self {
        PipelineError::Stage {
            stage,
            lang: lang.map(str::to_string),
            message: err.to_string(),
        }
    }

    /// True for errors in the configuration rather than the data.
    pub fn is_config(&self) -> bool {
        matches!(self, PipelineError::Config(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageSpec {
    pub lang: String,
    pub seen: bool,
}

fn default_vocab_size() -> usize {
    DEFAULT_VOCAB_SIZE
}
fn default_budget() -> u64 {
    DEFAULT_BUDGET
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_min_char_freq() -> u64 {
    DEFAULT_MIN_CHAR_FREQ
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Free-form name of the language set, carried into the report header.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub languages: Vec<LanguageSpec>,
    pub input_type: InputType,
    #[serde(default = "default_vocab_size")]
    pub vocab_size: usize,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_min_char_freq")]
    pub min_char_freq: u64,
    /// Directory of extra rule tables layered over the built-in ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_registry_path: Option<PathBuf>,
    /// JSON file mapping language codes to shifts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cipher_keys_path: Option<PathBuf>,
    /// Inline shifts; take precedence over `cipher_keys_path`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cipher_keys: Option<BTreeMap<String, u8>>,
    /// Directory holding `<lang>.txt`, one document per line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_dir: Option<PathBuf>,
    /// Directory for content-addressed stage outputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(languages: Vec<LanguageSpec>, input_type: InputType) -> Self {
        ExperimentConfig {
            label: None,
            languages,
            input_type,
            vocab_size: DEFAULT_VOCAB_SIZE,
            budget: DEFAULT_BUDGET,
            seed: DEFAULT_SEED,
            min_char_freq: DEFAULT_MIN_CHAR_FREQ,
            table_registry_path: None,
            cipher_keys_path: None,
            cipher_keys: None,
            corpus_dir: None,
            cache_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Reads a `.toml` or `.json` config; relative paths inside it are
    /// resolved against the config file's directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = if path.extension().is_some_and(|e| e == "toml") {
            Self::from_toml(&text)?
        } else {
            Self::from_json(&text)?
        };
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.table_registry_path,
            &mut cfg.cipher_keys_path,
            &mut cfg.corpus_dir,
            &mut cfg.cache_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn seen_langs(&self) -> Vec<String> {
        self.languages.iter().filter(|l| l.seen).map(|l| l.lang.clone()).collect()
    }

    pub fn unseen_langs(&self) -> Vec<String> {
        self.languages.iter().filter(|l| !l.seen).map(|l| l.lang.clone()).collect()
    }

    /// Structural checks that need no files.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let mut seen = BTreeSet::new();
        for l in &self.languages {
            if l.lang.is_empty() {
                return Err(PipelineError::Config("empty language code".into()));
            }
            if !seen.insert(&l.lang) {
                return Err(PipelineError::Config(format!("language `{}` listed twice", l.lang)));
            }
        }
        if !self.languages.iter().any(|l| l.seen) {
            return Err(PipelineError::Config("at least one seen language is required".into()));
        }
        if self.vocab_size == 0 {
            return Err(PipelineError::Config("vocab_size must be positive".into()));
        }
        if self.budget == 0 {
            return Err(PipelineError::Config("budget must be positive".into()));
        }
        if self.input_type == InputType::Cipher && self.cipher_keys.is_none() && self.cipher_keys_path.is_none() {
            return Err(PipelineError::Config("cipher input requires cipher keys".into()));
        }
        Ok(())
    }

    /// Hex sha256 of the config's canonical JSON form.
    pub fn digest(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }

    pub fn tables(&self) -> Result<TableRegistry, PipelineError> {
        match &self.table_registry_path {
            Some(dir) => TableRegistry::with_dir(dir).map_err(|e| PipelineError::Config(e.to_string())),
            None => TableRegistry::from_env().map_err(|e| PipelineError::Config(e.to_string())),
        }
    }

    pub fn keys(&self) -> Result<Option<BTreeMap<String, CipherKey>>, PipelineError> {
        if let Some(inline) = &self.cipher_keys {
            return inline
                .iter()
                .map(|(lang, &shift)| {
                    CipherKey::new(lang.clone(), shift)
                        .map(|k| (lang.clone(), k))
                        .map_err(|e| PipelineError::Config(e.to_string()))
                })
                .collect::<Result<_, _>>()
                .map(Some);
        }
        match &self.cipher_keys_path {
            Some(path) => {
                let text =
                    fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
                keys_from_json(&text).map(Some).map_err(|e| PipelineError::Config(e.to_string()))
            }
            None => Ok(None),
        }
    }

    /// Reads `<corpus_dir>/<lang>.txt` for every configured language.
    pub fn load_corpora(&self) -> Result<BTreeMap<String, Vec<Document>>, PipelineError> {
        let dir = self
            .corpus_dir
            .as_ref()
            .ok_or_else(|| PipelineError::Config("corpus_dir is not set".into()))?;
        self.languages
            .iter()
            .map(|l| {
                let path = dir.join(format!("{}.txt", l.lang));
                let file = fs::File::open(&path)
                    .map_err(|e| PipelineError::stage(Stage::Load, Some(&l.lang), format!("{}: {e}", path.display())))?;
                let docs = corpus::read_documents(&l.lang, BufReader::new(file))
                    .map_err(|e| PipelineError::stage(Stage::Load, Some(&l.lang), e))?;
                Ok((l.lang.clone(), docs))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageResult {
    pub seen: bool,
    pub quality: TokenizerQualityReport,
    /// One report per overlap variant, sources being the seen languages.
    /// Empty for seen languages.
    pub overlap: Vec<OverlapReport>,
    pub token_set_size: usize,
    pub length_histogram: BTreeMap<usize, u64>,
}

/// Run-specific metadata. Two runs whose converted corpora coincide differ
/// only here.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub config_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub input_type: InputType,
    pub seed: u64,
    pub budget: u64,
    pub vocab_size: usize,
    pub manifests: Vec<CorpusManifest>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub seen_langs: Vec<String>,
    pub unseen_langs: Vec<String>,
    pub model_digest: String,
    pub vocab_size_target: usize,
    pub vocab_len: usize,
    pub weights: BTreeMap<String, Fraction>,
    pub repetitions: BTreeMap<String, u64>,
    pub languages: BTreeMap<String, LanguageResult>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub header: ReportHeader,
    pub results: ExperimentResults,
}

impl AnalysisReport {
    pub fn language_set(&self) -> BTreeSet<(String, bool)> {
        self.results
            .languages
            .iter()
            .map(|(l, r)| (l.clone(), r.seen))
            .collect()
    }
}

impl TidyReport for AnalysisReport {
    type Row = TidyRow;
    const COLUMNS: &'static [&'static str] = TIDY_COLUMNS;

    fn tidy_rows(&self) -> Vec<TidyRow> {
        let it = self.header.input_type.as_str();
        let mut rows = Vec::new();
        for (lang, res) in &self.results.languages {
            rows.extend(quality_rows(lang, it, &res.quality));
            rows.extend(
                res.length_histogram
                    .iter()
                    .map(|(&m, &n)| TidyRow::new(lang, it, "token_count", Some(m), n as f64)),
            );
            for o in &res.overlap {
                rows.extend(overlap_rows(o, it));
            }
        }
        rows
    }
}

/// Everything a run produces, for callers that persist more than the report.
#[derive(Clone, Debug)]
pub struct ExperimentArtifacts {
    pub report: AnalysisReport,
    pub model: SubwordModel,
    pub corpora: BTreeMap<String, Vec<String>>,
    pub token_sets: BTreeMap<String, TokenSet>,
}

pub fn run_experiment(
    cfg: &ExperimentConfig,
    corpora: &BTreeMap<String, Vec<Document>>,
) -> Result<AnalysisReport, PipelineError> {
    run_experiment_with_artifacts(cfg, corpora).map(|a| a.report)
}

pub fn run_experiment_with_artifacts(
    cfg: &ExperimentConfig,
    corpora: &BTreeMap<String, Vec<Document>>,
) -> Result<ExperimentArtifacts, PipelineError> {
    cfg.validate()?;
    let tables = cfg.tables()?;
    let keys = cfg.keys()?;
    let cache = cfg.cache_dir.as_deref().map(StageCache::new);

    let mut langs: Vec<&LanguageSpec> = cfg.languages.iter().collect();
    langs.sort_by(|a, b| a.lang.cmp(&b.lang));

    let mut transliterators = BTreeMap::new();
    for l in &langs {
        let t = Transliterator::for_input_type(cfg.input_type, &l.lang, &tables, keys.as_ref())
            .map_err(|e| PipelineError::Config(format!("`{}`: {e}", l.lang)))?;
        transliterators.insert(l.lang.clone(), t);
    }

    let mut manifests = Vec::new();
    let mut converted: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut content_keys: BTreeMap<String, String> = BTreeMap::new();
    for l in &langs {
        let lang = l.lang.as_str();
        let docs = corpora
            .get(lang)
            .ok_or_else(|| PipelineError::stage(Stage::Load, Some(lang), "no corpus provided"))?;
        let (mut manifest, sample) =
            sample_to_budget(docs, cfg.budget, cfg.seed).map_err(|e| PipelineError::stage(Stage::Sample, Some(lang), e))?;
        manifest.input_type = cfg.input_type;
        manifests.push(manifest);

        let translit = &transliterators[lang];
        let key = content_hash(&[
            b"translit",
            cfg.input_type.as_str().as_bytes(),
            lang.as_bytes(),
            fingerprint(translit).as_bytes(),
            sample.iter().map(|d| d.text.as_str()).collect::<Vec<_>>().join("\n").as_bytes(),
        ]);
        let lines = match cache.as_ref().and_then(|c| c.get_lines(&key)) {
            Some(lines) => lines,
            None => {
                let lines = sample
                    .iter()
                    .map(|d| translit.transform(&d.text))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| PipelineError::stage(Stage::Transliterate, Some(lang), e))?;
                if let Some(c) = &cache {
                    c.put_lines(&key, &lines)?;
                }
                lines
            }
        };
        content_keys.insert(lang.to_string(), key);
        converted.insert(lang.to_string(), lines);
    }

    let seen: Vec<String> = langs.iter().filter(|l| l.seen).map(|l| l.lang.clone()).collect();
    let unseen: Vec<String> = langs.iter().filter(|l| !l.seen).map(|l| l.lang.clone()).collect();
    let seen_manifests: Vec<CorpusManifest> = manifests.iter().filter(|m| seen.contains(&m.lang)).cloned().collect();
    let weights =
        oversampling_weights(&seen_manifests, cfg.budget).map_err(|e| PipelineError::stage(Stage::Train, None, e))?;
    let repetitions = repetitions(&weights);

    let mut tok_key_parts: Vec<Vec<u8>> = vec![
        b"tokenizer".to_vec(),
        cfg.vocab_size.to_string().into_bytes(),
        cfg.min_char_freq.to_string().into_bytes(),
    ];
    for lang in &seen {
        tok_key_parts.push(format!("{lang}:{}:{}", repetitions[lang], content_keys[lang]).into_bytes());
    }
    let tok_key = content_hash(&tok_key_parts.iter().map(Vec::as_slice).collect::<Vec<_>>());
    let model = match cache.as_ref().and_then(|c| c.get_model(&tok_key)) {
        Some(model) => model,
        None => {
            let mut trainer = Trainer::new(cfg.vocab_size, cfg.min_char_freq);
            for lang in &seen {
                for line in &converted[lang] {
                    trainer.feed(line, repetitions[lang]);
                }
            }
            let model = trainer.finish().map_err(|e| PipelineError::stage(Stage::Train, None, e))?;
            if let Some(c) = &cache {
                c.put_model(&tok_key, &model)?;
            }
            model
        }
    };

    let token_sets: BTreeMap<String, TokenSet> = converted
        .iter()
        .map(|(lang, lines)| (lang.clone(), model.token_set(lines, lang, cfg.input_type)))
        .collect();
    let sources: Vec<TokenSet> = seen.iter().map(|l| token_sets[l].clone()).collect();

    let mut languages = BTreeMap::new();
    for l in &langs {
        let lang = l.lang.as_str();
        let quality = metrics::quality_report(&model, &converted[lang])
            .map_err(|e| PipelineError::stage(Stage::Metrics, Some(lang), e))?;
        let set = &token_sets[lang];
        let overlap = if l.seen {
            Vec::new()
        } else {
            [OverlapVariant::MaxSource, OverlapVariant::AllSources, OverlapVariant::TypeRatio]
                .into_iter()
                .map(|v| overlap_or_empty(set, &sources, v))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| PipelineError::stage(Stage::Metrics, Some(lang), e))?
        };
        languages.insert(
            lang.to_string(),
            LanguageResult {
                seen: l.seen,
                quality,
                overlap,
                token_set_size: set.len(),
                length_histogram: set.length_histogram(),
            },
        );
    }

    let report = AnalysisReport {
        header: ReportHeader {
            config_digest: cfg.digest(),
            label: cfg.label.clone(),
            input_type: cfg.input_type,
            seed: cfg.seed,
            budget: cfg.budget,
            vocab_size: cfg.vocab_size,
            manifests,
        },
        results: ExperimentResults {
            seen_langs: seen,
            unseen_langs: unseen,
            model_digest: model.digest(),
            vocab_size_target: model.vocab_size_target(),
            vocab_len: model.len(),
            weights,
            repetitions,
            languages,
        },
    };
    Ok(ExperimentArtifacts {
        report,
        model,
        corpora: converted,
        token_sets,
    })
}

/// Integer repetition counts realizing the weights, relative to the
/// least-weighted language.
pub fn repetitions(weights: &BTreeMap<String, Fraction>) -> BTreeMap<String, u64> {
    let Some(min) = weights.values().min_by(|a, b| a.cmp(b)).copied() else {
        return BTreeMap::new();
    };
    weights
        .iter()
        .map(|(lang, w)| {
            // ceil((wn / wd) / (mn / md))
            let num = w.numer() as u128 * min.denom() as u128;
            let den = w.denom() as u128 * min.numer() as u128;
            (lang.clone(), num.div_ceil(den) as u64)
        })
        .collect()
}

/// An unseen language whose text is all UNK has an empty token set; its
/// overlap is reported as zero against the smallest source code.
fn overlap_or_empty(
    target: &TokenSet,
    sources: &[TokenSet],
    variant: OverlapVariant,
) -> Result<OverlapReport, metrics::MetricsError> {
    if target.is_empty() {
        let best = sources.iter().map(|s| s.lang.clone()).min().ok_or(metrics::MetricsError::NoSources)?;
        return Ok(OverlapReport {
            target_lang: target.lang.clone(),
            best_source_lang: best,
            variant,
            overall_ratio: Fraction::ZERO,
            by_length: BTreeMap::new(),
        });
    }
    metrics::overlap_report(target, sources, variant)
}

fn fingerprint(t: &Transliterator) -> String {
    match t {
        Transliterator::Identity => "identity".into(),
        Transliterator::G2p(table) => format!("g2p\n{}", table.to_tsv()),
        Transliterator::Romanize(table) => format!("rom\n{}", table.to_tsv()),
        Transliterator::Cipher { romanizer, key } => format!("cipher {}\n{}", key.shift(), romanizer.to_tsv()),
    }
}

fn content_hash(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

/// Content-addressed store of converted corpora and trained tokenizers.
struct StageCache {
    root: PathBuf,
}

impl StageCache {
    fn new(root: &Path) -> Self {
        StageCache { root: root.to_path_buf() }
    }

    fn path(&self, kind: &str, key: &str, ext: &str) -> PathBuf {
        self.root.join(kind).join(format!("{key}.{ext}"))
    }

    fn write(&self, path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
        let err = |e: std::io::Error| PipelineError::stage(Stage::Cache, None, format!("{}: {e}", path.display()));
        fs::create_dir_all(path.parent().expect("cache path has a parent")).map_err(err)?;
        // write then rename so a partial file is never read back
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, bytes).map_err(err)?;
        fs::rename(&tmp, path).map_err(err)
    }

    fn get_lines(&self, key: &str) -> Option<Vec<String>> {
        let text = fs::read_to_string(self.path("translit", key, "json")).ok()?;
        serde_json::from_str(&text).ok()
    }

    fn put_lines(&self, key: &str, lines: &[String]) -> Result<(), PipelineError> {
        let json = serde_json::to_vec(lines).expect("strings serialize");
        self.write(&self.path("translit", key, "json"), &json)
    }

    fn get_model(&self, key: &str) -> Option<SubwordModel> {
        let text = fs::read_to_string(self.path("tokenizer", key, "json")).ok()?;
        SubwordModel::from_json(&text).ok()
    }

    fn put_model(&self, key: &str, model: &SubwordModel) -> Result<(), PipelineError> {
        self.write(&self.path("tokenizer", key, "json"), model.to_json().as_bytes())
    }
}

/// Metrics tracked across input types.
pub const COMPARED_METRICS: [&str; 4] = ["unk_ratio", "fertility", "vocab_coverage", "overlap_ratio"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub lang: String,
    pub seen: bool,
    pub metric: String,
    /// One value per report, `None` where the metric does not apply.
    pub values: Vec<Option<f64>>,
    /// Difference from the first report's value.
    pub deltas: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub input_types: Vec<InputType>,
    pub rows: Vec<ComparisonRow>,
    /// Vocabulary coverage by token length, averaged over unseen languages,
    /// one map per report.
    pub unseen_coverage_by_length: Vec<BTreeMap<usize, f64>>,
}

fn metric_value(res: &LanguageResult, metric: &str) -> Option<f64> {
    match metric {
        "unk_ratio" => Some(res.quality.unk_ratio.to_f64()),
        "fertility" => Some(res.quality.fertility.to_f64()),
        "vocab_coverage" => Some(res.quality.vocab_coverage.to_f64()),
        "overlap_ratio" => res
            .overlap
            .iter()
            .find(|o| o.variant == OverlapVariant::MaxSource)
            .map(|o| o.overall_ratio.to_f64()),
        _ => None,
    }
}

/// Lines up reports of one language set run under different input types.
pub fn compare_input_types(reports: &[AnalysisReport]) -> Result<ComparisonTable, PipelineError> {
    let first = reports
        .first()
        .ok_or_else(|| PipelineError::Compare("no reports given".into()))?;
    let langs = first.language_set();
    for r in &reports[1..] {
        if r.language_set() != langs {
            return Err(PipelineError::Compare("reports cover different language sets".into()));
        }
        if r.header.seed != first.header.seed {
            return Err(PipelineError::Compare(format!(
                "reports use different seeds ({} and {})",
                first.header.seed, r.header.seed
            )));
        }
    }

    let mut rows = Vec::new();
    for (lang, seen) in &langs {
        for metric in COMPARED_METRICS {
            let values: Vec<Option<f64>> = reports
                .iter()
                .map(|r| metric_value(&r.results.languages[lang], metric))
                .collect();
            let deltas = values
                .iter()
                .map(|v| v.zip(values[0]).map(|(v, base)| v - base))
                .collect();
            rows.push(ComparisonRow {
                lang: lang.clone(),
                seen: *seen,
                metric: metric.to_string(),
                values,
                deltas,
            });
        }
    }

    let unseen_coverage_by_length = reports
        .iter()
        .map(|r| {
            let unseen: Vec<&LanguageResult> = r.results.languages.values().filter(|l| !l.seen).collect();
            let mut sums: BTreeMap<usize, f64> = BTreeMap::new();
            for res in &unseen {
                for (&m, f) in &res.quality.coverage_by_length {
                    *sums.entry(m).or_insert(0.0) += f.to_f64();
                }
            }
            for v in sums.values_mut() {
                *v /= unseen.len() as f64;
            }
            sums
        })
        .collect();

    Ok(ComparisonTable {
        input_types: reports.iter().map(|r| r.header.input_type).collect(),
        rows,
        unseen_coverage_by_length,
    })
}

impl TidyReport for ComparisonTable {
    type Row = TidyRow;
    const COLUMNS: &'static [&'static str] = TIDY_COLUMNS;

    fn tidy_rows(&self) -> Vec<TidyRow> {
        let mut out = Vec::new();
        for row in &self.rows {
            for (i, it) in self.input_types.iter().enumerate() {
                if let Some(v) = row.values[i] {
                    out.push(TidyRow::new(&row.lang, it.as_str(), &row.metric, None, v));
                }
                if let Some(d) = row.deltas[i] {
                    out.push(TidyRow::new(&row.lang, it.as_str(), &format!("{}_delta", row.metric), None, d));
                }
            }
        }
        for (it, cov) in self.input_types.iter().zip(&self.unseen_coverage_by_length) {
            for (&m, &v) in cov {
                out.push(TidyRow::new("unseen", it.as_str(), "vocab_coverage", Some(m), v));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(lang: &str, lines: &[&str]) -> Vec<Document> {
        lines
            .iter()
            .enumerate()
            .map(|(i, t)| Document::new(lang, format!("{i:09}"), *t))
            .collect()
    }

    fn config(input_type: InputType) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(
            vec![
                LanguageSpec {
                    lang: "eng".into(),
                    seen: true,
                },
                LanguageSpec {
                    lang: "kor".into(),
                    seen: false,
                },
            ],
            input_type,
        );
        cfg.vocab_size = 200;
        cfg.budget = 1000;
        cfg
    }

    fn corpora() -> BTreeMap<String, Vec<Document>> {
        BTreeMap::from([
            (
                "eng".to_string(),
                docs("eng", &["the cat sat on the mat", "a dog ran far away", "seoul is big"]),
            ),
            ("kor".to_string(), docs("kor", &["서울 안녕", "한국어 나라"])),
        ])
    }

    #[test]
    fn disjoint_script_is_all_unk() {
        let report = run_experiment(&config(InputType::Ortho), &corpora()).unwrap();
        let kor = &report.results.languages["kor"];
        assert_eq!(kor.quality.unk_ratio, Fraction::ONE);
        assert_eq!(kor.overlap.len(), 3);
        assert!(kor.overlap.iter().all(|o| o.overall_ratio.is_zero() && o.best_source_lang == "eng"));
        assert!(report.results.languages["eng"].overlap.is_empty());
    }

    #[test]
    fn romanization_removes_unk() {
        let report = run_experiment(&config(InputType::Rom), &corpora()).unwrap();
        let kor = &report.results.languages["kor"];
        assert!(kor.quality.unk_ratio.to_f64() < 0.5);
    }

    #[test]
    fn zero_shift_cipher_matches_rom() {
        let rom = run_experiment(&config(InputType::Rom), &corpora()).unwrap();
        let mut cfg = config(InputType::Cipher);
        cfg.cipher_keys = Some(BTreeMap::from([("eng".into(), 0), ("kor".into(), 0)]));
        let cipher = run_experiment(&cfg, &corpora()).unwrap();
        assert_eq!(
            serde_json::to_string(&rom.results).unwrap(),
            serde_json::to_string(&cipher.results).unwrap()
        );
    }

    #[test]
    fn config_errors() {
        let mut cfg = config(InputType::Cipher);
        assert!(run_experiment(&cfg, &corpora()).unwrap_err().is_config());
        cfg.input_type = InputType::Ipa;
        assert!(run_experiment(&cfg, &corpora()).unwrap_err().is_config());
        cfg.input_type = InputType::Ortho;
        cfg.languages.iter_mut().for_each(|l| l.seen = false);
        assert!(run_experiment(&cfg, &corpora()).unwrap_err().is_config());
    }

    #[test]
    fn missing_corpus_names_language() {
        let mut c = corpora();
        c.remove("kor");
        let err = run_experiment(&config(InputType::Ortho), &c).unwrap_err();
        assert!(err.to_string().contains("`kor`"), "{err}");
    }

    #[test]
    fn repetition_counts() {
        let w = BTreeMap::from([
            ("a".to_string(), Fraction::ONE),
            ("b".to_string(), Fraction::new(5, 2)),
            ("c".to_string(), Fraction::new(2, 1)),
        ]);
        let r = repetitions(&w);
        assert_eq!(r["a"], 1);
        assert_eq!(r["b"], 3);
        assert_eq!(r["c"], 2);
    }

    #[test]
    fn comparison_of_identical_reports_has_zero_deltas() {
        let r = run_experiment(&config(InputType::Ortho), &corpora()).unwrap();
        let table = compare_input_types(&[r.clone(), r.clone(), r.clone(), r]).unwrap();
        assert_eq!(table.rows.len(), 2 * COMPARED_METRICS.len());
        for row in &table.rows {
            assert!(row.deltas.iter().flatten().all(|&d| d == 0.0));
        }
    }

    #[test]
    fn toml_config() {
        let cfg = ExperimentConfig::from_toml(
            r#"
input_type = "rom"
vocab_size = 500
[[languages]]
lang = "eng"
seen = true
"#,
        )
        .unwrap();
        assert_eq!(cfg.input_type, InputType::Rom);
        assert_eq!(cfg.budget, DEFAULT_BUDGET);
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert!(ExperimentConfig::from_toml("input_type = \"rom\"\nbogus = 1\nlanguages = []").is_err());
    }
}
