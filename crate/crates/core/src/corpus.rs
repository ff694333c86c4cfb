//! Document collections, per-language word budgets and annotated datasets.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fraction::Fraction;
use crate::translit::{TextTransform, TranslitError};

/// Default per-language word budget.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Default sampling seed used when none is given.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("word budget must be positive")]
    ZeroBudget,
    #[error("documents from several languages in one collection: {0} and {1}")]
    MixedLanguages(String, String),
    #[error("language {0} has no words")]
    ZeroWordCount(String),
    #[error("token {index} could not be transformed: {source}")]
    Transform {
        index: usize,
        #[source]
        source: TranslitError,
    },
    #[error("record has {tokens} tokens but {labels} labels")]
    Misaligned { tokens: usize, labels: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The four text representations a corpus can be converted into.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputType {
    Ortho,
    Ipa,
    Rom,
    Cipher,
}

impl InputType {
    pub const ALL: [InputType; 4] = [InputType::Ortho, InputType::Ipa, InputType::Rom, InputType::Cipher];

    pub fn as_str(&self) -> &'static str {
        match self {
            InputType::Ortho => "ortho",
            InputType::Ipa => "ipa",
            InputType::Rom => "rom",
            InputType::Cipher => "cipher",
        }
    }
}

impl fmt::Display for InputType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InputType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ortho" => Ok(InputType::Ortho),
            "ipa" => Ok(InputType::Ipa),
            "rom" => Ok(InputType::Rom),
            "cipher" => Ok(InputType::Cipher),
            other => Err(format!("unknown input type `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub lang: String,
    pub id: String,
    pub text: String,
}

impl Document {
    pub fn new(lang: impl Into<String>, id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            lang: lang.into(),
            id: id.into(),
            text: text.into(),
        }
    }
}

/// Bookkeeping for one sampled language collection.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub lang: String,
    pub input_type: InputType,
    pub doc_count: u64,
    pub word_count: u64,
    pub sampling_seed: u64,
    pub under_budget: bool,
}

/// Token-aligned labelled sequence (e.g. one NER sentence).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedRecord {
    pub lang: String,
    pub tokens: Vec<String>,
    pub labels: Vec<String>,
}

impl AnnotatedRecord {
    pub fn new(lang: impl Into<String>, tokens: Vec<String>, labels: Vec<String>) -> Result<Self, CorpusError> {
        if tokens.len() != labels.len() {
            return Err(CorpusError::Misaligned {
                tokens: tokens.len(),
                labels: labels.len(),
            });
        }
        Ok(AnnotatedRecord {
            lang: lang.into(),
            tokens,
            labels,
        })
    }
}

/// Number of maximal runs of non-whitespace characters.
pub fn count_words(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

/// Shuffles `docs` with `seed` and keeps documents until the running word
/// total reaches `budget`.
///
/// Documents are first ordered by id so the result does not depend on the
/// order they were read in. The document that makes the total reach or pass
/// the budget is kept.
pub fn sample_to_budget(
    docs: &[Document],
    budget: u64,
    seed: u64,
) -> Result<(CorpusManifest, Vec<Document>), CorpusError> {
    if budget == 0 {
        return Err(CorpusError::ZeroBudget);
    }
    let first = docs.first().ok_or(CorpusError::EmptyCorpus)?;
    if let Some(other) = docs.iter().find(|d| d.lang != first.lang) {
        return Err(CorpusError::MixedLanguages(first.lang.clone(), other.lang.clone()));
    }

    let mut order: Vec<&Document> = docs.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut selected = Vec::new();
    let mut total = 0u64;
    for doc in order {
        total += count_words(&doc.text);
        selected.push(doc.clone());
        if total >= budget {
            break;
        }
    }

    let manifest = CorpusManifest {
        lang: first.lang.clone(),
        input_type: InputType::Ortho,
        doc_count: selected.len() as u64,
        word_count: total,
        sampling_seed: seed,
        under_budget: total < budget,
    };
    Ok((manifest, selected))
}

/// Exposure weight per language: `budget / word_count` below budget, 1 otherwise.
pub fn oversampling_weights(
    manifests: &[CorpusManifest],
    budget: u64,
) -> Result<BTreeMap<String, Fraction>, CorpusError> {
    if budget == 0 {
        return Err(CorpusError::ZeroBudget);
    }
    manifests
        .iter()
        .map(|m| {
            if m.word_count == 0 {
                return Err(CorpusError::ZeroWordCount(m.lang.clone()));
            }
            let weight = if m.word_count < budget {
                Fraction::new(budget, m.word_count)
            } else {
                Fraction::ONE
            };
            Ok((m.lang.clone(), weight))
        })
        .collect()
}

/// Applies `transform` to every token of `rec`, leaving labels untouched.
pub fn convert_annotated<T: TextTransform + ?Sized>(
    rec: &AnnotatedRecord,
    transform: &T,
) -> Result<AnnotatedRecord, CorpusError> {
    let tokens = rec
        .tokens
        .iter()
        .enumerate()
        .map(|(index, tok)| {
            transform
                .transform(tok)
                .map_err(|source| CorpusError::Transform { index, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AnnotatedRecord {
        lang: rec.lang.clone(),
        tokens,
        labels: rec.labels.clone(),
    })
}

/// Reads a one-document-per-line file. Blank lines are skipped; ids are the
/// zero-padded line numbers so that lexicographic order is file order.
pub fn read_documents<R: BufRead>(lang: &str, reader: R) -> Result<Vec<Document>, CorpusError> {
    let mut docs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        docs.push(Document::new(lang, format!("{idx:09}"), line));
    }
    Ok(docs)
}

pub fn write_documents<W: Write>(docs: &[Document], mut writer: W) -> Result<(), CorpusError> {
    for doc in docs {
        // a document is one line; embedded newlines would split it
        let flat: String = doc.text.split(['\n', '\r']).collect::<Vec<_>>().join(" ");
        writeln!(writer, "{flat}")?;
    }
    Ok(())
}

/// Parses `token<TAB>label` lines with blank lines between records.
pub fn read_annotated<R: BufRead>(lang: &str, reader: R) -> Result<Vec<AnnotatedRecord>, CorpusError> {
    let mut records = Vec::new();
    let mut tokens = Vec::new();
    let mut labels = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            if !tokens.is_empty() {
                records.push(AnnotatedRecord::new(
                    lang,
                    std::mem::take(&mut tokens),
                    std::mem::take(&mut labels),
                )?);
            }
            continue;
        }
        let (tok, label) = line.split_once('\t').ok_or_else(|| CorpusError::Parse {
            line: idx + 1,
            message: "expected token<TAB>label".into(),
        })?;
        tokens.push(tok.to_string());
        labels.push(label.to_string());
    }
    if !tokens.is_empty() {
        records.push(AnnotatedRecord::new(lang, tokens, labels)?);
    }
    Ok(records)
}

pub fn write_annotated<W: Write>(records: &[AnnotatedRecord], mut writer: W) -> Result<(), CorpusError> {
    for (i, rec) in records.iter().enumerate() {
        if i > 0 {
            writeln!(writer)?;
        }
        for (tok, label) in rec.tokens.iter().zip(&rec.labels) {
            writeln!(writer, "{tok}\t{label}")?;
        }
    }
    Ok(())
}
