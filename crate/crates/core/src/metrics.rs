//! Token overlap and tokenizer quality measures.
//!
//! All token sets passed to one overlap computation must come from the
//! same tokenizer. Token length counts characters without the boundary
//! marker. UNK never appears in a token set or in a coverage numerator,
//! but it does count toward fertility and the UNK ratio.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fraction::Fraction;
use crate::tokenizer::{token_len, SubwordModel, TokenSet, UNK_ID};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("target token set for `{0}` is empty")]
    EmptyTarget(String),
    #[error("no source token sets given")]
    NoSources,
    #[error("token sets come from different tokenizers ({0} vs {1})")]
    TokenizerMismatch(String, String),
    #[error("corpus produced no tokens")]
    NoTokens,
    #[error("corpus has no words")]
    NoWords,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapVariant {
    /// Best single source language, normalized by the target set size.
    MaxSource,
    /// Union of all source languages, normalized by the target set size.
    AllSources,
    /// Best single source, normalized within each length class.
    TypeRatio,
}

impl OverlapVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            OverlapVariant::MaxSource => "max",
            OverlapVariant::AllSources => "all",
            OverlapVariant::TypeRatio => "type",
        }
    }
}

impl fmt::Display for OverlapVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OverlapVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max" | "max_source" => Ok(OverlapVariant::MaxSource),
            "all" | "all_sources" => Ok(OverlapVariant::AllSources),
            "type" | "type_ratio" => Ok(OverlapVariant::TypeRatio),
            other => Err(format!("unknown overlap variant `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub target_lang: String,
    #[serde(rename = "best_source", alias = "best_source_lang")]
    pub best_source_lang: String,
    pub variant: OverlapVariant,
    pub overall_ratio: Fraction,
    pub by_length: BTreeMap<usize, Fraction>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerQualityReport {
    pub unk_ratio: Fraction,
    pub fertility: Fraction,
    pub vocab_coverage: Fraction,
    pub coverage_by_length: BTreeMap<usize, Fraction>,
    pub token_count: u64,
    pub unk_count: u64,
    pub word_count: u64,
    pub unique_tokens: u64,
}

fn check_inputs(target: &TokenSet, sources: &[TokenSet]) -> Result<(), MetricsError> {
    if target.is_empty() {
        return Err(MetricsError::EmptyTarget(target.lang.clone()));
    }
    if sources.is_empty() {
        return Err(MetricsError::NoSources);
    }
    if let Some(tid) = &target.model_id {
        for s in sources {
            if let Some(sid) = &s.model_id {
                if sid != tid {
                    return Err(MetricsError::TokenizerMismatch(tid.clone(), sid.clone()));
                }
            }
        }
    }
    Ok(())
}

fn intersection_size(a: &BTreeSet<String>, b: &BTreeSet<String>) -> usize {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().filter(|t| large.contains(*t)).count()
}

/// Index of the best-overlapping source; ties go to the smallest language code.
fn best_source(target: &TokenSet, sources: &[TokenSet]) -> (usize, usize) {
    let mut best: Option<(usize, usize)> = None;
    for (i, src) in sources.iter().enumerate() {
        let shared = intersection_size(&target.tokens, &src.tokens);
        best = match best {
            None => Some((i, shared)),
            Some((bi, bs)) if shared > bs || (shared == bs && src.lang < sources[bi].lang) => Some((i, shared)),
            keep => keep,
        };
    }
    best.expect("sources checked non-empty")
}

fn shared_by_length(target: &TokenSet, others: impl Fn(&str) -> bool) -> BTreeMap<usize, usize> {
    let mut counts = BTreeMap::new();
    for t in target.tokens.iter().filter(|t| others(t)) {
        *counts.entry(token_len(t)).or_insert(0) += 1;
    }
    counts
}

/// Largest share of the target's tokens found in any one source, and that source.
pub fn overlap_ratio(target: &TokenSet, sources: &[TokenSet]) -> Result<(String, Fraction), MetricsError> {
    check_inputs(target, sources)?;
    let (idx, shared) = best_source(target, sources);
    Ok((sources[idx].lang.clone(), Fraction::from_counts(shared, target.len())))
}

/// Overlap with the best source, split by token length. Lengths with no
/// shared token are left out.
pub fn overlap_by_length(target: &TokenSet, sources: &[TokenSet]) -> Result<BTreeMap<usize, Fraction>, MetricsError> {
    check_inputs(target, sources)?;
    let (idx, _) = best_source(target, sources);
    let src = &sources[idx].tokens;
    Ok(shared_by_length(target, |t| src.contains(t))
        .into_iter()
        .map(|(m, n)| (m, Fraction::from_counts(n, target.len())))
        .collect())
}

/// Overlap with the union of every source, split by token length.
pub fn overlap_all_sources(target: &TokenSet, sources: &[TokenSet]) -> Result<BTreeMap<usize, Fraction>, MetricsError> {
    check_inputs(target, sources)?;
    let union: HashSet<&str> = sources.iter().flat_map(|s| s.tokens.iter().map(String::as_str)).collect();
    Ok(shared_by_length(target, |t| union.contains(t))
        .into_iter()
        .map(|(m, n)| (m, Fraction::from_counts(n, target.len())))
        .collect())
}

/// Overlap with the best source, normalized by the number of target tokens
/// of the same length. Every length present in the target gets an entry.
pub fn type_ratio(target: &TokenSet, sources: &[TokenSet]) -> Result<BTreeMap<usize, Fraction>, MetricsError> {
    check_inputs(target, sources)?;
    let (idx, _) = best_source(target, sources);
    let src = &sources[idx].tokens;
    let shared = shared_by_length(target, |t| src.contains(t));
    Ok(target
        .length_histogram()
        .into_iter()
        .map(|(m, total)| {
            let n = shared.get(&m).copied().unwrap_or(0);
            (m, Fraction::new(n as u64, total))
        })
        .collect())
}

pub fn overlap_report(
    target: &TokenSet,
    sources: &[TokenSet],
    variant: OverlapVariant,
) -> Result<OverlapReport, MetricsError> {
    let (best_source_lang, max_ratio) = overlap_ratio(target, sources)?;
    let (overall_ratio, by_length) = match variant {
        OverlapVariant::MaxSource => (max_ratio, overlap_by_length(target, sources)?),
        OverlapVariant::AllSources => {
            let by_length = overlap_all_sources(target, sources)?;
            (by_length.values().sum(), by_length)
        }
        OverlapVariant::TypeRatio => (max_ratio, type_ratio(target, sources)?),
    };
    Ok(OverlapReport {
        target_lang: target.lang.clone(),
        best_source_lang,
        variant,
        overall_ratio,
        by_length,
    })
}

/// Raw counts from encoding a corpus, from which every quality figure derives.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EncodeCounts {
    pub tokens: u64,
    pub unk: u64,
    pub words: u64,
    pub unique: BTreeSet<u32>,
}

pub fn encode_counts<S: AsRef<str>>(model: &SubwordModel, corpus: &[S]) -> EncodeCounts {
    let mut counts = EncodeCounts::default();
    let mut cache = HashMap::new();
    for line in corpus {
        let line = line.as_ref();
        counts.words += line.split_whitespace().count() as u64;
        for id in model.encode_cached(line, &mut cache) {
            counts.tokens += 1;
            if id == UNK_ID {
                counts.unk += 1;
            } else {
                counts.unique.insert(id);
            }
        }
    }
    counts
}

/// UNK tokens divided by all tokens.
pub fn unk_ratio<S: AsRef<str>>(model: &SubwordModel, corpus: &[S]) -> Result<Fraction, MetricsError> {
    let c = encode_counts(model, corpus);
    if c.tokens == 0 {
        return Err(MetricsError::NoTokens);
    }
    Ok(Fraction::new(c.unk, c.tokens))
}

/// Tokens (UNK included) per whitespace word.
pub fn fertility<S: AsRef<str>>(model: &SubwordModel, corpus: &[S]) -> Result<Fraction, MetricsError> {
    let c = encode_counts(model, corpus);
    if c.words == 0 {
        return Err(MetricsError::NoWords);
    }
    Ok(Fraction::new(c.tokens, c.words))
}

fn coverage_from(model: &SubwordModel, unique: &BTreeSet<u32>) -> (Fraction, BTreeMap<usize, Fraction>) {
    let target = model.vocab_size_target() as u64;
    let mut by_len: BTreeMap<usize, u64> = BTreeMap::new();
    for &id in unique {
        let tok = model.token(id).expect("encoded ids are in vocab");
        *by_len.entry(token_len(tok)).or_insert(0) += 1;
    }
    (
        Fraction::new(unique.len() as u64, target),
        by_len.into_iter().map(|(m, n)| (m, Fraction::new(n, target))).collect(),
    )
}

/// Distinct non-UNK tokens produced over the vocabulary size target.
pub fn vocab_coverage<S: AsRef<str>>(model: &SubwordModel, corpus: &[S]) -> (Fraction, BTreeMap<usize, Fraction>) {
    coverage_from(model, &encode_counts(model, corpus).unique)
}

pub fn quality_report<S: AsRef<str>>(model: &SubwordModel, corpus: &[S]) -> Result<TokenizerQualityReport, MetricsError> {
    let c = encode_counts(model, corpus);
    if c.tokens == 0 {
        return Err(MetricsError::NoTokens);
    }
    let (vocab_coverage, coverage_by_length) = coverage_from(model, &c.unique);
    Ok(TokenizerQualityReport {
        unk_ratio: Fraction::new(c.unk, c.tokens),
        fertility: Fraction::new(c.tokens, c.words),
        vocab_coverage,
        coverage_by_length,
        token_count: c.tokens,
        unk_count: c.unk,
        word_count: c.words,
        unique_tokens: c.unique.len() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::train;

    fn set(lang: &str, toks: &[&str]) -> TokenSet {
        TokenSet::new(lang, toks.iter().copied())
    }

    #[test]
    fn max_source_ratio() {
        let target = set("tgt", &["ab", "cd", "zz"]);
        let sources = [set("fra", &["ab", "cd", "ef"]), set("spa", &["ab", "xy"])];
        assert_eq!(overlap_ratio(&target, &sources).unwrap(), ("fra".into(), Fraction::new(2, 3)));
        assert_eq!(
            overlap_by_length(&target, &sources).unwrap(),
            BTreeMap::from([(2, Fraction::new(2, 3))])
        );
        assert_eq!(overlap_ratio(&target, std::slice::from_ref(&target)).unwrap().1, Fraction::ONE);
    }

    #[test]
    fn disjoint_sets() {
        let target = set("t", &["a", "b"]);
        let sources = [set("s", &["c"])];
        assert_eq!(overlap_ratio(&target, &sources).unwrap().1, Fraction::ZERO);
        assert!(overlap_by_length(&target, &sources).unwrap().is_empty());
    }

    #[test]
    fn ties_pick_smallest_code() {
        let target = set("t", &["ab", "xy"]);
        let sources = [set("zzz", &["ab"]), set("aaa", &["xy"])];
        assert_eq!(overlap_ratio(&target, &sources).unwrap().0, "aaa");
    }

    #[test]
    fn union_of_sources() {
        let target = set("t", &["ab", "xy"]);
        let sources = [set("a", &["ab"]), set("b", &["xy"])];
        assert_eq!(
            overlap_all_sources(&target, &sources).unwrap(),
            BTreeMap::from([(2, Fraction::ONE)])
        );
        assert_eq!(overlap_ratio(&target, &sources).unwrap().1, Fraction::new(1, 2));
    }

    #[test]
    fn per_length_normalization() {
        let target = set("t", &["ab", "cd"]);
        let sources = [set("s", &["ab"])];
        assert_eq!(type_ratio(&target, &sources).unwrap(), BTreeMap::from([(2, Fraction::new(1, 2))]));
        let wider = set("t", &["ab", "cd", "xyz", "q"]);
        assert_eq!(type_ratio(&wider, &sources).unwrap()[&2], Fraction::new(1, 2));
        assert_eq!(type_ratio(&wider, &sources).unwrap()[&3], Fraction::ZERO);
    }

    #[test]
    fn input_errors() {
        let empty = set("t", &[]);
        assert!(matches!(overlap_ratio(&empty, &[set("s", &["a"])]), Err(MetricsError::EmptyTarget(_))));
        assert_eq!(overlap_ratio(&set("t", &["a"]), &[]), Err(MetricsError::NoSources));
        let mut a = set("t", &["a"]);
        a.model_id = Some("m1".into());
        let mut b = set("s", &["a"]);
        b.model_id = Some("m2".into());
        assert!(matches!(overlap_ratio(&a, &[b]), Err(MetricsError::TokenizerMismatch(..))));
    }

    #[test]
    fn quality_on_small_model() {
        let model = train(&["the cat sat on the mat"], 40, 1).unwrap();
        assert_eq!(unk_ratio(&model, &["the cat"]).unwrap(), Fraction::ZERO);
        assert_eq!(unk_ratio(&model, &["안녕", "세계"]).unwrap(), Fraction::ONE);
        // "the" is a single merged token
        assert_eq!(unk_ratio(&model, &["the the the 안녕"]).unwrap(), Fraction::new(1, 4));
        assert!(unk_ratio::<&str>(&model, &[]).is_err());
        assert!(fertility(&model, &[""]).is_err());
        let (overall, by_len) = vocab_coverage::<&str>(&model, &[]);
        assert_eq!(overall, Fraction::ZERO);
        assert!(by_len.is_empty());
    }
}
