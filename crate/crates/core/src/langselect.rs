//! Language similarity and pre-training language-set search.
//!
//! Pairwise similarity is the sum of three feature-vector cosines
//! (syntactic, geographic, genetic) and a lexical word-type overlap. A set's
//! score is its mean pairwise similarity, optionally adjusted by the number
//! of scripts it spans; "sim" regimes maximize it, "dissim" regimes
//! minimize it.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default weight of the script-count term.
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_SET_SIZE: usize = 8;
/// Above this many candidate subsets the search switches to hill climbing.
pub const EXHAUSTIVE_LIMIT: u128 = 2_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum SelectError {
    #[error("vectors have different dimensions ({0} and {1})")]
    DimensionMismatch(usize, usize),
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("corpus for `{0}` is empty")]
    EmptyCorpus(String),
    #[error("language `{lang}` has no {component} features")]
    MissingFeature { lang: String, component: FeatureKind },
    #[error("no corpus for language `{0}`")]
    MissingCorpus(String),
    #[error("no script recorded for language `{0}`")]
    MissingScript(String),
    #[error("unknown language `{0}`")]
    UnknownLanguage(String),
    #[error("candidate set has {got} languages, expected {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("pool of {pool} languages cannot fill a set of {size}")]
    PoolTooSmall { pool: usize, size: usize },
    #[error("set size must be at least 2")]
    SetTooSmall,
    #[error("same-script regime needs a single-script pool, found {0:?}")]
    MixedScripts(Vec<String>),
    #[error("inconsistent {kind} dimensions: {expected} vs {got} for `{lang}`")]
    InconsistentDimensions {
        kind: FeatureKind,
        lang: String,
        expected: usize,
        got: usize,
    },
    #[error("feature file line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Syntactic,
    Geographic,
    Genetic,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 3] = [FeatureKind::Syntactic, FeatureKind::Geographic, FeatureKind::Genetic];
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Syntactic => "syntactic",
            FeatureKind::Geographic => "geographic",
            FeatureKind::Genetic => "genetic",
        })
    }
}

impl FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "syntactic" | "syntax" | "syn" => Ok(FeatureKind::Syntactic),
            "geographic" | "geo" => Ok(FeatureKind::Geographic),
            "genetic" | "gen" | "fam" => Ok(FeatureKind::Genetic),
            other => Err(format!("unknown feature kind `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "sim-same")]
    SimSame,
    #[serde(rename = "sim-div")]
    SimDiv,
    #[serde(rename = "dissim-same")]
    DissimSame,
    #[serde(rename = "dissim-div")]
    DissimDiv,
}

impl Regime {
    pub const ALL: [Regime; 4] = [Regime::SimSame, Regime::SimDiv, Regime::DissimSame, Regime::DissimDiv];

    pub fn maximizes(&self) -> bool {
        matches!(self, Regime::SimSame | Regime::SimDiv)
    }

    pub fn same_script(&self) -> bool {
        matches!(self, Regime::SimSame | Regime::DissimSame)
    }

    /// Sign of the script-count term.
    fn script_sign(&self) -> f64 {
        match self {
            Regime::SimDiv => 1.0,
            Regime::DissimDiv => -1.0,
            Regime::SimSame | Regime::DissimSame => 0.0,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::SimSame => "sim-same",
            Regime::SimDiv => "sim-div",
            Regime::DissimSame => "dissim-same",
            Regime::DissimDiv => "dissim-div",
        })
    }
}

impl FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sim-same" => Ok(Regime::SimSame),
            "sim-div" => Ok(Regime::SimDiv),
            "dissim-same" => Ok(Regime::DissimSame),
            "dissim-div" => Ok(Regime::DissimDiv),
            other => Err(format!("unknown regime `{other}`")),
        }
    }
}

/// Typological vectors for one language; `None` marks a component the
/// source database has no values for.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVectors {
    pub lang: String,
    pub syntactic: Option<Vec<f64>>,
    pub geographic: Option<Vec<f64>>,
    pub genetic: Option<Vec<f64>>,
}

impl FeatureVectors {
    pub fn get(&self, kind: FeatureKind) -> Option<&[f64]> {
        match kind {
            FeatureKind::Syntactic => self.syntactic.as_deref(),
            FeatureKind::Geographic => self.geographic.as_deref(),
            FeatureKind::Genetic => self.genetic.as_deref(),
        }
    }

    fn slot(&mut self, kind: FeatureKind) -> &mut Option<Vec<f64>> {
        match kind {
            FeatureKind::Syntactic => &mut self.syntactic,
            FeatureKind::Geographic => &mut self.geographic,
            FeatureKind::Genetic => &mut self.genetic,
        }
    }
}

/// How a pair with an absent feature component is scored.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingFeatures {
    /// Fail, naming the absent component.
    Error,
    /// Drop the component and scale the remaining ones by 4 / present.
    #[default]
    Rescale,
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, SelectError> {
    if a.len() != b.len() {
        return Err(SelectError::DimensionMismatch(a.len(), b.len()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(SelectError::ZeroVector);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Word types of a corpus, words split on whitespace.
pub fn word_types<S: AsRef<str>>(corpus: &[S]) -> HashSet<String> {
    corpus
        .iter()
        .flat_map(|line| line.as_ref().split_whitespace().map(str::to_string))
        .collect()
}

fn jaccard(x: &HashSet<String>, y: &HashSet<String>) -> f64 {
    let shared = x.iter().filter(|w| y.contains(*w)).count();
    let union = x.len() + y.len() - shared;
    shared as f64 / union as f64
}

/// Shared word types over all word types of the two corpora.
pub fn lexical_similarity<S: AsRef<str>>(x: &[S], y: &[S]) -> Result<f64, SelectError> {
    let (tx, ty) = (word_types(x), word_types(y));
    if tx.is_empty() {
        return Err(SelectError::EmptyCorpus("first".into()));
    }
    if ty.is_empty() {
        return Err(SelectError::EmptyCorpus("second".into()));
    }
    Ok(jaccard(&tx, &ty))
}

/// Feature vectors for a language pool, with per-kind dimension checks.
#[derive(Clone, Debug, Default)]
pub struct FeatureRegistry {
    langs: BTreeMap<String, FeatureVectors>,
}

impl FeatureRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, fv: FeatureVectors) -> Result<(), SelectError> {
        for kind in FeatureKind::ALL {
            let Some(v) = fv.get(kind) else { continue };
            if let Some(existing) = self.langs.values().find_map(|o| o.get(kind)) {
                if existing.len() != v.len() {
                    return Err(SelectError::InconsistentDimensions {
                        kind,
                        lang: fv.lang.clone(),
                        expected: existing.len(),
                        got: v.len(),
                    });
                }
            }
        }
        self.langs.insert(fv.lang.clone(), fv);
        Ok(())
    }

    pub fn get(&self, lang: &str) -> Option<&FeatureVectors> {
        self.langs.get(lang)
    }

    pub fn langs(&self) -> impl Iterator<Item = &str> {
        self.langs.keys().map(String::as_str)
    }

    /// Reads `lang,kind,values` rows. Values are either one field of
    /// comma-joined floats or one float per remaining column; a `--` or
    /// empty entry marks the whole vector as missing.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, SelectError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut pending: BTreeMap<String, FeatureVectors> = BTreeMap::new();
        for (idx, rec) in rdr.records().enumerate() {
            let line = idx + 1;
            let rec = rec.map_err(|e| SelectError::Parse {
                line,
                message: e.to_string(),
            })?;
            if rec.len() < 3 {
                return Err(SelectError::Parse {
                    line,
                    message: "expected lang,kind,values".into(),
                });
            }
            if idx == 0 && rec[0].trim().eq_ignore_ascii_case("lang") {
                continue;
            }
            let lang = rec[0].trim().to_string();
            let kind: FeatureKind = rec[1].parse().map_err(|message| SelectError::Parse { line, message })?;
            let raw: Vec<&str> = if rec.len() == 3 {
                rec[2].split(',').collect()
            } else {
                rec.iter().skip(2).collect()
            };
            let mut values = Vec::with_capacity(raw.len());
            let mut missing = false;
            for v in raw {
                let v = v.trim();
                if v.is_empty() || v == "--" {
                    missing = true;
                    continue;
                }
                values.push(v.parse::<f64>().map_err(|_| SelectError::Parse {
                    line,
                    message: format!("invalid number `{v}`"),
                })?);
            }
            let entry = pending.entry(lang.clone()).or_insert_with(|| FeatureVectors {
                lang,
                ..Default::default()
            });
            *entry.slot(kind) = if missing { None } else { Some(values) };
        }
        let mut reg = FeatureRegistry::new();
        for fv in pending.into_values() {
            reg.insert(fv)?;
        }
        Ok(reg)
    }
}

/// The four similarity components for a pair; `None` when absent.
fn components(
    x: &str,
    y: &str,
    features: &FeatureRegistry,
    types: &BTreeMap<String, HashSet<String>>,
) -> Result<[Option<f64>; 4], SelectError> {
    let fx = features.get(x).ok_or_else(|| SelectError::UnknownLanguage(x.to_string()))?;
    let fy = features.get(y).ok_or_else(|| SelectError::UnknownLanguage(y.to_string()))?;
    let mut out = [None; 4];
    for (slot, kind) in out.iter_mut().zip(FeatureKind::ALL) {
        *slot = match (fx.get(kind), fy.get(kind)) {
            (Some(a), Some(b)) => match cosine_similarity(a, b) {
                Ok(c) => Some(c),
                Err(SelectError::ZeroVector) => None,
                Err(e) => return Err(e),
            },
            _ => None,
        };
    }
    let tx = types.get(x).ok_or_else(|| SelectError::MissingCorpus(x.to_string()))?;
    let ty = types.get(y).ok_or_else(|| SelectError::MissingCorpus(y.to_string()))?;
    if tx.is_empty() {
        return Err(SelectError::EmptyCorpus(x.to_string()));
    }
    if ty.is_empty() {
        return Err(SelectError::EmptyCorpus(y.to_string()));
    }
    out[3] = Some(jaccard(tx, ty));
    Ok(out)
}

fn combine(
    x: &str,
    y: &str,
    parts: [Option<f64>; 4],
    features: &FeatureRegistry,
    missing: MissingFeatures,
) -> Result<f64, SelectError> {
    if missing == MissingFeatures::Error {
        if let Some(i) = parts.iter().position(Option::is_none) {
            let kind = FeatureKind::ALL[i];
            let lang = match features.get(x).and_then(|f| f.get(kind)) {
                Some(v) if v.iter().any(|&c| c != 0.0) => y,
                _ => x,
            };
            return Err(SelectError::MissingFeature {
                lang: lang.to_string(),
                component: kind,
            });
        }
    }
    let present: Vec<f64> = parts.iter().flatten().copied().collect();
    let sum: f64 = present.iter().sum();
    Ok(if present.len() == 4 {
        sum
    } else {
        sum * 4.0 / present.len() as f64
    })
}

/// Sum of the syntactic, geographic, genetic and lexical similarities.
pub fn aggregate_similarity<S: AsRef<str>>(
    x: &str,
    y: &str,
    features: &FeatureRegistry,
    corpora: &BTreeMap<String, Vec<S>>,
    missing: MissingFeatures,
) -> Result<f64, SelectError> {
    let mut types = BTreeMap::new();
    for lang in [x, y] {
        let corpus = corpora.get(lang).ok_or_else(|| SelectError::MissingCorpus(lang.to_string()))?;
        types.insert(lang.to_string(), word_types(corpus));
    }
    combine(x, y, components(x, y, features, &types)?, features, missing)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    langs: Vec<String>,
    entries: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    /// Builds the matrix from explicit symmetric entries (diagonal ignored).
    pub fn from_entries(langs: Vec<String>, entries: Vec<Vec<f64>>) -> Self {
        assert_eq!(langs.len(), entries.len());
        SimilarityMatrix { langs, entries }
    }

    pub fn build<S: AsRef<str>>(
        langs: &[String],
        features: &FeatureRegistry,
        corpora: &BTreeMap<String, Vec<S>>,
        missing: MissingFeatures,
    ) -> Result<Self, SelectError> {
        let mut langs: Vec<String> = langs.to_vec();
        langs.sort();
        langs.dedup();
        let mut types = BTreeMap::new();
        for lang in &langs {
            let corpus = corpora.get(lang).ok_or_else(|| SelectError::MissingCorpus(lang.clone()))?;
            types.insert(lang.clone(), word_types(corpus));
        }
        let n = langs.len();
        let mut entries = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let parts = components(&langs[i], &langs[j], features, &types)?;
                let s = combine(&langs[i], &langs[j], parts, features, missing)?;
                entries[i][j] = s;
                entries[j][i] = s;
            }
        }
        Ok(SimilarityMatrix { langs, entries })
    }

    pub fn langs(&self) -> &[String] {
        &self.langs
    }

    pub fn index_of(&self, lang: &str) -> Option<usize> {
        self.langs.iter().position(|l| l == lang)
    }

    pub fn get(&self, x: &str, y: &str) -> Option<f64> {
        Some(self.entries[self.index_of(x)?][self.index_of(y)?])
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionSpec {
    pub regime: Regime,
    pub set_size: usize,
    pub alpha: f64,
    pub script_map: BTreeMap<String, String>,
}

impl SelectionSpec {
    pub fn new(regime: Regime, script_map: BTreeMap<String, String>) -> Self {
        SelectionSpec {
            regime,
            set_size: DEFAULT_SET_SIZE,
            alpha: DEFAULT_ALPHA,
            script_map,
        }
    }

    fn script(&self, lang: &str) -> Result<&str, SelectError> {
        self.script_map
            .get(lang)
            .map(String::as_str)
            .ok_or_else(|| SelectError::MissingScript(lang.to_string()))
    }
}

/// Mean ordered-pair similarity plus the regime's script-count term.
pub fn set_objective(langs: &[String], spec: &SelectionSpec, sims: &SimilarityMatrix) -> Result<f64, SelectError> {
    if langs.len() != spec.set_size {
        return Err(SelectError::SizeMismatch {
            expected: spec.set_size,
            got: langs.len(),
        });
    }
    if langs.len() < 2 {
        return Err(SelectError::SetTooSmall);
    }
    let idx = langs
        .iter()
        .map(|l| sims.index_of(l).ok_or_else(|| SelectError::UnknownLanguage(l.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    for lang in langs {
        spec.script(lang)?;
    }
    let scripts = scripts_by_index(sims, spec)?;
    Ok(Objective::new(spec, sims, &scripts).eval(&idx))
}

fn scripts_by_index(sims: &SimilarityMatrix, spec: &SelectionSpec) -> Result<Vec<usize>, SelectError> {
    let mut names: Vec<&str> = Vec::new();
    sims.langs
        .iter()
        .map(|l| {
            let s = spec.script_map.get(l).map(String::as_str).unwrap_or("");
            Ok(match names.iter().position(|n| *n == s) {
                Some(i) => i,
                None => {
                    names.push(s);
                    names.len() - 1
                }
            })
        })
        .collect()
}

struct Objective<'a> {
    sims: &'a SimilarityMatrix,
    scripts: &'a [usize],
    alpha_term: f64,
}

impl<'a> Objective<'a> {
    fn new(spec: &SelectionSpec, sims: &'a SimilarityMatrix, scripts: &'a [usize]) -> Self {
        Objective {
            sims,
            scripts,
            alpha_term: spec.alpha * spec.regime.script_sign(),
        }
    }

    fn eval(&self, set: &[usize]) -> f64 {
        let k = set.len();
        let mut sum = 0.0;
        for (a, &i) in set.iter().enumerate() {
            for &j in &set[a + 1..] {
                sum += self.sims.at(i, j);
            }
        }
        // each unordered pair stands for two ordered pairs
        let mean = 2.0 * sum / (k * (k - 1)) as f64;
        if self.alpha_term == 0.0 {
            return mean;
        }
        let distinct: BTreeSet<usize> = set.iter().map(|&i| self.scripts[i]).collect();
        mean + self.alpha_term * distinct.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub regime: Regime,
    pub langs: Vec<String>,
    pub objective: f64,
    pub alpha: f64,
}

/// Search strategy for [`select_subset_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Search {
    /// Exhaustive up to [`EXHAUSTIVE_LIMIT`] subsets, hill climbing beyond.
    Auto,
    Exhaustive,
    HillClimb,
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Keeps the languages whose script is `script`.
pub fn restrict_to_script(pool: &[String], script_map: &BTreeMap<String, String>, script: &str) -> Vec<String> {
    pool.iter()
        .filter(|l| script_map.get(*l).is_some_and(|s| s == script))
        .cloned()
        .collect()
}

pub fn select_subset(pool: &[String], spec: &SelectionSpec, sims: &SimilarityMatrix) -> Result<Selection, SelectError> {
    select_subset_with(pool, spec, sims, Search::Auto)
}

pub fn select_subset_with(
    pool: &[String],
    spec: &SelectionSpec,
    sims: &SimilarityMatrix,
    search: Search,
) -> Result<Selection, SelectError> {
    let mut pool: Vec<String> = pool.to_vec();
    pool.sort();
    pool.dedup();
    let k = spec.set_size;
    if k < 2 {
        return Err(SelectError::SetTooSmall);
    }
    if pool.len() < k {
        return Err(SelectError::PoolTooSmall {
            pool: pool.len(),
            size: k,
        });
    }
    for lang in &pool {
        spec.script(lang)?;
    }
    if spec.regime.same_script() {
        let scripts: BTreeSet<&str> = pool.iter().map(|l| spec.script_map[l].as_str()).collect();
        if scripts.len() > 1 {
            return Err(SelectError::MixedScripts(scripts.into_iter().map(str::to_string).collect()));
        }
    }
    let idx = pool
        .iter()
        .map(|l| sims.index_of(l).ok_or_else(|| SelectError::UnknownLanguage(l.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let scripts = scripts_by_index(sims, spec)?;
    let objective = Objective::new(spec, sims, &scripts);
    let better = |a: f64, b: f64| if spec.regime.maximizes() { a > b } else { a < b };

    let exhaustive = match search {
        Search::Exhaustive => true,
        Search::HillClimb => false,
        Search::Auto => binomial(pool.len(), k) <= EXHAUSTIVE_LIMIT,
    };
    let (positions, value) = if exhaustive {
        search_exhaustive(idx.len(), k, |pos| objective.eval(&pick(&idx, pos)), better)
    } else {
        search_hill_climb(idx.len(), k, |pos| objective.eval(&pick(&idx, pos)), better)
    };
    Ok(Selection {
        regime: spec.regime,
        langs: positions.iter().map(|&p| pool[p].clone()).collect(),
        objective: value,
        alpha: spec.alpha,
    })
}

fn pick(idx: &[usize], positions: &[usize]) -> Vec<usize> {
    positions.iter().map(|&p| idx[p]).collect()
}

/// Visits combinations in lexicographic order; the first best one wins ties.
fn search_exhaustive(
    n: usize,
    k: usize,
    eval: impl Fn(&[usize]) -> f64,
    better: impl Fn(f64, f64) -> bool,
) -> (Vec<usize>, f64) {
    let mut combo: Vec<usize> = (0..k).collect();
    let mut best = (combo.clone(), eval(&combo));
    while let Some(i) = (0..k).rev().find(|&i| combo[i] < n - k + i) {
        combo[i] += 1;
        for j in i + 1..k {
            combo[j] = combo[j - 1] + 1;
        }
        let v = eval(&combo);
        if better(v, best.1) {
            best = (combo.clone(), v);
        }
    }
    best
}

/// Greedy construction from every starting language, each followed by
/// single-swap hill climbing; the best local optimum is returned.
fn search_hill_climb(
    n: usize,
    k: usize,
    eval: impl Fn(&[usize]) -> f64,
    better: impl Fn(f64, f64) -> bool,
) -> (Vec<usize>, f64) {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for start in 0..n {
        let mut set = vec![start];
        while set.len() < k {
            let mut cand: Option<(usize, f64)> = None;
            for c in (0..n).filter(|c| !set.contains(c)) {
                let mut trial = set.clone();
                trial.push(c);
                trial.sort_unstable();
                let v = eval(&trial);
                if cand.is_none_or(|(_, bv)| better(v, bv)) {
                    cand = Some((c, v));
                }
            }
            set.push(cand.expect("pool larger than set").0);
            set.sort_unstable();
        }
        let mut value = eval(&set);
        loop {
            let mut improved: Option<(Vec<usize>, f64)> = None;
            for out_pos in 0..k {
                for c in (0..n).filter(|c| !set.contains(c)) {
                    let mut trial = set.clone();
                    trial[out_pos] = c;
                    trial.sort_unstable();
                    let v = eval(&trial);
                    let bar = improved.as_ref().map_or(value, |(_, iv)| *iv);
                    if better(v, bar) {
                        improved = Some((trial, v));
                    }
                }
            }
            match improved {
                Some((s, v)) => {
                    set = s;
                    value = v;
                }
                None => break,
            }
        }
        let replace = match &best {
            None => true,
            Some((bs, bv)) => better(value, *bv) || (value == *bv && set < *bs),
        };
        if replace {
            best = Some((set, value));
        }
    }
    best.expect("non-empty pool")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn cosine_cases() {
        assert!((cosine_similarity(&[1.0, 2.0], &[1.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 0.0);
        let expected = 32.0 / (14f64.sqrt() * 77f64.sqrt());
        assert!((cosine_similarity(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap() - expected).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[1.0, 1.0]), Err(SelectError::ZeroVector));
        assert_eq!(cosine_similarity(&[1.0], &[1.0, 1.0]), Err(SelectError::DimensionMismatch(1, 2)));
    }

    #[test]
    fn lexical_cases() {
        assert_eq!(lexical_similarity(&["a b c"], &["c b a a"]).unwrap(), 1.0);
        assert_eq!(lexical_similarity(&["a b"], &["c d"]).unwrap(), 0.0);
        assert_eq!(lexical_similarity(&["a b c"], &["b c d"]).unwrap(), 0.5);
        assert!(lexical_similarity(&[""], &["a"]).is_err());
    }

    fn registry() -> FeatureRegistry {
        let mut reg = FeatureRegistry::new();
        for (lang, syn, geo, gen) in [
            ("aaa", vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 0.0, 1.0]),
            ("bbb", vec![1.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0, 0.0]),
        ] {
            reg.insert(FeatureVectors {
                lang: lang.into(),
                syntactic: Some(syn),
                geographic: Some(geo),
                genetic: Some(gen),
            })
            .unwrap();
        }
        reg
    }

    #[test]
    fn self_similarity_is_four() {
        let reg = registry();
        let corpora = BTreeMap::from([("aaa".to_string(), vec!["x y"]), ("bbb".to_string(), vec!["y z"])]);
        let s = aggregate_similarity("aaa", "aaa", &reg, &corpora, MissingFeatures::Error).unwrap();
        assert!((s - 4.0).abs() < 1e-12);
        let ab = aggregate_similarity("aaa", "bbb", &reg, &corpora, MissingFeatures::Error).unwrap();
        let ba = aggregate_similarity("bbb", "aaa", &reg, &corpora, MissingFeatures::Error).unwrap();
        assert_eq!(ab, ba);
        // 0.5^.5 + 0.5^.5 + 0.5 + 1/3
        let expected = 2.0 * 0.5f64.sqrt() + 0.5 + 1.0 / 3.0;
        assert!((ab - expected).abs() < 1e-12);
    }

    #[test]
    fn missing_components() {
        let mut reg = registry();
        reg.insert(FeatureVectors {
            lang: "ccc".into(),
            syntactic: Some(vec![1.0, 0.0]),
            geographic: None,
            genetic: Some(vec![1.0, 0.0, 1.0]),
        })
        .unwrap();
        let corpora = BTreeMap::from([("aaa".to_string(), vec!["x"]), ("ccc".to_string(), vec!["x"])]);
        let err = aggregate_similarity("aaa", "ccc", &reg, &corpora, MissingFeatures::Error).unwrap_err();
        assert_eq!(
            err,
            SelectError::MissingFeature {
                lang: "ccc".into(),
                component: FeatureKind::Geographic
            }
        );
        // syn 1, gen 1, lex 1 -> 3 * 4/3
        let s = aggregate_similarity("aaa", "ccc", &reg, &corpora, MissingFeatures::Rescale).unwrap();
        assert!((s - 4.0).abs() < 1e-12);
    }

    #[test]
    fn feature_csv_formats() {
        let csv = "lang,kind,values\naaa,syntactic,\"1,0,1\"\naaa,geo,0.5,0.5\nbbb,syntactic,0,1,--\n";
        let reg = FeatureRegistry::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(reg.get("aaa").unwrap().syntactic, Some(vec![1.0, 0.0, 1.0]));
        assert_eq!(reg.get("aaa").unwrap().geographic, Some(vec![0.5, 0.5]));
        assert_eq!(reg.get("bbb").unwrap().syntactic, None);
        let bad = "aaa,syntactic,\"1,0\"\nbbb,syntactic,\"1,0,1\"\n";
        assert!(matches!(
            FeatureRegistry::from_csv(bad.as_bytes()),
            Err(SelectError::InconsistentDimensions { .. })
        ));
    }

    fn matrix(langs: &[&str], pairs: &[(&str, &str, f64)], base: f64) -> SimilarityMatrix {
        let n = langs.len();
        let mut e = vec![vec![base; n]; n];
        for (a, b, v) in pairs {
            let i = langs.iter().position(|l| l == a).unwrap();
            let j = langs.iter().position(|l| l == b).unwrap();
            e[i][j] = *v;
            e[j][i] = *v;
        }
        SimilarityMatrix::from_entries(names(langs), e)
    }

    fn latin(langs: &[&str]) -> BTreeMap<String, String> {
        langs.iter().map(|l| (l.to_string(), "Latn".to_string())).collect()
    }

    #[test]
    fn objective_cases() {
        let sims = matrix(&["a", "b"], &[("a", "b", 0.6)], 0.0);
        let mut spec = SelectionSpec::new(Regime::SimSame, latin(&["a", "b"]));
        spec.set_size = 2;
        spec.alpha = 0.0;
        assert!((set_objective(&names(&["a", "b"]), &spec, &sims).unwrap() - 0.6).abs() < 1e-15);
        assert!(set_objective(&names(&["a"]), &spec, &sims).is_err());

        let sims = matrix(&["a", "b", "c", "d"], &[], 0.3);
        spec.set_size = 3;
        spec.script_map = latin(&["a", "b", "c", "d"]);
        assert!((set_objective(&names(&["a", "b", "d"]), &spec, &sims).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn diversity_term_adds_alpha_per_script() {
        let sims = matrix(&["a", "b", "c"], &[], 1.0);
        let mut scripts = latin(&["a", "b"]);
        scripts.insert("c".into(), "Cyrl".into());
        let mut spec = SelectionSpec::new(Regime::SimDiv, scripts);
        spec.set_size = 2;
        spec.alpha = 0.1;
        let same = set_objective(&names(&["a", "b"]), &spec, &sims).unwrap();
        let mixed = set_objective(&names(&["a", "c"]), &spec, &sims).unwrap();
        assert!((mixed - same - 0.1).abs() < 1e-12);
        spec.regime = Regime::DissimDiv;
        let same = set_objective(&names(&["a", "b"]), &spec, &sims).unwrap();
        let mixed = set_objective(&names(&["a", "c"]), &spec, &sims).unwrap();
        assert!((same - mixed - 0.1).abs() < 1e-12);
    }

    #[test]
    fn dominant_pair_is_selected() {
        let langs = ["a", "b", "c", "d"];
        let sims = matrix(&langs, &[("b", "d", 3.5), ("a", "c", 0.1)], 1.0);
        let mut spec = SelectionSpec::new(Regime::SimSame, latin(&langs));
        spec.set_size = 2;
        let sel = select_subset(&names(&langs), &spec, &sims).unwrap();
        assert_eq!(sel.langs, names(&["b", "d"]));
        spec.regime = Regime::DissimSame;
        let sel = select_subset(&names(&langs), &spec, &sims).unwrap();
        assert_eq!(sel.langs, names(&["a", "c"]));
    }

    #[test]
    fn same_regimes_need_one_script() {
        let langs = ["a", "b", "c"];
        let sims = matrix(&langs, &[], 1.0);
        let mut scripts = latin(&langs);
        scripts.insert("c".into(), "Grek".into());
        let mut spec = SelectionSpec::new(Regime::SimSame, scripts.clone());
        spec.set_size = 2;
        assert!(matches!(
            select_subset(&names(&langs), &spec, &sims),
            Err(SelectError::MixedScripts(_))
        ));
        let latin_pool = restrict_to_script(&names(&langs), &scripts, "Latn");
        let sel = select_subset(&latin_pool, &spec, &sims).unwrap();
        assert!(sel.langs.iter().all(|l| scripts[l] == "Latn"));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(20, 8), 125_970);
        assert_eq!(binomial(3, 5), 0);
    }
}
