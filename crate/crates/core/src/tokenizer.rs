//! Character-level byte-pair-merge tokenizer.
//!
//! Words are whitespace-separated. The first character of every word is
//! fused with the boundary marker `▁`, so the base vocabulary holds both
//! `c` and `▁c` for every alphabet character `c`. Characters outside the
//! alphabet never take part in merges: every maximal run of them becomes a
//! single UNK token (id 0). There is no byte fallback, so text in a script
//! the tokenizer never saw is visible as UNK.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::InputType;

pub const BOUNDARY_MARKER: char = '\u{2581}';
/// Token string reserved for UNK; also what [`SubwordModel::decode`] prints.
pub const UNK_TOKEN: &str = "\u{FFFD}";
pub const UNK_ID: u32 = 0;
pub const DEFAULT_VOCAB_SIZE: usize = 30_000;
pub const DEFAULT_MIN_CHAR_FREQ: u64 = 1;
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("vocabulary size {requested} too small: alphabet and reserved tokens need {minimum}")]
    VocabTooSmall { requested: usize, minimum: usize },
    #[error("unknown token id {0}")]
    UnknownId(u32),
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn is_reserved(c: char) -> bool {
    c == BOUNDARY_MARKER || c == '\u{FFFD}'
}

/// Token length in characters, not counting the boundary marker.
pub fn token_len(token: &str) -> usize {
    strip_marker(token).chars().count()
}

pub fn strip_marker(token: &str) -> &str {
    token.strip_prefix(BOUNDARY_MARKER).unwrap_or(token)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct SubwordModel {
    alphabet: BTreeSet<char>,
    merges: Vec<(String, String)>,
    vocab: BTreeMap<String, u32>,
    vocab_size_target: usize,
    id_to_token: Vec<String>,
    /// (left id, right id) -> (rank, merged id)
    merge_ranks: HashMap<(u32, u32), (usize, u32)>,
}

impl PartialEq for SubwordModel {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet
            && self.merges == other.merges
            && self.vocab == other.vocab
            && self.vocab_size_target == other.vocab_size_target
    }
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    version: u32,
    boundary_marker: char,
    unk_token: String,
    vocab_size_target: usize,
    alphabet: Vec<char>,
    merges: Vec<(String, String)>,
    vocab: BTreeMap<String, u32>,
}

impl From<SubwordModel> for ModelRepr {
    fn from(m: SubwordModel) -> Self {
        ModelRepr {
            version: MODEL_VERSION,
            boundary_marker: BOUNDARY_MARKER,
            unk_token: UNK_TOKEN.to_string(),
            vocab_size_target: m.vocab_size_target,
            alphabet: m.alphabet.into_iter().collect(),
            merges: m.merges,
            vocab: m.vocab,
        }
    }
}

impl TryFrom<ModelRepr> for SubwordModel {
    type Error = TokenizerError;

    fn try_from(r: ModelRepr) -> Result<Self, Self::Error> {
        if r.version != MODEL_VERSION {
            return Err(TokenizerError::Malformed(format!("unsupported version {}", r.version)));
        }
        if r.boundary_marker != BOUNDARY_MARKER || r.unk_token != UNK_TOKEN {
            return Err(TokenizerError::Malformed("unexpected reserved symbols".into()));
        }
        SubwordModel::from_parts(r.alphabet.into_iter().collect(), r.merges, r.vocab, r.vocab_size_target)
    }
}

impl SubwordModel {
    fn from_parts(
        alphabet: BTreeSet<char>,
        merges: Vec<(String, String)>,
        vocab: BTreeMap<String, u32>,
        vocab_size_target: usize,
    ) -> Result<Self, TokenizerError> {
        let malformed = |m: String| TokenizerError::Malformed(m);
        if vocab.get(UNK_TOKEN) != Some(&UNK_ID) {
            return Err(malformed("UNK must have id 0".into()));
        }
        let mut id_to_token = vec![String::new(); vocab.len()];
        for (tok, &id) in &vocab {
            let slot = id_to_token
                .get_mut(id as usize)
                .ok_or_else(|| malformed(format!("id {id} out of range")))?;
            if !slot.is_empty() {
                return Err(malformed(format!("duplicate id {id}")));
            }
            *slot = tok.clone();
        }
        for c in &alphabet {
            let mut s = c.to_string();
            if !vocab.contains_key(&s) {
                return Err(malformed(format!("alphabet character {c:?} missing from vocab")));
            }
            s.insert(0, BOUNDARY_MARKER);
            if !vocab.contains_key(&s) {
                return Err(malformed(format!("word-initial {c:?} missing from vocab")));
            }
        }
        let mut merge_ranks = HashMap::with_capacity(merges.len());
        for (rank, (left, right)) in merges.iter().enumerate() {
            let lookup = |t: &str| vocab.get(t).copied().ok_or_else(|| malformed(format!("merge token `{t}` not in vocab")));
            let key = (lookup(left)?, lookup(right)?);
            let merged = lookup(&format!("{left}{right}"))?;
            merge_ranks.entry(key).or_insert((rank, merged));
        }
        Ok(SubwordModel {
            alphabet,
            merges,
            vocab,
            vocab_size_target,
            id_to_token,
            merge_ranks,
        })
    }

    pub fn alphabet(&self) -> &BTreeSet<char> {
        &self.alphabet
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn vocab(&self) -> &BTreeMap<String, u32> {
        &self.vocab
    }

    pub fn vocab_size_target(&self) -> usize {
        self.vocab_size_target
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.vocab.get(token).copied()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, TokenizerError> {
        Ok(serde_json::from_str(json)?)
    }

    /// Short content hash identifying this model.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_json().as_bytes());
        hex::encode(&hash[..8])
    }

    /// Initial symbols of one word: marker-fused first character, then one
    /// symbol per character, with out-of-alphabet runs collapsed to UNK.
    fn initial_symbols(&self, word: &str) -> Vec<u32> {
        initial_symbols(word, &self.alphabet, &self.vocab)
    }

    fn encode_word(&self, word: &str) -> Vec<u32> {
        let mut syms = self.initial_symbols(word);
        let mut floor = 0usize;
        loop {
            let best = syms
                .windows(2)
                .filter_map(|w| self.merge_ranks.get(&(w[0], w[1])).map(|&(rank, id)| (rank, id, w[0], w[1])))
                .filter(|&(rank, ..)| rank >= floor)
                .min_by_key(|&(rank, ..)| rank);
            let Some((rank, merged, left, right)) = best else {
                break;
            };
            syms = merge_pair(&syms, left, right, merged);
            floor = rank + 1;
        }
        syms
    }

    /// Token ids for `text`, word by word.
    pub fn encode_words(&self, text: &str) -> Vec<Vec<u32>> {
        text.split_whitespace().map(|w| self.encode_word(w)).collect()
    }

    pub fn encode(&self, text: &str) -> Vec<u32> {
        text.split_whitespace().flat_map(|w| self.encode_word(w)).collect()
    }

    /// Like [`encode`](Self::encode) but memoizes per-word segmentations.
    pub fn encode_cached(&self, text: &str, cache: &mut HashMap<String, Vec<u32>>) -> Vec<u32> {
        let mut out = Vec::new();
        for word in text.split_whitespace() {
            if let Some(ids) = cache.get(word) {
                out.extend_from_slice(ids);
            } else {
                let ids = self.encode_word(word);
                out.extend_from_slice(&ids);
                cache.insert(word.to_string(), ids);
            }
        }
        out
    }

    pub fn encode_to_tokens(&self, text: &str) -> Vec<&str> {
        self.encode(text)
            .into_iter()
            .map(|id| self.id_to_token[id as usize].as_str())
            .collect()
    }

    /// Joins token strings, turning boundary markers into single spaces.
    pub fn decode(&self, ids: &[u32]) -> Result<String, TokenizerError> {
        let mut out = String::new();
        for &id in ids {
            let tok = self.token(id).ok_or(TokenizerError::UnknownId(id))?;
            match tok.strip_prefix(BOUNDARY_MARKER) {
                Some(rest) => {
                    if !out.is_empty() {
                        out.push(' ');
                    }
                    out.push_str(rest);
                }
                None => out.push_str(tok),
            }
        }
        Ok(out)
    }

    /// Distinct non-UNK tokens produced on `corpus`, boundary marker removed.
    pub fn token_set<S: AsRef<str>>(&self, corpus: &[S], lang: &str, input_type: InputType) -> TokenSet {
        let mut cache = HashMap::new();
        let mut ids = HashSet::new();
        for line in corpus {
            ids.extend(self.encode_cached(line.as_ref(), &mut cache));
        }
        let tokens = ids
            .into_iter()
            .filter(|&id| id != UNK_ID)
            .map(|id| strip_marker(&self.id_to_token[id as usize]).to_string())
            .collect();
        TokenSet {
            lang: lang.to_string(),
            input_type,
            model_id: Some(self.digest()),
            tokens,
        }
    }
}

fn initial_symbols(word: &str, alphabet: &BTreeSet<char>, vocab: &BTreeMap<String, u32>) -> Vec<u32> {
    let mut syms = Vec::with_capacity(word.len());
    let mut buf = String::new();
    for (i, c) in word.chars().enumerate() {
        if !alphabet.contains(&c) {
            if syms.last() != Some(&UNK_ID) {
                syms.push(UNK_ID);
            }
            continue;
        }
        buf.clear();
        if i == 0 {
            buf.push(BOUNDARY_MARKER);
        }
        buf.push(c);
        syms.push(vocab[buf.as_str()]);
    }
    syms
}

fn merge_pair(syms: &[u32], left: u32, right: u32, merged: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(syms.len());
    let mut i = 0;
    while i < syms.len() {
        if i + 1 < syms.len() && syms[i] == left && syms[i + 1] == right {
            out.push(merged);
            i += 2;
        } else {
            out.push(syms[i]);
            i += 1;
        }
    }
    out
}

/// Unique tokens a model emits on one language's data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSet {
    pub lang: String,
    pub input_type: InputType,
    /// Digest of the generating model, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    pub tokens: BTreeSet<String>,
}

impl TokenSet {
    pub fn new<I, S>(lang: &str, tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TokenSet {
            lang: lang.to_string(),
            input_type: InputType::Ortho,
            model_id: None,
            tokens: tokens.into_iter().map(Into::into).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of tokens per token length.
    pub fn length_histogram(&self) -> BTreeMap<usize, u64> {
        let mut hist = BTreeMap::new();
        for t in &self.tokens {
            *hist.entry(token_len(t)).or_insert(0) += 1;
        }
        hist
    }
}

pub fn train<S: AsRef<str>>(corpus: &[S], vocab_size: usize, min_char_freq: u64) -> Result<SubwordModel, TokenizerError> {
    let mut trainer = Trainer::new(vocab_size, min_char_freq);
    for line in corpus {
        trainer.feed(line.as_ref(), 1);
    }
    trainer.finish()
}

/// Accumulates weighted word counts, then learns merges.
#[derive(Clone, Debug)]
pub struct Trainer {
    vocab_size: usize,
    min_char_freq: u64,
    words: HashMap<String, u64>,
}

struct WordState {
    syms: Vec<u32>,
    freq: u64,
}

impl Trainer {
    pub fn new(vocab_size: usize, min_char_freq: u64) -> Self {
        Trainer {
            vocab_size,
            min_char_freq,
            words: HashMap::new(),
        }
    }

    /// Adds the words of `text`, each counted `weight` times.
    pub fn feed(&mut self, text: &str, weight: u64) {
        if weight == 0 {
            return;
        }
        for w in text.split_whitespace() {
            *self.words.entry(w.to_string()).or_insert(0) += weight;
        }
    }

    pub fn finish(self) -> Result<SubwordModel, TokenizerError> {
        if self.words.is_empty() {
            return Err(TokenizerError::EmptyCorpus);
        }
        let mut char_freq: BTreeMap<char, u64> = BTreeMap::new();
        for (w, &f) in &self.words {
            for c in w.chars() {
                *char_freq.entry(c).or_insert(0) += f;
            }
        }
        let alphabet: BTreeSet<char> = char_freq
            .into_iter()
            .filter(|&(c, f)| f >= self.min_char_freq && !is_reserved(c))
            .map(|(c, _)| c)
            .collect();
        if alphabet.is_empty() {
            return Err(TokenizerError::EmptyCorpus);
        }
        let minimum = 2 * alphabet.len() + 2;
        if self.vocab_size < minimum {
            return Err(TokenizerError::VocabTooSmall {
                requested: self.vocab_size,
                minimum,
            });
        }

        let mut id_to_token = vec![UNK_TOKEN.to_string()];
        id_to_token.extend(alphabet.iter().map(|c| c.to_string()));
        id_to_token.extend(alphabet.iter().map(|c| format!("{BOUNDARY_MARKER}{c}")));
        let mut vocab: BTreeMap<String, u32> =
            id_to_token.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();

        let mut sorted: Vec<(String, u64)> = self.words.into_iter().collect();
        sorted.sort_unstable();
        let mut words: Vec<WordState> = sorted
            .iter()
            .map(|(w, f)| WordState {
                syms: initial_symbols(w, &alphabet, &vocab),
                freq: *f,
            })
            .collect();

        let mut pair_counts: HashMap<(u32, u32), u64> = HashMap::new();
        let mut pair_words: HashMap<(u32, u32), HashSet<usize>> = HashMap::new();
        for (idx, word) in words.iter().enumerate() {
            for pair in pairs(&word.syms) {
                *pair_counts.entry(pair).or_insert(0) += word.freq;
                pair_words.entry(pair).or_default().insert(idx);
            }
        }

        let mut merges = Vec::new();
        while vocab.len() < self.vocab_size {
            let best = pair_counts
                .iter()
                .filter(|(_, &n)| n >= 2)
                .max_by(|(pa, na), (pb, nb)| {
                    na.cmp(nb).then_with(|| {
                        // smaller concatenation wins a tie, then smaller left token
                        let concat = |p: &(u32, u32)| {
                            id_to_token[p.0 as usize]
                                .chars()
                                .chain(id_to_token[p.1 as usize].chars())
                                .collect::<String>()
                        };
                        concat(pb)
                            .cmp(&concat(pa))
                            .then_with(|| id_to_token[pb.0 as usize].cmp(&id_to_token[pa.0 as usize]))
                    })
                })
                .map(|(&p, _)| p);
            let Some((left, right)) = best else {
                break;
            };

            let merged_str = format!("{}{}", id_to_token[left as usize], id_to_token[right as usize]);
            let merged = match vocab.get(&merged_str) {
                Some(&id) => id,
                None => {
                    let id = id_to_token.len() as u32;
                    vocab.insert(merged_str.clone(), id);
                    id_to_token.push(merged_str);
                    id
                }
            };
            merges.push((id_to_token[left as usize].clone(), id_to_token[right as usize].clone()));

            let affected = pair_words.remove(&(left, right)).unwrap_or_default();
            let mut affected: Vec<usize> = affected.into_iter().collect();
            affected.sort_unstable();
            for idx in affected {
                let word = &mut words[idx];
                if !word.syms.windows(2).any(|w| w[0] == left && w[1] == right) {
                    continue;
                }
                for pair in pairs(&word.syms) {
                    if let Some(n) = pair_counts.get_mut(&pair) {
                        *n -= word.freq;
                        if *n == 0 {
                            pair_counts.remove(&pair);
                        }
                    }
                }
                word.syms = merge_pair(&word.syms, left, right, merged);
                for pair in pairs(&word.syms) {
                    *pair_counts.entry(pair).or_insert(0) += word.freq;
                    pair_words.entry(pair).or_default().insert(idx);
                }
            }
            pair_counts.remove(&(left, right));
        }

        SubwordModel::from_parts(alphabet, merges, vocab, self.vocab_size)
    }
}

fn pairs(syms: &[u32]) -> impl Iterator<Item = (u32, u32)> + '_ {
    syms.windows(2)
        .filter(|w| w[0] != UNK_ID && w[1] != UNK_ID)
        .map(|w| (w[0], w[1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_size(alphabet: usize) -> usize {
        2 * alphabet + 1
    }

    #[test]
    fn first_merge_on_repeated_letter() {
        let model = train(&["aaaa"], base_size(1) + 1, 1).unwrap();
        assert_eq!(model.merges(), &[("a".to_string(), "a".to_string())]);
        assert!(model.vocab().contains_key("aa"));
        // ▁a a a a -> ▁a aa a
        assert_eq!(model.encode_to_tokens("aaaa"), vec!["▁a", "aa", "a"]);
    }

    #[test]
    fn single_repeated_pair() {
        let model = train(&["ab ab", "ab"], base_size(2) + 1, 1).unwrap();
        assert_eq!(model.merges(), &[("▁a".to_string(), "b".to_string())]);
        assert_eq!(model.encode_to_tokens("ab"), vec!["▁ab"]);
    }

    #[test]
    fn ties_break_on_concatenation() {
        // "xy" and "ab" both occur twice; "▁ab" < "▁xy"
        let model = train(&["ab xy ab xy"], base_size(4) + 1, 1).unwrap();
        assert_eq!(model.merges()[0], ("▁a".to_string(), "b".to_string()));
    }

    #[test]
    fn training_is_deterministic() {
        let corpus = ["the cat sat on the mat", "a cat and a hat", "that hat is the best hat"];
        let a = train(&corpus, 60, 1).unwrap();
        let b = train(&corpus, 60, 1).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn errors() {
        assert!(matches!(train::<&str>(&[], 100, 1), Err(TokenizerError::EmptyCorpus)));
        assert!(matches!(train(&["   "], 100, 1), Err(TokenizerError::EmptyCorpus)));
        assert!(matches!(train(&["abc"], 5, 1), Err(TokenizerError::VocabTooSmall { .. })));
    }

    #[test]
    fn unk_runs_collapse() {
        let model = train(&["hello world"], 40, 1).unwrap();
        let ids = model.encode("안녕");
        assert_eq!(ids, vec![UNK_ID]);
        let ids = model.encode("he안녕lo");
        assert_eq!(ids.iter().filter(|&&i| i == UNK_ID).count(), 1);
        assert!(model.encode("hello").iter().all(|&i| i != UNK_ID));
    }

    #[test]
    fn min_char_freq_filters_alphabet() {
        let model = train(&["aaab"], 20, 2).unwrap();
        assert!(model.alphabet().contains(&'a'));
        assert!(!model.alphabet().contains(&'b'));
        assert_eq!(model.encode("ab").last(), Some(&UNK_ID));
    }

    #[test]
    fn decode_round_trip_and_errors() {
        let model = train(&["the cat sat on the mat"], 40, 1).unwrap();
        let text = "the  mat\tsat";
        assert_eq!(model.decode(&model.encode(text)).unwrap(), "the mat sat");
        assert_eq!(model.decode(&[]).unwrap(), "");
        assert_eq!(model.decode(&[UNK_ID]).unwrap(), UNK_TOKEN);
        assert!(matches!(model.decode(&[9999]), Err(TokenizerError::UnknownId(9999))));
    }

    #[test]
    fn json_round_trip() {
        let model = train(&["the cat sat on the mat"], 40, 1).unwrap();
        let back = SubwordModel::from_json(&model.to_json()).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_json(), model.to_json());
        assert!(SubwordModel::from_json("{}").is_err());
    }

    #[test]
    fn token_set_dedups_and_strips_marker() {
        let model = train(&["aa aa aa"], base_size(1) + 2, 1).unwrap();
        let set = model.token_set(&["aa aa"], "x", InputType::Ortho);
        assert_eq!(set.tokens, BTreeSet::from(["aa".to_string()]));
        assert!(model.token_set::<&str>(&[], "x", InputType::Ortho).is_empty());
        let twice = model.token_set(&["aa aa", "aa aa"], "x", InputType::Ortho);
        assert_eq!(twice.tokens, set.tokens);
    }

    #[test]
    fn token_lengths_exclude_marker() {
        assert_eq!(token_len("▁ab"), 2);
        assert_eq!(token_len("ab"), 2);
        assert_eq!(token_len("é"), 1);
    }
}
