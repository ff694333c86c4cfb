//! Per-language Caesar shifts over the Latin alphabet.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::TranslitError;

/// Number of usable nonzero shifts.
pub const MAX_CIPHER_LANGS: usize = 25;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CipherKey {
    lang: String,
    shift: u8,
}

impl CipherKey {
    pub fn new(lang: impl Into<String>, shift: u8) -> Result<Self, TranslitError> {
        if shift > 25 {
            return Err(TranslitError::InvalidShift(shift as i64));
        }
        Ok(CipherKey {
            lang: lang.into(),
            shift,
        })
    }

    pub fn lang(&self) -> &str {
        &self.lang
    }

    pub fn shift(&self) -> u8 {
        self.shift
    }

    pub fn encipher(&self, text: &str) -> String {
        shift_text(text, self.shift)
    }

    pub fn decipher(&self, text: &str) -> String {
        shift_text(text, (26 - self.shift) % 26)
    }
}

fn shift_text(text: &str, shift: u8) -> String {
    text.chars()
        .map(|c| match c {
            'a'..='z' => rotate(c, b'a', shift),
            'A'..='Z' => rotate(c, b'A', shift),
            _ => c,
        })
        .collect()
}

fn rotate(c: char, base: u8, shift: u8) -> char {
    (((c as u8 - base + shift) % 26) + base) as char
}

/// Gives the i-th language in sorted order the shift `i + 1`.
pub fn assign_shift_keys(langs: &[impl AsRef<str>]) -> Result<BTreeMap<String, CipherKey>, TranslitError> {
    let mut sorted: Vec<&str> = langs.iter().map(AsRef::as_ref).collect();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() {
        return Err(TranslitError::TooManyCipherLanguages(0));
    }
    if sorted.len() > MAX_CIPHER_LANGS {
        return Err(TranslitError::TooManyCipherLanguages(sorted.len()));
    }
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, lang)| Ok((lang.to_string(), CipherKey::new(lang, i as u8 + 1)?)))
        .collect()
}

/// Reads a `{lang: shift}` JSON object.
pub fn keys_from_json(json: &str) -> Result<BTreeMap<String, CipherKey>, TranslitError> {
    let raw: BTreeMap<String, i64> =
        serde_json::from_str(json).map_err(|e| TranslitError::Io(format!("cipher key map: {e}")))?;
    raw.into_iter()
        .map(|(lang, shift)| {
            if !(0..=25).contains(&shift) {
                return Err(TranslitError::InvalidShift(shift));
            }
            Ok((lang.clone(), CipherKey::new(lang, shift as u8)?))
        })
        .collect()
}

pub fn keys_to_json(keys: &BTreeMap<String, CipherKey>) -> String {
    let raw: BTreeMap<&str, u8> = keys.iter().map(|(l, k)| (l.as_str(), k.shift)).collect();
    serde_json::to_string_pretty(&raw).expect("plain map serializes")
}
