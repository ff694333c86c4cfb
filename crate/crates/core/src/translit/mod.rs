//! Text transliteration: rule-table G2P and romanization, and Caesar shifts.

mod cipher;
pub mod hangul;
mod rules;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use thiserror::Error;

use crate::corpus::InputType;

pub use cipher::{assign_shift_keys, keys_from_json, keys_to_json, CipherKey, MAX_CIPHER_LANGS};
pub use rules::{Passthrough, Preprocess, RewriteRule, RuleTable, TableMode};

/// Environment variable naming a directory of `<lang>.<mode>.tsv` tables.
pub const TABLE_DIR_ENV: &str = "XLIT_TABLE_DIR";

const SPA_G2P: &str = include_str!("../../tables/spa.g2p.tsv");
const ENG_ROM: &str = include_str!("../../tables/eng.rom.tsv");
const KOR_ROM: &str = include_str!("../../tables/kor.rom.tsv");

/// Latin-script languages given an identity romanization table by default.
pub const LATIN_PASSTHROUGH: &[&str] = &[
    "cat", "ces", "dan", "deu", "est", "eus", "fin", "fra", "hun", "ind", "ita", "lit", "lav", "nld", "nor",
    "pol", "por", "ron", "slk", "slv", "spa", "swe", "tur", "vie",
];

#[derive(Debug, Error)]
pub enum TranslitError {
    #[error("no character rule matches `{ch}` at position {position}")]
    Unmatched { position: usize, ch: char },
    #[error("no {mode} table for language `{lang}`")]
    MissingTable { lang: String, mode: TableMode },
    #[error("unsupported language `{0}`")]
    UnsupportedLanguage(String),
    #[error("romanization for `{lang}` left non-Latin letter `{ch}`")]
    NonLatinOutput { lang: String, ch: char },
    #[error("`{0}` is not a precomposed Hangul syllable")]
    NotHangulSyllable(char),
    #[error("jamo indices ({0}, {1}, {2}) out of range")]
    InvalidJamo(u8, u8, u8),
    #[error("cipher shift {0} outside 0..=25")]
    InvalidShift(i64),
    #[error("cannot assign distinct nonzero shifts to {0} languages (need 1..=25)")]
    TooManyCipherLanguages(usize),
    #[error("no cipher key for language `{0}`")]
    MissingKey(String),
    #[error("invalid rule table: {0}")]
    InvalidTable(String),
    #[error("rule table line {line}: {message}")]
    TableSyntax { line: usize, message: String },
    #[error("{0}")]
    Io(String),
}

/// A string-to-string conversion that may fail.
pub trait TextTransform {
    fn transform(&self, text: &str) -> Result<String, TranslitError>;
}

impl<F> TextTransform for F
where
    F: Fn(&str) -> Result<String, TranslitError>,
{
    fn transform(&self, text: &str) -> Result<String, TranslitError> {
        self(text)
    }
}

impl TextTransform for RuleTable {
    fn transform(&self, text: &str) -> Result<String, TranslitError> {
        self.apply(text)
    }
}

impl TextTransform for CipherKey {
    fn transform(&self, text: &str) -> Result<String, TranslitError> {
        Ok(self.encipher(text))
    }
}

/// Latin letters, including the IPA and Latin extension blocks.
pub fn is_latin_letter(c: char) -> bool {
    matches!(c,
        'A'..='Z' | 'a'..='z'
        | '\u{00AA}' | '\u{00BA}'
        | '\u{00C0}'..='\u{00D6}' | '\u{00D8}'..='\u{00F6}' | '\u{00F8}'..='\u{024F}'
        | '\u{0250}'..='\u{02AF}'
        | '\u{1D00}'..='\u{1DBF}'
        | '\u{1E00}'..='\u{1EFF}'
        | '\u{2C60}'..='\u{2C7F}'
        | '\u{A720}'..='\u{A7FF}'
        | '\u{AB30}'..='\u{AB6F}'
        | '\u{FB00}'..='\u{FB06}'
        | '\u{FF21}'..='\u{FF3A}' | '\u{FF41}'..='\u{FF5A}')
}

/// Rule tables keyed by language and mode.
#[derive(Clone, Debug, Default)]
pub struct TableRegistry {
    tables: HashMap<(String, TableMode), RuleTable>,
}

impl TableRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The shipped demo tables (Spanish G2P, English and Korean
    /// romanization) plus identity romanization for [`LATIN_PASSTHROUGH`].
    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        for lang in LATIN_PASSTHROUGH {
            reg.insert(RuleTable::identity(*lang, TableMode::Romanize));
        }
        for src in [SPA_G2P, ENG_ROM, KOR_ROM] {
            reg.insert(RuleTable::parse(src).expect("shipped table parses"));
        }
        reg
    }

    /// Built-in tables overlaid with every `*.tsv` file in `dir`.
    pub fn with_dir(dir: &Path) -> Result<Self, TranslitError> {
        let mut reg = Self::with_builtins();
        reg.load_dir(dir)?;
        Ok(reg)
    }

    /// Built-ins plus the directory named by [`TABLE_DIR_ENV`], if set.
    pub fn from_env() -> Result<Self, TranslitError> {
        match std::env::var_os(TABLE_DIR_ENV) {
            Some(dir) => Self::with_dir(Path::new(&dir)),
            None => Ok(Self::with_builtins()),
        }
    }

    pub fn load_dir(&mut self, dir: &Path) -> Result<(), TranslitError> {
        let entries = std::fs::read_dir(dir).map_err(|e| TranslitError::Io(format!("{}: {e}", dir.display())))?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "tsv"))
            .collect();
        paths.sort();
        for path in paths {
            self.insert(RuleTable::load(&path)?);
        }
        Ok(())
    }

    /// Adds a table, replacing any table for the same language and mode.
    pub fn insert(&mut self, table: RuleTable) {
        self.tables.insert((table.lang().to_string(), table.mode()), table);
    }

    pub fn get(&self, lang: &str, mode: TableMode) -> Option<&RuleTable> {
        self.tables.get(&(lang.to_string(), mode))
    }

    pub fn require(&self, lang: &str, mode: TableMode) -> Result<&RuleTable, TranslitError> {
        self.get(lang, mode).ok_or_else(|| TranslitError::MissingTable {
            lang: lang.to_string(),
            mode,
        })
    }

    pub fn g2p(&self, lang: &str, text: &str) -> Result<String, TranslitError> {
        self.require(lang, TableMode::G2p)?.apply(text)
    }

    pub fn romanize(&self, lang: &str, text: &str) -> Result<String, TranslitError> {
        let table = self
            .get(lang, TableMode::Romanize)
            .ok_or_else(|| TranslitError::UnsupportedLanguage(lang.to_string()))?;
        romanize_with(table, text)
    }
}

/// Romanizes with `table` and checks that no non-Latin letter survives.
pub fn romanize_with(table: &RuleTable, text: &str) -> Result<String, TranslitError> {
    let out = table.apply(text)?;
    if let Some(ch) = out
        .chars()
        .find(|&c| c.is_alphabetic() && !is_latin_letter(c) && !('\u{0300}'..='\u{036F}').contains(&c))
    {
        return Err(TranslitError::NonLatinOutput {
            lang: table.lang().to_string(),
            ch,
        });
    }
    Ok(out)
}

pub fn romanize(lang: &str, text: &str, tables: &TableRegistry) -> Result<String, TranslitError> {
    tables.romanize(lang, text)
}

/// The conversion from orthography into one [`InputType`] for one language.
#[derive(Clone, Debug)]
pub enum Transliterator {
    Identity,
    G2p(RuleTable),
    Romanize(RuleTable),
    /// Romanize, then shift.
    Cipher { romanizer: RuleTable, key: CipherKey },
}

impl Transliterator {
    pub fn for_input_type(
        input_type: InputType,
        lang: &str,
        tables: &TableRegistry,
        keys: Option<&BTreeMap<String, CipherKey>>,
    ) -> Result<Self, TranslitError> {
        Ok(match input_type {
            InputType::Ortho => Transliterator::Identity,
            InputType::Ipa => Transliterator::G2p(tables.require(lang, TableMode::G2p)?.clone()),
            InputType::Rom => Transliterator::Romanize(tables.require(lang, TableMode::Romanize)?.clone()),
            InputType::Cipher => {
                let key = keys
                    .and_then(|k| k.get(lang))
                    .cloned()
                    .ok_or_else(|| TranslitError::MissingKey(lang.to_string()))?;
                Transliterator::Cipher {
                    romanizer: tables.require(lang, TableMode::Romanize)?.clone(),
                    key,
                }
            }
        })
    }
}

impl TextTransform for Transliterator {
    fn transform(&self, text: &str) -> Result<String, TranslitError> {
        match self {
            Transliterator::Identity => Ok(text.to_string()),
            Transliterator::G2p(table) => table.apply(text),
            Transliterator::Romanize(table) => romanize_with(table, text),
            Transliterator::Cipher { romanizer, key } => Ok(key.encipher(&romanize_with(romanizer, text)?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spanish_hotel() {
        let reg = TableRegistry::with_builtins();
        assert_eq!(reg.g2p("spa", "hotel").unwrap(), "otel");
        assert_eq!(reg.g2p("spa", "chico").unwrap(), "tʃiko");
        assert_eq!(reg.g2p("spa", "guerra").unwrap(), "ɡera");
    }

    #[test]
    fn korean_romanization() {
        let reg = TableRegistry::with_builtins();
        assert_eq!(reg.romanize("kor", "안녕하세요").unwrap(), "annyeonghaseyo");
        let canada = reg.romanize("kor", "캐나다").unwrap();
        assert!(canada.ends_with("ada"));
        assert_eq!(canada, "kaenada");
        assert_eq!(reg.romanize("kor", "서울, 2024!").unwrap(), "seoul, 2024!");
        assert_eq!(reg.romanize("kor", "한국어 text").unwrap(), "hangugeo text");
    }

    #[test]
    fn english_identity() {
        let reg = TableRegistry::with_builtins();
        assert_eq!(reg.romanize("eng", "hello").unwrap(), "hello");
        assert_eq!(reg.romanize("spa", "añoranza").unwrap(), "añoranza");
    }

    #[test]
    fn unsupported_and_non_latin() {
        let reg = TableRegistry::with_builtins();
        assert!(matches!(reg.romanize("tha", "x"), Err(TranslitError::UnsupportedLanguage(_))));
        assert!(matches!(
            reg.romanize("eng", "привет"),
            Err(TranslitError::NonLatinOutput { .. })
        ));
    }

    #[test]
    fn cipher_transliterator_romanizes_first() {
        let reg = TableRegistry::with_builtins();
        let keys = assign_shift_keys(&["kor"]).unwrap();
        let t = Transliterator::for_input_type(InputType::Cipher, "kor", &reg, Some(&keys)).unwrap();
        assert_eq!(t.transform("캐나다").unwrap(), "lbfobeb");
        assert!(Transliterator::for_input_type(InputType::Cipher, "kor", &reg, None).is_err());
        assert!(Transliterator::for_input_type(InputType::Ipa, "kor", &reg, None).is_err());
    }

    #[test]
    fn latin_letter_ranges() {
        assert!(is_latin_letter('é'));
        assert!(is_latin_letter('ʃ'));
        assert!(!is_latin_letter('Ж'));
        assert!(!is_latin_letter('한'));
        assert!(!is_latin_letter('1'));
    }
}
