//! Corpus transliteration and tokenizer analysis toolkit.
//!
//! `xlit` converts multilingual text between four input types
//! ([`InputType::Ortho`], [`InputType::Ipa`], [`InputType::Rom`],
//! [`InputType::Cipher`]), trains character-level BPE tokenizers on the
//! results, and measures how much the tokens of an unseen language overlap
//! with the tokens of the languages a tokenizer was trained on.
//!
//! The crate is organized by capability:
//!
//! - [`corpus`]: word counting, budgeted document sampling, oversampling
//!   weights and token/label datasets.
//! - [`translit`]: rewrite-rule tables (G2P and romanization), Hangul
//!   decomposition and per-language Caesar shifts.
//! - [`tokenizer`]: training, encoding and decoding of subword models.
//! - [`metrics`]: overlap ratios, UNK ratio, fertility and vocabulary
//!   coverage, all as exact fractions.
//! - [`langselect`]: typological similarity and language-set search.
//! - [`stats`]: Pearson, Spearman and paired t-tests.
//! - [`pipeline`]: end-to-end experiment runs and input-type comparison.
//! - [`report`]: JSON and tidy CSV output.
//! - [`cli`]: the `xlit` command line front end.
//!
//! Runnable programs for each capability live in the crate's `examples/`
//! directory (`cargo run --example cipher`, ...).

pub mod cli;
pub mod corpus;
pub mod fraction;
pub mod langselect;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod tokenizer;
pub mod translit;

pub use corpus::{AnnotatedRecord, CorpusManifest, Document, InputType};
pub use fraction::Fraction;
pub use metrics::{OverlapReport, OverlapVariant, TokenizerQualityReport};
pub use tokenizer::{SubwordModel, TokenSet};
pub use translit::{CipherKey, RewriteRule, RuleTable, TableRegistry};
