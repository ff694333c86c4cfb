//! JSON and tidy CSV rendering for every report type.
//!
//! JSON output is the report's own serde form, pretty-printed with map keys
//! in sorted order. CSV output is long format: one observation per row,
//! with a fixed header that is written even when there are no rows.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::InputType;
use crate::langselect::Selection;
use crate::metrics::{OverlapReport, TokenizerQualityReport};
use crate::tokenizer::TokenSet;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// One observation of a per-language metric. `length` is set for
/// length-partitioned metrics and empty otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TidyRow {
    pub target_lang: String,
    pub input_type: String,
    pub metric: String,
    pub length: Option<usize>,
    pub value: f64,
}

impl TidyRow {
    pub fn new(lang: &str, input_type: &str, metric: &str, length: Option<usize>, value: f64) -> Self {
        TidyRow {
            target_lang: lang.to_string(),
            input_type: input_type.to_string(),
            metric: metric.to_string(),
            length,
            value,
        }
    }
}

/// A report that can be flattened into long-format rows.
pub trait TidyReport: Serialize {
    type Row: Serialize + DeserializeOwned;
    const COLUMNS: &'static [&'static str];

    fn tidy_rows(&self) -> Vec<Self::Row>;
}

pub const TIDY_COLUMNS: &[&str] = &["target_lang", "input_type", "metric", "length", "value"];

/// Renders `report` as pretty JSON (trailing newline) or tidy CSV.
pub fn write_report<R: TidyReport + ?Sized>(report: &R, format: Format) -> Result<Vec<u8>, ReportError> {
    match format {
        Format::Json => {
            // round-trip through Value so every map is emitted in key order
            let value = serde_json::to_value(report)?;
            let mut out = serde_json::to_vec_pretty(&value)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => write_rows(R::COLUMNS, &report.tidy_rows()),
    }
}

pub fn write_rows<T: Serialize>(columns: &[&str], rows: &[T]) -> Result<Vec<u8>, ReportError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(columns)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| ReportError::Csv(e.into_error().into()))
}

/// Parses CSV produced by [`write_report`] back into rows.
pub fn read_rows<T: DeserializeOwned>(bytes: &[u8]) -> Result<Vec<T>, ReportError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    r.deserialize().map(|row| row.map_err(ReportError::from)).collect()
}

pub fn read_json<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, ReportError> {
    Ok(serde_json::from_slice(bytes)?)
}

impl TidyReport for OverlapReport {
    type Row = TidyRow;
    const COLUMNS: &'static [&'static str] = TIDY_COLUMNS;

    fn tidy_rows(&self) -> Vec<TidyRow> {
        overlap_rows(self, "")
    }
}

pub(crate) fn overlap_rows(r: &OverlapReport, input_type: &str) -> Vec<TidyRow> {
    let metric = format!("overlap_{}", r.variant.as_str());
    let mut rows = vec![TidyRow::new(&r.target_lang, input_type, &metric, None, r.overall_ratio.to_f64())];
    rows.extend(
        r.by_length
            .iter()
            .map(|(&m, f)| TidyRow::new(&r.target_lang, input_type, &metric, Some(m), f.to_f64())),
    );
    rows
}

/// A quality report tagged with the language and input type it measures.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityEntry {
    pub lang: String,
    pub input_type: InputType,
    pub report: TokenizerQualityReport,
}

impl TidyReport for QualityEntry {
    type Row = TidyRow;
    const COLUMNS: &'static [&'static str] = TIDY_COLUMNS;

    fn tidy_rows(&self) -> Vec<TidyRow> {
        quality_rows(&self.lang, self.input_type.as_str(), &self.report)
    }
}

pub(crate) fn quality_rows(lang: &str, input_type: &str, q: &TokenizerQualityReport) -> Vec<TidyRow> {
    let mut rows = vec![
        TidyRow::new(lang, input_type, "unk_ratio", None, q.unk_ratio.to_f64()),
        TidyRow::new(lang, input_type, "fertility", None, q.fertility.to_f64()),
        TidyRow::new(lang, input_type, "vocab_coverage", None, q.vocab_coverage.to_f64()),
    ];
    rows.extend(
        q.coverage_by_length
            .iter()
            .map(|(&m, f)| TidyRow::new(lang, input_type, "vocab_coverage", Some(m), f.to_f64())),
    );
    rows
}

impl TidyReport for TokenSet {
    type Row = TidyRow;
    const COLUMNS: &'static [&'static str] = TIDY_COLUMNS;

    fn tidy_rows(&self) -> Vec<TidyRow> {
        self.length_histogram()
            .into_iter()
            .map(|(m, n)| TidyRow::new(&self.lang, self.input_type.as_str(), "token_count", Some(m), n as f64))
            .collect()
    }
}

impl<T: TidyReport> TidyReport for [T] {
    type Row = T::Row;
    const COLUMNS: &'static [&'static str] = T::COLUMNS;

    fn tidy_rows(&self) -> Vec<T::Row> {
        self.iter().flat_map(TidyReport::tidy_rows).collect()
    }
}

impl<T: TidyReport> TidyReport for Vec<T> {
    type Row = T::Row;
    const COLUMNS: &'static [&'static str] = T::COLUMNS;

    fn tidy_rows(&self) -> Vec<T::Row> {
        self.as_slice().tidy_rows()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub regime: String,
    pub rank: usize,
    pub lang: String,
    pub objective: f64,
    pub alpha: f64,
}

impl TidyReport for Selection {
    type Row = SelectionRow;
    const COLUMNS: &'static [&'static str] = &["regime", "rank", "lang", "objective", "alpha"];

    fn tidy_rows(&self) -> Vec<SelectionRow> {
        self.langs
            .iter()
            .enumerate()
            .map(|(i, lang)| SelectionRow {
                regime: self.regime.to_string(),
                rank: i + 1,
                lang: lang.clone(),
                objective: self.objective,
                alpha: self.alpha,
            })
            .collect()
    }
}

/// One correlation or t-test result. Correlations leave the input-type
/// columns empty when computed over all input types.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub group: String,
    pub test: String,
    pub metric: String,
    pub input_type_a: String,
    pub input_type_b: String,
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub masked: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsTable {
    pub threshold: f64,
    pub rows: Vec<StatsRow>,
}

impl TidyReport for StatsTable {
    type Row = StatsRow;
    const COLUMNS: &'static [&'static str] = &[
        "group",
        "test",
        "metric",
        "input_type_a",
        "input_type_b",
        "statistic",
        "p_value",
        "n",
        "masked",
    ];

    fn tidy_rows(&self) -> Vec<StatsRow> {
        self.rows.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fraction::Fraction;
    use crate::metrics::OverlapVariant;
    use std::collections::BTreeMap;

    fn sample() -> OverlapReport {
        OverlapReport {
            target_lang: "tgt".into(),
            best_source_lang: "src".into(),
            variant: OverlapVariant::MaxSource,
            overall_ratio: Fraction::new(2, 3),
            by_length: BTreeMap::from([(1, Fraction::new(1, 3)), (2, Fraction::new(1, 3))]),
        }
    }

    #[test]
    fn json_round_trip_and_determinism() {
        let r = sample();
        let a = write_report(&r, Format::Json).unwrap();
        let b = write_report(&r, Format::Json).unwrap();
        assert_eq!(a, b);
        let back: OverlapReport = read_json(&a).unwrap();
        assert_eq!(back, r);
        let text = String::from_utf8(a).unwrap();
        assert!(text.contains("\"best_source\": \"src\""));
    }

    #[test]
    fn csv_rows() {
        let csv = String::from_utf8(write_report(&sample(), Format::Csv).unwrap()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "target_lang,input_type,metric,length,value");
        assert_eq!(lines.len(), 4);
        let rows: Vec<TidyRow> = read_rows(csv.as_bytes()).unwrap();
        assert_eq!(rows, sample().tidy_rows());
    }

    #[test]
    fn empty_report_has_header() {
        let empty: Vec<OverlapReport> = Vec::new();
        let csv = write_report(&empty, Format::Csv).unwrap();
        assert_eq!(csv, b"target_lang,input_type,metric,length,value\n");
        assert_eq!(write_report(&empty, Format::Json).unwrap(), b"[]\n");
    }
}
