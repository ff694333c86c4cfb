//! One language set run under all four input types, then compared.

use std::collections::BTreeMap;

use xlit::pipeline::{compare_input_types, run_experiment, ExperimentConfig, LanguageSpec};
use xlit::{Document, InputType};

fn docs(lang: &str, lines: &[&str]) -> Vec<Document> {
    lines.iter().enumerate().map(|(i, t)| Document::new(lang, format!("{i:09}"), *t)).collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpora = BTreeMap::from([
        ("spa".to_string(), docs("spa", &["el hotel de la ciudad", "la guerra y la paz", "un chico come queso"])),
        ("eng".to_string(), docs("eng", &["the hotel in the city", "war and peace", "a boy eats cheese"])),
        ("kor".to_string(), docs("kor", &["서울 호텔", "전쟁 과 평화", "치즈"])),
    ]);
    let languages = vec![
        LanguageSpec { lang: "spa".into(), seen: true },
        LanguageSpec { lang: "eng".into(), seen: true },
        LanguageSpec { lang: "kor".into(), seen: false },
    ];

    let mut reports = Vec::new();
    for input_type in [InputType::Ortho, InputType::Rom, InputType::Cipher] {
        let mut cfg = ExperimentConfig::new(languages.clone(), input_type);
        cfg.vocab_size = 150;
        cfg.budget = 1_000;
        cfg.cipher_keys = Some(BTreeMap::from([("eng".into(), 1), ("kor".into(), 2), ("spa".into(), 3)]));
        let report = run_experiment(&cfg, &corpora)?;
        let kor = &report.results.languages["kor"];
        println!("{input_type}: kor unk {} overlap {}", kor.quality.unk_ratio, kor.overlap[0].overall_ratio);
        reports.push(report);
    }

    let table = compare_input_types(&reports)?;
    for row in table.rows.iter().filter(|r| r.lang == "kor") {
        println!("{:<15} {:?}", row.metric, row.values);
    }
    Ok(())
}
