use std::collections::BTreeMap;
use std::fs;

use tempfile::TempDir;
use xlit::pipeline::{compare_input_types, run_experiment, run_experiment_with_artifacts, ExperimentConfig, LanguageSpec};
use xlit::{Document, Fraction, InputType, OverlapVariant};

fn docs(lang: &str, lines: &[&str]) -> Vec<Document> {
    lines
        .iter()
        .enumerate()
        .map(|(i, t)| Document::new(lang, format!("{lang}-{i:04}"), *t))
        .collect()
}

fn corpora() -> BTreeMap<String, Vec<Document>> {
    BTreeMap::from([
        (
            "eng".to_string(),
            docs(
                "eng",
                &[
                    "the hotel is near the sea",
                    "we went to canada and korea last year",
                    "a tree and a flower in the garden",
                    "the book is on the table",
                ],
            ),
        ),
        ("spa".to_string(), docs("spa", &["el hotel esta cerca del mar", "un arbol y una flor"])),
        ("kor".to_string(), docs("kor", &["호텔 은 바다 근처 에 있다", "캐나다 와 한국", "나무 와 꽃"])),
    ])
}

fn config(input_type: InputType) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(
        vec![
            LanguageSpec { lang: "eng".into(), seen: true },
            LanguageSpec { lang: "spa".into(), seen: true },
            LanguageSpec { lang: "kor".into(), seen: false },
        ],
        input_type,
    );
    cfg.vocab_size = 150;
    cfg.budget = 20;
    if input_type == InputType::Cipher {
        cfg.cipher_keys = Some(BTreeMap::from([("eng".into(), 3), ("spa".into(), 7), ("kor".into(), 11)]));
    }
    cfg
}

#[test]
fn under_budget_languages_are_oversampled() {
    let report = run_experiment(&config(InputType::Rom), &corpora()).unwrap();
    let manifests: BTreeMap<&str, u64> = report
        .header
        .manifests
        .iter()
        .map(|m| (m.lang.as_str(), m.word_count))
        .collect();
    // eng reaches the budget of 20 words, spa has only 11
    assert!(manifests["eng"] >= 20);
    assert_eq!(manifests["spa"], 11);
    assert_eq!(report.results.weights["eng"], Fraction::ONE);
    assert_eq!(report.results.weights["spa"], Fraction::new(20, 11));
    assert_eq!(report.results.repetitions["spa"], 2);
    assert_eq!(report.results.repetitions["eng"], 1);
    assert!(!report.results.weights.contains_key("kor"));
}

#[test]
fn unseen_languages_get_every_overlap_variant() {
    let report = run_experiment(&config(InputType::Rom), &corpora()).unwrap();
    let kor = &report.results.languages["kor"];
    let variants: Vec<OverlapVariant> = kor.overlap.iter().map(|o| o.variant).collect();
    assert_eq!(variants.len(), 3);
    assert!(variants.contains(&OverlapVariant::MaxSource));
    for o in &kor.overlap {
        assert_eq!(o.target_lang, "kor");
    }
    assert!(report.results.languages["eng"].overlap.is_empty());
}

#[test]
fn cache_reuse_gives_identical_reports() {
    let cache = TempDir::new().unwrap();
    let mut cfg = config(InputType::Cipher);
    cfg.cache_dir = Some(cache.path().to_path_buf());
    let first = run_experiment_with_artifacts(&cfg, &corpora()).unwrap();
    let entries = fs::read_dir(cache.path().join("translit")).unwrap().count();
    assert_eq!(entries, 3);
    assert_eq!(fs::read_dir(cache.path().join("tokenizer")).unwrap().count(), 1);
    let second = run_experiment_with_artifacts(&cfg, &corpora()).unwrap();
    assert_eq!(first.report, second.report);
    assert_eq!(first.model.to_json(), second.model.to_json());

    // a different key shifts the corpora and so misses the cache
    cfg.cipher_keys.as_mut().unwrap().insert("eng".into(), 4);
    run_experiment(&cfg, &corpora()).unwrap();
    assert_eq!(fs::read_dir(cache.path().join("translit")).unwrap().count(), 4);
}

#[test]
fn seeds_change_samples_not_shape() {
    let mut cfg = config(InputType::Ortho);
    let a = run_experiment(&cfg, &corpora()).unwrap();
    cfg.seed += 1;
    let b = run_experiment(&cfg, &corpora()).unwrap();
    assert_eq!(a.language_set(), b.language_set());
    assert!(compare_input_types(&[a, b]).is_err());
}

#[test]
fn comparison_lines_up_input_types() {
    let reports: Vec<_> = [InputType::Ortho, InputType::Rom, InputType::Cipher]
        .into_iter()
        .map(|it| run_experiment(&config(it), &corpora()).unwrap())
        .collect();
    let table = compare_input_types(&reports).unwrap();
    assert_eq!(table.input_types, vec![InputType::Ortho, InputType::Rom, InputType::Cipher]);
    for row in &table.rows {
        assert_eq!(row.values.len(), 3);
        assert_eq!(row.deltas[0].unwrap_or(0.0), 0.0);
        if row.seen && row.metric == "overlap_ratio" {
            assert!(row.values.iter().all(Option::is_none));
        }
    }
    let kor_unk = table.rows.iter().find(|r| r.lang == "kor" && r.metric == "unk_ratio").unwrap();
    assert_eq!(kor_unk.values[0], Some(1.0));
    assert!(kor_unk.deltas[1].unwrap() < 0.0);
}

#[test]
fn json_and_toml_configs_agree() {
    let toml = r#"
        input_type = "rom"
        vocab_size = 150
        budget = 20
        [[languages]]
        lang = "eng"
        seen = true
        [[languages]]
        lang = "spa"
        seen = true
        [[languages]]
        lang = "kor"
        seen = false
    "#;
    let from_toml = ExperimentConfig::from_toml(toml).unwrap();
    let json = serde_json::to_string(&from_toml).unwrap();
    let from_json = ExperimentConfig::from_json(&json).unwrap();
    assert_eq!(from_toml, from_json);
    assert_eq!(from_toml.digest(), config(InputType::Rom).digest());
}
