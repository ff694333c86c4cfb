//! Budgeted document sampling and the resulting oversampling weights.

use xlit::corpus::{oversampling_weights, sample_to_budget};
use xlit::Document;

fn docs(lang: &str, n: usize, words: usize) -> Vec<Document> {
    (0..n)
        .map(|i| Document::new(lang, format!("{i:04}"), vec!["w"; words].join(" ")))
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let budget = 100;
    let mut manifests = Vec::new();
    for (lang, n) in [("big", 50), ("small", 4)] {
        let (manifest, sample) = sample_to_budget(&docs(lang, n, 7), budget, 42)?;
        let ids: Vec<&str> = sample.iter().map(|d| d.id.as_str()).collect();
        println!("{lang}: {} words, under budget: {}, ids {ids:?}", manifest.word_count, manifest.under_budget);
        manifests.push(manifest);
    }
    for (lang, w) in oversampling_weights(&manifests, budget)? {
        println!("weight {lang} = {w} ({:.3})", w.to_f64());
    }
    Ok(())
}
