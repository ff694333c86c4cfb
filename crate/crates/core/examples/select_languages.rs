//! Pick a two-language set from a small pool under each regime.

use std::collections::BTreeMap;

use xlit::langselect::{select_subset, FeatureRegistry, MissingFeatures, Regime, SelectionSpec, SimilarityMatrix};

const FEATURES: &str = "\
lang,kind,values
eng,syntactic,\"1,0,1,0\"
eng,geographic,\"0.9,0.1\"
eng,genetic,\"1,1,0\"
deu,syntactic,\"1,0,1,1\"
deu,geographic,\"0.8,0.2\"
deu,genetic,\"1,1,0\"
rus,syntactic,\"0,1,1,0\"
rus,geographic,\"0.5,0.9\"
rus,genetic,\"1,0,1\"
jpn,syntactic,\"0,1,0,1\"
jpn,geographic,\"0.1,1\"
jpn,genetic,\"0,0,1\"
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let features = FeatureRegistry::from_csv(FEATURES.as_bytes())?;
    let corpora: BTreeMap<String, Vec<&str>> = [
        ("eng", vec!["hotel radio taxi house"]),
        ("deu", vec!["hotel radio taxi haus"]),
        ("rus", vec!["отель радио такси дом"]),
        ("jpn", vec!["ホテル ラジオ タクシー 家"]),
    ]
    .into_iter()
    .map(|(l, c)| (l.to_string(), c))
    .collect();
    let scripts: BTreeMap<String, String> = [("eng", "Latn"), ("deu", "Latn"), ("rus", "Cyrl"), ("jpn", "Jpan")]
        .into_iter()
        .map(|(l, s)| (l.to_string(), s.to_string()))
        .collect();

    let pool: Vec<String> = corpora.keys().cloned().collect();
    let sims = SimilarityMatrix::build(&pool, &features, &corpora, MissingFeatures::Rescale)?;
    for regime in [Regime::SimDiv, Regime::DissimDiv] {
        let mut spec = SelectionSpec::new(regime, scripts.clone());
        spec.set_size = 2;
        let sel = select_subset(&pool, &spec, &sims)?;
        println!("{regime}: {:?} objective {:.4}", sel.langs, sel.objective);
    }
    Ok(())
}
