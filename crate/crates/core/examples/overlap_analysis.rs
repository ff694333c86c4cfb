//! Token overlap of an unseen language with the languages a tokenizer saw.

use xlit::metrics::{overlap_report, quality_report};
use xlit::tokenizer::train;
use xlit::{InputType, OverlapVariant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let eng = ["the nation and the station", "a natural relation"];
    let spa = ["la nacion y la estacion", "una relacion natural"];
    let ita = ["la nazione e la stazione", "una relazione naturale"];

    let training: Vec<&str> = eng.iter().chain(spa.iter()).copied().collect();
    let model = train(&training, 120, 1)?;
    let sources = [
        model.token_set(&eng, "eng", InputType::Ortho),
        model.token_set(&spa, "spa", InputType::Ortho),
    ];
    let target = model.token_set(&ita, "ita", InputType::Ortho);

    for variant in [OverlapVariant::MaxSource, OverlapVariant::AllSources, OverlapVariant::TypeRatio] {
        let r = overlap_report(&target, &sources, variant)?;
        println!("{variant}: best {} overall {} by length {:?}", r.best_source_lang, r.overall_ratio,
            r.by_length.iter().map(|(m, f)| format!("{m}:{f}")).collect::<Vec<_>>());
    }

    let q = quality_report(&model, &ita)?;
    println!("ita unk {} fertility {} coverage {}", q.unk_ratio, q.fertility, q.vocab_coverage);
    Ok(())
}
