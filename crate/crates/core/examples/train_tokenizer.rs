//! Train a small BPE model, then encode and decode with it.

use xlit::tokenizer::train;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = [
        "the cat sat on the mat",
        "the dog sat on the log",
        "a cat and a dog met on the mat",
    ];
    let model = train(&corpus, 60, 1)?;
    println!("vocabulary {} tokens, {} merges, digest {}", model.len(), model.merges().len(), model.digest());

    let text = "the cat met the dog";
    let tokens = model.encode_to_tokens(text);
    println!("{text} -> {tokens:?}");
    let ids = model.encode(text);
    assert_eq!(model.decode(&ids)?, text);

    // characters never seen in training collapse to one unknown token per run
    println!("{:?}", model.encode_to_tokens("the café"));
    Ok(())
}
