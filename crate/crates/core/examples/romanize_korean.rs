//! Hangul decomposition and romanization through the shipped Korean table.

use xlit::translit::{hangul, romanize};
use xlit::TableRegistry;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (lead, vowel, tail) = hangul::decompose('한')?;
    println!("한 = lead {lead}, vowel {vowel}, tail {tail}");
    assert_eq!(hangul::compose(lead, vowel, tail)?, '한');

    let tables = TableRegistry::with_builtins();
    for text in ["안녕하세요", "한국어", "서울", "캐나다"] {
        println!("{text} -> {}", romanize("kor", text, &tables)?);
    }
    Ok(())
}
