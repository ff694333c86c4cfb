//! Per-language Caesar shifts applied after romanization.

use xlit::translit::{assign_shift_keys, keys_to_json, TableRegistry, TextTransform, Transliterator};
use xlit::{CipherKey, InputType};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let key = CipherKey::new("eng", 4)?;
    println!("apple -> {}", key.encipher("apple"));
    println!("ettpi -> {}", key.decipher("ettpi"));

    let keys = assign_shift_keys(&["kor", "eng", "spa"])?;
    println!("keys: {}", keys_to_json(&keys));

    let tables = TableRegistry::with_builtins();
    let kor = Transliterator::for_input_type(InputType::Cipher, "kor", &tables, Some(&keys))?;
    println!("캐나다 -> {}", kor.transform("캐나다")?);
    Ok(())
}
