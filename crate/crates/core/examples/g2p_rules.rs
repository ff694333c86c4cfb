//! Rewrite-rule tables: a hand-written one and the shipped Spanish G2P table.

use xlit::translit::{Passthrough, TableMode};
use xlit::{RewriteRule, RuleTable, TableRegistry};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rules = vec![
        RewriteRule::new("ch", "x", 0),
        RewriteRule::new("c", "k", 1),
        RewriteRule::new("c", "s", 2).with_right("e"),
        RewriteRule::new("c", "s", 3).with_right("i"),
    ];
    let table = RuleTable::new("toy", TableMode::G2p, rules, Passthrough::Keep)?;
    for word in ["chic", "cena", "coca"] {
        println!("{word} -> {}", table.apply(word)?);
    }
    print!("{}", table.to_tsv());

    let tables = TableRegistry::with_builtins();
    for word in ["hotel", "chico", "guerra", "llama"] {
        println!("spa {word} -> {}", tables.g2p("spa", word)?);
    }
    Ok(())
}
