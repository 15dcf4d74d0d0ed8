//! Tokenizes a raw sentence and prints entity counts for the synthetic corpus.
//!
//! cargo run --example corpus_stats

use bondchain::corpus::{corpus_stats, parse_column_file, tokenize};
use bondchain::tagscheme::Strictness;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tokens = tokenize("The pKa of 1,8-Dihydroxy-4-naphthoic acid (in DMSO) is 12.3.")?;
    let words: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
    println!("{words:?}\n");

    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/synthetic.conll");
    let docs = parse_column_file(&std::fs::read_to_string(path)?, Strictness::Strict)?;
    print!("{}", corpus_stats(&docs));
    Ok(())
}
