//! Writes the synthetic corpus in column format.
//!
//! cargo run --example generate_corpus -- out.conll

use bondchain::corpus::{corpus_stats, write_column_file};
use bondchain::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let docs = generate(&SynthConfig::default());
    eprint!("{}", corpus_stats(&docs));
    let text = write_column_file(&docs);
    match std::env::args().nth(1) {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
