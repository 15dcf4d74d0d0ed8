//! Assembles chains from the gold-tagged chain fixture and its table, the
//! same path the `chains` subcommand takes without a model.
//!
//! cargo run --example extract_chains

use bondchain::corpus::parse_column_file;
use bondchain::lexicon::load_lexicon;
use bondchain::pipeline::{extract_chains, read_table, render_chains};
use bondchain::tagscheme::{AnnotatedSentence, Strictness};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let lexicon = load_lexicon(&[format!("{root}/lexicon")])?;
    let docs = parse_column_file(&std::fs::read_to_string(format!("{root}/chains/docs.conll"))?, Strictness::Strict)?;
    let table = read_table(format!("{root}/chains/chdoc2.csv").as_ref())?;

    for doc in &docs {
        let sentences = doc
            .sentences
            .iter()
            .map(AnnotatedSentence::from_sentence)
            .collect::<Result<Vec<_>, _>>()?;
        let tables: Vec<_> = std::iter::once(&table).filter(|t| t.id == doc.id).cloned().collect();
        let (merged, diagnostics) = extract_chains(&doc.id, &sentences, &tables, &lexicon)?;
        println!("# {}", doc.id);
        for d in diagnostics.iter().chain(&merged.log) {
            println!("  {d}");
        }
        print!("{}", render_chains(&merged.chains));
    }
    Ok(())
}
