//! Classifies table columns and turns rows into data chains.
//!
//! cargo run --example extract_tables

use bondchain::lexicon::load_lexicon;
use bondchain::pipeline::{column_roles, extract_table_facts, parse_table, render_chains};

const TABLE: &str = "\
Entry,Substrate,Medium,BDE (kcal/mol),Method
1,phenol,DMSO,18.0,titration
2,2-naphthol,DMSO,17.1,titration
3,anisole,water,n.d.,
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lexicon = load_lexicon(&[concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/lexicon")])?;
    let table = parse_table("demo", TABLE, b',')?;
    for (header, role) in table.header.iter().zip(column_roles(&table, &lexicon)) {
        println!("{header:<16} {role:?}");
    }
    println!();
    // the last row has no numeric value and yields nothing
    print!("{}", render_chains(&extract_table_facts(&table, &lexicon)?));
    Ok(())
}
