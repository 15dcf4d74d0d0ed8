//! Collapses dictionary and rule matches into `$CMP$` / `$BOND$` marks and
//! restores the original tokens.
//!
//! cargo run --example mask_sentence

use bondchain::corpus::{join_tokens, tokenize, EntityType};
use bondchain::lexicon::{load_lexicon, mask};
use bondchain::tagscheme::JointTag;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lexicon = load_lexicon(&[concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/lexicon")])?;
    let tokens = tokenize("The O-H bond energy of 2,4-dinitrophenol exceeds that of HCN in DMSO .")?;

    let matches = lexicon.match_entities(&tokens);
    for m in &matches {
        println!("{:<5} [{}, {}) {}", m.entity, m.start, m.end, join_tokens(&tokens[m.start..m.end]));
    }
    // solvents are tagged, not masked
    let maskable: Vec<_> = matches
        .into_iter()
        .filter(|m| matches!(m.entity, EntityType::Compound | EntityType::Bond))
        .collect();
    let masked = mask(&tokens, &maskable)?;
    println!("\nmasked:   {}", join_tokens(&masked.tokens));
    for a in &masked.alignment {
        println!("  mark {} <- [{}, {})", a.masked_index, a.start, a.end);
    }

    let (restored, _) = masked.unmask(&vec![JointTag::O; masked.len()])?;
    println!("restored: {}", join_tokens(&restored));
    assert_eq!(restored, tokens);
    Ok(())
}
