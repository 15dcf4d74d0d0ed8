//! Strict span scoring, and what happens when every predicted relation is
//! rewritten to NR: entity scores stay, relation recall drops to zero.
//!
//! cargo run --example evaluate

use bondchain::corpus::tokens_from;
use bondchain::eval::{evaluate, render_report};
use bondchain::tagscheme::{AnnotatedSentence, JointTag, Strictness};
use bondchain::corpus::Relation;

fn sentence(tags: &[&str]) -> AnnotatedSentence {
    let words = ["The", "pKa", "of", "phenol", "in", "DMSO", "is", "18.0", "."];
    let tags = tags.iter().map(|t| t.parse().unwrap()).collect();
    AnnotatedSentence::from_tags(tokens_from(&words), tags, Strictness::Strict).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gold = vec![sentence(&["O", "B-PKA-NR", "O", "B-CMP-CE", "O", "B-SOL-SE", "O", "B-VAL-EE", "O"])];
    // right compound, value tagged without its relation, solvent missed
    let pred = vec![sentence(&["O", "B-PKA-NR", "O", "B-CMP-CE", "O", "O", "O", "B-VAL-NR", "O"])];
    println!("{}", render_report(&evaluate(&gold, &pred)?));

    let nr: Vec<AnnotatedSentence> = gold
        .iter()
        .map(|s| {
            let tags: Vec<JointTag> = s.tags.iter().map(|t| t.with_relation(Relation::Nr)).collect();
            AnnotatedSentence::from_tags(s.tokens.clone(), tags, Strictness::Strict)
        })
        .collect::<Result<_, _>>()?;
    println!("{}", render_report(&evaluate(&gold, &nr)?));
    Ok(())
}
