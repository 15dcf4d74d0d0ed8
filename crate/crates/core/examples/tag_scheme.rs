//! Encodes annotated spans as joint entity-relation tags and decodes them
//! back, including a 1:n case where two compounds share one pKa anchor.
//!
//! cargo run --example tag_scheme

use bondchain::corpus::{tokens_from, EntitySpan, EntityType as E, Relation as R, Sentence};
use bondchain::tagscheme::{build_tagset, decode, encode, Strictness};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tokens = tokens_from(&[
        "The", "pKa", "of", "phenol", "and", "p-cresol", "is", "18.0", "in", "DMSO", ".",
    ]);
    let spans = vec![
        EntitySpan::new(1, 2, E::Pka, R::Nr),
        EntitySpan::new(3, 4, E::Compound, R::Ce),
        EntitySpan::new(5, 6, E::Compound, R::Ce),
        EntitySpan::new(7, 8, E::Value, R::Ee),
        EntitySpan::new(9, 10, E::Solvent, R::Se),
    ];
    let sentence = Sentence::new(tokens.clone(), spans)?;

    let tags = encode(&sentence)?;
    let tagset = build_tagset();
    for (t, tag) in tokens.iter().zip(&tags) {
        println!("{:<10} {:<12} id {}", t.text, tag.to_string(), tagset.id(*tag).unwrap());
    }

    let decoded = decode(&tags, &tokens, Strictness::Strict)?;
    println!();
    for r in &decoded.relations {
        let subject = r.subject.text(&tokens);
        let anchor = r.anchor.text(&tokens);
        println!("{}: {subject} -> {anchor} (token {})", r.kind, r.anchor.start);
    }
    Ok(())
}
