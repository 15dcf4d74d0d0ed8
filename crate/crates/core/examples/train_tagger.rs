//! Trains CRF and softmax taggers on the synthetic corpus and compares them
//! on the held-out split.
//!
//! cargo run --release --example train_tagger

use std::time::Instant;

use bondchain::corpus::{parse_column_file, split_corpus};
use bondchain::eval::{evaluate, render_report};
use bondchain::lexicon::load_lexicon;
use bondchain::model::{predict, train, DecoderMode, TrainConfig};
use bondchain::tagscheme::{AnnotatedSentence, Strictness};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = env!("CARGO_MANIFEST_DIR");
    let text = std::fs::read_to_string(format!("{root}/fixtures/synthetic.conll"))?;
    let docs = parse_column_file(&text, Strictness::Strict)?;
    let lexicon = load_lexicon(&[format!("{root}/fixtures/lexicon")])?;
    let split = split_corpus(docs, [0.8, 0.1, 0.1], 7)?;

    let test: Vec<_> = split.test.iter().flat_map(|d| &d.sentences).collect();
    let gold = test
        .iter()
        .map(|s| AnnotatedSentence::from_sentence(s))
        .collect::<Result<Vec<_>, _>>()?;
    let tokens: Vec<_> = test.iter().map(|s| s.tokens.clone()).collect();

    for mode in [DecoderMode::Crf, DecoderMode::Softmax] {
        let config = TrainConfig {
            mode,
            ..TrainConfig::default()
        };
        let t0 = Instant::now();
        let outcome = train(&split.train, Some(&split.dev), &lexicon, &config)?;
        println!("== {mode} ({:.1}s)", t0.elapsed().as_secs_f64());
        print!("{}", outcome.log());
        let pred = predict(&outcome.checkpoint, &lexicon, &tokens)?;
        println!("{}", render_report(&evaluate(&gold, &pred)?));
    }
    Ok(())
}
