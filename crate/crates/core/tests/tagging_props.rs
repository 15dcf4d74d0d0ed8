mod common;

use bondchain::corpus::{tokens_from, Relation};
use bondchain::eval::{entity_prf, relation_prf};
use bondchain::lexicon::mask;
use bondchain::tagscheme::{decode, encode, is_legal_transition, repair, AnnotatedSentence, JointTag, Strictness};
use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn legal(tags: &[JointTag]) -> bool {
    let mut prev = None;
    for &t in tags {
        if !is_legal_transition(prev, Some(t)) {
            return false;
        }
        prev = Some(t);
    }
    is_legal_transition(prev, None)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn encode_decode_round_trip(seed in any::<u64>()) {
        let s = random_sentence(&mut ChaCha8Rng::seed_from_u64(seed));
        let tags = encode(&s).unwrap();
        prop_assert!(legal(&tags));
        let decoded = decode(&tags, &s.tokens, Strictness::Strict).unwrap();
        prop_assert_eq!(decoded.mentions, s.spans.clone());
    }

    #[test]
    fn repair_is_legal_and_fixes_legal_input(seed in any::<u64>(), noise in prop::collection::vec(0usize..21, 1..20)) {
        let tagset = bondchain::tagscheme::build_tagset();
        let arbitrary = tagset.tags_of(&noise);
        let fixed = repair(&arbitrary);
        prop_assert!(legal(&fixed));
        prop_assert_eq!(repair(&fixed), fixed.clone());
        let s = random_sentence(&mut ChaCha8Rng::seed_from_u64(seed));
        let tags = encode(&s).unwrap();
        prop_assert_eq!(repair(&tags), tags);
    }

    #[test]
    fn relation_rewrite_keeps_entities(seed in any::<u64>()) {
        let s = random_sentence(&mut ChaCha8Rng::seed_from_u64(seed));
        let gold = AnnotatedSentence::from_sentence(&s).unwrap();
        let nr: Vec<JointTag> = gold.tags.iter().map(|t| t.with_relation(Relation::Nr)).collect();
        let pred = AnnotatedSentence::from_tags(gold.tokens.clone(), nr, Strictness::Strict).unwrap();
        let g = [gold.mentions.clone()];
        prop_assert_eq!(entity_prf(&g, std::slice::from_ref(&pred.mentions)), entity_prf(&g, &g));
        let rel = relation_prf(std::slice::from_ref(&gold.relations), std::slice::from_ref(&pred.relations));
        prop_assert_eq!(rel.micro().tp, 0);
    }

    #[test]
    fn masking_matches_oracle_and_round_trips(seed in any::<u64>()) {
        let (terms, lexicon, words) = random_lexicon_sentence(&mut ChaCha8Rng::seed_from_u64(seed));
        let tokens = tokens_from(&words);
        let found = lexicon.match_entities(&tokens);
        prop_assert_eq!(&found, &brute_leftmost_longest(&terms, &words));
        prop_assert!(found.windows(2).all(|w| w[0].end <= w[1].start));
        let m = mask(&tokens, &found).unwrap();
        let collapsed: usize = found.iter().map(|f| f.end - f.start - 1).sum();
        prop_assert_eq!(m.len(), tokens.len() - collapsed);
        let (restored, tags) = m.unmask(&vec![JointTag::O; m.len()]).unwrap();
        prop_assert_eq!(restored, tokens);
        prop_assert!(tags.iter().all(|t| *t == JointTag::O));
    }
}

#[test]
fn pairing_prefers_the_nearer_then_leftward_anchor() {
    let tokens = tokens_from(&["pKa", "x", "phenol", "x", "pKa", "18.0"]);
    let tags: Vec<JointTag> = ["B-PKA-NR", "O", "B-CMP-CE", "O", "B-PKA-NR", "B-VAL-EE"]
        .iter()
        .map(|t| t.parse().unwrap())
        .collect();
    let d = decode(&tags, &tokens, Strictness::Strict).unwrap();
    // phenol sits two tokens from each anchor and takes the left one
    assert_eq!(d.relations[0].anchor.start, 0);
    assert_eq!(d.relations[1].anchor.start, 4);
}

#[test]
fn strict_decoding_rejects_orphan_inside() {
    let tokens = tokens_from(&["a", "b"]);
    let tags = vec![JointTag::O, "I-CMP-CE".parse().unwrap()];
    assert!(decode(&tags, &tokens, Strictness::Strict).is_err());
    let lenient = decode(&tags, &tokens, Strictness::Lenient).unwrap();
    assert_eq!(lenient.mentions.len(), 1);
}
