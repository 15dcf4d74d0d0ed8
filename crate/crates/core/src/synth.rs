//! Template grammar for a synthetic annotated corpus of pKa statements.
//!
//! Every document fixes one bond, method and reaction, opens with a
//! sentence about them, and continues with statements drawn from a set of
//! templates. Compound names come from four pools: names listed in the
//! fixture lexicon, molecular formulas, names only the affix rules
//! recognise, and names no lexicon entry covers.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{tokenize, Document, EntitySpan, EntityType, Relation, Sentence, Token};

pub const LISTED_COMPOUNDS: &[&str] = &[
    "phenol",
    "4-nitrophenol",
    "4-chlorophenol",
    "p-cresol",
    "2-naphthol",
    "hydroquinone",
    "thiophenol",
    "benzoic acid",
    "acetic acid",
    "formic acid",
    "1,8-Dihydroxy-4-naphthoic acid",
    "aniline",
    "benzylamine",
    "pyridine",
    "pyrrole",
    "indole",
    "imidazole",
    "acetophenone",
    "acetone",
    "cyclohexanone",
    "acetylacetone",
    "ethyl acetoacetate",
    "dimedone",
    "malononitrile",
    "nitromethane",
    "fluorene",
    "indene",
    "diphenylmethane",
    "triphenylmethane",
    "benzyl alcohol",
];
pub const FORMULA_COMPOUNDS: &[&str] = &["HCN", "H2S", "HNO2", "C6H5OH"];
pub const AFFIX_COMPOUNDS: &[&str] = &[
    "2-methylphenol",
    "3-methoxyphenol",
    "2,6-dimethylphenol",
    "8-hydroxyquinoline",
    "naphthalene-2-thiol",
    "hexanoic acid",
    "octanoic acid",
];
pub const UNLISTED_COMPOUNDS: &[&str] = &[
    "barbituric acid",
    "ethyl cyanoacetate",
    "dimethyl malonate",
    "nitroethane",
    "carbazole",
    "succinimide",
    "cyclopentadiene",
];
pub const SOLVENTS: &[&str] = &[
    "DMSO",
    "dimethyl sulfoxide",
    "water",
    "acetonitrile",
    "methanol",
    "ethanol",
    "THF",
    "DMF",
    "liquid ammonia",
    "aqueous ethanol",
];
pub const BONDS: &[&str] = &["O-H bond", "N-H bond", "C-H bond", "S-H bond", "C-H bonds"];
pub const METHODS: &[&str] = &[
    "DFT",
    "NMR titration",
    "potentiometric titration",
    "UV-vis spectroscopy",
    "calorimetry",
];
pub const REACTIONS: &[&str] = &[
    "deprotonation",
    "homolysis",
    "heterolysis",
    "proton transfer",
    "hydrogen atom transfer",
];
pub const PKA_TERMS: &[&str] = &["pKa", "pKa value", "BDE", "acidity constant"];

/// Opening sentences; they mention the document's global entities.
const OPENERS: &[&str] = &[
    "We investigated the {R} of several acids by {M} .",
    "The {B} dissociation energies were derived from {P} data measured by {M} .",
    "All {M} measurements concern the {R} of the {B} .",
];

const STATEMENTS: &[&str] = &[
    "The {P} of {C:CE} in {S:SE} is {V:EE} .",
    "{C:CE} has a {P} of {V:EE} in {S:SE} .",
    "In {S:SE} , {C:CE} and {C2:CE} share a {P} of {V:EE} .",
    "Compared with {C2:NR} , {C:CE} shows a {P} of {V:EE} in {S:SE} .",
    "{C:NR} was dissolved in {S:NR} before adding {V:NR} equivalents of base .",
    "Using {M} , the {P} of {C:CE} was found to be {V:EE} .",
    "The {B} of {C:CE} is weaker , with a {P} of {V:EE} in {S:SE} .",
    "{C2:NR} served as the reference , whereas {C:CE} gave {V:EE} for the {P} in {S:SE} .",
    "The {R} of {C:CE} in {S:SE} has a {P} of {V:EE} , measured against {C2:NR} .",
    "A {P} of {V:EE} was obtained for {C:CE} after {V2:NR} hours in {S:SE} .",
    "Unlike the {P} of {C2:NR} , that of {C:CE} is {V:EE} in {S:SE} .",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SynthConfig {
    pub documents: usize,
    pub sentences_per_document: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            documents: 100,
            sentences_per_document: 6,
            seed: 7,
        }
    }
}

struct Globals {
    bond: &'static str,
    method: &'static str,
    reaction: &'static str,
}

#[derive(Default)]
struct SentenceBuilder {
    tokens: Vec<Token>,
    spans: Vec<EntitySpan>,
}

impl SentenceBuilder {
    fn push(&mut self, text: &str, label: Option<(EntityType, Relation)>) {
        let start = self.tokens.len();
        for t in tokenize(text).expect("template text is free of marks") {
            self.tokens.push(Token::new(t.text, self.tokens.len()));
        }
        if let Some((entity, relation)) = label {
            self.spans
                .push(EntitySpan::new(start, self.tokens.len(), entity, relation));
        }
    }

    fn finish(self) -> Sentence {
        Sentence::new(self.tokens, self.spans).expect("templates produce disjoint spans")
    }
}

fn compound(rng: &mut ChaCha8Rng) -> &'static str {
    let pool = match rng.gen_range(0..20) {
        0..=11 => LISTED_COMPOUNDS,
        12..=13 => FORMULA_COMPOUNDS,
        14..=16 => AFFIX_COMPOUNDS,
        _ => UNLISTED_COMPOUNDS,
    };
    pool.choose(rng).expect("non-empty pool")
}

fn value(rng: &mut ChaCha8Rng) -> String {
    if rng.gen_range(0..10) == 0 {
        let v: u32 = rng.gen_range(0..4000);
        format!("{}.{:02}", v / 100, v % 100)
    } else {
        let v: u32 = rng.gen_range(0..400);
        format!("{}.{}", v / 10, v % 10)
    }
}

fn render(template: &str, globals: &Globals, rng: &mut ChaCha8Rng) -> Sentence {
    let mut b = SentenceBuilder::default();
    let mut used: Vec<&str> = Vec::new();
    for word in template.split_whitespace() {
        let Some(slot) = word.strip_prefix('{').and_then(|w| w.strip_suffix('}')) else {
            b.push(word, None);
            continue;
        };
        let (name, relation) = match slot.split_once(':') {
            Some((n, r)) => (n, Relation::from_code(r).expect("template relation")),
            None => (slot, Relation::Nr),
        };
        let (entity, text) = match &name[..1] {
            "C" => {
                let mut c = compound(rng);
                while used.contains(&c) {
                    c = compound(rng);
                }
                used.push(c);
                (EntityType::Compound, c.to_string())
            }
            "S" => (EntityType::Solvent, SOLVENTS.choose(rng).expect("solvents").to_string()),
            "V" => (EntityType::Value, value(rng)),
            "P" => (EntityType::Pka, PKA_TERMS.choose(rng).expect("pKa terms").to_string()),
            "B" => (EntityType::Bond, globals.bond.to_string()),
            "M" => (EntityType::Method, globals.method.to_string()),
            "R" => (EntityType::Reaction, globals.reaction.to_string()),
            other => unreachable!("unknown slot {other}"),
        };
        b.push(&text, Some((entity, relation)));
    }
    b.finish()
}

/// Generates `config.documents` documents with ids `syn001`, `syn002`, ….
pub fn generate(config: &SynthConfig) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    (1..=config.documents)
        .map(|d| {
            let globals = Globals {
                bond: BONDS.choose(&mut rng).expect("bonds"),
                method: METHODS.choose(&mut rng).expect("methods"),
                reaction: REACTIONS.choose(&mut rng).expect("reactions"),
            };
            let mut sentences = Vec::with_capacity(config.sentences_per_document);
            for i in 0..config.sentences_per_document {
                let pool = if i == 0 { OPENERS } else { STATEMENTS };
                let template = pool.choose(&mut rng).expect("templates");
                sentences.push(render(template, &globals, &mut rng));
            }
            Document::new(format!("syn{d:03}"), sentences)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagscheme::{encode, is_legal_transition};

    #[test]
    fn deterministic_and_sized() {
        let cfg = SynthConfig {
            documents: 5,
            ..SynthConfig::default()
        };
        let a = generate(&cfg);
        assert_eq!(a, generate(&cfg));
        assert_eq!(a.len(), 5);
        assert_eq!(a[4].id, "syn005");
        assert!(a.iter().all(|d| d.sentences.len() == 6));
    }

    #[test]
    fn sentences_encode_legally() {
        for doc in generate(&SynthConfig::default()) {
            for s in &doc.sentences {
                let tags = encode(s).unwrap();
                let mut prev = None;
                for t in tags.iter().copied().map(Some).chain([None]) {
                    assert!(is_legal_transition(prev, t));
                    prev = t;
                }
            }
        }
    }
}
