//! Extraction of bond-energy (pKa) data chains from chemistry text and
//! tables: tokenized corpora, dictionary and rule masking, a joint
//! entity/relation tagger with a CRF or softmax decoder, scoring, and chain
//! assembly.

pub mod cli;
pub mod corpus;
pub mod eval;
pub mod lexicon;
pub mod model;
pub mod pipeline;
pub mod synth;
pub mod tagscheme;
