use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::table::{extract_table_facts, parse_value, TableDoc};
use super::{DataChain, Location, PipelineError, Slot};
use crate::corpus::{EntityType, Relation};
use crate::lexicon::Lexicon;
use crate::tagscheme::{nearest, AnnotatedSentence, EntityMention};

/// pKa values closer than this are the same measurement.
pub const VALUE_TOLERANCE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalValue {
    pub text: String,
    /// Sentence of the first occurrence.
    pub sentence: usize,
}

/// Document-wide bond, reaction and method.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Globals {
    pub bond: Option<GlobalValue>,
    pub reaction: Option<GlobalValue>,
    pub method: Option<GlobalValue>,
}

impl Globals {
    fn slots(&self) -> [(Slot, &Option<GlobalValue>); 3] {
        [
            (Slot::Bond, &self.bond),
            (Slot::Reaction, &self.reaction),
            (Slot::Method, &self.method),
        ]
    }

    /// Fills absent bond, reaction and method slots of `chain`.
    fn complete(&self, doc_id: &str, chain: &mut DataChain) {
        for (slot, value) in self.slots() {
            let Some(g) = value else { continue };
            let target = chain.text_slot_mut(slot).expect("global slots hold text");
            if target.is_none() {
                *target = Some(g.text.clone());
                chain.note(Location::text(doc_id, g.sentence).trail(slot));
            }
        }
    }
}

/// Surface string of a global mention; bonds lose a trailing "bond(s)".
fn global_surface(sentence: &AnnotatedSentence, m: &EntityMention) -> String {
    let mut end = m.end;
    if m.entity == EntityType::Bond
        && end - m.start > 1
        && matches!(
            sentence.tokens[end - 1].text.to_lowercase().as_str(),
            "bond" | "bonds"
        )
    {
        end -= 1;
    }
    crate::corpus::join_tokens(&sentence.tokens[m.start..end])
}

/// Most frequent surface string per global type; ties go to the string seen
/// first.
pub fn collect_globals(sentences: &[AnnotatedSentence]) -> Globals {
    let pick = |entity: EntityType| {
        // surface -> (count, first sentence, first token)
        let mut seen: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
        for (i, s) in sentences.iter().enumerate() {
            for m in s.mentions.iter().filter(|m| m.entity == entity) {
                let e = seen.entry(global_surface(s, m)).or_insert((0, i, m.start));
                e.0 += 1;
            }
        }
        seen.into_iter()
            .min_by(|(_, a), (_, b)| b.0.cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))))
            .map(|(text, (_, sentence, _))| GlobalValue { text, sentence })
    };
    Globals {
        bond: pick(EntityType::Bond),
        reaction: pick(EntityType::Reaction),
        method: pick(EntityType::Method),
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Assembly {
    pub chains: Vec<DataChain>,
    /// Incomplete anchors, extra solvents and unreadable values.
    pub diagnostics: Vec<String>,
}

/// One chain per CE subject of every pKa anchor, with the anchor's
/// nearest SE and EE subjects and the document globals.
pub fn assemble_chains(doc_id: &str, sentences: &[AnnotatedSentence], globals: &Globals) -> Assembly {
    let mut out = Assembly::default();
    for (i, s) in sentences.iter().enumerate() {
        let here = Location::text(doc_id, i);
        let mut anchors: Vec<EntityMention> = s.relations.iter().map(|r| r.anchor).collect();
        anchors.sort();
        anchors.dedup();
        for anchor in anchors {
            let subjects = |kind: Relation| -> Vec<&EntityMention> {
                s.relations
                    .iter()
                    .filter(|r| r.anchor == anchor && r.kind == kind)
                    .map(|r| &r.subject)
                    .collect()
            };
            let compounds = subjects(Relation::Ce);
            let solvents = subjects(Relation::Se);
            let values = subjects(Relation::Ee);
            let anchor_text = s.text_of(&anchor);
            if compounds.is_empty() {
                out.diagnostics.push(format!(
                    "incomplete: {doc_id} s{i} anchor {anchor_text:?} at token {} has no compound",
                    anchor.start
                ));
                continue;
            }
            let solvent = nearest(anchor.start, solvents.iter().copied());
            if solvents.len() > 1 {
                let solvent = solvent.expect("several solvents");
                let extra: Vec<String> = solvents
                    .iter()
                    .filter(|m| **m != solvent)
                    .map(|m| s.text_of(m))
                    .collect();
                out.diagnostics.push(format!(
                    "extra solvents: {doc_id} s{i} anchor {anchor_text:?} kept {:?}, ignored {extra:?}",
                    s.text_of(solvent)
                ));
            }
            let value = nearest(anchor.start, values.iter().copied());
            let parsed = value.map(|v| (s.text_of(v), parse_value(&s.text_of(v))));
            if let Some((text, None)) = &parsed {
                out.diagnostics.push(format!(
                    "warning: {doc_id} s{i} value {text:?} is not a number"
                ));
            }
            for c in compounds {
                let mut chain = DataChain::new(s.text_of(c));
                chain.note(here.trail(Slot::Compound));
                if let Some(sv) = solvent {
                    chain.solvent = Some(s.text_of(sv));
                    chain.note(here.trail(Slot::Solvent));
                }
                if let Some((_, Some(v))) = parsed {
                    chain.pka_value = Some(v);
                    chain.note(here.trail(Slot::PkaValue));
                }
                globals.complete(doc_id, &mut chain);
                out.chains.push(chain);
            }
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Merged {
    pub chains: Vec<DataChain>,
    /// Conflicts resolved during merging.
    pub log: Vec<String>,
}

fn cmp_value(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => x.total_cmp(&y),
    }
}

fn cmp_chains(a: &DataChain, b: &DataChain) -> Ordering {
    a.compound
        .to_lowercase()
        .cmp(&b.compound.to_lowercase())
        .then_with(|| cmp_value(a.pka_value, b.pka_value))
        .then_with(|| b.from_table().cmp(&a.from_table()))
        .then_with(|| a.to_string().cmp(&b.to_string()))
}

fn same_key(a: &DataChain, b: &DataChain) -> bool {
    a.compound.to_lowercase() == b.compound.to_lowercase()
        && match (a.pka_value, b.pka_value) {
            (None, None) => true,
            (Some(x), Some(y)) => (x - y).abs() <= VALUE_TOLERANCE + 1e-9,
            _ => false,
        }
}

const TEXT_SLOTS: [Slot; 4] = [Slot::Reaction, Slot::Solvent, Slot::Bond, Slot::Method];

fn slot_conflict(a: &DataChain, b: &DataChain) -> bool {
    let (mut a, mut b) = (a.clone(), b.clone());
    TEXT_SLOTS.iter().any(|&slot| {
        let x = a.text_slot_mut(slot).expect("text slot").clone();
        let y = b.text_slot_mut(slot).expect("text slot").clone();
        matches!((x, y), (Some(x), Some(y)) if x != y)
    })
}

/// Folds `b` into `a`. On conflicting values a table-derived partner wins
/// over a text-only one; otherwise `a` is kept.
fn combine(a: &mut DataChain, b: DataChain, log: &mut Vec<String>) {
    let b_wins = b.from_table() && !a.from_table();
    if let (Some(x), Some(y)) = (a.pka_value, b.pka_value) {
        if x != y {
            let kept = if b_wins { y } else { x };
            log.push(format!(
                "conflict: {} pka_value {x} vs {y}, kept {kept}",
                a.compound
            ));
            a.pka_value = Some(kept);
        }
    } else if a.pka_value.is_none() {
        a.pka_value = b.pka_value;
    }
    if b_wins {
        a.compound = b.compound.clone();
    }
    for slot in TEXT_SLOTS {
        let theirs = b.clone().text_slot_mut(slot).expect("text slot").clone();
        let mine = a.text_slot_mut(slot).expect("text slot");
        match (mine.as_ref(), theirs) {
            (None, Some(t)) => *mine = Some(t),
            (Some(m), Some(t)) if *m != t => {
                let m = m.clone();
                if b_wins {
                    *mine = Some(t.clone());
                }
                log.push(format!(
                    "conflict: {} {} {m:?} vs {t:?}, kept {:?}",
                    a.compound,
                    slot.name(),
                    if b_wins { &t } else { &m }
                ));
            }
            _ => {}
        }
    }
    for p in b.provenance {
        a.note(p);
    }
}

/// One merge pass; returns whether anything was combined.
fn merge_pass(chains: &mut Vec<DataChain>, log: &mut Vec<String>) -> bool {
    chains.sort_by(cmp_chains);
    let mut changed = false;
    let mut folded: Vec<DataChain> = Vec::with_capacity(chains.len());
    for c in chains.drain(..) {
        match folded.last_mut() {
            Some(last) if same_key(last, &c) => {
                combine(last, c, log);
                changed = true;
            }
            _ => folded.push(c),
        }
    }

    // a chain without a value completes the only valued chain of its
    // compound, unless their slots disagree
    let mut absorbed = vec![false; folded.len()];
    for i in 0..folded.len() {
        if folded[i].pka_value.is_some() {
            continue;
        }
        let name = folded[i].compound.to_lowercase();
        let valued: Vec<usize> = (0..folded.len())
            .filter(|&j| folded[j].pka_value.is_some() && folded[j].compound.to_lowercase() == name)
            .collect();
        if let [j] = valued[..] {
            if !slot_conflict(&folded[i], &folded[j]) {
                let partial = folded[i].clone();
                combine(&mut folded[j], partial, log);
                absorbed[i] = true;
                changed = true;
            }
        }
    }
    *chains = folded
        .into_iter()
        .zip(absorbed)
        .filter(|(_, a)| !a)
        .map(|(c, _)| c)
        .collect();
    chains.sort_by(cmp_chains);
    changed
}

/// Merges text- and table-derived chains of one document. Chains with the
/// same compound (ignoring case) and pKa values within 0.05 become one, sorted
/// by compound and value.
pub fn merge_chains(text_chains: Vec<DataChain>, table_chains: Vec<DataChain>) -> Merged {
    let mut chains: Vec<DataChain> = text_chains.into_iter().chain(table_chains).collect();
    let mut log = Vec::new();
    while merge_pass(&mut chains, &mut log) {}
    Merged { chains, log }
}

/// Globals, text assembly, table extraction and merging for one document.
/// Table chains take the document's globals for slots the table lacks.
pub fn extract_chains(
    doc_id: &str,
    sentences: &[AnnotatedSentence],
    tables: &[TableDoc],
    lexicon: &Lexicon,
) -> Result<(Merged, Vec<String>), PipelineError> {
    let globals = collect_globals(sentences);
    let assembly = assemble_chains(doc_id, sentences, &globals);
    let mut table_chains = Vec::new();
    for t in tables {
        for mut c in extract_table_facts(t, lexicon)? {
            globals.complete(doc_id, &mut c);
            table_chains.push(c);
        }
    }
    Ok((merge_chains(assembly.chains, table_chains), assembly.diagnostics))
}
