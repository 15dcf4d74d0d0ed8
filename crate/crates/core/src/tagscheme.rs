//! Joint `<position, entity, relation>` tags.
//!
//! One label sequence carries both entity boundaries and the single relation
//! each local entity holds towards a pKa mention. Compounds may carry CE,
//! solvents SE and values EE; everything else, and any unrelated local
//! entity, carries NR. Relations are recovered at decode time by pairing each
//! related mention with its nearest pKa mention in the same sentence.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::corpus::{is_legal_pair, span_tags, EntitySpan, EntityType, Relation, Sentence, Token};

/// Decoded mentions share the span representation used for gold annotations.
pub type EntityMention = EntitySpan;

#[derive(Debug, Error, PartialEq)]
pub enum TagError {
    #[error("malformed tag {0:?}")]
    Malformed(String),
    #[error("{entity} cannot carry relation {relation}")]
    IllegalPair { entity: EntityType, relation: Relation },
    #[error("illegal transition {from} -> {to} at position {position}")]
    IllegalSequence {
        position: usize,
        from: String,
        to: String,
    },
    #[error("{tags} tags for {tokens} tokens")]
    LengthMismatch { tags: usize, tokens: usize },
    #[error("invalid span [{start}, {end}) in a sentence of {len} tokens")]
    InvalidSpan { start: usize, end: usize, len: usize },
}

/// Whether malformed sequences are repaired or rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Strictness {
    Strict,
    #[default]
    Lenient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JointTag {
    O,
    Begin(EntityType, Relation),
    Inside(EntityType, Relation),
}

impl JointTag {
    pub fn entity(self) -> Option<EntityType> {
        match self {
            JointTag::O => None,
            JointTag::Begin(e, _) | JointTag::Inside(e, _) => Some(e),
        }
    }

    pub fn relation(self) -> Option<Relation> {
        match self {
            JointTag::O => None,
            JointTag::Begin(_, r) | JointTag::Inside(_, r) => Some(r),
        }
    }

    pub fn is_inside(self) -> bool {
        matches!(self, JointTag::Inside(..))
    }

    /// Same position and entity with a different relation component.
    pub fn with_relation(self, relation: Relation) -> JointTag {
        match self {
            JointTag::O => JointTag::O,
            JointTag::Begin(e, _) => JointTag::Begin(e, relation),
            JointTag::Inside(e, _) => JointTag::Inside(e, relation),
        }
    }

    /// The `B-` form of an `I-` tag.
    pub fn as_begin(self) -> JointTag {
        match self {
            JointTag::Inside(e, r) => JointTag::Begin(e, r),
            other => other,
        }
    }

    /// The `I-` form of a `B-` tag.
    pub fn as_inside(self) -> JointTag {
        match self {
            JointTag::Begin(e, r) => JointTag::Inside(e, r),
            other => other,
        }
    }
}

impl fmt::Display for JointTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JointTag::O => f.write_str("O"),
            JointTag::Begin(e, r) => write!(f, "B-{}-{}", e.code(), r.code()),
            JointTag::Inside(e, r) => write!(f, "I-{}-{}", e.code(), r.code()),
        }
    }
}

impl FromStr for JointTag {
    type Err = TagError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(JointTag::O);
        }
        let malformed = || TagError::Malformed(s.to_string());
        let mut parts = s.split('-');
        let (pos, ent, rel) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(p), Some(e), Some(r), None) => (p, e, r),
            _ => return Err(malformed()),
        };
        let entity = EntityType::from_code(ent).ok_or_else(malformed)?;
        let relation = Relation::from_code(rel).ok_or_else(malformed)?;
        if !is_legal_pair(entity, relation) {
            return Err(TagError::IllegalPair { entity, relation });
        }
        match pos {
            "B" => Ok(JointTag::Begin(entity, relation)),
            "I" => Ok(JointTag::Inside(entity, relation)),
            _ => Err(malformed()),
        }
    }
}

/// All legal joint tags with dense ids; id 0 is `O`.
#[derive(Clone, Debug, PartialEq)]
pub struct TagSet {
    tags: Vec<JointTag>,
    ids: HashMap<JointTag, usize>,
}

/// Entity-relation combinations in tag-id order.
const COMBOS: [(EntityType, Relation); 10] = [
    (EntityType::Compound, Relation::Ce),
    (EntityType::Compound, Relation::Nr),
    (EntityType::Solvent, Relation::Se),
    (EntityType::Solvent, Relation::Nr),
    (EntityType::Value, Relation::Ee),
    (EntityType::Value, Relation::Nr),
    (EntityType::Reaction, Relation::Nr),
    (EntityType::Method, Relation::Nr),
    (EntityType::Bond, Relation::Nr),
    (EntityType::Pka, Relation::Nr),
];

/// The 21-tag inventory: `O`, then `B-` and `I-` for each legal
/// entity-relation combination.
pub fn build_tagset() -> TagSet {
    let mut tags = vec![JointTag::O];
    for (e, r) in COMBOS {
        tags.push(JointTag::Begin(e, r));
        tags.push(JointTag::Inside(e, r));
    }
    TagSet::from_tags(tags).expect("built-in tags are unique")
}

impl TagSet {
    /// Builds a tag set from an explicit ordering, as stored in checkpoints.
    pub fn from_tags(tags: Vec<JointTag>) -> Result<Self, TagError> {
        let mut ids = HashMap::with_capacity(tags.len());
        for (i, &t) in tags.iter().enumerate() {
            if ids.insert(t, i).is_some() {
                return Err(TagError::Malformed(format!("duplicate tag {t}")));
            }
        }
        if tags.first() != Some(&JointTag::O) {
            return Err(TagError::Malformed("tag id 0 must be O".into()));
        }
        Ok(TagSet { tags, ids })
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn id(&self, tag: JointTag) -> Option<usize> {
        self.ids.get(&tag).copied()
    }

    pub fn tag(&self, id: usize) -> Option<JointTag> {
        self.tags.get(id).copied()
    }

    pub fn contains(&self, tag: JointTag) -> bool {
        self.ids.contains_key(&tag)
    }

    pub fn tags(&self) -> &[JointTag] {
        &self.tags
    }

    pub fn ids_of(&self, tags: &[JointTag]) -> Result<Vec<usize>, TagError> {
        tags.iter()
            .map(|&t| self.id(t).ok_or_else(|| TagError::Malformed(t.to_string())))
            .collect()
    }

    pub fn tags_of(&self, ids: &[usize]) -> Vec<JointTag> {
        ids.iter().map(|&i| self.tags[i]).collect()
    }
}

/// BIO encoding of a sentence's gold spans.
pub fn encode(sentence: &Sentence) -> Result<Vec<JointTag>, TagError> {
    let len = sentence.tokens.len();
    let mut spans = sentence.spans.clone();
    spans.sort();
    let mut prev_end = 0;
    for (i, s) in spans.iter().enumerate() {
        if s.start >= s.end || s.end > len || (i > 0 && s.start < prev_end) {
            return Err(TagError::InvalidSpan {
                start: s.start,
                end: s.end,
                len,
            });
        }
        if !is_legal_pair(s.entity, s.relation) {
            return Err(TagError::IllegalPair {
                entity: s.entity,
                relation: s.relation,
            });
        }
        prev_end = s.end;
    }
    Ok(span_tags(sentence))
}

/// Legality of the bigram `prev -> next`, where `None` stands for the START
/// sentinel on the left and the STOP sentinel on the right.
///
/// Only `I-E-R` is ever constrained: it must follow `B-E-R` or `I-E-R` with
/// the identical entity and relation.
pub fn is_legal_transition(prev: Option<JointTag>, next: Option<JointTag>) -> bool {
    match next {
        Some(JointTag::Inside(e, r)) => matches!(
            prev,
            Some(JointTag::Begin(pe, pr)) | Some(JointTag::Inside(pe, pr)) if pe == e && pr == r
        ),
        _ => true,
    }
}

/// Rewrites a sequence into a legal one: every `I-` tag that does not
/// continue a matching span becomes `B-`.
pub fn repair(tags: &[JointTag]) -> Vec<JointTag> {
    let mut out = Vec::with_capacity(tags.len());
    let mut prev = None;
    for &t in tags {
        let fixed = if is_legal_transition(prev, Some(t)) {
            t
        } else {
            t.as_begin()
        };
        out.push(fixed);
        prev = Some(fixed);
    }
    out
}

/// A CE, SE or EE link from a local entity to its pKa anchor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationInstance {
    pub kind: Relation,
    pub subject: EntityMention,
    pub anchor: EntityMention,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Decoded {
    pub mentions: Vec<EntityMention>,
    pub relations: Vec<RelationInstance>,
}

/// Reads mentions and relations back out of a tag sequence.
///
/// Maximal runs of consistent tags become mentions. Each mention whose
/// relation is not NR is paired with the pKa mention whose start is closest
/// to its own start, the leftward one on ties; without any pKa mention the
/// entity is kept and no relation is produced.
pub fn decode(tags: &[JointTag], tokens: &[Token], mode: Strictness) -> Result<Decoded, TagError> {
    if tags.len() != tokens.len() {
        return Err(TagError::LengthMismatch {
            tags: tags.len(),
            tokens: tokens.len(),
        });
    }
    let mentions = decode_mentions(tags, mode)?;
    let relations = pair_relations(&mentions);
    Ok(Decoded {
        mentions,
        relations,
    })
}

fn decode_mentions(tags: &[JointTag], mode: Strictness) -> Result<Vec<EntityMention>, TagError> {
    let mut mentions = Vec::new();
    let mut open: Option<EntityMention> = None;
    let mut prev = None;
    for (i, &tag) in tags.iter().enumerate() {
        if let (Some(e), Some(r)) = (tag.entity(), tag.relation()) {
            if !is_legal_pair(e, r) {
                return Err(TagError::IllegalPair {
                    entity: e,
                    relation: r,
                });
            }
        }
        if mode == Strictness::Strict && !is_legal_transition(prev, Some(tag)) {
            return Err(TagError::IllegalSequence {
                position: i,
                from: prev.map_or("START".to_string(), |t: JointTag| t.to_string()),
                to: tag.to_string(),
            });
        }
        prev = Some(tag);
        match tag {
            JointTag::O => mentions.extend(open.take()),
            JointTag::Inside(e, r) => match open.as_mut() {
                Some(m) if m.entity == e && m.relation == r => m.end = i + 1,
                _ => {
                    mentions.extend(open.take());
                    open = Some(EntitySpan::new(i, i + 1, e, r));
                }
            },
            JointTag::Begin(e, r) => {
                mentions.extend(open.take());
                open = Some(EntitySpan::new(i, i + 1, e, r));
            }
        }
    }
    mentions.extend(open);
    Ok(mentions)
}

/// Nearest-anchor pairing of related mentions with pKa mentions.
pub fn pair_relations(mentions: &[EntityMention]) -> Vec<RelationInstance> {
    let anchors: Vec<&EntityMention> = mentions
        .iter()
        .filter(|m| m.entity == EntityType::Pka)
        .collect();
    mentions
        .iter()
        .filter(|m| m.relation != Relation::Nr)
        .filter_map(|subject| {
            nearest(subject.start, anchors.iter().copied()).map(|anchor| RelationInstance {
                kind: subject.relation,
                subject: *subject,
                anchor: *anchor,
            })
        })
        .collect()
}

/// The candidate whose start is closest to `position`, leftmost on ties.
pub(crate) fn nearest<'a>(
    position: usize,
    candidates: impl IntoIterator<Item = &'a EntityMention>,
) -> Option<&'a EntityMention> {
    candidates
        .into_iter()
        .min_by_key(|c| (c.start.abs_diff(position), c.start))
}

/// A sentence with its tag sequence and what decodes from it.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnotatedSentence {
    pub tokens: Vec<Token>,
    pub tags: Vec<JointTag>,
    pub mentions: Vec<EntityMention>,
    pub relations: Vec<RelationInstance>,
}

impl AnnotatedSentence {
    pub fn from_tags(
        tokens: Vec<Token>,
        tags: Vec<JointTag>,
        mode: Strictness,
    ) -> Result<Self, TagError> {
        let Decoded {
            mentions,
            relations,
        } = decode(&tags, &tokens, mode)?;
        Ok(AnnotatedSentence {
            tokens,
            tags,
            mentions,
            relations,
        })
    }

    /// Gold annotations of a corpus sentence.
    pub fn from_sentence(sentence: &Sentence) -> Result<Self, TagError> {
        let tags = encode(sentence)?;
        Self::from_tags(sentence.tokens.clone(), tags, Strictness::Strict)
    }

    pub fn text_of(&self, mention: &EntityMention) -> String {
        mention.text(&self.tokens)
    }

    /// Back to a corpus sentence carrying the decoded mentions as spans.
    pub fn to_sentence(&self) -> Sentence {
        Sentence {
            tokens: self.tokens.clone(),
            spans: self.mentions.clone(),
        }
    }
}
