use super::{EntityMatch, LexiconError};
use crate::corpus::{EntityType, Token, BOND_MARK, COMPOUND_MARK};
use crate::tagscheme::{repair, JointTag};

/// One collapsed span: masked token `masked_index` stands for original
/// tokens `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MarkAlignment {
    pub masked_index: usize,
    pub start: usize,
    pub end: usize,
    pub entity: EntityType,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaskedSentence {
    pub tokens: Vec<Token>,
    /// Sorted by `masked_index`; one entry per mark token.
    pub alignment: Vec<MarkAlignment>,
    pub originals: Vec<Token>,
}

/// Collapses every compound match to `$CMP$` and every bond match to
/// `$BOND$`. Other entity types in `matches` are rejected.
pub fn mask(tokens: &[Token], matches: &[EntityMatch]) -> Result<MaskedSentence, LexiconError> {
    let mut sorted = matches.to_vec();
    sorted.sort();
    let mut prev_end = 0;
    for m in &sorted {
        if m.start >= m.end || m.end > tokens.len() {
            return Err(LexiconError::Matches(format!(
                "[{}, {}) out of bounds for {} tokens",
                m.start,
                m.end,
                tokens.len()
            )));
        }
        if m.start < prev_end {
            return Err(LexiconError::Matches(format!(
                "[{}, {}) overlaps another match",
                m.start, m.end
            )));
        }
        prev_end = m.end;
    }

    let mut masked = Vec::with_capacity(tokens.len());
    let mut alignment = Vec::with_capacity(sorted.len());
    let mut next = sorted.iter().peekable();
    let mut i = 0;
    while i < tokens.len() {
        match next.peek() {
            Some(m) if m.start == i => {
                let mark = match m.entity {
                    EntityType::Compound => COMPOUND_MARK,
                    EntityType::Bond => BOND_MARK,
                    other => {
                        return Err(LexiconError::Matches(format!(
                            "only compounds and bonds are masked, not {other}"
                        )))
                    }
                };
                alignment.push(MarkAlignment {
                    masked_index: masked.len(),
                    start: m.start,
                    end: m.end,
                    entity: m.entity,
                });
                masked.push(Token::new(mark, masked.len()));
                i = m.end;
                next.next();
            }
            _ => {
                masked.push(Token::new(tokens[i].text.clone(), masked.len()));
                i += 1;
            }
        }
    }
    Ok(MaskedSentence {
        tokens: masked,
        alignment,
        originals: tokens.to_vec(),
    })
}

impl MaskedSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn mark_at(&self, masked_index: usize) -> Option<&MarkAlignment> {
        self.alignment
            .binary_search_by_key(&masked_index, |a| a.masked_index)
            .ok()
            .map(|i| &self.alignment[i])
    }

    /// Original token range covered by each masked token.
    fn original_ranges(&self) -> Vec<(usize, usize)> {
        let mut ranges = Vec::with_capacity(self.tokens.len());
        let mut orig = 0;
        for k in 0..self.tokens.len() {
            let (start, end) = match self.mark_at(k) {
                Some(a) => (a.start, a.end),
                None => (orig, orig + 1),
            };
            ranges.push((start, end));
            orig = end;
        }
        ranges
    }

    /// Projects tags over the masked tokens back onto the original tokens.
    ///
    /// A tag on a mark token applies to the first restored token; the rest
    /// of the restored span continues it with `I-` of the same entity and
    /// relation, or stays `O`.
    pub fn unmask(&self, tags: &[JointTag]) -> Result<(Vec<Token>, Vec<JointTag>), LexiconError> {
        if tags.len() != self.tokens.len() {
            return Err(LexiconError::LengthMismatch {
                tags: tags.len(),
                tokens: self.tokens.len(),
            });
        }
        let mut out = Vec::with_capacity(self.originals.len());
        for (&tag, (start, end)) in tags.iter().zip(self.original_ranges()) {
            out.push(tag);
            out.extend(std::iter::repeat_n(tag.as_inside(), end - start - 1));
        }
        Ok((self.originals.clone(), out))
    }

    /// Carries tags over the original tokens onto the masked tokens: a mark
    /// takes the tag of the first token it covers, and the result is repaired
    /// into a legal sequence.
    pub fn project_tags(&self, original: &[JointTag]) -> Result<Vec<JointTag>, LexiconError> {
        if original.len() != self.originals.len() {
            return Err(LexiconError::LengthMismatch {
                tags: original.len(),
                tokens: self.originals.len(),
            });
        }
        let projected: Vec<JointTag> = self
            .original_ranges()
            .into_iter()
            .map(|(start, _)| original[start])
            .collect();
        Ok(repair(&projected))
    }
}
