//! Tokenized, annotated documents and the column file format.
//!
//! A corpus is a list of [`Document`]s, each a list of [`Sentence`]s whose
//! gold annotations are token-offset [`EntitySpan`]s. On disk each token is
//! one `token<TAB>tag` line, sentences are separated by blank lines and
//! documents by `-DOCSTART- <id>` lines.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::tagscheme::{JointTag, Strictness};

/// Mark token that replaces a dictionary-matched compound.
pub const COMPOUND_MARK: &str = "$CMP$";
/// Mark token that replaces a rule-matched chemical bond.
pub const BOND_MARK: &str = "$BOND$";

const DOCSTART: &str = "-DOCSTART-";

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("reserved mark token {0:?} found in raw input")]
    ReservedToken(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid span: {0}")]
    InvalidSpan(String),
    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),
}

/// The seven entity types of a bond-energy data chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntityType {
    Compound,
    Solvent,
    Reaction,
    Method,
    Bond,
    Pka,
    Value,
}

impl EntityType {
    /// Corpus-statistics row order.
    pub const ALL: [EntityType; 7] = [
        EntityType::Compound,
        EntityType::Solvent,
        EntityType::Reaction,
        EntityType::Method,
        EntityType::Bond,
        EntityType::Pka,
        EntityType::Value,
    ];

    /// Row order of the per-entity evaluation table.
    pub const REPORT_ORDER: [EntityType; 7] = [
        EntityType::Compound,
        EntityType::Bond,
        EntityType::Method,
        EntityType::Solvent,
        EntityType::Reaction,
        EntityType::Pka,
        EntityType::Value,
    ];

    /// Tag code used inside joint tags.
    pub fn code(self) -> &'static str {
        match self {
            EntityType::Compound => "CMP",
            EntityType::Solvent => "SOL",
            EntityType::Reaction => "REA",
            EntityType::Method => "MET",
            EntityType::Bond => "BOND",
            EntityType::Pka => "PKA",
            EntityType::Value => "VAL",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.code() == code)
    }

    /// Label used in corpus statistics.
    pub fn stats_label(self) -> &'static str {
        match self {
            EntityType::Compound => "Compound",
            EntityType::Solvent => "Solvent",
            EntityType::Reaction => "Reaction",
            EntityType::Method => "Method",
            EntityType::Bond => "Bond",
            EntityType::Pka => "Bond Energy(pKa)",
            EntityType::Value => "Bond Energy value(pKa value)",
        }
    }

    /// Short label used in evaluation reports.
    pub fn report_label(self) -> &'static str {
        match self {
            EntityType::Pka => "pKa",
            EntityType::Value => "pKa value",
            other => other.stats_label(),
        }
    }

    /// The one relation this entity may carry besides NR.
    pub fn relation_kind(self) -> Option<Relation> {
        match self {
            EntityType::Compound => Some(Relation::Ce),
            EntityType::Solvent => Some(Relation::Se),
            EntityType::Value => Some(Relation::Ee),
            _ => None,
        }
    }

    /// Global entities hold for a whole document rather than one sentence.
    pub fn is_global(self) -> bool {
        matches!(
            self,
            EntityType::Bond | EntityType::Reaction | EntityType::Method
        )
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Relation component of a joint tag. Every relation other than NR links a
/// local entity to a pKa mention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    /// compound "attribute" pKa
    Ce,
    /// solvent "measure in" pKa
    Se,
    /// value "the value of" pKa
    Ee,
    Nr,
}

impl Relation {
    pub const ALL: [Relation; 4] = [Relation::Ce, Relation::Se, Relation::Ee, Relation::Nr];
    pub const LINKED: [Relation; 3] = [Relation::Ce, Relation::Se, Relation::Ee];

    pub fn code(self) -> &'static str {
        match self {
            Relation::Ce => "CE",
            Relation::Se => "SE",
            Relation::Ee => "EE",
            Relation::Nr => "NR",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.code() == code)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Whether `relation` may be attached to `entity`.
pub fn is_legal_pair(entity: EntityType, relation: Relation) -> bool {
    relation == Relation::Nr || entity.relation_kind() == Some(relation)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Token {
    pub text: String,
    pub index: usize,
}

impl Token {
    pub fn new(text: impl Into<String>, index: usize) -> Self {
        Token {
            text: text.into(),
            index,
        }
    }
}

/// Builds a token list from words, numbering them from zero.
pub fn tokens_from<S: AsRef<str>>(words: &[S]) -> Vec<Token> {
    words
        .iter()
        .enumerate()
        .map(|(i, w)| Token::new(w.as_ref(), i))
        .collect()
}

/// Half-open token range `[start, end)` labelled with an entity and relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub entity: EntityType,
    pub relation: Relation,
}

impl EntitySpan {
    pub fn new(start: usize, end: usize, entity: EntityType, relation: Relation) -> Self {
        EntitySpan {
            start,
            end,
            entity,
            relation,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// Surface text of the span, tokens joined by single spaces.
    pub fn text(&self, tokens: &[Token]) -> String {
        join_tokens(&tokens[self.start..self.end])
    }
}

pub fn join_tokens(tokens: &[Token]) -> String {
    tokens
        .iter()
        .map(|t| t.text.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    /// Sorted by start, pairwise disjoint.
    pub spans: Vec<EntitySpan>,
}

impl Sentence {
    /// Validates span bounds, disjointness and entity/relation legality.
    /// Spans are sorted by start.
    pub fn new(tokens: Vec<Token>, mut spans: Vec<EntitySpan>) -> Result<Self, CorpusError> {
        spans.sort();
        validate_spans(tokens.len(), &spans)?;
        Ok(Sentence { tokens, spans })
    }

    pub fn unannotated(tokens: Vec<Token>) -> Self {
        Sentence {
            tokens,
            spans: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Checks sorted spans against a sentence of `len` tokens.
pub fn validate_spans(len: usize, spans: &[EntitySpan]) -> Result<(), CorpusError> {
    let mut prev_end = 0;
    for (i, s) in spans.iter().enumerate() {
        if s.start >= s.end || s.end > len {
            return Err(CorpusError::InvalidSpan(format!(
                "[{}, {}) out of bounds for {len} tokens",
                s.start, s.end
            )));
        }
        if i > 0 && s.start < prev_end {
            return Err(CorpusError::InvalidSpan(format!(
                "[{}, {}) overlaps the previous span",
                s.start, s.end
            )));
        }
        if !is_legal_pair(s.entity, s.relation) {
            return Err(CorpusError::InvalidSpan(format!(
                "{} cannot carry relation {}",
                s.entity, s.relation
            )));
        }
        prev_end = s.end;
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<Sentence>,
}

impl Document {
    pub fn new(id: impl Into<String>, sentences: Vec<Sentence>) -> Self {
        Document {
            id: id.into(),
            sentences,
        }
    }
}

// --- tokenization ---------------------------------------------------------

fn is_trailing_punct(c: char) -> bool {
    matches!(c, '.' | ',' | ';' | ':')
}

fn closing_for(open: char) -> Option<char> {
    match open {
        '(' => Some(')'),
        '[' => Some(']'),
        '{' => Some('}'),
        _ => None,
    }
}

fn opening_for(close: char) -> Option<char> {
    match close {
        ')' => Some('('),
        ']' => Some('['),
        '}' => Some('{'),
        _ => None,
    }
}

/// Index of the bracket matching the opener at `chars[0]`.
fn match_forward(chars: &[char]) -> Option<usize> {
    let open = chars[0];
    let close = closing_for(open)?;
    let mut depth = 0usize;
    for (i, &c) in chars.iter().enumerate() {
        if c == open {
            depth += 1;
        } else if c == close {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

/// Index of the bracket matching the closer at the last position.
fn match_backward(chars: &[char]) -> Option<usize> {
    let close = *chars.last()?;
    let open = opening_for(close)?;
    let mut depth = 0usize;
    for (i, &c) in chars.iter().enumerate().rev() {
        if c == close {
            depth += 1;
        } else if c == open {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

fn split_chunk(chunk: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = chunk.chars().collect();
    let (mut lo, mut hi) = (0, chars.len());
    let mut prefix = Vec::new();
    let mut suffix = Vec::new();
    while hi - lo > 1 {
        let (first, last) = (chars[lo], chars[hi - 1]);
        if is_trailing_punct(last) {
            suffix.push(last);
            hi -= 1;
        } else if opening_for(last).is_some() {
            match match_backward(&chars[lo..hi]) {
                // wrapping pair: "(DMSO)"
                Some(0) => {
                    prefix.push(first);
                    suffix.push(last);
                    lo += 1;
                    hi -= 1;
                }
                None => {
                    suffix.push(last);
                    hi -= 1;
                }
                // "Fe(III)" keeps its brackets
                Some(_) => break,
            }
        } else if closing_for(first).is_some() && match_forward(&chars[lo..hi]).is_none() {
            prefix.push(first);
            lo += 1;
        } else {
            break;
        }
    }
    out.extend(prefix.into_iter().map(String::from));
    if lo < hi {
        out.push(chars[lo..hi].iter().collect());
    }
    out.extend(suffix.into_iter().rev().map(String::from));
}

/// Splits a single sentence into tokens.
///
/// Whitespace separates chunks; trailing `. , ; :` and unbalanced or
/// wrapping brackets are detached. Hyphens, digits, interior commas and
/// interior brackets stay in place, so names such as
/// `1,8-Dihydroxy-4-naphthoic` survive as one token.
pub fn tokenize(raw: &str) -> Result<Vec<Token>, CorpusError> {
    let mut words = Vec::new();
    for chunk in raw.split_whitespace() {
        split_chunk(chunk, &mut words);
    }
    if let Some(bad) = words
        .iter()
        .find(|w| w.as_str() == COMPOUND_MARK || w.as_str() == BOND_MARK)
    {
        return Err(CorpusError::ReservedToken(bad.clone()));
    }
    Ok(tokens_from(&words))
}

// --- column format --------------------------------------------------------

/// Parses the column format into documents.
///
/// In [`Strictness::Strict`] mode an `I-` tag that does not continue a span
/// of identical entity and relation is an error; in lenient mode it starts a
/// new span.
pub fn parse_column_file(text: &str, mode: Strictness) -> Result<Vec<Document>, CorpusError> {
    let mut docs: Vec<Document> = Vec::new();
    let mut seen_ids = HashSet::new();
    let mut current: Option<Document> = None;
    let mut builder = SentenceBuilder::default();

    for (lineno, raw_line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw_line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if let Some(doc) = current.as_mut() {
                builder.flush(doc);
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix(DOCSTART) {
            if let Some(doc) = current.as_mut() {
                builder.flush(doc);
            }
            if let Some(doc) = current.take() {
                docs.push(doc);
            }
            let id = rest.trim();
            let id = if id.is_empty() {
                implicit_doc(&docs).id
            } else {
                id.to_string()
            };
            if !seen_ids.insert(id.clone()) {
                return Err(CorpusError::Parse {
                    line: line_no,
                    message: format!("duplicate document id {id:?}"),
                });
            }
            current = Some(Document::new(id, Vec::new()));
            continue;
        }
        let mut fields = line.split('\t');
        let (token, tag) = match (fields.next(), fields.next(), fields.next()) {
            (Some(tok), Some(tag), None) if !tok.is_empty() => (tok, tag),
            _ => {
                return Err(CorpusError::Parse {
                    line: line_no,
                    message: format!("expected `token<TAB>tag`, found {line:?}"),
                })
            }
        };
        let tag: JointTag = tag.parse().map_err(|e| CorpusError::Parse {
            line: line_no,
            message: format!("{e}"),
        })?;
        if current.is_none() {
            let doc = implicit_doc(&docs);
            seen_ids.insert(doc.id.clone());
            current = Some(doc);
        }
        builder
            .push(token, tag, mode)
            .map_err(|message| CorpusError::Parse {
                line: line_no,
                message,
            })?;
    }
    if let Some(mut doc) = current.take() {
        builder.flush(&mut doc);
        docs.push(doc);
    }
    Ok(docs)
}

fn implicit_doc(docs: &[Document]) -> Document {
    Document::new(format!("doc{}", docs.len() + 1), Vec::new())
}

#[derive(Default)]
struct SentenceBuilder {
    tokens: Vec<Token>,
    spans: Vec<EntitySpan>,
    open: Option<EntitySpan>,
}

impl SentenceBuilder {
    fn push(&mut self, text: &str, tag: JointTag, mode: Strictness) -> Result<(), String> {
        let i = self.tokens.len();
        self.tokens.push(Token::new(text, i));
        match tag {
            JointTag::O => self.close(),
            JointTag::Begin(entity, relation) => {
                self.close();
                self.open = Some(EntitySpan::new(i, i + 1, entity, relation));
            }
            JointTag::Inside(entity, relation) => match self.open.as_mut() {
                Some(span) if span.entity == entity && span.relation == relation => {
                    span.end = i + 1;
                }
                _ if mode == Strictness::Strict => {
                    return Err(format!("{tag} does not continue a matching B- tag"));
                }
                _ => {
                    self.close();
                    self.open = Some(EntitySpan::new(i, i + 1, entity, relation));
                }
            },
        }
        Ok(())
    }

    fn close(&mut self) {
        if let Some(span) = self.open.take() {
            self.spans.push(span);
        }
    }

    fn flush(&mut self, doc: &mut Document) {
        self.close();
        if !self.tokens.is_empty() {
            doc.sentences.push(Sentence {
                tokens: std::mem::take(&mut self.tokens),
                spans: std::mem::take(&mut self.spans),
            });
        }
    }
}

/// BIO tags of a sentence computed without validation.
pub(crate) fn span_tags(sentence: &Sentence) -> Vec<JointTag> {
    let mut tags = vec![JointTag::O; sentence.tokens.len()];
    for span in &sentence.spans {
        for (k, tag) in tags[span.start..span.end].iter_mut().enumerate() {
            *tag = if k == 0 {
                JointTag::Begin(span.entity, span.relation)
            } else {
                JointTag::Inside(span.entity, span.relation)
            };
        }
    }
    tags
}

/// Renders documents in the column format. Sentences without tokens are not
/// representable and are skipped.
pub fn write_column_file(docs: &[Document]) -> String {
    let mut out = String::new();
    for doc in docs {
        out.push_str(DOCSTART);
        out.push(' ');
        out.push_str(&doc.id);
        out.push('\n');
        for sentence in doc.sentences.iter().filter(|s| !s.is_empty()) {
            for (token, tag) in sentence.tokens.iter().zip(span_tags(sentence)) {
                out.push_str(&token.text);
                out.push('\t');
                out.push_str(&tag.to_string());
                out.push('\n');
            }
            out.push('\n');
        }
    }
    out
}

// --- statistics -----------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct StatsReport {
    pub mentions: BTreeMap<EntityType, usize>,
    pub tokens: usize,
    pub sentences: usize,
    pub documents: usize,
}

impl StatsReport {
    pub fn count(&self, entity: EntityType) -> usize {
        self.mentions.get(&entity).copied().unwrap_or(0)
    }

    pub fn total_mentions(&self) -> usize {
        self.mentions.values().sum()
    }
}

impl fmt::Display for StatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Entity Type\tTotal Num")?;
        for entity in EntityType::ALL {
            writeln!(f, "{}\t{}", entity.stats_label(), self.count(entity))?;
        }
        writeln!(f, "Documents\t{}", self.documents)?;
        writeln!(f, "Sentences\t{}", self.sentences)?;
        writeln!(f, "Tokens\t{}", self.tokens)
    }
}

pub fn corpus_stats(docs: &[Document]) -> StatsReport {
    let mut mentions: BTreeMap<EntityType, usize> =
        EntityType::ALL.into_iter().map(|e| (e, 0)).collect();
    let mut tokens = 0;
    let mut sentences = 0;
    for sentence in docs.iter().flat_map(|d| &d.sentences) {
        sentences += 1;
        tokens += sentence.tokens.len();
        for span in &sentence.spans {
            *mentions.entry(span.entity).or_default() += 1;
        }
    }
    StatsReport {
        mentions,
        tokens,
        sentences,
        documents: docs.len(),
    }
}

// --- splits ---------------------------------------------------------------

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Split {
    pub train: Vec<Document>,
    pub dev: Vec<Document>,
    pub test: Vec<Document>,
}

/// Deterministic document-level train/dev/test partition.
///
/// Documents are shuffled with a ChaCha8 generator seeded by `seed`; the
/// train and dev sizes are `round(n * ratio)` and the test split takes the
/// remainder. Each split keeps the input order of its documents.
pub fn split_corpus(
    docs: Vec<Document>,
    ratios: [f64; 3],
    seed: u64,
) -> Result<Split, CorpusError> {
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(CorpusError::InvalidRatios(format!(
            "{ratios:?} must be non-negative"
        )));
    }
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(CorpusError::InvalidRatios(format!(
            "{ratios:?} sum to {sum}, not 1"
        )));
    }
    let n = docs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let n_train = ((n as f64) * ratios[0]).round().min(n as f64) as usize;
    let n_dev = (((n as f64) * ratios[1]).round() as usize).min(n - n_train);
    let mut assignment = vec![2u8; n];
    for &i in &order[..n_train] {
        assignment[i] = 0;
    }
    for &i in &order[n_train..n_train + n_dev] {
        assignment[i] = 1;
    }

    let mut split = Split::default();
    for (doc, which) in docs.into_iter().zip(assignment) {
        match which {
            0 => split.train.push(doc),
            1 => split.dev.push(doc),
            _ => split.test.push(doc),
        }
    }
    Ok(split)
}
