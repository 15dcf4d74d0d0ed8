//! Dictionaries and rules for type-1 entities (compounds and chemical bonds).
//!
//! Compound names, molecular formulas, solvents and roots/affixes are plain
//! term lists; bond patterns and indication rules use the token pattern
//! language of [`pattern`]. Matches are leftmost-longest and are collapsed to
//! the `$CMP$` / `$BOND$` marks by [`mask`] before any model sees the text.
//!
//! Files are assigned a role by name:
//!
//! * `compound*` compound names, one per line
//! * `formula*` molecular formulas (always case-sensitive)
//! * `solvent*` solvent names
//! * `affix*` / `root*` roots and affixes such as `-oic` or `naphth-`
//! * `rule*` or `*.rules` rule lines `KIND<TAB>PATTERN<TAB>ENTITY`, or bond
//!   patterns written `BOND: PATTERN`
//!
//! Blank lines and lines starting with `#` are ignored everywhere.

mod elements;
mod mask;
pub mod pattern;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use regex::Regex;
use thiserror::Error;

pub use elements::ELEMENT_SYMBOLS;
pub use mask::{mask, MarkAlignment, MaskedSentence};
use pattern::{RuleBody, SeqPattern};

use crate::corpus::{tokenize, EntityType, Token};

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: {message}")]
    Format { origin: String, message: String },
    #[error("cannot tell the role of lexicon file {0} from its name")]
    UnknownFile(PathBuf),
    #[error("lexicon is empty")]
    Empty,
    #[error("invalid matches: {0}")]
    Matches(String),
    #[error("{tags} tags for {tokens} masked tokens")]
    LengthMismatch { tags: usize, tokens: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleKind {
    /// The target tokens alone match the pattern.
    WordIndication,
    /// The target matches and a context token sits within two positions.
    ContextIndication,
    /// Conjunction of two word or context patterns over the same span.
    Logical,
}

impl FromStr for RuleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "WORD_INDICATION" => Ok(RuleKind::WordIndication),
            "CONTEXT_INDICATION" => Ok(RuleKind::ContextIndication),
            "LOGICAL" => Ok(RuleKind::Logical),
            other => Err(format!("unknown rule kind {other:?}")),
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleKind::WordIndication => "WORD_INDICATION",
            RuleKind::ContextIndication => "CONTEXT_INDICATION",
            RuleKind::Logical => "LOGICAL",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Rule {
    pub kind: RuleKind,
    pub pattern: String,
    pub produces: EntityType,
    body: RuleBody,
}

impl Rule {
    pub fn matches_at(&self, tokens: &[Token], start: usize) -> bool {
        self.body.matches_at(tokens, start)
    }

    pub fn len(&self) -> usize {
        self.body.len()
    }

    pub fn is_empty(&self) -> bool {
        self.body.is_empty()
    }
}

/// A recognised type-1 entity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityMatch {
    pub start: usize,
    pub end: usize,
    pub entity: EntityType,
}

impl EntityMatch {
    pub fn new(start: usize, end: usize, entity: EntityType) -> Self {
        EntityMatch { start, end, entity }
    }
}

/// Built-in bond forms: element, bond symbol, element, optionally followed by
/// the word "bond".
const BUILTIN_BOND_PATTERNS: [&str; 3] = [
    "<ELEM><BONDSYM><ELEM> bonds",
    "<ELEM><BONDSYM><ELEM> bond",
    "<ELEM><BONDSYM><ELEM>",
];

#[derive(Clone, Debug)]
struct BondPattern {
    source: String,
    body: SeqPattern,
}

#[derive(Clone, Debug)]
pub struct Lexicon {
    compound_terms: BTreeSet<String>,
    solvent_terms: BTreeSet<String>,
    affixes: BTreeSet<String>,
    bond_patterns: Vec<BondPattern>,
    builtin_bonds: Vec<SeqPattern>,
    rules: Vec<Rule>,
    exact_terms: HashSet<Vec<String>>,
    folded_terms: HashSet<Vec<String>>,
    folded_solvents: HashSet<String>,
    max_term_len: usize,
}

impl Lexicon {
    pub fn builder() -> LexiconBuilder {
        LexiconBuilder::default()
    }

    /// No terms or rules; only the built-in bond patterns match.
    pub fn empty() -> Lexicon {
        LexiconBuilder::default()
            .finish(true)
            .expect("an empty lexicon always builds")
    }

    pub fn compound_terms(&self) -> &BTreeSet<String> {
        &self.compound_terms
    }

    pub fn solvent_terms(&self) -> &BTreeSet<String> {
        &self.solvent_terms
    }

    pub fn affixes(&self) -> &BTreeSet<String> {
        &self.affixes
    }

    /// User-supplied bond patterns, excluding the built-in element forms.
    pub fn bond_patterns(&self) -> Vec<&str> {
        self.bond_patterns.iter().map(|b| b.source.as_str()).collect()
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn is_solvent(&self, text: &str) -> bool {
        self.folded_solvents.contains(&text.trim().to_lowercase())
    }

    /// Whether `text` as a whole is recognised as a single `entity` match.
    pub fn recognises(&self, text: &str, entity: EntityType) -> bool {
        match tokenize(text) {
            Ok(tokens) if !tokens.is_empty() => {
                let found = self.match_entities(&tokens);
                found.len() == 1
                    && found[0] == EntityMatch::new(0, tokens.len(), entity)
            }
            _ => false,
        }
    }

    fn dictionary_match(&self, tokens: &[Token], folded: &[String], start: usize) -> usize {
        let longest = self.max_term_len.min(tokens.len() - start);
        for len in (1..=longest).rev() {
            let exact: Vec<String> = tokens[start..start + len]
                .iter()
                .map(|t| t.text.clone())
                .collect();
            if self.exact_terms.contains(&exact)
                || self.folded_terms.contains(&folded[start..start + len])
            {
                return len;
            }
        }
        0
    }

    /// Leftmost-longest recognition of compounds and bonds.
    ///
    /// At each position the longest candidate wins; on equal length the
    /// dictionary beats bond patterns, which beat rules in file order.
    /// Returned matches are sorted and disjoint.
    pub fn match_entities(&self, tokens: &[Token]) -> Vec<EntityMatch> {
        let folded: Vec<String> = tokens.iter().map(|t| t.text.to_lowercase()).collect();
        let mut found = Vec::new();
        let mut pos = 0;
        while pos < tokens.len() {
            // (length, priority, entity); lower priority wins ties
            let mut best: Option<(usize, usize, EntityType)> = None;
            let mut offer = |len: usize, priority: usize, entity: EntityType| {
                if len == 0 {
                    return;
                }
                let better = match best {
                    None => true,
                    Some((bl, bp, _)) => len > bl || (len == bl && priority < bp),
                };
                if better {
                    best = Some((len, priority, entity));
                }
            };
            offer(
                self.dictionary_match(tokens, &folded, pos),
                0,
                EntityType::Compound,
            );
            for p in self
                .bond_patterns
                .iter()
                .map(|b| &b.body)
                .chain(&self.builtin_bonds)
            {
                if p.matches_at(tokens, pos) {
                    offer(p.len(), 1, EntityType::Bond);
                }
            }
            for (i, rule) in self.rules.iter().enumerate() {
                if rule.matches_at(tokens, pos) {
                    offer(rule.len(), 2 + i, rule.produces);
                }
            }
            match best {
                Some((len, _, entity)) => {
                    found.push(EntityMatch::new(pos, pos + len, entity));
                    pos += len;
                }
                None => pos += 1,
            }
        }
        found
    }
}

/// Where a term or rule came from, for error messages.
#[derive(Clone, Debug, Default)]
struct Origin(Option<(PathBuf, usize)>);

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Some((path, line)) => write!(f, "{}:{line}", path.display()),
            None => f.write_str("<builder>"),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct LexiconBuilder {
    compounds: Vec<(String, bool, Origin)>,
    solvents: Vec<String>,
    affixes: Vec<String>,
    bonds: Vec<(String, Origin)>,
    rules: Vec<(RuleKind, String, EntityType, Origin)>,
}

impl LexiconBuilder {
    /// Adds a compound name. Single-token molecular formulas match
    /// case-sensitively, every other name case-insensitively.
    pub fn compound(mut self, term: &str) -> Self {
        self.compounds
            .push((term.trim().to_string(), false, Origin::default()));
        self
    }

    /// Adds a term that always matches case-sensitively.
    pub fn formula(mut self, term: &str) -> Self {
        self.compounds
            .push((term.trim().to_string(), true, Origin::default()));
        self
    }

    pub fn solvent(mut self, term: &str) -> Self {
        self.solvents.push(term.trim().to_string());
        self
    }

    pub fn affix(mut self, affix: &str) -> Self {
        self.affixes.push(affix.trim().to_string());
        self
    }

    pub fn bond_pattern(mut self, pattern: &str) -> Self {
        self.bonds.push((pattern.trim().to_string(), Origin::default()));
        self
    }

    pub fn rule(mut self, kind: RuleKind, pattern: &str, produces: EntityType) -> Self {
        self.rules
            .push((kind, pattern.trim().to_string(), produces, Origin::default()));
        self
    }

    fn add_file(&mut self, path: &Path) -> Result<(), LexiconError> {
        let role = FileRole::of(path).ok_or_else(|| LexiconError::UnknownFile(path.into()))?;
        let text = fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.into(),
            source,
        })?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let origin = Origin(Some((path.into(), i + 1)));
            match role {
                FileRole::Compounds => self.compounds.push((line.into(), false, origin)),
                FileRole::Formulas => self.compounds.push((line.into(), true, origin)),
                FileRole::Solvents => self.solvents.push(line.into()),
                FileRole::Affixes => self.affixes.push(line.into()),
                FileRole::Rules => self.add_rule_line(line, origin)?,
            }
        }
        Ok(())
    }

    fn add_rule_line(&mut self, line: &str, origin: Origin) -> Result<(), LexiconError> {
        if let Some(pattern) = line.strip_prefix("BOND:") {
            self.bonds.push((pattern.trim().to_string(), origin));
            return Ok(());
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [kind, pattern, entity] = fields[..] else {
            return Err(LexiconError::Format {
                origin: origin.to_string(),
                message: "expected `KIND<TAB>PATTERN<TAB>ENTITY` or `BOND: PATTERN`".into(),
            });
        };
        let fail = |message: String| LexiconError::Format {
            origin: origin.to_string(),
            message,
        };
        let kind: RuleKind = kind.trim().parse().map_err(fail)?;
        let produces = match entity.trim() {
            "COMPOUND" | "CMP" => EntityType::Compound,
            "BOND" => EntityType::Bond,
            other => return Err(fail(format!("rules produce COMPOUND or BOND, not {other:?}"))),
        };
        self.rules
            .push((kind, pattern.trim().to_string(), produces, origin));
        Ok(())
    }

    pub fn build(self) -> Result<Lexicon, LexiconError> {
        self.finish(false)
    }

    fn finish(self, allow_empty: bool) -> Result<Lexicon, LexiconError> {
        let format_err = |origin: &Origin, message: String| LexiconError::Format {
            origin: origin.to_string(),
            message,
        };
        let affixes: BTreeSet<String> = self.affixes.into_iter().filter(|a| !a.is_empty()).collect();
        let affix_list: Vec<String> = affixes.iter().cloned().collect();
        let formula = Regex::new(&format!("^{}$", elements::formula_fragment()))
            .expect("formula grammar compiles");

        let mut compound_terms = BTreeSet::new();
        let mut exact_terms = HashSet::new();
        let mut folded_terms = HashSet::new();
        let mut max_term_len = 0;
        for (term, case_sensitive, origin) in &self.compounds {
            let tokens = tokenize(term).map_err(|e| format_err(origin, e.to_string()))?;
            if tokens.is_empty() {
                return Err(format_err(origin, "empty term".into()));
            }
            let words: Vec<String> = tokens.into_iter().map(|t| t.text).collect();
            let exact = *case_sensitive || (words.len() == 1 && formula.is_match(&words[0]));
            max_term_len = max_term_len.max(words.len());
            if exact {
                exact_terms.insert(words);
            } else {
                folded_terms.insert(words.iter().map(|w| w.to_lowercase()).collect());
            }
            compound_terms.insert(term.clone());
        }

        let bond_patterns = self
            .bonds
            .iter()
            .map(|(source, origin)| {
                SeqPattern::compile(source, &affix_list)
                    .map(|body| BondPattern {
                        source: source.clone(),
                        body,
                    })
                    .map_err(|m| format_err(origin, m))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let builtin_bonds = BUILTIN_BOND_PATTERNS
            .iter()
            .map(|p| SeqPattern::compile(p, &[]).expect("built-in bond patterns compile"))
            .collect();
        let rules = self
            .rules
            .iter()
            .map(|(kind, pattern, produces, origin)| {
                let body = match kind {
                    RuleKind::WordIndication => RuleBody::compile_word(pattern, &affix_list),
                    RuleKind::ContextIndication => RuleBody::compile_context(pattern, &affix_list),
                    RuleKind::Logical => RuleBody::compile_logical(pattern, &affix_list),
                }
                .map_err(|m| format_err(origin, m))?;
                Ok(Rule {
                    kind: *kind,
                    pattern: pattern.clone(),
                    produces: *produces,
                    body,
                })
            })
            .collect::<Result<Vec<_>, LexiconError>>()?;

        let solvent_terms: BTreeSet<String> =
            self.solvents.into_iter().filter(|s| !s.is_empty()).collect();
        if !allow_empty
            && compound_terms.is_empty()
            && solvent_terms.is_empty()
            && affixes.is_empty()
            && bond_patterns.is_empty()
            && rules.is_empty()
        {
            return Err(LexiconError::Empty);
        }
        let folded_solvents = solvent_terms.iter().map(|s| s.to_lowercase()).collect();
        Ok(Lexicon {
            compound_terms,
            solvent_terms,
            affixes,
            bond_patterns,
            builtin_bonds,
            rules,
            exact_terms,
            folded_terms,
            folded_solvents,
            max_term_len,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FileRole {
    Compounds,
    Formulas,
    Solvents,
    Affixes,
    Rules,
}

impl FileRole {
    fn of(path: &Path) -> Option<Self> {
        let name = path.file_name()?.to_str()?.to_lowercase();
        if name.ends_with(".rules") || name.starts_with("rule") {
            Some(FileRole::Rules)
        } else if name.starts_with("compound") {
            Some(FileRole::Compounds)
        } else if name.starts_with("formula") {
            Some(FileRole::Formulas)
        } else if name.starts_with("solvent") {
            Some(FileRole::Solvents)
        } else if name.starts_with("affix") || name.starts_with("root") {
            Some(FileRole::Affixes)
        } else {
            None
        }
    }
}

/// Loads lexicon files. Directories contribute every non-hidden file they
/// contain, in name order.
pub fn load_lexicon<P: AsRef<Path>>(paths: &[P]) -> Result<Lexicon, LexiconError> {
    let mut builder = LexiconBuilder::default();
    for path in paths {
        let path = path.as_ref();
        let io_err = |source| LexiconError::Io {
            path: path.into(),
            source,
        };
        if fs::metadata(path).map_err(io_err)?.is_dir() {
            let mut files = Vec::new();
            for entry in fs::read_dir(path).map_err(io_err)? {
                let entry = entry.map_err(io_err)?;
                let hidden = entry.file_name().to_string_lossy().starts_with('.');
                if !hidden && entry.path().is_file() {
                    files.push(entry.path());
                }
            }
            files.sort();
            for file in files {
                builder.add_file(&file)?;
            }
        } else {
            builder.add_file(path)?;
        }
    }
    builder.build()
}
