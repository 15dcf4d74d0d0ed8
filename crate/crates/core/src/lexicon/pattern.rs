//! Token-level pattern language for bond patterns and indication rules.
//!
//! A pattern is a whitespace-separated sequence of token patterns. Each token
//! pattern mixes literal text (matched case-insensitively) with placeholders:
//!
//! | placeholder | matches |
//! |---|---|
//! | `<ELEM>` | one of the 118 element symbols (case-sensitive) |
//! | `<BONDSYM>` | `-`, `=` or `≡` |
//! | `<NUM>` | an optionally signed decimal number |
//! | `<WORD>` | a run of letters |
//! | `<CAP>` | a capitalised word |
//! | `<FORMULA>` | a molecular formula such as `CH3OH` |
//! | `<AFFIX>` | a token carrying one of the lexicon's roots or affixes |
//! | `<ANY>` | any token |
//!
//! `TARGET @ CONTEXT` requires the single token pattern `CONTEXT` to match
//! within two tokens on either side of the target, and `A && B` requires both
//! sides to match the same span.

use regex::Regex;

use super::elements::{element_alternation, formula_fragment};
use crate::corpus::Token;

/// How far a context pattern may sit from its target.
pub const CONTEXT_WINDOW: usize = 2;

#[derive(Clone, Debug)]
pub struct TokenPattern {
    regex: Regex,
}

impl TokenPattern {
    pub fn compile(source: &str, affixes: &[String]) -> Result<Self, String> {
        let mut re = String::from("^(?:");
        let mut rest = source;
        while !rest.is_empty() {
            match rest.find('<') {
                Some(open) => {
                    push_literal(&mut re, &rest[..open]);
                    let after = &rest[open..];
                    match after.find('>') {
                        Some(close) => {
                            let name = &after[1..close];
                            re.push_str(&placeholder(name, affixes)?);
                            rest = &after[close + 1..];
                        }
                        None => {
                            push_literal(&mut re, after);
                            rest = "";
                        }
                    }
                }
                None => {
                    push_literal(&mut re, rest);
                    rest = "";
                }
            }
        }
        re.push_str(")$");
        let regex = Regex::new(&re).map_err(|e| format!("cannot compile {source:?}: {e}"))?;
        Ok(TokenPattern { regex })
    }

    pub fn is_match(&self, token: &str) -> bool {
        self.regex.is_match(token)
    }
}

fn push_literal(re: &mut String, literal: &str) {
    if !literal.is_empty() {
        re.push_str("(?i:");
        re.push_str(&regex::escape(literal));
        re.push(')');
    }
}

fn placeholder(name: &str, affixes: &[String]) -> Result<String, String> {
    Ok(match name {
        "ELEM" => element_alternation(),
        "BONDSYM" => "[-=≡]".to_string(),
        "NUM" => r"[-+−]?[0-9]+(?:\.[0-9]+)?".to_string(),
        "WORD" => r"\p{L}+".to_string(),
        "CAP" => r"\p{Lu}\p{Ll}*".to_string(),
        "FORMULA" => formula_fragment(),
        "AFFIX" => affix_fragment(affixes),
        "ANY" => r"\S+".to_string(),
        other => return Err(format!("unknown placeholder <{other}>")),
    })
}

/// `-oic` is a suffix, `naphth-` a prefix of some hyphen-separated segment,
/// and a bare root may occur anywhere.
fn affix_fragment(affixes: &[String]) -> String {
    let alternatives: Vec<String> = affixes
        .iter()
        .filter_map(|a| {
            let suffix = a.strip_prefix('-');
            let prefix = a.strip_suffix('-');
            match (suffix, prefix) {
                (Some(s), _) if !s.is_empty() && !s.ends_with('-') => {
                    Some(format!(".*{}", regex::escape(s)))
                }
                (None, Some(p)) if !p.is_empty() => {
                    Some(format!("(?:.*-)?{}.*", regex::escape(p)))
                }
                _ => {
                    let root = a.trim_matches('-');
                    (!root.is_empty()).then(|| format!(".*{}.*", regex::escape(root)))
                }
            }
        })
        .collect();
    if alternatives.is_empty() {
        // never matches
        r"\b\B".to_string()
    } else {
        format!("(?i:{})", alternatives.join("|"))
    }
}

/// A fixed-length sequence of token patterns.
#[derive(Clone, Debug)]
pub struct SeqPattern {
    parts: Vec<TokenPattern>,
}

impl SeqPattern {
    pub fn compile(source: &str, affixes: &[String]) -> Result<Self, String> {
        let parts = source
            .split_whitespace()
            .map(|p| TokenPattern::compile(p, affixes))
            .collect::<Result<Vec<_>, _>>()?;
        if parts.is_empty() {
            return Err("empty pattern".to_string());
        }
        Ok(SeqPattern { parts })
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Whether the pattern matches `tokens[start..start + len]`.
    pub fn matches_at(&self, tokens: &[Token], start: usize) -> bool {
        start + self.parts.len() <= tokens.len()
            && self
                .parts
                .iter()
                .zip(&tokens[start..])
                .all(|(p, t)| p.is_match(&t.text))
    }
}

#[derive(Clone, Debug)]
pub enum RuleBody {
    Word(SeqPattern),
    Context {
        target: SeqPattern,
        context: TokenPattern,
    },
    Logical(Box<RuleBody>, Box<RuleBody>),
}

impl RuleBody {
    pub fn compile_word(source: &str, affixes: &[String]) -> Result<Self, String> {
        if source.contains('@') || source.contains("&&") {
            return Err("word indication patterns take no `@` or `&&`".to_string());
        }
        Ok(RuleBody::Word(SeqPattern::compile(source, affixes)?))
    }

    pub fn compile_context(source: &str, affixes: &[String]) -> Result<Self, String> {
        let (target, context) = source
            .split_once('@')
            .ok_or_else(|| "context indication needs `TARGET @ CONTEXT`".to_string())?;
        let context = context.trim();
        if context.split_whitespace().count() != 1 {
            return Err("context must be a single token pattern".to_string());
        }
        Ok(RuleBody::Context {
            target: SeqPattern::compile(target, affixes)?,
            context: TokenPattern::compile(context, affixes)?,
        })
    }

    pub fn compile_logical(source: &str, affixes: &[String]) -> Result<Self, String> {
        let (a, b) = source
            .split_once("&&")
            .ok_or_else(|| "logical rule needs `A && B`".to_string())?;
        let side = |s: &str| {
            if s.contains('@') {
                Self::compile_context(s, affixes)
            } else {
                Self::compile_word(s, affixes)
            }
        };
        let (a, b) = (side(a)?, side(b)?);
        if a.len() != b.len() {
            return Err("both sides of a logical rule must cover the same tokens".to_string());
        }
        Ok(RuleBody::Logical(Box::new(a), Box::new(b)))
    }

    /// Number of tokens a match covers.
    pub fn len(&self) -> usize {
        match self {
            RuleBody::Word(p) => p.len(),
            RuleBody::Context { target, .. } => target.len(),
            RuleBody::Logical(a, _) => a.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn matches_at(&self, tokens: &[Token], start: usize) -> bool {
        match self {
            RuleBody::Word(p) => p.matches_at(tokens, start),
            RuleBody::Context { target, context } => {
                if !target.matches_at(tokens, start) {
                    return false;
                }
                let end = start + target.len();
                let left = start.saturating_sub(CONTEXT_WINDOW)..start;
                let right = end..(end + CONTEXT_WINDOW).min(tokens.len());
                left.chain(right).any(|i| context.is_match(&tokens[i].text))
            }
            RuleBody::Logical(a, b) => a.matches_at(tokens, start) && b.matches_at(tokens, start),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokens_from;

    #[test]
    fn bond_pattern() {
        let p = SeqPattern::compile("<ELEM><BONDSYM><ELEM> bond", &[]).unwrap();
        assert!(p.matches_at(&tokens_from(&["O-H", "bond"]), 0));
        assert!(p.matches_at(&tokens_from(&["C=O", "Bond"]), 0));
        assert!(p.matches_at(&tokens_from(&["C≡N", "bond"]), 0));
        assert!(!p.matches_at(&tokens_from(&["o-h", "bond"]), 0));
        assert!(!p.matches_at(&tokens_from(&["Xq-H", "bond"]), 0));
        assert!(!p.matches_at(&tokens_from(&["O-H"]), 0));
    }

    #[test]
    fn affixes() {
        let affixes = vec!["-oic".to_string(), "naphth-".to_string(), "phen".to_string()];
        let p = TokenPattern::compile("<AFFIX>", &affixes).unwrap();
        assert!(p.is_match("benzoic"));
        assert!(p.is_match("Naphthalene"));
        assert!(p.is_match("2-naphthol"));
        assert!(p.is_match("biphenyl"));
        assert!(!p.is_match("benzoate"));
        let none = TokenPattern::compile("<AFFIX>", &[]).unwrap();
        assert!(!none.is_match("benzoic"));
    }

    #[test]
    fn context_rule_window() {
        let rule = RuleBody::compile_context("<CAP> @ pKa", &[]).unwrap();
        let toks = tokens_from(&["Indole", "has", "a", "pKa"]);
        assert!(!rule.matches_at(&toks, 0), "pKa is three tokens away");
        let toks = tokens_from(&["the", "pKa", "of", "Indole"]);
        assert!(rule.matches_at(&toks, 3));
    }

    #[test]
    fn logical_rule() {
        let rule = RuleBody::compile_logical("<FORMULA> && <ANY> @ in", &[]).unwrap();
        assert!(rule.matches_at(&tokens_from(&["CH3OH", "in", "x"]), 0));
        assert!(!rule.matches_at(&tokens_from(&["CH3OH", "at", "x"]), 0));
        assert!(!rule.matches_at(&tokens_from(&["dmso", "in", "x"]), 0));
        assert!(RuleBody::compile_logical("<ANY> <ANY> && <ANY>", &[]).is_err());
    }

    #[test]
    fn compile_errors() {
        assert!(TokenPattern::compile("<NOPE>", &[]).is_err());
        assert!(RuleBody::compile_word("", &[]).is_err());
        assert!(RuleBody::compile_context("<ANY>", &[]).is_err());
        assert!(RuleBody::compile_context("<ANY> @ a b", &[]).is_err());
    }
}
