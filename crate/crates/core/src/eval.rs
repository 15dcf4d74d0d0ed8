//! Strict exact-span precision, recall and F1 for entities and relations.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::corpus::{EntityType, Relation};
use crate::tagscheme::{AnnotatedSentence, EntityMention, RelationInstance};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("gold has {gold} sentences but prediction has {pred}")]
    SentenceCount { gold: usize, pred: usize },
    #[error("sentence {index}: gold has {gold} tokens but prediction has {pred}")]
    TokenCount {
        index: usize,
        gold: usize,
        pred: usize,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Prf {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Prf {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    /// Whether the type occurs at all in gold or prediction.
    pub fn is_empty(&self) -> bool {
        self.tp + self.fp + self.fn_ == 0
    }

    fn add(&mut self, other: Prf) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

/// Per-type scores in report order.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeScores<T> {
    pub rows: Vec<(T, Prf)>,
}

impl<T: Copy + PartialEq> TypeScores<T> {
    pub fn get(&self, key: T) -> Prf {
        self.rows
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, p)| *p)
            .unwrap_or_default()
    }

    pub fn micro(&self) -> Prf {
        let mut total = Prf::default();
        for (_, p) in &self.rows {
            total.add(*p);
        }
        total
    }

    /// Mean F1 over types present in gold or prediction.
    pub fn macro_f1(&self) -> f64 {
        let present: Vec<f64> = self
            .rows
            .iter()
            .filter(|(_, p)| !p.is_empty())
            .map(|(_, p)| p.f1())
            .collect();
        if present.is_empty() {
            0.0
        } else {
            present.iter().sum::<f64>() / present.len() as f64
        }
    }
}

/// Counts multiset matches between keyed gold and predicted items of one
/// sentence, accumulating into per-type counts.
fn tally<K: Ord + Clone, T: Ord>(
    gold: impl IntoIterator<Item = (T, K)>,
    pred: impl IntoIterator<Item = (T, K)>,
    counts: &mut BTreeMap<T, Prf>,
) {
    let mut remaining: BTreeMap<(T, K), usize> = BTreeMap::new();
    for g in gold {
        *remaining.entry(g).or_default() += 1;
    }
    for p in pred {
        match remaining.get_mut(&p) {
            Some(n) if *n > 0 => {
                *n -= 1;
                counts.entry(p.0).or_default().tp += 1;
            }
            _ => counts.entry(p.0).or_default().fp += 1,
        }
    }
    for ((t, _), n) in remaining {
        counts.entry(t).or_default().fn_ += n;
    }
}

fn ordered<T: Copy + Ord>(order: &[T], counts: BTreeMap<T, Prf>) -> TypeScores<T> {
    TypeScores {
        rows: order
            .iter()
            .map(|&t| (t, counts.get(&t).copied().unwrap_or_default()))
            .collect(),
    }
}

/// Entity scores: a prediction counts iff its span and entity type equal a
/// gold mention's. The relation component is ignored.
pub fn entity_prf(gold: &[Vec<EntityMention>], pred: &[Vec<EntityMention>]) -> TypeScores<EntityType> {
    let mut counts = BTreeMap::new();
    let key = |m: &EntityMention| (m.entity, (m.start, m.end));
    for (g, p) in gold.iter().zip(pred) {
        tally(g.iter().map(key), p.iter().map(key), &mut counts);
    }
    ordered(&EntityType::REPORT_ORDER, counts)
}

/// Relation scores: kind, subject span and type, and anchor span must all
/// agree.
pub fn relation_prf(
    gold: &[Vec<RelationInstance>],
    pred: &[Vec<RelationInstance>],
) -> TypeScores<Relation> {
    let mut counts = BTreeMap::new();
    let key = |r: &RelationInstance| {
        (
            r.kind,
            (
                r.subject.start,
                r.subject.end,
                r.subject.entity,
                r.anchor.start,
                r.anchor.end,
            ),
        )
    };
    for (g, p) in gold.iter().zip(pred) {
        tally(g.iter().map(key), p.iter().map(key), &mut counts);
    }
    ordered(&Relation::LINKED, counts)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub entities: TypeScores<EntityType>,
    pub relations: TypeScores<Relation>,
}

/// Scores aligned gold and predicted sentences.
pub fn evaluate(gold: &[AnnotatedSentence], pred: &[AnnotatedSentence]) -> Result<EvalReport, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::SentenceCount {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    for (index, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.tokens.len() != p.tokens.len() {
            return Err(EvalError::TokenCount {
                index,
                gold: g.tokens.len(),
                pred: p.tokens.len(),
            });
        }
    }
    let mentions = |s: &[AnnotatedSentence]| s.iter().map(|a| a.mentions.clone()).collect::<Vec<_>>();
    let relations = |s: &[AnnotatedSentence]| s.iter().map(|a| a.relations.clone()).collect::<Vec<_>>();
    Ok(EvalReport {
        entities: entity_prf(&mentions(gold), &mentions(pred)),
        relations: relation_prf(&relations(gold), &relations(pred)),
    })
}

fn pct(v: f64) -> String {
    format!("{:.2}%", 100.0 * v)
}

fn push_row(out: &mut String, label: &str, p: &Prf) {
    let _ = writeln!(
        out,
        "{label:<12} {:>9} {:>9} {:>9} {:>6} {:>6} {:>6}",
        pct(p.precision()),
        pct(p.recall()),
        pct(p.f1()),
        p.tp,
        p.fp,
        p.fn_
    );
}

fn push_section<T: Copy + PartialEq>(
    out: &mut String,
    title: &str,
    scores: &TypeScores<T>,
    label: impl Fn(T) -> &'static str,
) {
    let _ = writeln!(
        out,
        "{title:<12} {:>9} {:>9} {:>9} {:>6} {:>6} {:>6}",
        "P", "R", "F1", "TP", "FP", "FN"
    );
    for (t, p) in &scores.rows {
        push_row(out, label(*t), p);
    }
    push_row(out, "micro", &scores.micro());
    let _ = writeln!(out, "{:<12} {:>29}", "macro F1", pct(scores.macro_f1()));
}

/// Plain-text table: entity rows, then relation rows CE, SE, EE, each
/// section closed by its micro and macro averages.
pub fn render_report(report: &EvalReport) -> String {
    let mut out = String::new();
    push_section(&mut out, "Entity", &report.entities, EntityType::report_label);
    out.push('\n');
    push_section(&mut out, "Relation", &report.relations, Relation::code);
    out
}

/// Machine-readable `key=value` lines.
pub fn render_summary(report: &EvalReport) -> String {
    let mut out = String::new();
    let mut section = |prefix: &str, rows: Vec<(String, Prf)>, macro_f1: f64| {
        for (name, p) in rows {
            let _ = writeln!(out, "{prefix}.{name}.tp={}", p.tp);
            let _ = writeln!(out, "{prefix}.{name}.fp={}", p.fp);
            let _ = writeln!(out, "{prefix}.{name}.fn={}", p.fn_);
            let _ = writeln!(out, "{prefix}.{name}.precision={:.6}", p.precision());
            let _ = writeln!(out, "{prefix}.{name}.recall={:.6}", p.recall());
            let _ = writeln!(out, "{prefix}.{name}.f1={:.6}", p.f1());
        }
        let _ = writeln!(out, "{prefix}.macro.f1={macro_f1:.6}");
    };
    let mut ent: Vec<(String, Prf)> = report
        .entities
        .rows
        .iter()
        .map(|(e, p)| (e.code().to_string(), *p))
        .collect();
    ent.push(("micro".into(), report.entities.micro()));
    section("entity", ent, report.entities.macro_f1());
    let mut rel: Vec<(String, Prf)> = report
        .relations
        .rows
        .iter()
        .map(|(r, p)| (r.code().to_string(), *p))
        .collect();
    rel.push(("micro".into(), report.relations.micro()));
    section("relation", rel, report.relations.macro_f1());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::EntitySpan;
    use crate::tagscheme::pair_relations;

    fn span(s: usize, e: usize, t: EntityType, r: Relation) -> EntitySpan {
        EntitySpan::new(s, e, t, r)
    }

    #[test]
    fn prf_arithmetic() {
        let p = Prf { tp: 2, fp: 1, fn_: 1 };
        assert_eq!(pct(p.precision()), "66.67%");
        assert_eq!(pct(p.f1()), "66.67%");
        let z = Prf::default();
        assert_eq!((z.precision(), z.recall(), z.f1()), (0.0, 0.0, 0.0));
    }

    #[test]
    fn relation_component_ignored_for_entities() {
        let gold = vec![vec![span(0, 1, EntityType::Compound, Relation::Ce)]];
        let pred = vec![vec![span(0, 1, EntityType::Compound, Relation::Nr)]];
        let s = entity_prf(&gold, &pred);
        assert_eq!(s.get(EntityType::Compound), Prf { tp: 1, fp: 0, fn_: 0 });
    }

    #[test]
    fn off_by_one_is_fp_and_fn() {
        let gold = vec![vec![span(0, 2, EntityType::Solvent, Relation::Nr)]];
        let pred = vec![vec![span(0, 1, EntityType::Solvent, Relation::Nr)]];
        assert_eq!(entity_prf(&gold, &pred).get(EntityType::Solvent), Prf { tp: 0, fp: 1, fn_: 1 });
    }

    #[test]
    fn wrong_anchor() {
        let cmp = span(0, 1, EntityType::Compound, Relation::Ce);
        let a1 = span(2, 3, EntityType::Pka, Relation::Nr);
        let a2 = span(5, 6, EntityType::Pka, Relation::Nr);
        let gold = vec![vec![RelationInstance { kind: Relation::Ce, subject: cmp, anchor: a1 }]];
        let pred = vec![vec![RelationInstance { kind: Relation::Ce, subject: cmp, anchor: a2 }]];
        assert_eq!(relation_prf(&gold, &pred).get(Relation::Ce), Prf { tp: 0, fp: 1, fn_: 1 });
        assert_eq!(relation_prf(&gold, &gold).get(Relation::Ce).f1(), 1.0);
    }

    #[test]
    fn report_rows() {
        let m = vec![
            span(0, 1, EntityType::Compound, Relation::Ce),
            span(2, 3, EntityType::Pka, Relation::Nr),
        ];
        let r = vec![pair_relations(&m)];
        let report = EvalReport {
            entities: entity_prf(std::slice::from_ref(&m), std::slice::from_ref(&m)),
            relations: relation_prf(&r, &r),
        };
        let text = render_report(&report);
        assert!(text.contains("pKa            100.00%   100.00%   100.00%"), "{text}");
        assert!(text.contains("Method           0.00%     0.00%     0.00%"), "{text}");
        let summary = render_summary(&report);
        assert!(summary.contains("relation.CE.f1=1.000000"));
        assert!(summary.contains("entity.micro.tp=2"));
    }
}
