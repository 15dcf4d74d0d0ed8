//! Independent oracles and random instance generators shared by the
//! integration tests and the acceptance binary.

#![allow(dead_code)]

use bondchain::corpus::{tokens_from, EntitySpan, Sentence};
use bondchain::lexicon::{EntityMatch, Lexicon};
use bondchain::model::{EmissionMatrix, TransitionParams};
use bondchain::tagscheme::{build_tagset, JointTag};
use ndarray::Array2;
use rand::Rng;

/// Every path of length `n` over `k` tags, in lexicographic order.
pub fn all_paths(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..k).map(move |t| {
                    let mut q = p.clone();
                    q.push(t);
                    q
                })
            })
            .collect();
    }
    out
}

/// Direct path score read off the matrices; `None` for a forbidden path.
pub fn path_score(o: &Array2<f64>, a: &TransitionParams, y: &[usize]) -> Option<f64> {
    let k = o.ncols();
    let (start, stop) = (k, k + 1);
    let mut steps = vec![(start, y[0])];
    steps.extend(y.windows(2).map(|w| (w[0], w[1])));
    steps.push((y[y.len() - 1], stop));
    let mut total = 0.0;
    for (from, to) in steps {
        if !a.is_allowed(from, to) {
            return None;
        }
        total += a.score(from, to);
    }
    for (i, &t) in y.iter().enumerate() {
        total += o[[i, t]];
    }
    Some(total)
}

/// Best path by enumeration. Among equal scores the winner is the path that
/// is smallest when compared from the last position backwards.
pub fn brute_viterbi(o: &Array2<f64>, a: &TransitionParams) -> Option<(Vec<usize>, f64)> {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for y in all_paths(o.nrows(), o.ncols()) {
        let Some(s) = path_score(o, a, &y) else { continue };
        let better = match &best {
            None => true,
            Some((by, bs)) => {
                s > *bs || (s == *bs && y.iter().rev().lt(by.iter().rev()))
            }
        };
        if better {
            best = Some((y, s));
        }
    }
    best
}

fn lse(scores: &[f64]) -> f64 {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln()
}

pub fn brute_log_partition(o: &Array2<f64>, a: &TransitionParams) -> f64 {
    let scores: Vec<f64> = all_paths(o.nrows(), o.ncols())
        .iter()
        .filter_map(|y| path_score(o, a, y))
        .collect();
    lse(&scores)
}

pub fn legal_path_count(n: usize, a: &TransitionParams) -> usize {
    let o = Array2::zeros((n, a.num_tags()));
    all_paths(n, a.num_tags())
        .iter()
        .filter(|y| path_score(&o, a, y).is_some())
        .count()
}

/// `p(y_i = k)` by enumeration.
pub fn brute_unary_marginals(o: &Array2<f64>, a: &TransitionParams) -> Array2<f64> {
    let log_z = brute_log_partition(o, a);
    let mut p = Array2::zeros(o.dim());
    for y in all_paths(o.nrows(), o.ncols()) {
        if let Some(s) = path_score(o, a, &y) {
            let w = (s - log_z).exp();
            for (i, &t) in y.iter().enumerate() {
                p[[i, t]] += w;
            }
        }
    }
    p
}

/// A random CRF instance. With `grid` every score is a multiple of 0.5 in
/// [-2, 2], so exact ties are common and sums are exact. Interior
/// transitions are forbidden at random, except that tag 0 always stays
/// reachable so some path is legal.
pub fn random_crf<R: Rng>(rng: &mut R, n: usize, k: usize, grid: bool) -> (EmissionMatrix, TransitionParams) {
    let draw = |rng: &mut R| {
        if grid {
            rng.gen_range(-4i32..=4) as f64 * 0.5
        } else {
            rng.gen_range(-3.0..3.0)
        }
    };
    let o = Array2::from_shape_fn((n, k), |_| draw(rng));
    let mut a = TransitionParams::unconstrained(k);
    for from in 0..k + 2 {
        for to in 0..k + 2 {
            if a.is_allowed(from, to) {
                a.set(from, to, draw(rng));
            }
        }
    }
    for from in 0..k {
        for to in 0..k {
            if (from, to) != (0, 0) && rng.gen_bool(0.2) {
                a.forbid(from, to);
            }
        }
    }
    (EmissionMatrix::new(o).expect("finite"), a)
}

/// Norm-wise relative error between two gradient vectors.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let na: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nb: f64 = numeric.iter().map(|b| b * b).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-8)
}

/// Central difference of `f` at `x` along each coordinate.
pub fn central_difference(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// A sentence of 1-20 tokens with random, non-overlapping spans drawn from
/// every B/I entity-relation pair of the tag set.
pub fn random_sentence<R: Rng>(rng: &mut R) -> Sentence {
    let pairs: Vec<_> = build_tagset()
        .tags()
        .iter()
        .filter_map(|t| match t {
            JointTag::Begin(e, r) => Some((*e, *r)),
            _ => None,
        })
        .collect();
    let n = rng.gen_range(1..=20);
    let words: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < n {
        if rng.gen_bool(0.45) {
            let len = rng.gen_range(1..=3).min(n - i);
            let (e, r) = pairs[rng.gen_range(0..pairs.len())];
            spans.push(EntitySpan::new(i, i + len, e, r));
            i += len;
        } else {
            i += 1;
        }
    }
    Sentence::new(tokens_from(&words), spans).expect("spans are valid")
}

pub const MASK_WORDS: [&str; 6] = ["alpha", "beta", "gamma", "delta", "kappa", "sigma"];

/// A random dictionary of 1-6 compound terms of 1-3 words each, and a
/// sentence over the same words with random capitalisation.
pub fn random_lexicon_sentence<R: Rng>(rng: &mut R) -> (Vec<Vec<String>>, Lexicon, Vec<String>) {
    let terms: Vec<Vec<String>> = (0..rng.gen_range(1..=6))
        .map(|_| {
            (0..rng.gen_range(1..=3))
                .map(|_| MASK_WORDS[rng.gen_range(0..MASK_WORDS.len())].to_string())
                .collect()
        })
        .collect();
    let mut b = Lexicon::builder();
    for t in &terms {
        b = b.compound(&t.join(" "));
    }
    let lexicon = b.build().expect("non-empty lexicon");
    let words = (0..rng.gen_range(0..=25))
        .map(|_| {
            let w = MASK_WORDS[rng.gen_range(0..MASK_WORDS.len())];
            if rng.gen_bool(0.2) {
                let mut c = w.chars();
                let first = c.next().unwrap().to_ascii_uppercase();
                std::iter::once(first).chain(c).collect()
            } else {
                w.to_string()
            }
        })
        .collect();
    (terms, lexicon, words)
}

/// Leftmost-longest scan over dictionary terms, case-insensitive.
pub fn brute_leftmost_longest(terms: &[Vec<String>], words: &[String]) -> Vec<EntityMatch> {
    use bondchain::corpus::EntityType;
    let folded: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < folded.len() {
        let best = terms
            .iter()
            .filter(|t| folded[i..].starts_with(t))
            .map(|t| t.len())
            .max();
        match best {
            Some(len) => {
                out.push(EntityMatch::new(i, i + len, EntityType::Compound));
                i += len;
            }
            None => i += 1,
        }
    }
    out
}
