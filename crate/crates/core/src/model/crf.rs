//! Linear-chain CRF over an emission matrix.
//!
//! The score of a tag path `y` for emissions `O` and transitions `A` is
//!
//! ```text
//! S(x, y) = A[START, y_1] + Σ_{i<n} A[y_i, y_{i+1}] + A[y_n, STOP] + Σ_i O[i, y_i]
//! ```
//!
//! `A` is a `(K+2)×(K+2)` matrix whose row `K` is START and column `K+1` is
//! STOP. Forbidden transitions hold [`NEG_INF`] and are never trained.
//! Everything runs in log space.

use ndarray::Array2;

use super::softmax::log_sum_exp;
use super::{EmissionMatrix, ModelError};
use crate::tagscheme::{is_legal_transition, TagSet};

/// Score sentinel for forbidden transitions.
pub const NEG_INF: f64 = -1e30;

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionParams {
    num_tags: usize,
    scores: Array2<f64>,
    allowed: Array2<bool>,
}

impl TransitionParams {
    /// Zero scores with every tag-to-tag, START-to-tag and tag-to-STOP
    /// transition allowed.
    pub fn unconstrained(num_tags: usize) -> Self {
        let size = num_tags + 2;
        let mut allowed = Array2::from_elem((size, size), true);
        for i in 0..size {
            // nothing enters START and nothing leaves STOP
            allowed[[i, num_tags]] = false;
            allowed[[num_tags + 1, i]] = false;
        }
        allowed[[num_tags, num_tags + 1]] = false;
        let scores = allowed.mapv(|ok| if ok { 0.0 } else { NEG_INF });
        TransitionParams {
            num_tags,
            scores,
            allowed,
        }
    }

    /// Zero scores with the tag scheme's BIO legality mask.
    pub fn for_tagset(tagset: &TagSet) -> Self {
        let k = tagset.len();
        let mut params = Self::unconstrained(k);
        let tag = |i: usize| (i < k).then(|| tagset.tag(i).expect("id in range"));
        for from in 0..=k {
            for to in (0..k).chain([k + 1]) {
                if !is_legal_transition(tag(from), tag(to)) {
                    params.forbid(from, to);
                }
            }
        }
        params
    }

    pub fn num_tags(&self) -> usize {
        self.num_tags
    }

    pub fn start(&self) -> usize {
        self.num_tags
    }

    pub fn stop(&self) -> usize {
        self.num_tags + 1
    }

    pub fn score(&self, from: usize, to: usize) -> f64 {
        self.scores[[from, to]]
    }

    pub fn is_allowed(&self, from: usize, to: usize) -> bool {
        self.allowed[[from, to]]
    }

    /// Sets an allowed entry; forbidden entries keep the sentinel and `false`
    /// is returned.
    pub fn set(&mut self, from: usize, to: usize, value: f64) -> bool {
        if self.allowed[[from, to]] {
            self.scores[[from, to]] = value;
            true
        } else {
            false
        }
    }

    pub fn forbid(&mut self, from: usize, to: usize) {
        self.allowed[[from, to]] = false;
        self.scores[[from, to]] = NEG_INF;
    }

    pub fn scores(&self) -> &Array2<f64> {
        &self.scores
    }

    pub fn allowed(&self) -> &Array2<bool> {
        &self.allowed
    }

    /// Adds `step` to every allowed entry.
    pub(crate) fn add_scaled(&mut self, step: &Array2<f64>, scale: f64) {
        ndarray::Zip::from(&mut self.scores)
            .and(&self.allowed)
            .and(step)
            .for_each(|s, &ok, &d| {
                if ok {
                    *s += scale * d;
                }
            });
    }

    /// Replaces the scores, keeping this mask. Forbidden entries must hold
    /// the sentinel.
    pub(crate) fn with_scores(mut self, scores: Array2<f64>) -> Result<Self, ModelError> {
        if scores.dim() != self.scores.dim() {
            return Err(ModelError::Dimension(format!(
                "transition matrix {:?}, expected {:?}",
                scores.dim(),
                self.scores.dim()
            )));
        }
        for ((idx, &v), &ok) in scores.indexed_iter().zip(&self.allowed) {
            if !ok && v != NEG_INF {
                return Err(ModelError::Dimension(format!(
                    "forbidden transition {idx:?} holds {v}"
                )));
            }
        }
        self.scores = scores;
        Ok(self)
    }
}

fn check_dims(o: &EmissionMatrix, a: &TransitionParams) -> Result<(), ModelError> {
    if o.num_tags() != a.num_tags() {
        return Err(ModelError::Dimension(format!(
            "emissions have {} tags, transitions {}",
            o.num_tags(),
            a.num_tags()
        )));
    }
    if o.is_empty() {
        return Err(ModelError::EmptySequence);
    }
    Ok(())
}

fn check_path(o: &EmissionMatrix, y: &[usize]) -> Result<(), ModelError> {
    if y.len() != o.len() {
        return Err(ModelError::Dimension(format!(
            "{} tags for {} positions",
            y.len(),
            o.len()
        )));
    }
    if let Some(&bad) = y.iter().find(|&&t| t >= o.num_tags()) {
        return Err(ModelError::Dimension(format!(
            "tag id {bad} out of range for {} tags",
            o.num_tags()
        )));
    }
    Ok(())
}

/// Whether every transition along `y`, boundaries included, is allowed.
pub fn is_legal_path(a: &TransitionParams, y: &[usize]) -> bool {
    let Some((&first, &last)) = y.first().zip(y.last()) else {
        return true;
    };
    a.is_allowed(a.start(), first)
        && y.windows(2).all(|w| a.is_allowed(w[0], w[1]))
        && a.is_allowed(last, a.stop())
}

/// Path score `S(x, y)`; [`NEG_INF`] when the path uses a forbidden
/// transition.
pub fn crf_score(o: &EmissionMatrix, a: &TransitionParams, y: &[usize]) -> Result<f64, ModelError> {
    check_dims(o, a)?;
    check_path(o, y)?;
    if !is_legal_path(a, y) {
        return Ok(NEG_INF);
    }
    let e = o.as_array();
    let mut score = a.score(a.start(), y[0]);
    for w in y.windows(2) {
        score += a.score(w[0], w[1]);
    }
    score += a.score(y[y.len() - 1], a.stop());
    for (i, &t) in y.iter().enumerate() {
        score += e[[i, t]];
    }
    Ok(score)
}

/// `alpha[i][k]`: log-sum of all prefixes ending in tag `k` at position `i`.
fn forward(o: &EmissionMatrix, a: &TransitionParams) -> Array2<f64> {
    let (n, k) = (o.len(), o.num_tags());
    let e = o.as_array();
    let mut alpha = Array2::zeros((n, k));
    for t in 0..k {
        alpha[[0, t]] = a.score(a.start(), t) + e[[0, t]];
    }
    for i in 1..n {
        for t in 0..k {
            alpha[[i, t]] = log_sum_exp((0..k).map(|s| alpha[[i - 1, s]] + a.score(s, t))) + e[[i, t]];
        }
    }
    alpha
}

/// `beta[i][k]`: log-sum of all suffixes after tag `k` at position `i`.
fn backward(o: &EmissionMatrix, a: &TransitionParams) -> Array2<f64> {
    let (n, k) = (o.len(), o.num_tags());
    let e = o.as_array();
    let mut beta = Array2::zeros((n, k));
    for t in 0..k {
        beta[[n - 1, t]] = a.score(t, a.stop());
    }
    for i in (0..n - 1).rev() {
        for s in 0..k {
            beta[[i, s]] =
                log_sum_exp((0..k).map(|t| a.score(s, t) + e[[i + 1, t]] + beta[[i + 1, t]]));
        }
    }
    beta
}

fn log_z_from_alpha(alpha: &Array2<f64>, a: &TransitionParams) -> f64 {
    let n = alpha.nrows();
    log_sum_exp((0..a.num_tags()).map(|t| alpha[[n - 1, t]] + a.score(t, a.stop())))
}

/// `log Σ_y exp S(x, y)` by the forward recursion.
pub fn log_partition(o: &EmissionMatrix, a: &TransitionParams) -> Result<f64, ModelError> {
    check_dims(o, a)?;
    Ok(log_z_from_alpha(&forward(o, a), a))
}

/// Highest-scoring path and its score. Ties go to the lowest tag id, both for
/// the final tag and for every back-pointer.
pub fn viterbi(o: &EmissionMatrix, a: &TransitionParams) -> Result<(Vec<usize>, f64), ModelError> {
    check_dims(o, a)?;
    let (n, k) = (o.len(), o.num_tags());
    let e = o.as_array();
    let mut delta = Array2::zeros((n, k));
    let mut back = Array2::<usize>::zeros((n, k));
    for t in 0..k {
        delta[[0, t]] = a.score(a.start(), t) + e[[0, t]];
    }
    for i in 1..n {
        for t in 0..k {
            let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
            for s in 0..k {
                let v = delta[[i - 1, s]] + a.score(s, t);
                if v > best {
                    best = v;
                    arg = s;
                }
            }
            delta[[i, t]] = best + e[[i, t]];
            back[[i, t]] = arg;
        }
    }
    let (mut best, mut last) = (f64::NEG_INFINITY, 0);
    for t in 0..k {
        let v = delta[[n - 1, t]] + a.score(t, a.stop());
        if v > best {
            best = v;
            last = t;
        }
    }
    let mut path = vec![0; n];
    path[n - 1] = last;
    for i in (1..n).rev() {
        path[i - 1] = back[[i, path[i]]];
    }
    let score = crf_score(o, a, &path)?;
    Ok((path, score))
}

/// Posterior marginals from forward-backward.
#[derive(Clone, Debug)]
pub struct Marginals {
    pub log_partition: f64,
    /// `n×K`: `p(y_i = k | x)`.
    pub unary: Array2<f64>,
    /// `n-1` matrices `K×K`: `p(y_i = j, y_{i+1} = k | x)`.
    pub pairwise: Vec<Array2<f64>>,
}

pub fn marginals(o: &EmissionMatrix, a: &TransitionParams) -> Result<Marginals, ModelError> {
    check_dims(o, a)?;
    let (n, k) = (o.len(), o.num_tags());
    let e = o.as_array();
    let alpha = forward(o, a);
    let beta = backward(o, a);
    let log_z = log_z_from_alpha(&alpha, a);
    let unary = Array2::from_shape_fn((n, k), |(i, t)| (alpha[[i, t]] + beta[[i, t]] - log_z).exp());
    let pairwise = (0..n.saturating_sub(1))
        .map(|i| {
            Array2::from_shape_fn((k, k), |(s, t)| {
                if a.is_allowed(s, t) {
                    (alpha[[i, s]] + a.score(s, t) + e[[i + 1, t]] + beta[[i + 1, t]] - log_z).exp()
                } else {
                    0.0
                }
            })
        })
        .collect();
    Ok(Marginals {
        log_partition: log_z,
        unary,
        pairwise,
    })
}

/// Negative log-likelihood of a gold path with its gradients.
#[derive(Clone, Debug)]
pub struct NllGrad {
    pub loss: f64,
    /// `n×K`
    pub d_emissions: Array2<f64>,
    /// `(K+2)×(K+2)`, zero on forbidden entries.
    pub d_transitions: Array2<f64>,
}

/// `log Z − S(x, gold)` and its gradients: expected minus observed counts.
pub fn nll_and_grad(
    o: &EmissionMatrix,
    a: &TransitionParams,
    gold: &[usize],
) -> Result<NllGrad, ModelError> {
    check_dims(o, a)?;
    check_path(o, gold)?;
    if !is_legal_path(a, gold) {
        return Err(ModelError::IllegalGold);
    }
    let (n, k) = (o.len(), o.num_tags());
    let m = marginals(o, a)?;
    let gold_score = crf_score(o, a, gold)?;
    let loss = (m.log_partition - gold_score).max(0.0);

    let mut d_emissions = m.unary.clone();
    for (i, &t) in gold.iter().enumerate() {
        d_emissions[[i, t]] -= 1.0;
    }

    let mut d_transitions = Array2::zeros((k + 2, k + 2));
    let (start, stop) = (a.start(), a.stop());
    for t in 0..k {
        d_transitions[[start, t]] = m.unary[[0, t]];
        d_transitions[[t, stop]] = m.unary[[n - 1, t]];
    }
    for p in &m.pairwise {
        for s in 0..k {
            for t in 0..k {
                d_transitions[[s, t]] += p[[s, t]];
            }
        }
    }
    d_transitions[[start, gold[0]]] -= 1.0;
    d_transitions[[gold[n - 1], stop]] -= 1.0;
    for w in gold.windows(2) {
        d_transitions[[w[0], w[1]]] -= 1.0;
    }
    ndarray::Zip::from(&mut d_transitions)
        .and(a.allowed())
        .for_each(|d, &ok| {
            if !ok {
                *d = 0.0;
            }
        });
    Ok(NllGrad {
        loss,
        d_emissions,
        d_transitions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagscheme::build_tagset;
    use ndarray::array;

    fn em(a: Array2<f64>) -> EmissionMatrix {
        EmissionMatrix::new(a).unwrap()
    }

    #[test]
    fn score_with_zero_transitions() {
        let o = em(array![[1.0, 2.0], [3.0, 4.0]]);
        let a = TransitionParams::unconstrained(2);
        assert_eq!(crf_score(&o, &a, &[0, 1]).unwrap(), 5.0);
    }

    #[test]
    fn score_with_interior_transitions() {
        let o = em(array![[1.0, 2.0], [3.0, 4.0]]);
        let mut a = TransitionParams::unconstrained(2);
        for (s, t, v) in [(0, 0, 0.1), (0, 1, 0.2), (1, 0, 0.3), (1, 1, 0.4)] {
            assert!(a.set(s, t, v));
        }
        let s = crf_score(&o, &a, &[1, 0]).unwrap();
        assert!((s - 5.3).abs() < 1e-12, "{s}");
    }

    #[test]
    fn score_of_forbidden_path() {
        let o = em(array![[0.0, 0.0], [0.0, 0.0]]);
        let mut a = TransitionParams::unconstrained(2);
        a.forbid(0, 1);
        assert_eq!(crf_score(&o, &a, &[0, 1]).unwrap(), NEG_INF);
        assert!(crf_score(&o, &a, &[0]).is_err());
        assert!(crf_score(&o, &a, &[0, 2]).is_err());
    }

    #[test]
    fn partition_small_cases() {
        let a1 = TransitionParams::unconstrained(1);
        let o = em(array![[0.5], [1.5], [-2.0]]);
        assert!((log_partition(&o, &a1).unwrap() - 0.0).abs() < 1e-12);

        let o = em(array![[0.0, 0.0]]);
        let a = TransitionParams::unconstrained(2);
        assert!((log_partition(&o, &a).unwrap() - 2f64.ln()).abs() < 1e-15);

        let empty = em(Array2::zeros((0, 2)));
        assert!(matches!(
            log_partition(&empty, &a),
            Err(ModelError::EmptySequence)
        ));
        assert!(matches!(viterbi(&empty, &a), Err(ModelError::EmptySequence)));
    }

    #[test]
    fn viterbi_zero_transitions_is_rowwise_argmax() {
        let o = em(array![[0.0, 2.0, 1.0], [3.0, 0.0, 1.0], [0.0, 0.0, 0.0]]);
        let a = TransitionParams::unconstrained(3);
        let (path, score) = viterbi(&o, &a).unwrap();
        assert_eq!(path, [1, 0, 0]);
        assert_eq!(score, 5.0);
    }

    #[test]
    fn viterbi_respects_tagset_mask() {
        let tagset = build_tagset();
        let a = TransitionParams::for_tagset(&tagset);
        let k = tagset.len();
        // emissions that love I- tags everywhere
        let o = em(Array2::from_shape_fn((4, k), |(_, t)| {
            if tagset.tag(t).unwrap().is_inside() {
                5.0
            } else {
                0.0
            }
        }));
        let (path, _) = viterbi(&o, &a).unwrap();
        assert!(is_legal_path(&a, &path));
        let tags = tagset.tags_of(&path);
        assert!(!tags[0].is_inside());
    }

    #[test]
    fn tagset_mask_matches_legality() {
        let tagset = build_tagset();
        let a = TransitionParams::for_tagset(&tagset);
        let k = tagset.len();
        for s in 0..k {
            for t in 0..k {
                assert_eq!(
                    a.is_allowed(s, t),
                    is_legal_transition(tagset.tag(s), tagset.tag(t))
                );
            }
            assert!(a.is_allowed(s, a.stop()));
            assert_eq!(
                a.is_allowed(a.start(), s),
                !tagset.tag(s).unwrap().is_inside()
            );
        }
    }

    #[test]
    fn uniform_model_gradient() {
        let k = 3;
        let o = em(Array2::zeros((4, k)));
        let a = TransitionParams::unconstrained(k);
        let gold = [0, 2, 1, 1];
        let g = nll_and_grad(&o, &a, &gold).unwrap();
        assert!((g.loss - 4.0 * (k as f64).ln()).abs() < 1e-12);
        for (i, &g_i) in gold.iter().enumerate() {
            for t in 0..k {
                let expected = 1.0 / k as f64 - if g_i == t { 1.0 } else { 0.0 };
                assert!((g.d_emissions[[i, t]] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn loss_zero_for_forced_path() {
        let o = em(array![[0.0, 0.0], [0.0, 0.0]]);
        let mut a = TransitionParams::unconstrained(2);
        a.forbid(a.start(), 1);
        a.forbid(0, 0);
        a.forbid(1, 1);
        a.forbid(0, a.stop());
        // only 0 -> 1 remains
        let g = nll_and_grad(&o, &a, &[0, 1]).unwrap();
        assert!(g.loss.abs() < 1e-12);
        assert!(matches!(
            nll_and_grad(&o, &a, &[1, 0]),
            Err(ModelError::IllegalGold)
        ));
    }

    #[test]
    fn with_scores_checks_mask() {
        let a = TransitionParams::unconstrained(2);
        let bad = Array2::zeros((4, 4));
        assert!(a.clone().with_scores(bad).is_err());
        let same = a.scores().clone();
        assert_eq!(a.clone().with_scores(same).unwrap(), a);
    }
}
