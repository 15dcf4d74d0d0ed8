use ndarray::Array2;

use super::EmissionMatrix;

/// `log Σ exp(x)` with max subtraction; `-inf` for an empty input.
pub fn log_sum_exp<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let iter = values.into_iter();
    let max = iter.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + iter.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Normalised exponentials `e^{z_j} / Σ_i e^{z_i}`, stabilised by
/// subtracting the maximum so that large magnitudes cannot overflow.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Index of the largest value, the lowest index on ties.
pub(crate) fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}

/// Independent per-token argmax of the softmax distribution, with no
/// transition constraints.
pub fn softmax_decode(emissions: &EmissionMatrix) -> Vec<usize> {
    emissions
        .as_array()
        .rows()
        .into_iter()
        .map(|row| argmax(softmax(row.as_slice().expect("emission rows are contiguous"))))
        .collect()
}

/// Summed per-token cross-entropy of the gold tags and its gradient with
/// respect to the emissions.
pub fn cross_entropy_and_grad(emissions: &EmissionMatrix, gold: &[usize]) -> (f64, Array2<f64>) {
    let scores = emissions.as_array();
    let mut grad = Array2::zeros(scores.raw_dim());
    let mut loss = 0.0;
    for (i, (row, &y)) in scores.rows().into_iter().zip(gold).enumerate() {
        let p = softmax(row.as_slice().expect("emission rows are contiguous"));
        loss -= p[y].max(f64::MIN_POSITIVE).ln();
        for (k, pk) in p.into_iter().enumerate() {
            grad[[i, k]] = pk - if k == y { 1.0 } else { 0.0 };
        }
    }
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn uniform_and_shift() {
        assert!(close(&softmax(&[0.0, 0.0, 0.0]), &[1.0 / 3.0; 3], 1e-15));
        for c in [-700.0, -3.5, 0.0, 42.0, 700.0] {
            assert!(close(&softmax(&[c, c]), &[0.5, 0.5], 1e-15));
        }
    }

    #[test]
    fn ln2_example() {
        assert!(close(
            &softmax(&[2f64.ln(), 0.0]),
            &[2.0 / 3.0, 1.0 / 3.0],
            1e-15
        ));
    }

    #[test]
    fn extreme_magnitudes() {
        let p = softmax(&[700.0, -700.0, 699.0]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lse() {
        assert!((log_sum_exp([0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_sum_exp(Vec::<f64>::new()), f64::NEG_INFINITY);
        assert!((log_sum_exp([1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn decode_rules() {
        let o = EmissionMatrix::new(array![[0.1, 3.0, 0.0], [5.0, 1.0, 2.0]]).unwrap();
        assert_eq!(softmax_decode(&o), [1, 0]);
        let zero = EmissionMatrix::new(Array2::zeros((3, 4))).unwrap();
        assert_eq!(softmax_decode(&zero), [0, 0, 0]);
    }

    #[test]
    fn cross_entropy_gradient() {
        let o = EmissionMatrix::new(array![[0.0, 0.0]]).unwrap();
        let (loss, grad) = cross_entropy_and_grad(&o, &[1]);
        assert!((loss - 2f64.ln()).abs() < 1e-15);
        assert!(close(grad.as_slice().unwrap(), &[0.5, -0.5], 1e-15));
    }
}
