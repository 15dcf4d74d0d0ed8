mod common;

use bondchain::model::crf::marginals;
use bondchain::model::softmax::cross_entropy_and_grad;
use bondchain::model::{log_partition, nll_and_grad, softmax, viterbi, EmissionMatrix};
use common::*;
use ndarray::Array2;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn viterbi_matches_enumeration(seed in any::<u64>(), n in 1usize..=6, k in 1usize..=5, grid in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (o, a) = random_crf(&mut rng, n, k, grid);
        let (path, score) = viterbi(&o, &a).unwrap();
        let (bpath, bscore) = brute_viterbi(o.as_array(), &a).unwrap();
        prop_assert!((score - bscore).abs() <= 1e-9 * bscore.abs().max(1.0));
        if grid {
            prop_assert_eq!(path, bpath);
        } else if path != bpath {
            // only a floating-point near tie may separate them
            let other = path_score(o.as_array(), &a, &path).unwrap();
            prop_assert!((other - bscore).abs() < 1e-9);
        }
    }

    #[test]
    fn partition_and_marginals_match_enumeration(seed in any::<u64>(), n in 1usize..=6, k in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (o, a) = random_crf(&mut rng, n, k, false);
        let log_z = log_partition(&o, &a).unwrap();
        prop_assert!(rel(log_z, brute_log_partition(o.as_array(), &a)) <= 1e-8);
        let m = marginals(&o, &a).unwrap();
        let brute = brute_unary_marginals(o.as_array(), &a);
        for (x, y) in m.unary.iter().zip(brute.iter()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
        for row in m.unary.rows() {
            prop_assert!((row.sum() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn crf_gradient_matches_finite_differences(seed in any::<u64>(), n in 1usize..=6, k in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (o, a) = random_crf(&mut rng, n, k, false);
        // with a single legal path the gradient is identically zero
        prop_assume!(legal_path_count(n, &a) >= 2);
        let gold = brute_viterbi(o.as_array(), &a).unwrap().0;
        // score the gold path down so the loss stays away from its zero clamp
        let mut shifted = o.as_array().clone();
        for (i, &t) in gold.iter().enumerate() {
            shifted[[i, t]] -= 2.0;
        }
        let o = EmissionMatrix::new(shifted).unwrap();
        let g = nll_and_grad(&o, &a, &gold).unwrap();

        let x: Vec<f64> = o.as_array().iter().copied().collect();
        let fd = central_difference(&x, 1e-5, |v| {
            let e = EmissionMatrix::new(Array2::from_shape_vec((n, k), v.to_vec()).unwrap()).unwrap();
            nll_and_grad(&e, &a, &gold).unwrap().loss
        });
        let analytic: Vec<f64> = g.d_emissions.iter().copied().collect();
        prop_assert!(relative_error(&analytic, &fd) <= 1e-4);

        let allowed: Vec<(usize, usize)> = (0..k + 2)
            .flat_map(|i| (0..k + 2).map(move |j| (i, j)))
            .filter(|&(i, j)| a.is_allowed(i, j))
            .collect();
        let x: Vec<f64> = allowed.iter().map(|&(i, j)| a.score(i, j)).collect();
        let fd = central_difference(&x, 1e-5, |v| {
            let mut b = a.clone();
            for (&(i, j), &s) in allowed.iter().zip(v) {
                b.set(i, j, s);
            }
            nll_and_grad(&o, &b, &gold).unwrap().loss
        });
        let analytic: Vec<f64> = allowed.iter().map(|&(i, j)| g.d_transitions[[i, j]]).collect();
        prop_assert!(relative_error(&analytic, &fd) <= 1e-4);
    }

    #[test]
    fn softmax_cross_entropy_gradient(seed in any::<u64>(), n in 1usize..=6, k in 2usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (o, _) = random_crf(&mut rng, n, k, false);
        let gold: Vec<usize> = (0..n).map(|i| (seed as usize + i) % k).collect();
        let (_, grad) = cross_entropy_and_grad(&o, &gold);
        let x: Vec<f64> = o.as_array().iter().copied().collect();
        let fd = central_difference(&x, 1e-5, |v| {
            let e = EmissionMatrix::new(Array2::from_shape_vec((n, k), v.to_vec()).unwrap()).unwrap();
            cross_entropy_and_grad(&e, &gold).0
        });
        let analytic: Vec<f64> = grad.iter().copied().collect();
        prop_assert!(relative_error(&analytic, &fd) <= 1e-4);
    }

    #[test]
    fn softmax_sums_to_one_and_ignores_shifts(z in prop::collection::vec(-700.0f64..700.0, 1..12), shift in -300.0f64..300.0) {
        let p = softmax(&z);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().all(|x| x.is_finite() && *x >= 0.0));
        let q = softmax(&z.iter().map(|x| x + shift).collect::<Vec<_>>());
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn forbidden_only_paths_are_skipped() {
    // with every tag but 0 unreachable the only legal path is all zeros
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (o, mut a) = random_crf(&mut rng, 4, 3, false);
    for t in 1..3 {
        a.forbid(3, t);
        a.forbid(0, t);
    }
    assert_eq!(viterbi(&o, &a).unwrap().0, vec![0; 4]);
    let z = log_partition(&o, &a).unwrap();
    assert!((z - path_score(o.as_array(), &a, &[0; 4]).unwrap()).abs() < 1e-12);
}
