//! Exact CRF inference on a small random instance: Viterbi path, log
//! partition, per-position marginals and the training gradient.
//!
//! cargo run --example crf_inference

use bondchain::model::crf::marginals;
use bondchain::model::{crf_score, log_partition, nll_and_grad, viterbi, EmissionMatrix, TransitionParams};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (n, k) = (5, 4);
    let o = EmissionMatrix::new(Array2::from_shape_fn((n, k), |_| rng.gen_range(-2.0..2.0)))?;
    let mut a = TransitionParams::unconstrained(k);
    for from in 0..k + 2 {
        for to in 0..k + 2 {
            a.set(from, to, rng.gen_range(-1.0..1.0));
        }
    }
    // tag 3 may never follow tag 0
    a.forbid(0, 3);

    let (path, best) = viterbi(&o, &a)?;
    let log_z = log_partition(&o, &a)?;
    println!("viterbi path {path:?}, score {best:.4}");
    println!("log Z {log_z:.4}, p(best path) {:.4}", (best - log_z).exp());
    assert!((crf_score(&o, &a, &path)? - best).abs() < 1e-9);

    let m = marginals(&o, &a)?;
    for (i, row) in m.unary.rows().into_iter().enumerate() {
        let probs: Vec<String> = row.iter().map(|p| format!("{p:.3}")).collect();
        println!("position {i}: {}", probs.join(" "));
    }

    let g = nll_and_grad(&o, &a, &path)?;
    println!("nll of the viterbi path {:.4}", g.loss);
    println!("emission gradient row 0 {:?}", g.d_emissions.row(0).to_vec());
    Ok(())
}
