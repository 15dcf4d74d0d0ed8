use ndarray::{s, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::vocab::PAD_ID;
use super::{EmissionEncoder, EmissionMatrix, ModelError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowEncoderConfig {
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    /// Tokens of context on each side.
    pub window: usize,
}

impl Default for WindowEncoderConfig {
    fn default() -> Self {
        WindowEncoderConfig {
            embedding_dim: 32,
            hidden_dim: 64,
            window: 2,
        }
    }
}

pub(crate) const EMBEDDINGS: usize = 0;
pub(crate) const COMBINER: usize = 1;
pub(crate) const COMBINER_BIAS: usize = 2;
pub(crate) const OUTPUT: usize = 3;
pub(crate) const OUTPUT_BIAS: usize = 4;

/// Weights in the order embeddings `V×d`, combiner `(2w+1)d×H`, combiner
/// bias `1×H`, output `H×K`, output bias `1×K`.
pub type EncoderParams = [Array2<f64>; 5];

/// Contextual emission encoder: every token is represented by the
/// concatenated embeddings of the `2w+1` tokens around it (padding past
/// the sentence edges), passed through one `tanh` layer and a linear
/// projection onto the tag set.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowEncoder {
    params: EncoderParams,
    window: usize,
}

/// Intermediate values of a forward pass, kept for the backward pass.
pub struct ForwardCache {
    ids: Vec<usize>,
    inputs: Array2<f64>,
    hidden: Array2<f64>,
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-bound..=bound))
}

impl WindowEncoder {
    pub fn new(
        vocab_size: usize,
        num_tags: usize,
        config: WindowEncoderConfig,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let WindowEncoderConfig {
            embedding_dim: d,
            hidden_dim: h,
            window: w,
        } = config;
        let input = (2 * w + 1) * d;
        let mut embeddings = uniform(rng, vocab_size, d, 0.1);
        embeddings.row_mut(PAD_ID).fill(0.0);
        let combiner = uniform(rng, input, h, (6.0 / (input + h) as f64).sqrt());
        let output = uniform(rng, h, num_tags, (6.0 / (h + num_tags) as f64).sqrt());
        WindowEncoder {
            params: [
                embeddings,
                combiner,
                Array2::zeros((1, h)),
                output,
                Array2::zeros((1, num_tags)),
            ],
            window: w,
        }
    }

    /// Assembles an encoder from stored weights, checking that the shapes
    /// agree with each other.
    pub fn from_params(params: EncoderParams, window: usize) -> Result<Self, ModelError> {
        let d = params[EMBEDDINGS].ncols();
        let h = params[COMBINER].ncols();
        let k = params[OUTPUT].ncols();
        let expect = [
            (params[EMBEDDINGS].nrows(), d),
            ((2 * window + 1) * d, h),
            (1, h),
            (h, k),
            (1, k),
        ];
        for (i, (p, e)) in params.iter().zip(expect).enumerate() {
            if p.dim() != e {
                return Err(ModelError::Dimension(format!(
                    "encoder tensor {i} is {:?}, expected {e:?}",
                    p.dim()
                )));
            }
        }
        Ok(WindowEncoder { params, window })
    }

    pub fn params(&self) -> &EncoderParams {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut EncoderParams {
        &mut self.params
    }

    pub fn config(&self) -> WindowEncoderConfig {
        WindowEncoderConfig {
            embedding_dim: self.params[EMBEDDINGS].ncols(),
            hidden_dim: self.params[COMBINER].ncols(),
            window: self.window,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.params[EMBEDDINGS].nrows()
    }

    /// Zero tensors shaped like the parameters.
    pub fn zero_grads(&self) -> EncoderParams {
        self.params.clone().map(|p| Array2::zeros(p.raw_dim()))
    }

    fn window_inputs(&self, ids: &[usize]) -> Result<Array2<f64>, ModelError> {
        let emb = &self.params[EMBEDDINGS];
        let d = emb.ncols();
        let w = self.window as isize;
        if let Some(&id) = ids.iter().find(|&&id| id >= emb.nrows()) {
            return Err(ModelError::TokenOutOfRange {
                id,
                size: emb.nrows(),
            });
        }
        let n = ids.len() as isize;
        let mut x = Array2::zeros((ids.len(), (2 * self.window + 1) * d));
        for i in 0..n {
            for (slot, j) in (i - w..=i + w).enumerate() {
                let id = if (0..n).contains(&j) { ids[j as usize] } else { PAD_ID };
                x.slice_mut(s![i as usize, slot * d..(slot + 1) * d])
                    .assign(&emb.row(id));
            }
        }
        Ok(x)
    }

    pub fn forward(&self, ids: &[usize]) -> Result<(EmissionMatrix, ForwardCache), ModelError> {
        if ids.is_empty() {
            return Err(ModelError::EmptySequence);
        }
        let inputs = self.window_inputs(ids)?;
        let hidden = (inputs.dot(&self.params[COMBINER]) + &self.params[COMBINER_BIAS])
            .mapv_into(f64::tanh);
        let out = hidden.dot(&self.params[OUTPUT]) + &self.params[OUTPUT_BIAS];
        let cache = ForwardCache {
            ids: ids.to_vec(),
            inputs,
            hidden,
        };
        Ok((EmissionMatrix::new(out)?, cache))
    }

    /// Adds the gradient of a loss with emission gradient `d_out` into
    /// `grads`. The padding embedding is never updated.
    pub fn backward(&self, cache: &ForwardCache, d_out: &Array2<f64>, grads: &mut EncoderParams) {
        let p = &self.params;
        grads[OUTPUT] += &cache.hidden.t().dot(d_out);
        grads[OUTPUT_BIAS] += &d_out.sum_axis(Axis(0)).insert_axis(Axis(0));
        let d_hidden = d_out.dot(&p[OUTPUT].t());
        let d_pre = d_hidden * cache.hidden.mapv(|h| 1.0 - h * h);
        grads[COMBINER] += &cache.inputs.t().dot(&d_pre);
        grads[COMBINER_BIAS] += &d_pre.sum_axis(Axis(0)).insert_axis(Axis(0));
        let d_inputs = d_pre.dot(&p[COMBINER].t());

        let d = p[EMBEDDINGS].ncols();
        let w = self.window as isize;
        let n = cache.ids.len() as isize;
        for i in 0..n {
            for (slot, j) in (i - w..=i + w).enumerate() {
                if !(0..n).contains(&j) || cache.ids[j as usize] == PAD_ID {
                    continue;
                }
                let mut row = grads[EMBEDDINGS].row_mut(cache.ids[j as usize]);
                row += &d_inputs.slice(s![i as usize, slot * d..(slot + 1) * d]);
            }
        }
    }
}

impl EmissionEncoder for WindowEncoder {
    fn num_tags(&self) -> usize {
        self.params[OUTPUT].ncols()
    }

    fn emissions(&self, token_ids: &[usize]) -> Result<EmissionMatrix, ModelError> {
        self.forward(token_ids).map(|(o, _)| o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn small() -> WindowEncoder {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = WindowEncoderConfig {
            embedding_dim: 3,
            hidden_dim: 4,
            window: 1,
        };
        WindowEncoder::new(6, 5, cfg, &mut rng)
    }

    #[test]
    fn shapes_and_errors() {
        let enc = small();
        let o = enc.emissions(&[4, 5, 1]).unwrap();
        assert_eq!((o.len(), o.num_tags()), (3, 5));
        assert!(matches!(
            enc.emissions(&[6]),
            Err(ModelError::TokenOutOfRange { id: 6, size: 6 })
        ));
        assert!(matches!(enc.emissions(&[]), Err(ModelError::EmptySequence)));
        let params = enc.params().clone();
        assert!(WindowEncoder::from_params(params.clone(), 1).is_ok());
        assert!(WindowEncoder::from_params(params, 2).is_err());
    }

    #[test]
    fn context_changes_emissions() {
        let enc = small();
        let a = enc.emissions(&[4, 5]).unwrap();
        let b = enc.emissions(&[4, 3]).unwrap();
        assert_ne!(a.as_array().row(0), b.as_array().row(0));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut enc = small();
        let ids = [4, 2, 5, 1];
        // loss = Σ c ⊙ O for a fixed weighting c
        let c = Array2::from_shape_fn((ids.len(), 5), |(i, k)| (i as f64 + 1.0) * (k as f64 - 2.0) / 7.0);
        let loss = |e: &WindowEncoder| (e.emissions(&ids).unwrap().as_array() * &c).sum();
        let (_, cache) = enc.forward(&ids).unwrap();
        let mut grads = enc.zero_grads();
        enc.backward(&cache, &c, &mut grads);
        let h = 1e-5;
        #[allow(clippy::needless_range_loop)]
        for t in 0..5 {
            for idx in 0..enc.params[t].len() {
                let (r, col) = (idx / enc.params[t].ncols(), idx % enc.params[t].ncols());
                if t == EMBEDDINGS && r == PAD_ID {
                    assert_eq!(grads[t][[r, col]], 0.0);
                    continue;
                }
                let orig = enc.params[t][[r, col]];
                enc.params[t][[r, col]] = orig + h;
                let up = loss(&enc);
                enc.params[t][[r, col]] = orig - h;
                let down = loss(&enc);
                enc.params[t][[r, col]] = orig;
                let numeric = (up - down) / (2.0 * h);
                assert!(
                    (numeric - grads[t][[r, col]]).abs() < 1e-6,
                    "tensor {t} [{r},{col}]: {numeric} vs {}",
                    grads[t][[r, col]]
                );
            }
        }
    }
}
