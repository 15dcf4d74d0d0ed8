//! Emission encoder, CRF and softmax decoders, training and checkpoints.

pub mod checkpoint;
pub mod crf;
pub mod encoder;
pub mod softmax;
pub mod train;
pub mod vocab;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use ndarray::Array2;

use crate::lexicon::LexiconError;
use crate::tagscheme::TagError;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use crf::{crf_score, log_partition, nll_and_grad, viterbi, TransitionParams, NEG_INF};
pub use encoder::{WindowEncoder, WindowEncoderConfig};
pub use softmax::{softmax, softmax_decode};
pub use train::{predict, train, EpochReport, ModelCheckpoint, TrainConfig, TrainOutcome};
pub use vocab::Vocab;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("empty sequence")]
    EmptySequence,
    #[error("gold path uses a forbidden transition")]
    IllegalGold,
    #[error("token id {id} is outside the vocabulary of {size}")]
    TokenOutOfRange { id: usize, size: usize },
    #[error("no training sentences")]
    EmptyCorpus,
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("checkpoint version {found} is newer than supported version {supported}")]
    UnsupportedVersion { found: u8, supported: u8 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Tag(#[from] TagError),
}

/// Per-token tag scores, `n × K`, all finite.
#[derive(Clone, Debug, PartialEq)]
pub struct EmissionMatrix(Array2<f64>);

impl EmissionMatrix {
    pub fn new(scores: Array2<f64>) -> Result<Self, ModelError> {
        if let Some(((i, k), v)) = scores.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(ModelError::NonFinite(format!("emission [{i}, {k}] = {v}")));
        }
        Ok(EmissionMatrix(scores.as_standard_layout().into_owned()))
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_array(self) -> Array2<f64> {
        self.0
    }

    /// Sequence length `n`.
    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    pub fn num_tags(&self) -> usize {
        self.0.ncols()
    }
}

/// Anything that turns a token-id sequence into emission scores. The
/// decoders only see the resulting [`EmissionMatrix`].
pub trait EmissionEncoder {
    fn num_tags(&self) -> usize;
    fn emissions(&self, token_ids: &[usize]) -> Result<EmissionMatrix, ModelError>;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DecoderMode {
    Softmax,
    #[default]
    Crf,
}

impl fmt::Display for DecoderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecoderMode::Softmax => "softmax",
            DecoderMode::Crf => "crf",
        })
    }
}

impl FromStr for DecoderMode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "softmax" => Ok(DecoderMode::Softmax),
            "crf" => Ok(DecoderMode::Crf),
            _ => Err(ModelError::Config(format!("unknown decoder mode {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emission_matrix_rejects_nan() {
        let mut a = Array2::zeros((2, 3));
        assert!(EmissionMatrix::new(a.clone()).is_ok());
        a[[1, 2]] = f64::NAN;
        assert!(matches!(EmissionMatrix::new(a), Err(ModelError::NonFinite(_))));
    }

    #[test]
    fn mode_round_trip() {
        for m in [DecoderMode::Softmax, DecoderMode::Crf] {
            assert_eq!(m.to_string().parse::<DecoderMode>().unwrap(), m);
        }
        assert!("hmm".parse::<DecoderMode>().is_err());
    }
}
