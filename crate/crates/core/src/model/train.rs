use std::fmt::Write as _;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::crf::{nll_and_grad, viterbi, TransitionParams};
use super::encoder::{EncoderParams, WindowEncoder, WindowEncoderConfig, COMBINER, OUTPUT};
use super::softmax::{cross_entropy_and_grad, softmax_decode};
use super::vocab::Vocab;
use super::{DecoderMode, EmissionEncoder, ModelError};
use crate::corpus::{Document, EntityType, Token};
use crate::eval::evaluate;
use crate::lexicon::{mask, Lexicon, MaskedSentence};
use crate::tagscheme::{
    build_tagset, encode, repair, AnnotatedSentence, JointTag, Strictness, TagSet,
};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub momentum: f64,
    pub seed: u64,
    pub mode: DecoderMode,
    pub encoder: WindowEncoderConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            epochs: 30,
            batch_size: 8,
            l2: 1e-4,
            momentum: 0.9,
            seed: 7,
            mode: DecoderMode::Crf,
            encoder: WindowEncoderConfig::default(),
        }
    }
}

/// Keys accepted by [`TrainConfig::set`], in echo order.
pub const CONFIG_KEYS: [&str; 10] = [
    "lr",
    "epochs",
    "batch",
    "l2",
    "momentum",
    "seed",
    "mode",
    "embedding_dim",
    "hidden_dim",
    "window",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ModelError> {
    value
        .trim()
        .parse()
        .map_err(|_| ModelError::Config(format!("{key}: cannot parse {value:?}")))
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::Config(m.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad("lr must be a non-negative number");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch must be positive");
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return bad("l2 must be non-negative");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if self.encoder.embedding_dim == 0 || self.encoder.hidden_dim == 0 {
            return bad("embedding_dim and hidden_dim must be positive");
        }
        Ok(())
    }

    /// Sets one field by key; unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ModelError> {
        match key {
            "lr" => self.learning_rate = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "batch" => self.batch_size = parse(key, value)?,
            "l2" => self.l2 = parse(key, value)?,
            "momentum" => self.momentum = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "mode" => self.mode = value.trim().parse()?,
            "embedding_dim" => self.encoder.embedding_dim = parse(key, value)?,
            "hidden_dim" => self.encoder.hidden_dim = parse(key, value)?,
            "window" => self.encoder.window = parse(key, value)?,
            _ => return Err(ModelError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "lr" => self.learning_rate.to_string(),
            "epochs" => self.epochs.to_string(),
            "batch" => self.batch_size.to_string(),
            "l2" => self.l2.to_string(),
            "momentum" => self.momentum.to_string(),
            "seed" => self.seed.to_string(),
            "mode" => self.mode.to_string(),
            "embedding_dim" => self.encoder.embedding_dim.to_string(),
            "hidden_dim" => self.encoder.hidden_dim.to_string(),
            "window" => self.encoder.window.to_string(),
            _ => return None,
        })
    }

    /// `key=value` lines in [`CONFIG_KEYS`] order.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for key in CONFIG_KEYS {
            let _ = writeln!(out, "{key}={}", self.get(key).expect("known key"));
        }
        out
    }

    pub fn from_echo(text: &str) -> Result<Self, ModelError> {
        let mut cfg = TrainConfig::default();
        for line in text.lines().filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ModelError::Config(format!("malformed line {line:?}")))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }
}

/// A trained tagger: everything needed to tag new text.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelCheckpoint {
    pub vocab: Vocab,
    pub encoder: WindowEncoder,
    /// Present in CRF mode only.
    pub transitions: Option<TransitionParams>,
    pub tagset: TagSet,
    pub config: TrainConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    pub loss: f64,
    pub dev_entity_f1: Option<f64>,
    pub dev_relation_f1: Option<f64>,
}

impl EpochReport {
    /// `epoch<TAB>loss<TAB>dev_entity_f1<TAB>dev_relation_f1`, `NA` without
    /// a dev set.
    pub fn log_line(&self) -> String {
        let f = |v: Option<f64>| v.map_or("NA".to_string(), |v| format!("{v:.6}"));
        format!(
            "{}\t{:.6}\t{}\t{}",
            self.epoch,
            self.loss,
            f(self.dev_entity_f1),
            f(self.dev_relation_f1)
        )
    }
}

pub struct TrainOutcome {
    pub checkpoint: ModelCheckpoint,
    pub epochs: Vec<EpochReport>,
}

impl TrainOutcome {
    pub fn log(&self) -> String {
        self.epochs.iter().map(|e| e.log_line() + "\n").collect()
    }
}

/// Lexicon matches that take part in masking.
fn mask_tokens(lexicon: &Lexicon, tokens: &[Token]) -> Result<MaskedSentence, ModelError> {
    let matches: Vec<_> = lexicon
        .match_entities(tokens)
        .into_iter()
        .filter(|m| matches!(m.entity, EntityType::Compound | EntityType::Bond))
        .collect();
    Ok(mask(tokens, &matches)?)
}

struct Example {
    tokens: Vec<Token>,
    gold: Vec<usize>,
}

fn prepare(docs: &[Document], lexicon: &Lexicon, tagset: &TagSet) -> Result<Vec<Example>, ModelError> {
    let mut out = Vec::new();
    for sentence in docs.iter().flat_map(|d| &d.sentences) {
        if sentence.is_empty() {
            continue;
        }
        let masked = mask_tokens(lexicon, &sentence.tokens)?;
        let tags = masked.project_tags(&encode(sentence)?)?;
        out.push(Example {
            gold: tagset.ids_of(&tags)?,
            tokens: masked.tokens,
        });
    }
    Ok(out)
}

impl ModelCheckpoint {
    pub fn mode(&self) -> DecoderMode {
        if self.transitions.is_some() {
            DecoderMode::Crf
        } else {
            DecoderMode::Softmax
        }
    }

    fn ids(&self, tokens: &[Token]) -> Vec<usize> {
        tokens.iter().map(|t| self.vocab.id(&t.text)).collect()
    }

    /// Tag ids for already-masked tokens, as the decoder emits them.
    pub fn decode_ids(&self, tokens: &[Token]) -> Result<Vec<usize>, ModelError> {
        if tokens.is_empty() {
            return Ok(Vec::new());
        }
        let o = self.encoder.emissions(&self.ids(tokens))?;
        Ok(match &self.transitions {
            Some(a) => viterbi(&o, a)?.0,
            None => softmax_decode(&o),
        })
    }

    /// Mask, encode, decode, unmask and read off mentions and relations.
    pub fn annotate(&self, lexicon: &Lexicon, tokens: &[Token]) -> Result<AnnotatedSentence, ModelError> {
        let masked = mask_tokens(lexicon, tokens)?;
        let tags = self.tagset.tags_of(&self.decode_ids(&masked.tokens)?);
        let (originals, tags) = masked.unmask(&tags)?;
        Ok(AnnotatedSentence::from_tags(
            originals,
            repair(&tags),
            Strictness::Lenient,
        )?)
    }
}

/// Tags every sentence. Work is spread over the rayon pool; the output is in
/// input order whatever the number of workers.
pub fn predict(
    checkpoint: &ModelCheckpoint,
    lexicon: &Lexicon,
    sentences: &[Vec<Token>],
) -> Result<Vec<AnnotatedSentence>, ModelError> {
    sentences
        .par_iter()
        .map(|tokens| checkpoint.annotate(lexicon, tokens))
        .collect()
}

fn dev_scores(
    checkpoint: &ModelCheckpoint,
    lexicon: &Lexicon,
    dev: &[Document],
) -> Result<(f64, f64), ModelError> {
    let sentences: Vec<_> = dev.iter().flat_map(|d| &d.sentences).collect();
    let gold = sentences
        .iter()
        .map(|s| AnnotatedSentence::from_sentence(s))
        .collect::<Result<Vec<_>, _>>()?;
    let tokens: Vec<Vec<Token>> = sentences.iter().map(|s| s.tokens.clone()).collect();
    let pred = predict(checkpoint, lexicon, &tokens)?;
    let report = evaluate(&gold, &pred).expect("predictions align with gold");
    Ok((report.entities.micro().f1(), report.relations.micro().f1()))
}

/// One SGD-with-momentum step on all weights. L2 applies to weight
/// matrices, not to biases or embeddings.
#[allow(clippy::too_many_arguments)]
fn step(
    encoder: &mut WindowEncoder,
    transitions: Option<&mut TransitionParams>,
    grads: &mut EncoderParams,
    d_trans: &mut Array2<f64>,
    velocity: &mut EncoderParams,
    trans_velocity: &mut Array2<f64>,
    scale: f64,
    config: &TrainConfig,
) {
    let params = encoder.params_mut();
    for (t, ((p, g), v)) in params.iter_mut().zip(grads.iter_mut()).zip(velocity.iter_mut()).enumerate() {
        *g *= scale;
        if t == COMBINER || t == OUTPUT {
            g.scaled_add(config.l2, p);
        }
        *v *= config.momentum;
        *v += &*g;
        p.scaled_add(-config.learning_rate, v);
    }
    if let Some(a) = transitions {
        *d_trans *= scale;
        *trans_velocity *= config.momentum;
        *trans_velocity += &*d_trans;
        a.add_scaled(trans_velocity, -config.learning_rate);
    }
}

/// Trains a tagger on `train_docs`, scoring `dev` after every epoch when
/// given. Deterministic for a fixed config and seed.
pub fn train(
    train_docs: &[Document],
    dev: Option<&[Document]>,
    lexicon: &Lexicon,
    config: &TrainConfig,
) -> Result<TrainOutcome, ModelError> {
    config.validate()?;
    let tagset = build_tagset();
    let examples = prepare(train_docs, lexicon, &tagset)?;
    if examples.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    let vocab = Vocab::build(examples.iter().flat_map(|e| e.tokens.iter().map(|t| t.text.as_str())));
    let ids: Vec<Vec<usize>> = examples
        .iter()
        .map(|e| e.tokens.iter().map(|t| vocab.id(&t.text)).collect())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let encoder = WindowEncoder::new(vocab.len(), tagset.len(), config.encoder, &mut rng);
    let transitions = (config.mode == DecoderMode::Crf).then(|| TransitionParams::for_tagset(&tagset));
    let mut model = ModelCheckpoint {
        vocab,
        encoder,
        transitions,
        tagset,
        config: config.clone(),
    };

    let k2 = model.tagset.len() + 2;
    let mut velocity = model.encoder.zero_grads();
    let mut trans_velocity = Array2::zeros((k2, k2));
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut reports = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut epoch_count = 0usize;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let mut grads = model.encoder.zero_grads();
            let mut d_trans = Array2::zeros((k2, k2));
            let mut batch_loss = 0.0;
            let mut count = 0usize;
            for &i in batch {
                let (o, cache) = model.encoder.forward(&ids[i])?;
                let gold = &examples[i].gold;
                let d_out = match &model.transitions {
                    Some(a) => {
                        let g = nll_and_grad(&o, a, gold)?;
                        batch_loss += g.loss;
                        count += 1;
                        d_trans += &g.d_transitions;
                        g.d_emissions
                    }
                    None => {
                        let (loss, g) = cross_entropy_and_grad(&o, gold);
                        batch_loss += loss;
                        count += gold.len();
                        g
                    }
                };
                model.encoder.backward(&cache, &d_out, &mut grads);
            }
            if !batch_loss.is_finite() {
                return Err(ModelError::NonFinite(format!(
                    "training loss in epoch {epoch}, batch {}",
                    b + 1
                )));
            }
            epoch_loss += batch_loss;
            epoch_count += count;
            step(
                &mut model.encoder,
                model.transitions.as_mut(),
                &mut grads,
                &mut d_trans,
                &mut velocity,
                &mut trans_velocity,
                1.0 / count as f64,
                config,
            );
        }
        let (dev_entity_f1, dev_relation_f1) = match dev {
            Some(d) if !d.is_empty() => {
                let (e, r) = dev_scores(&model, lexicon, d)?;
                (Some(e), Some(r))
            }
            _ => (None, None),
        };
        reports.push(EpochReport {
            epoch,
            loss: epoch_loss / epoch_count as f64,
            dev_entity_f1,
            dev_relation_f1,
        });
    }
    Ok(TrainOutcome {
        checkpoint: model,
        epochs: reports,
    })
}

/// Gold tags of `sentence`, projected onto its masked form. Exposed for
/// tools that want to inspect what the model is trained on.
pub fn masked_training_tags(
    lexicon: &Lexicon,
    sentence: &crate::corpus::Sentence,
) -> Result<(Vec<Token>, Vec<JointTag>), ModelError> {
    let masked = mask_tokens(lexicon, &sentence.tokens)?;
    let tags = masked.project_tags(&encode(sentence)?)?;
    Ok((masked.tokens, tags))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_echo_round_trip() {
        let mut cfg = TrainConfig::default();
        cfg.set("lr", "0.125").unwrap();
        cfg.set("mode", "softmax").unwrap();
        assert_eq!(TrainConfig::from_echo(&cfg.echo()).unwrap(), cfg);
        assert!(cfg.set("nope", "1").is_err());
        assert!(cfg.set("epochs", "many").is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = TrainConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.batch_size = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn log_line_format() {
        let r = EpochReport {
            epoch: 3,
            loss: 0.5,
            dev_entity_f1: None,
            dev_relation_f1: Some(1.0),
        };
        assert_eq!(r.log_line(), "3\t0.500000\tNA\t1.000000");
    }
}
