use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;

use super::model::Model;
use super::prepare::PreparedInstance;
use super::{MixtureOutput, TrainConfig, Weighting};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::scorer::SCORER_PREFIX;
use crate::tensornet::{clip_grad_norm, rmsprop_update, stream_rng, Grads, Stream, Tape};
use crate::textkit::{normalize, TokenSeq};

/// Mixture with every paraphrase weighted equally.
pub fn baseline_avgpara<T: Scalar>(model: &Model<T>, inst: &PreparedInstance) -> Result<MixtureOutput<T>> {
    model.mixture_predict(inst, Weighting::Uniform)
}

/// Longer questions are dropped from pair training.
pub const MAX_PAIR_TOKENS: usize = 25;

#[derive(Clone, Debug, PartialEq)]
pub struct PairExample {
    pub question: TokenSeq,
    pub other: TokenSeq,
    pub paraphrase: bool,
}

/// `label<TAB>question<TAB>question` per line, label 0 or 1.
pub fn read_pairs(path: &Path) -> Result<Vec<PairExample>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(Error::parse(path, n + 1, "expected label, question, question"));
        }
        let paraphrase = match f[0] {
            "0" => false,
            "1" => true,
            other => return Err(Error::parse(path, n + 1, format!("label `{other}` is not 0 or 1"))),
        };
        let q = normalize(f[1]).map_err(|e| Error::parse(path, n + 1, e.to_string()))?;
        let o = normalize(f[2]).map_err(|e| Error::parse(path, n + 1, e.to_string()))?;
        out.push(PairExample {
            question: q,
            other: o,
            paraphrase,
        });
    }
    Ok(out)
}

impl<T: Scalar> Model<T> {
    /// Probability that the pair is a paraphrase: the sigmoid of the scorer
    /// score, without dropout.
    pub fn pair_prob(&self, pair: &PairExample) -> Result<T> {
        let mut tape = Tape::new(&self.store);
        let q = self.scorer.encode_on(&mut tape, &self.vocab, &pair.question.texts(), 0.0, None)?;
        let o = self.scorer.encode_on(&mut tape, &self.vocab, &pair.other.texts(), 0.0, None)?;
        let s = self.scorer.score_on(&mut tape, q, o)?;
        let p = tape.sigmoid(s);
        Ok(tape.scalar(p))
    }
}

/// Trains only the scorer as a pair classifier (binary cross-entropy on the
/// sigmoid of its score), then freezes it. Returns the mean loss per epoch.
pub fn baseline_seppara_train<T: Scalar>(
    model: &mut Model<T>,
    pairs: &[PairExample],
    cfg: &TrainConfig,
    epochs: usize,
) -> Result<Vec<f64>> {
    let usable: Vec<&PairExample> = pairs
        .iter()
        .filter(|p| p.question.len() <= MAX_PAIR_TOKENS && p.other.len() <= MAX_PAIR_TOKENS)
        .collect();
    if usable.is_empty() {
        return Err(Error::InvalidArgument("no usable question pairs".into()));
    }
    if cfg.batch == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let mut shuffle = stream_rng(cfg.seed, Stream::Shuffle);
    let mut drop = stream_rng(cfg.seed, Stream::ScorerDropout);
    let mut order: Vec<usize> = (0..usable.len()).collect();
    let mut history = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        order.shuffle(&mut shuffle);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch) {
            let mut total = Grads::zeros(&model.store);
            let scale = T::one() / T::lit(batch.len() as f64);
            for &i in batch {
                let pair = usable[i];
                let mut tape = Tape::new(&model.store);
                let rate = model.dropout;
                let q = model
                    .scorer
                    .encode_on(&mut tape, &model.vocab, &pair.question.texts(), rate, Some(&mut drop))?;
                let o = model
                    .scorer
                    .encode_on(&mut tape, &model.vocab, &pair.other.texts(), rate, Some(&mut drop))?;
                let s = model.scorer.score_on(&mut tape, q, o)?;
                let p = tape.sigmoid(s);
                let target = if pair.paraphrase { T::one() } else { T::zero() };
                let l = tape.bce(p, target);
                loss_sum += tape.scalar(l).as_f64();
                total.accumulate(&tape.backward(l), scale);
            }
            clip_grad_norm(&mut total, T::lit(cfg.clip));
            rmsprop_update(&mut model.store, &total, cfg.optimizer);
        }
        history.push(loss_sum / usable.len() as f64);
    }
    model.store.reset_accumulators();
    model.store.set_trainable_prefix(&format!("{SCORER_PREFIX}."), false);
    Ok(history)
}
