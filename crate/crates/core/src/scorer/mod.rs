//! Paraphrase scoring: a shared BiLSTM encoder, a trilinear score over
//! `[q, q', q ⊙ q']`, and a softmax over the candidate set.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensornet::{softmax_values, Encoder, ParamId, ParamStore, Pretrained, Tape, Tensor, Var, Vocab};
use crate::textkit::TokenSeq;

/// Name prefix of every scorer parameter.
pub const SCORER_PREFIX: &str = "scorer";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScorerParams {
    pub encoder: Encoder,
    /// Length `6n`.
    pub weights: ParamId,
    /// Length 1.
    pub bias: ParamId,
}

/// Trilinear score head over two `2n` encodings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairHead {
    pub weights: ParamId,
    pub bias: ParamId,
}

impl PairHead {
    pub fn register<T: Scalar>(store: &mut ParamStore<T>, prefix: &str, enc_len: usize) -> Result<Self> {
        let weights = store.add(&format!("{prefix}.w"), Tensor::zeros(vec![3 * enc_len]), true)?;
        let bias = store.add(&format!("{prefix}.b"), Tensor::zeros(vec![1]), true)?;
        Ok(PairHead { weights, bias })
    }

    pub fn load<T: Scalar>(store: &ParamStore<T>, prefix: &str, enc_len: usize) -> Result<Self> {
        let weights = store.require(&format!("{prefix}.w"))?;
        let bias = store.require(&format!("{prefix}.b"))?;
        if store.value(weights).len() != 3 * enc_len || store.value(bias).len() != 1 {
            return Err(Error::Checkpoint(format!("`{prefix}` head has the wrong size")));
        }
        Ok(PairHead { weights, bias })
    }

    /// `w · [a, b, a ⊙ b] + bias` on the tape.
    pub fn score<T: Scalar>(&self, tape: &mut Tape<'_, T>, a: Var, b: Var) -> Result<Var> {
        let prod = tape.mul(a, b)?;
        let feats = tape.concat(&[a, b, prod]);
        let w = tape.param(self.weights);
        let dot = tape.dot(w, feats)?;
        let bias = tape.param(self.bias);
        tape.add(dot, bias)
    }
}

impl ScorerParams {
    pub fn register<T: Scalar>(
        store: &mut ParamStore<T>,
        vocab: &Vocab,
        dim: usize,
        hidden: usize,
        pretrained: Option<&Pretrained>,
    ) -> Result<Self> {
        let encoder = Encoder::register(store, SCORER_PREFIX, vocab, dim, hidden, pretrained)?;
        let head = PairHead::register(store, SCORER_PREFIX, encoder.output_len())?;
        Ok(ScorerParams {
            encoder,
            weights: head.weights,
            bias: head.bias,
        })
    }

    pub fn load<T: Scalar>(store: &ParamStore<T>) -> Result<Self> {
        let encoder = Encoder::load(store, SCORER_PREFIX)?;
        let head = PairHead::load(store, SCORER_PREFIX, encoder.output_len())?;
        Ok(ScorerParams {
            encoder,
            weights: head.weights,
            bias: head.bias,
        })
    }

    fn head(&self) -> PairHead {
        PairHead {
            weights: self.weights,
            bias: self.bias,
        }
    }

    pub fn encode_on<T: Scalar, S: AsRef<str>>(
        &self,
        tape: &mut Tape<'_, T>,
        vocab: &Vocab,
        tokens: &[S],
        rate: f64,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Var> {
        self.encoder.encode(tape, vocab, tokens, rate, rng)
    }

    pub fn score_on<T: Scalar>(&self, tape: &mut Tape<'_, T>, q: Var, p: Var) -> Result<Var> {
        self.head().score(tape, q, p)
    }

    /// Normalized weights over `candidates` as one softmax node. The
    /// question is encoded once and shared by every pair.
    pub fn weights_on<T: Scalar, S: AsRef<str>>(
        &self,
        tape: &mut Tape<'_, T>,
        vocab: &Vocab,
        question: &[S],
        candidates: &[Vec<S>],
        rate: f64,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Var> {
        if candidates.is_empty() {
            return Err(Error::EmptyInput);
        }
        let q = self.encode_on(tape, vocab, question, rate, rng.as_deref_mut())?;
        let mut scores = Vec::with_capacity(candidates.len());
        for c in candidates {
            let p = self.encode_on(tape, vocab, c, rate, rng.as_deref_mut())?;
            scores.push(self.score_on(tape, q, p)?);
        }
        let stacked = tape.concat(&scores);
        Ok(tape.softmax(stacked))
    }
}

/// Encoding of `q` as a plain vector. Dropout applies only with an rng.
pub fn encode<T: Scalar>(
    q: &TokenSeq,
    store: &ParamStore<T>,
    params: &ScorerParams,
    vocab: &Vocab,
    rate: f64,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<Vec<T>> {
    let mut tape = Tape::new(store);
    let v = params.encode_on(&mut tape, vocab, &q.texts(), rate, rng)?;
    Ok(tape.value(v).to_vec())
}

/// `w · [q, p, q ⊙ p] + b`.
pub fn score<T: Scalar>(q_vec: &[T], p_vec: &[T], store: &ParamStore<T>, params: &ScorerParams) -> Result<T> {
    let want = params.encoder.output_len();
    if q_vec.len() != want || p_vec.len() != want {
        return Err(Error::Shape(format!(
            "encodings of length {} and {}, expected {want}",
            q_vec.len(),
            p_vec.len()
        )));
    }
    let mut tape = Tape::new(store);
    let q = tape.input(q_vec.to_vec());
    let p = tape.input(p_vec.to_vec());
    let s = params.score_on(&mut tape, q, p)?;
    Ok(tape.scalar(s))
}

/// Max-subtracted softmax.
pub fn normalize<T: Scalar>(scores: &[T]) -> Result<Vec<T>> {
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(softmax_values(scores))
}
