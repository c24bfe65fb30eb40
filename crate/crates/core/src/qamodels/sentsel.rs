//! Answer sentence selection: separate question and sentence encoders, a
//! trilinear score, and optional word-match count features.

use std::collections::{BTreeSet, HashMap};

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::scorer::PairHead;
use crate::tensornet::{Encoder, ParamId, ParamStore, Pretrained, Tape, Tensor, Var, Vocab};
use crate::textkit::TokenSeq;

pub const SENTSEL_PREFIX: &str = "qa.ss";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SentSelParams {
    pub question: Encoder,
    pub sentence: Encoder,
    pub head: PairHead,
    /// Weights on `(model score, count, idf count)` when count features are on.
    pub count_weights: Option<ParamId>,
}

impl SentSelParams {
    pub fn register<T: Scalar>(
        store: &mut ParamStore<T>,
        vocab: &Vocab,
        dim: usize,
        hidden: usize,
        pretrained: Option<&Pretrained>,
        use_counts: bool,
    ) -> Result<Self> {
        let question = Encoder::register(store, &format!("{SENTSEL_PREFIX}.q"), vocab, dim, hidden, pretrained)?;
        let sentence = Encoder::register(store, &format!("{SENTSEL_PREFIX}.s"), vocab, dim, hidden, pretrained)?;
        let head = PairHead::register(store, SENTSEL_PREFIX, question.output_len())?;
        let count_weights = if use_counts {
            Some(store.add(&format!("{SENTSEL_PREFIX}.cnt"), Tensor::zeros(vec![3]), true)?)
        } else {
            None
        };
        Ok(SentSelParams {
            question,
            sentence,
            head,
            count_weights,
        })
    }

    pub fn load<T: Scalar>(store: &ParamStore<T>) -> Result<Self> {
        let question = Encoder::load(store, &format!("{SENTSEL_PREFIX}.q"))?;
        let sentence = Encoder::load(store, &format!("{SENTSEL_PREFIX}.s"))?;
        if question.output_len() != sentence.output_len() {
            return Err(Error::Checkpoint("question and sentence encoders differ in size".into()));
        }
        let head = PairHead::load(store, SENTSEL_PREFIX, question.output_len())?;
        let count_weights = store.id(&format!("{SENTSEL_PREFIX}.cnt"));
        Ok(SentSelParams {
            question,
            sentence,
            head,
            count_weights,
        })
    }

    /// Sets the count combination to pass the model score through unchanged.
    pub fn reset_count_weights<T: Scalar>(&self, store: &mut ParamStore<T>) {
        if let Some(id) = self.count_weights {
            store.value_mut(id).data_mut().copy_from_slice(&[T::one(), T::zero(), T::zero()]);
        }
    }

    /// Probability node for an encoded pair. `counts` is required when the
    /// count weights exist and ignored otherwise.
    pub fn prob_on<T: Scalar>(&self, tape: &mut Tape<'_, T>, q: Var, s: Var, counts: Option<[f64; 2]>) -> Result<Var> {
        let score = self.head.score(tape, q, s)?;
        let z = match self.count_weights {
            Some(u) => {
                let [c, ic] = counts.ok_or_else(|| Error::InvalidArgument("count features missing".into()))?;
                let extra = tape.input(vec![T::lit(c), T::lit(ic)]);
                let feats = tape.concat(&[score, extra]);
                let u = tape.param(u);
                tape.dot(u, feats)?
            }
            None => score,
        };
        Ok(tape.sigmoid(z))
    }
}

/// Probability that `sentence` answers `q` as a plain value.
#[allow(clippy::too_many_arguments)]
pub fn sentsel_prob<T: Scalar>(
    q: &TokenSeq,
    sentence: &TokenSeq,
    store: &ParamStore<T>,
    params: &SentSelParams,
    vocab: &Vocab,
    counts: Option<[f64; 2]>,
    rate: f64,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<T> {
    let mut tape = Tape::new(store);
    let qv = params.question.encode(&mut tape, vocab, &q.texts(), rate, rng.as_deref_mut())?;
    let sv = params.sentence.encode(&mut tape, vocab, &sentence.texts(), rate, rng.as_deref_mut())?;
    let p = params.prob_on(&mut tape, qv, sv, counts)?;
    Ok(tape.scalar(p))
}

/// Inverse document frequency over a sentence collection:
/// `ln(N / df)`, with unseen words counted as `df = 1`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IdfTable {
    docs: usize,
    df: HashMap<String, usize>,
}

impl IdfTable {
    pub fn from_sentences<'a, I: IntoIterator<Item = &'a TokenSeq>>(sentences: I) -> Self {
        let mut table = IdfTable::default();
        for s in sentences {
            table.docs += 1;
            let distinct: BTreeSet<&str> = s.texts().into_iter().collect();
            for w in distinct {
                *table.df.entry(w.to_string()).or_default() += 1;
            }
        }
        table
    }

    pub fn from_counts<I: IntoIterator<Item = (String, usize)>>(docs: usize, df: I) -> Self {
        IdfTable {
            docs,
            df: df.into_iter().collect(),
        }
    }

    pub fn docs(&self) -> usize {
        self.docs
    }

    /// Document frequencies sorted by word.
    pub fn counts(&self) -> Vec<(&str, usize)> {
        let mut v: Vec<(&str, usize)> = self.df.iter().map(|(w, &n)| (w.as_str(), n)).collect();
        v.sort();
        v
    }

    pub fn idf(&self, word: &str) -> f64 {
        if self.docs == 0 {
            return 0.0;
        }
        let df = self.df.get(word).copied().unwrap_or(1).max(1);
        (self.docs as f64 / df as f64).ln()
    }
}

/// `(count, idf-weighted count)` of distinct question content words that
/// occur in the sentence.
pub fn word_match_features(q: &TokenSeq, sentence: &TokenSeq, idf: &IdfTable) -> [f64; 2] {
    let sent: BTreeSet<&str> = sentence.texts().into_iter().collect();
    let shared: BTreeSet<&str> = q.content().into_iter().filter(|w| sent.contains(w)).collect();
    let count = shared.len() as f64;
    let weighted = shared.iter().map(|w| idf.idf(w)).sum();
    [count, weighted]
}
