//! A small trainable encoder/decoder usable as a translation model for the
//! pivot generator.

use rand::seq::SliceRandom;

use super::embed::{EmbeddingParams, Vocab, BOS_ID, EOS_ID};
use super::lstm::LstmParams;
use super::params::{clip_grad_norm, init_uniform, rmsprop_update, ParamId, ParamStore, RmsProp};
use super::rng::{stream_rng, Stream};
use super::tape::{softmax_values, Tape, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::paragen::pivot::SeqModel;
use crate::scalar::Scalar;

pub struct TinySeq2Seq<T: Scalar> {
    store: ParamStore<T>,
    vocab: Vocab,
    tokens: Vec<String>,
    src_emb: EmbeddingParams,
    src: LstmParams,
    tgt_emb: EmbeddingParams,
    dec: LstmParams,
    out_w: ParamId,
    out_b: ParamId,
}

impl<T: Scalar> TinySeq2Seq<T> {
    /// Source and target share `vocab`; parameters start in `U(-0.08, 0.08)`.
    pub fn new(vocab: Vocab, dim: usize, hidden: usize, seed: u64) -> Result<Self> {
        let mut store = ParamStore::new();
        let src_emb = EmbeddingParams::register(&mut store, "s2s.src", &vocab, dim, None)?;
        let src = LstmParams::register(&mut store, "s2s.src.lstm", hidden, dim)?;
        let tgt_emb = EmbeddingParams::register(&mut store, "s2s.tgt", &vocab, dim, None)?;
        let dec = LstmParams::register(&mut store, "s2s.dec.lstm", hidden, dim)?;
        let out_w = store.add("s2s.out.w", Tensor::zeros(vec![vocab.len(), hidden]), true)?;
        let out_b = store.add("s2s.out.b", Tensor::zeros(vec![vocab.len()]), true)?;
        init_uniform(&mut store, -0.08, 0.08, &mut stream_rng(seed, Stream::Init))?;
        let tokens = (0..vocab.len()).map(|i| vocab.token(i).to_string()).collect();
        Ok(TinySeq2Seq {
            store,
            vocab,
            tokens,
            src_emb,
            src,
            tgt_emb,
            dec,
            out_w,
            out_b,
        })
    }

    pub fn store(&self) -> &ParamStore<T> {
        &self.store
    }

    fn encode(&self, tape: &mut Tape<'_, T>, source: &[String]) -> Result<(Var, Var)> {
        let mut xs = Vec::with_capacity(source.len() + 1);
        for id in source.iter().map(|t| self.vocab.get(t)).chain([EOS_ID]) {
            xs.push(self.src_emb.lookup(tape, id)?);
        }
        let h = tape.input(vec![T::zero(); self.src.hidden]);
        let c = tape.input(vec![T::zero(); self.src.hidden]);
        self.src.run_from(tape, &xs, h, c, false)
    }

    /// Logits after feeding `<s>` and then each prefix token.
    fn decode_logits(&self, tape: &mut Tape<'_, T>, source: &[String], prefix: &[usize]) -> Result<Vec<Var>> {
        let (mut h, mut c) = self.encode(tape, source)?;
        let mut logits = Vec::with_capacity(prefix.len() + 1);
        for &id in std::iter::once(&BOS_ID).chain(prefix) {
            let x = self.tgt_emb.lookup(tape, id)?;
            (h, c) = self.dec.step(tape, h, c, x)?;
            let z = tape.matvec(self.out_w, h)?;
            let b = tape.param(self.out_b);
            logits.push(tape.add(z, b)?);
        }
        Ok(logits)
    }

    /// Mean per-token cross-entropy of `target </s>` given `source`.
    fn pair_loss(&self, tape: &mut Tape<'_, T>, source: &[String], target: &[String]) -> Result<Var> {
        let ids: Vec<usize> = target.iter().map(|t| self.vocab.get(t)).collect();
        let logits = self.decode_logits(tape, source, &ids)?;
        let mut terms = Vec::with_capacity(logits.len());
        for (z, gold) in logits.into_iter().zip(ids.iter().copied().chain([EOS_ID])) {
            terms.push(tape.cross_entropy(z, gold)?);
        }
        Ok(tape.mean(&terms))
    }

    /// Full-batch RMSProp with clipping at 5. Returns the mean loss before
    /// each epoch's update.
    pub fn train(&mut self, pairs: &[(Vec<String>, Vec<String>)], epochs: usize, opt: RmsProp, seed: u64) -> Result<Vec<f64>> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("no training pairs".into()));
        }
        let mut rng = stream_rng(seed, Stream::Shuffle);
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        let mut history = Vec::with_capacity(epochs);
        for _ in 0..epochs {
            order.shuffle(&mut rng);
            let mut total = super::params::Grads::zeros(&self.store);
            let mut loss_sum = 0.0;
            for &i in &order {
                let (src, tgt) = &pairs[i];
                let mut tape = Tape::new(&self.store);
                let l = self.pair_loss(&mut tape, src, tgt)?;
                loss_sum += tape.scalar(l).as_f64();
                total.accumulate(&tape.backward(l), T::one() / T::lit(pairs.len() as f64));
            }
            clip_grad_norm(&mut total, T::lit(5.0));
            rmsprop_update(&mut self.store, &total, opt);
            history.push(loss_sum / pairs.len() as f64);
        }
        Ok(history)
    }
}

impl<T: Scalar> SeqModel for TinySeq2Seq<T> {
    fn vocab(&self) -> &[String] {
        &self.tokens
    }

    fn eos(&self) -> usize {
        EOS_ID
    }

    fn next_token_probs(&self, source: &[String], prefix: &[usize]) -> Vec<f64> {
        let mut tape = Tape::new(&self.store);
        let logits = self
            .decode_logits(&mut tape, source, prefix)
            .expect("decoder shapes fixed at construction");
        let last = *logits.last().expect("at least one step");
        softmax_values(tape.value(last)).into_iter().map(|p| p.as_f64()).collect()
    }

    fn max_output_len(&self, source: &[String]) -> usize {
        source.len() + 3
    }
}
