use rand_chacha::ChaCha8Rng;

use super::embed::{EmbeddingParams, Pretrained, Vocab, BOS_ID, EOS_ID};
use super::lstm::{bilstm, LstmParams};
use super::params::ParamStore;
use super::tape::{Tape, Var};
use crate::error::Result;
use crate::scalar::Scalar;

/// Embedding table plus a bidirectional LSTM, registered under one prefix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Encoder {
    pub emb: EmbeddingParams,
    pub fwd: LstmParams,
    pub bwd: LstmParams,
}

impl Encoder {
    pub fn register<T: Scalar>(
        store: &mut ParamStore<T>,
        prefix: &str,
        vocab: &Vocab,
        dim: usize,
        hidden: usize,
        pretrained: Option<&Pretrained>,
    ) -> Result<Self> {
        let emb = EmbeddingParams::register(store, prefix, vocab, dim, pretrained)?;
        let fwd = LstmParams::register(store, &format!("{prefix}.fwd"), hidden, dim)?;
        let bwd = LstmParams::register(store, &format!("{prefix}.bwd"), hidden, dim)?;
        Ok(Encoder { emb, fwd, bwd })
    }

    pub fn load<T: Scalar>(store: &ParamStore<T>, prefix: &str) -> Result<Self> {
        let emb = EmbeddingParams::load(store, prefix)?;
        let fwd = LstmParams::load(store, &format!("{prefix}.fwd"))?;
        let bwd = LstmParams::load(store, &format!("{prefix}.bwd"))?;
        if fwd.input_dim != emb.dim || bwd.input_dim != emb.dim || fwd.hidden != bwd.hidden {
            return Err(crate::Error::Checkpoint(format!("`{prefix}` encoder sizes disagree")));
        }
        Ok(Encoder { emb, fwd, bwd })
    }

    /// Width of the encoding, `2n`.
    pub fn output_len(&self) -> usize {
        2 * self.fwd.hidden
    }

    /// Encodes `<s> tokens </s>`. With an rng, dropout at `rate` is applied
    /// to every input embedding and to the output.
    pub fn encode<T: Scalar, S: AsRef<str>>(
        &self,
        tape: &mut Tape<'_, T>,
        vocab: &Vocab,
        tokens: &[S],
        rate: f64,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Var> {
        let ids = std::iter::once(BOS_ID)
            .chain(tokens.iter().map(|t| vocab.get(t.as_ref())))
            .chain(std::iter::once(EOS_ID));
        let mut xs = Vec::with_capacity(tokens.len() + 2);
        for id in ids {
            let mut x = self.emb.lookup(tape, id)?;
            if let Some(r) = rng.as_deref_mut() {
                x = tape.dropout(x, rate, r)?;
            }
            xs.push(x);
        }
        let mut out = bilstm(tape, &xs, &self.fwd, &self.bwd)?;
        if let Some(r) = rng.as_deref_mut() {
            out = tape.dropout(out, rate, r)?;
        }
        Ok(out)
    }
}
