use rand_chacha::ChaCha8Rng;

use super::prepare::{Answers, PreparedInstance};
use super::{mixture, MixtureOutput, Weighting};
use crate::error::{Error, Result};
use crate::qamodels::{KbParams, SentSelParams, Task};
use crate::scalar::Scalar;
use crate::scorer::{ScorerParams, SCORER_PREFIX};
use crate::tensornet::{
    init_uniform_prefix, stream_rng, Checkpoint, Grads, ParamStore, Pretrained, Stream, Tape, Var, Vocab,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QaParams {
    Kb(KbParams),
    SentSel(SentSelParams),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelDims {
    /// LSTM hidden size `n`.
    pub hidden: usize,
    /// Embedding size `d`.
    pub embed: usize,
}

/// Scorer and QA back-end sharing one parameter store.
#[derive(Clone, Debug)]
pub struct Model<T: Scalar> {
    pub store: ParamStore<T>,
    pub vocab: Vocab,
    pub task: Task,
    pub dims: ModelDims,
    pub scorer: ScorerParams,
    pub qa: QaParams,
    /// Dropout rate used when training.
    pub dropout: f64,
}

/// Dropout generators for one forward pass; absent at evaluation.
pub struct DropoutRngs<'a> {
    pub qa: &'a mut ChaCha8Rng,
    pub scorer: &'a mut ChaCha8Rng,
}

pub const MODEL_FORMAT: &str = "paraqa-model";

pub const QA_PREFIX: &str = "qa";

impl<T: Scalar> Model<T> {
    /// Registers all parameters and draws them from `U(-0.08, 0.08)`; the
    /// scorer and the QA model use separate init streams.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        task: Task,
        vocab: Vocab,
        dims: ModelDims,
        kb_features: usize,
        use_counts: bool,
        pretrained: Option<&Pretrained>,
        dropout: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::config("dropout", format!("{dropout} outside [0, 1)")));
        }
        let mut store = ParamStore::new();
        let scorer = ScorerParams::register(&mut store, &vocab, dims.embed, dims.hidden, pretrained)?;
        let qa = match task {
            Task::Kb => QaParams::Kb(KbParams::register(&mut store, kb_features)?),
            Task::SentSel => QaParams::SentSel(SentSelParams::register(
                &mut store,
                &vocab,
                dims.embed,
                dims.hidden,
                pretrained,
                use_counts,
            )?),
        };
        init_uniform_prefix(&mut store, SCORER_PREFIX, -0.08, 0.08, &mut stream_rng(seed, Stream::ScorerInit))?;
        init_uniform_prefix(&mut store, QA_PREFIX, -0.08, 0.08, &mut stream_rng(seed, Stream::Init))?;
        if let QaParams::SentSel(p) = qa {
            p.reset_count_weights(&mut store);
        }
        Ok(Model {
            store,
            vocab,
            task,
            dims,
            scorer,
            qa,
            dropout,
        })
    }

    pub fn checkpoint_meta(&self) -> Vec<(String, String)> {
        let mut meta = vec![
            ("format".to_string(), MODEL_FORMAT.to_string()),
            ("task".to_string(), self.task.to_string()),
            ("hidden".to_string(), self.dims.hidden.to_string()),
            ("embed".to_string(), self.dims.embed.to_string()),
            ("dropout".to_string(), format!("{:?}", self.dropout)),
        ];
        meta.extend(self.vocab.words().iter().map(|w| ("vocab".to_string(), w.clone())));
        meta
    }

    pub fn from_checkpoint(ckpt: Checkpoint<T>, kb_features: usize) -> Result<Self> {
        let get = |k: &str| {
            ckpt.meta_value(k)
                .ok_or_else(|| Error::Checkpoint(format!("missing `{k}` metadata")))
        };
        if get("format")? != MODEL_FORMAT {
            return Err(Error::Checkpoint("not a model checkpoint".into()));
        }
        let num = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| Error::Checkpoint(format!("bad `{k}` metadata")))
        };
        let task: Task = get("task")?.parse().map_err(|_| Error::Checkpoint("bad task".into()))?;
        let dims = ModelDims {
            hidden: num("hidden")?,
            embed: num("embed")?,
        };
        let dropout: f64 = get("dropout")?
            .parse()
            .map_err(|_| Error::Checkpoint("bad `dropout` metadata".into()))?;
        let vocab = Vocab::from_words(ckpt.meta_values("vocab"));
        let store = ckpt.store;
        let scorer = ScorerParams::load(&store)?;
        if scorer.encoder.fwd.hidden != dims.hidden || scorer.encoder.emb.dim != dims.embed {
            return Err(Error::Checkpoint("scorer sizes disagree with metadata".into()));
        }
        if scorer.encoder.emb.rows(&store) != vocab.len() {
            return Err(Error::Checkpoint("embedding rows disagree with the vocabulary".into()));
        }
        let qa = match task {
            Task::Kb => QaParams::Kb(KbParams::load(&store, kb_features)?),
            Task::SentSel => QaParams::SentSel(SentSelParams::load(&store)?),
        };
        Ok(Model {
            store,
            vocab,
            task,
            dims,
            scorer,
            qa,
            dropout,
        })
    }

    /// Per-paraphrase QA probability nodes, `[paraphrase][answer]`.
    fn qa_nodes(
        &self,
        tape: &mut Tape<'_, T>,
        inst: &PreparedInstance,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Vec<Vec<Var>>> {
        let rate = self.dropout;
        match (&self.qa, &inst.answers) {
            (QaParams::Kb(p), Answers::Kb { features, .. }) => features
                .iter()
                .map(|rows| rows.iter().map(|f| p.prob_on(tape, f)).collect())
                .collect(),
            (QaParams::SentSel(p), Answers::SentSel { sentences, counts, .. }) => {
                let mut sent_vecs = Vec::with_capacity(sentences.len());
                for s in sentences {
                    sent_vecs.push(p.sentence.encode(tape, &self.vocab, &s.texts(), rate, rng.as_deref_mut())?);
                }
                let mut out = Vec::with_capacity(inst.paraphrases.len());
                for (para, row) in inst.paraphrases.iter().zip(counts) {
                    let q = p.question.encode(tape, &self.vocab, &para.tokens.texts(), rate, rng.as_deref_mut())?;
                    let probs = sent_vecs
                        .iter()
                        .zip(row)
                        .map(|(&s, &c)| p.prob_on(tape, q, s, Some(c)))
                        .collect::<Result<Vec<_>>>()?;
                    out.push(probs);
                }
                Ok(out)
            }
            _ => Err(Error::InvalidArgument(format!(
                "{}: instance does not match the `{}` model",
                inst.id, self.task
            ))),
        }
    }

    /// Normalized paraphrase weights as one node.
    fn weight_node(
        &self,
        tape: &mut Tape<'_, T>,
        inst: &PreparedInstance,
        weighting: Weighting,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Var> {
        let m = inst.paraphrases.len();
        if m == 0 {
            return Err(Error::InvalidArgument(format!("{}: no paraphrase candidates", inst.id)));
        }
        match weighting {
            Weighting::Uniform => {
                let zeros = tape.input(vec![T::zero(); m]);
                Ok(tape.softmax(zeros))
            }
            Weighting::Learned if m == 1 => Ok(tape.input(vec![T::one()])),
            Weighting::Learned => {
                let q = inst.question.texts();
                let cands: Vec<Vec<&str>> = inst.paraphrases.iter().map(|p| p.tokens.texts()).collect();
                self.scorer
                    .weights_on(tape, &self.vocab, &q, &cands, self.dropout, rng)
            }
        }
    }

    /// Builds the forward graph; returns `(weights, qa rows, mixture per answer)`.
    fn forward(
        &self,
        tape: &mut Tape<'_, T>,
        inst: &PreparedInstance,
        weighting: Weighting,
        rngs: Option<DropoutRngs<'_>>,
    ) -> Result<(Var, Vec<Vec<Var>>, Vec<Var>)> {
        if inst.answer_count() == 0 {
            return Err(Error::NoCandidates);
        }
        let (qa_rng, sc_rng) = match rngs {
            Some(r) => (Some(r.qa), Some(r.scorer)),
            None => (None, None),
        };
        let weights = self.weight_node(tape, inst, weighting, sc_rng)?;
        let qa = self.qa_nodes(tape, inst, qa_rng)?;
        let mut mix = Vec::with_capacity(inst.answer_count());
        for a in 0..inst.answer_count() {
            let column: Vec<Var> = qa.iter().map(|row| row[a]).collect();
            let col = tape.concat(&column);
            mix.push(tape.dot(weights, col)?);
        }
        Ok((weights, qa, mix))
    }

    /// Evaluation-mode mixture.
    pub fn mixture_predict(&self, inst: &PreparedInstance, weighting: Weighting) -> Result<MixtureOutput<T>> {
        let mut tape = Tape::new(&self.store);
        let (w, qa, _) = self.forward(&mut tape, inst, weighting, None)?;
        let weights = tape.value(w).to_vec();
        let qa: Vec<Vec<T>> = qa
            .iter()
            .map(|row| row.iter().map(|&v| tape.scalar(v)).collect())
            .collect();
        let mixture = mixture(&weights, &qa)?;
        Ok(MixtureOutput { weights, qa, mixture })
    }

    fn loss_node(&self, tape: &mut Tape<'_, T>, inst: &PreparedInstance, weighting: Weighting, rngs: Option<DropoutRngs<'_>>) -> Result<Var> {
        let (_, _, mix) = self.forward(tape, inst, weighting, rngs)?;
        let terms: Vec<Var> = mix
            .iter()
            .zip(inst.targets())
            .map(|(&p, t)| tape.bce(p, T::lit(t)))
            .collect();
        Ok(tape.mean(&terms))
    }

    /// Mean binary cross-entropy between mixture probabilities and targets.
    pub fn loss(&self, inst: &PreparedInstance, weighting: Weighting) -> Result<T> {
        let mut tape = Tape::new(&self.store);
        let l = self.loss_node(&mut tape, inst, weighting, None)?;
        Ok(tape.scalar(l))
    }

    pub fn loss_and_grads(
        &self,
        inst: &PreparedInstance,
        weighting: Weighting,
        rngs: Option<DropoutRngs<'_>>,
    ) -> Result<(T, Grads<T>)> {
        Self::loss_and_grads_with(&self.store, self, inst, weighting, rngs)
    }

    /// Like [`Model::loss_and_grads`] but reading parameter values from
    /// `store`, which must share this model's layout.
    pub fn loss_and_grads_with(
        store: &ParamStore<T>,
        layout: &Model<T>,
        inst: &PreparedInstance,
        weighting: Weighting,
        rngs: Option<DropoutRngs<'_>>,
    ) -> Result<(T, Grads<T>)> {
        let mut tape = Tape::new(store);
        let l = layout.loss_node(&mut tape, inst, weighting, rngs)?;
        Ok((tape.scalar(l), tape.backward(l)))
    }
}
