//! Turning dataset records into model-ready instances: paraphrases are
//! generated once, answer candidates and per-paraphrase features are cached.

use std::collections::BTreeSet;

use crate::error::Result;
use crate::paragen::{GeneratorSet, Origin, ParaphraseCandidate};
use crate::qamodels::{
    generate_subgraphs, kb_feature_values, link_entities, word_match_features, Gold, IdfTable, QaInstance,
    SubgraphCandidate, Task, ToyKb,
};
use crate::tensornet::{Pretrained, Vocab};
use crate::textkit::TokenSeq;

/// Resources needed to build answer candidates.
pub enum Backend<'a> {
    Kb(&'a ToyKb),
    SentSel(&'a IdfTable),
}

impl Backend<'_> {
    pub fn task(&self) -> Task {
        match self {
            Backend::Kb(_) => Task::Kb,
            Backend::SentSel(_) => Task::SentSel,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Answers {
    Kb {
        candidates: Vec<SubgraphCandidate>,
        /// `[paraphrase][candidate]` feature rows.
        features: Vec<Vec<Vec<f64>>>,
        gold: BTreeSet<String>,
    },
    SentSel {
        sentences: Vec<TokenSeq>,
        labels: Vec<bool>,
        /// `[paraphrase][sentence]` word-match counts.
        counts: Vec<Vec<[f64; 2]>>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PreparedInstance {
    pub id: String,
    pub question: TokenSeq,
    /// Generated rewrites followed by the identity, which is always last.
    pub paraphrases: Vec<ParaphraseCandidate>,
    pub answers: Answers,
}

impl PreparedInstance {
    pub fn answer_count(&self) -> usize {
        match &self.answers {
            Answers::Kb { candidates, .. } => candidates.len(),
            Answers::SentSel { sentences, .. } => sentences.len(),
        }
    }

    /// Training target per answer: F1 against gold, or the 0/1 label.
    pub fn targets(&self) -> Vec<f64> {
        match &self.answers {
            Answers::Kb { candidates, .. } => candidates.iter().map(|c| c.f1).collect(),
            Answers::SentSel { labels, .. } => labels.iter().map(|&l| f64::from(u8::from(l))).collect(),
        }
    }

    pub fn identity_index(&self) -> usize {
        self.paraphrases.len() - 1
    }

    /// The same instance with every generated rewrite removed.
    pub fn identity_only(&self) -> PreparedInstance {
        self.restricted(&[self.identity_index()])
    }

    /// Keeps the listed paraphrase rows, in the given order.
    pub fn restricted(&self, keep: &[usize]) -> PreparedInstance {
        let paraphrases = keep.iter().map(|&i| self.paraphrases[i].clone()).collect();
        let answers = match &self.answers {
            Answers::Kb { candidates, features, gold } => Answers::Kb {
                candidates: candidates.clone(),
                features: keep.iter().map(|&i| features[i].clone()).collect(),
                gold: gold.clone(),
            },
            Answers::SentSel { sentences, labels, counts } => Answers::SentSel {
                sentences: sentences.clone(),
                labels: labels.clone(),
                counts: keep.iter().map(|&i| counts[i].clone()).collect(),
            },
        };
        PreparedInstance {
            id: self.id.clone(),
            question: self.question.clone(),
            paraphrases,
            answers,
        }
    }

    /// Every token the encoders will see.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        let sents: Vec<&TokenSeq> = match &self.answers {
            Answers::SentSel { sentences, .. } => sentences.iter().collect(),
            Answers::Kb { .. } => Vec::new(),
        };
        self.paraphrases
            .iter()
            .flat_map(|p| p.tokens.texts())
            .chain(self.question.texts())
            .chain(sents.into_iter().flat_map(|s| s.texts()))
    }
}

/// Builds the cached instance. Returns `None` (with a warning) when no
/// answer candidate exists: no linked entity, no subgraph, or no sentence.
pub fn prepare_instance(inst: &QaInstance, generators: &GeneratorSet, backend: &Backend) -> Result<Option<PreparedInstance>> {
    let paraphrases = generators.generate_all(&inst.question);
    let answers = match (&inst.gold, backend) {
        (Gold::Kb(gold), Backend::Kb(kb)) => {
            let entities = link_entities(&inst.question, kb);
            if entities.is_empty() {
                log::warn!("{}: no entity linked, skipped", inst.id);
                return Ok(None);
            }
            let candidates: Vec<SubgraphCandidate> = generate_subgraphs(&entities, kb, 2)?
                .into_iter()
                .map(|c| c.with_gold(gold))
                .collect();
            if candidates.is_empty() {
                log::warn!("{}: no subgraph candidates, skipped", inst.id);
                return Ok(None);
            }
            let features = paraphrases
                .iter()
                .map(|p| candidates.iter().map(|c| kb_feature_values(&p.tokens, c, kb)).collect())
                .collect();
            Answers::Kb {
                candidates,
                features,
                gold: gold.clone(),
            }
        }
        (Gold::SentSel(sents), Backend::SentSel(idf)) => {
            if sents.is_empty() {
                log::warn!("{}: no candidate sentences, skipped", inst.id);
                return Ok(None);
            }
            let sentences: Vec<TokenSeq> = sents.iter().map(|(s, _)| s.clone()).collect();
            let counts = paraphrases
                .iter()
                .map(|p| sentences.iter().map(|s| word_match_features(&p.tokens, s, idf)).collect())
                .collect();
            Answers::SentSel {
                sentences,
                labels: sents.iter().map(|(_, l)| *l).collect(),
                counts,
            }
        }
        _ => {
            return Err(crate::Error::InvalidArgument(format!(
                "{}: instance task `{}` does not match the `{}` back-end",
                inst.id,
                inst.task(),
                backend.task()
            )))
        }
    };
    Ok(Some(PreparedInstance {
        id: inst.id.clone(),
        question: inst.question.clone(),
        paraphrases,
        answers,
    }))
}

pub fn prepare_dataset(data: &[QaInstance], generators: &GeneratorSet, backend: &Backend) -> Result<Vec<PreparedInstance>> {
    let mut out = Vec::with_capacity(data.len());
    for inst in data {
        if let Some(p) = prepare_instance(inst, generators, backend)? {
            out.push(p);
        }
    }
    Ok(out)
}

/// Sorted vocabulary of every token in `data`; with pretrained vectors, only
/// words that have one.
pub fn build_vocab(data: &[PreparedInstance], pretrained: Option<&Pretrained>) -> Vocab {
    let words = data
        .iter()
        .flat_map(|d| d.words())
        .filter(|w| pretrained.is_none_or(|p| p.vectors.contains_key(*w)));
    Vocab::from_words(words)
}

/// One extra identity-only instance per generated rewrite, carrying the same
/// gold answers. Instances without rewrites pass through unchanged.
pub fn baseline_dataaugment(data: &[PreparedInstance]) -> Vec<PreparedInstance> {
    let mut out = Vec::new();
    for inst in data {
        out.push(inst.identity_only());
        for (k, p) in inst.paraphrases.iter().enumerate() {
            if p.origin == Origin::Identity {
                continue;
            }
            let mut extra = inst.restricted(&[k]);
            extra.id = format!("{}#{}", inst.id, k);
            extra.question = p.tokens.clone();
            extra.paraphrases = vec![ParaphraseCandidate::identity(&p.tokens)];
            out.push(extra);
        }
    }
    out
}
