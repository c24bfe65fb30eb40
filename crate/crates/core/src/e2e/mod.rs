//! The joint model: paraphrase-weighted mixture prediction, its training
//! objective and loop, inference, and the comparison systems.

mod baselines;
mod model;
mod prepare;
mod train;

use std::fmt;
use std::str::FromStr;

pub use baselines::{baseline_avgpara, baseline_seppara_train, read_pairs, PairExample, MAX_PAIR_TOKENS};
pub use model::{DropoutRngs, Model, ModelDims, QaParams, MODEL_FORMAT};
pub use prepare::{
    baseline_dataaugment, build_vocab, prepare_dataset, prepare_instance, Answers, Backend, PreparedInstance,
};
pub use train::{evaluate, predict_all, train, EpochRecord, EvalReport, InstanceResult, TrainConfig, TrainLog};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// How paraphrase weights are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weighting {
    /// Softmax of the scorer outputs.
    Learned,
    /// `1/m` for each of the `m` candidates.
    Uniform,
}

/// The trained system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Scorer and QA model trained jointly through the mixture.
    Para4Qa,
    /// QA model trained and evaluated through a uniform mixture.
    AvgPara,
    /// Scorer pretrained on question pairs and frozen; QA trained through it.
    SepPara,
    /// QA model trained on paraphrase-expanded data, evaluated on the
    /// original question only.
    DataAugment,
    /// QA model on the original question only.
    Base,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Para4Qa, Mode::AvgPara, Mode::SepPara, Mode::DataAugment, Mode::Base];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Para4Qa => "para4qa",
            Mode::AvgPara => "avgpara",
            Mode::SepPara => "seppara",
            Mode::DataAugment => "dataaugment",
            Mode::Base => "base",
        }
    }

    pub fn weighting(self) -> Weighting {
        match self {
            Mode::AvgPara => Weighting::Uniform,
            _ => Weighting::Learned,
        }
    }

    /// Whether evaluation sees only the original question.
    pub fn identity_only(self) -> bool {
        matches!(self, Mode::DataAugment | Mode::Base)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown mode `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixtureOutput<T> {
    /// Normalized weight per paraphrase.
    pub weights: Vec<T>,
    /// `[paraphrase][answer]` QA probabilities.
    pub qa: Vec<Vec<T>>,
    /// Marginal probability per answer.
    pub mixture: Vec<T>,
}

/// `p(a) = Σ_j weights[j] · qa[j][a]`, summed in paraphrase order.
pub fn mixture<T: Scalar>(weights: &[T], qa: &[Vec<T>]) -> Result<Vec<T>> {
    if weights.len() != qa.len() {
        return Err(Error::Shape(format!("{} weights for {} paraphrases", weights.len(), qa.len())));
    }
    let answers = qa.first().map_or(0, Vec::len);
    if answers == 0 {
        return Err(Error::NoCandidates);
    }
    if qa.iter().any(|row| row.len() != answers) {
        return Err(Error::Shape("paraphrases disagree on the answer count".into()));
    }
    Ok((0..answers)
        .map(|a| weights.iter().zip(qa).fold(T::zero(), |acc, (&w, row)| acc + w * row[a]))
        .collect())
}

/// Index of the most probable answer; the first one on ties.
pub fn infer<T: Scalar>(scores: &[T]) -> Result<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    best.ok_or(Error::NoCandidates)
}

#[cfg(test)]
mod tests;
