//! Evaluation metrics and paraphrase corpus statistics.

mod stats;
pub mod ter;

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::textkit::TokenSeq;

pub use stats::{paraphrase_stats, GeneratorStats, StatsReport};

/// F1 between a predicted answer set and a gold set; 0 when they are disjoint.
pub fn f1_vs_gold<A: Ord>(denotation: &BTreeSet<A>, gold: &BTreeSet<A>) -> f64 {
    let overlap = denotation.intersection(gold).count();
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / denotation.len() as f64;
    let recall = overlap as f64 / gold.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

pub fn average_f1<A: Ord>(predictions: &[BTreeSet<A>], golds: &[BTreeSet<A>]) -> Result<f64> {
    if predictions.len() != golds.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} gold sets",
            predictions.len(),
            golds.len()
        )));
    }
    if golds.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = predictions
        .iter()
        .zip(golds)
        .map(|(p, g)| f1_vs_gold(p, g))
        .sum();
    Ok(total / golds.len() as f64)
}

/// Indices sorted by score descending; equal scores keep their input order.
pub fn rank_by_score(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankingScores {
    pub map: f64,
    pub mrr: f64,
}

/// Mean average precision and mean reciprocal rank. Lists without a positive
/// label are skipped.
pub fn map_mrr(lists: &[(Vec<f64>, Vec<bool>)]) -> Result<RankingScores> {
    let mut ap_sum = 0.0;
    let mut rr_sum = 0.0;
    let mut counted = 0usize;
    for (scores, labels) in lists {
        if scores.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} scores for {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if !labels.iter().any(|&l| l) {
            continue;
        }
        counted += 1;
        let mut hits = 0usize;
        let mut precision_sum = 0.0;
        let mut first = None;
        for (rank, idx) in rank_by_score(scores).into_iter().enumerate() {
            if labels[idx] {
                hits += 1;
                precision_sum += hits as f64 / (rank + 1) as f64;
                first.get_or_insert(rank + 1);
            }
        }
        ap_sum += precision_sum / hits as f64;
        rr_sum += 1.0 / first.expect("has a positive") as f64;
    }
    if counted == 0 {
        return Err(Error::InvalidArgument("no list has a positive label".into()));
    }
    Ok(RankingScores {
        map: ap_sum / counted as f64,
        mrr: rr_sum / counted as f64,
    })
}

fn ngram_counts<'a>(tokens: &[&'a str], n: usize) -> HashMap<Vec<&'a str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.to_vec()).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence-level BLEU with clipped n-gram precisions up to `max_n`, add-one
/// smoothing for every order above unigrams, and the usual brevity penalty.
pub fn bleu(candidate: &TokenSeq, reference: &TokenSeq, max_n: usize) -> f64 {
    bleu_tokens(&candidate.texts(), &reference.texts(), max_n)
}

pub fn bleu_tokens(candidate: &[&str], reference: &[&str], max_n: usize) -> f64 {
    if candidate.is_empty() || reference.is_empty() || max_n == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let cand = ngram_counts(candidate, n);
        let refc = ngram_counts(reference, n);
        let total: usize = cand.values().sum();
        let matched: usize = cand
            .iter()
            .map(|(g, &c)| c.min(refc.get(g).copied().unwrap_or(0)))
            .sum();
        let precision = if n == 1 {
            if matched == 0 {
                return 0.0;
            }
            matched as f64 / total as f64
        } else {
            (matched as f64 + 1.0) / (total as f64 + 1.0)
        };
        log_sum += precision.ln();
    }
    let c = candidate.len() as f64;
    let r = reference.len() as f64;
    let brevity = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    brevity * (log_sum / max_n as f64).exp()
}

/// Edits per reference token. The reference must be non-empty.
pub fn ter(candidate: &TokenSeq, reference: &TokenSeq) -> f64 {
    ter_tokens(&candidate.texts(), &reference.texts())
}

pub fn ter_tokens(candidate: &[&str], reference: &[&str]) -> f64 {
    ter::ter_edits(candidate, reference) as f64 / reference.len() as f64
}
