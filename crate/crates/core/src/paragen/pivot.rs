//! Multi-pivot back-translation: beam search where each step's token
//! distribution is the pivot-weighted mixture of the per-pivot distributions.

use std::collections::HashMap;
use std::path::Path;

use super::{Origin, ParaphraseCandidate, ParaphraseGenerator};
use crate::error::{Error, Result};
use crate::textkit::TokenSeq;

/// End-of-sequence symbol in every model vocabulary.
pub const EOS: &str = "</s>";

/// Tolerance on distributions returned by a [`SeqModel`].
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

/// A source-conditioned sequence model.
pub trait SeqModel: Send + Sync {
    /// Output vocabulary, including [`EOS`].
    fn vocab(&self) -> &[String];

    fn eos(&self) -> usize;

    /// Distribution over [`SeqModel::vocab`] for the token following `prefix`.
    fn next_token_probs(&self, source: &[String], prefix: &[usize]) -> Vec<f64>;

    fn max_output_len(&self, source: &[String]) -> usize {
        2 * source.len() + 5
    }

    /// The `k` most probable full outputs with their probabilities, found by
    /// beam search of width `k`.
    fn k_best(&self, source: &[String], k: usize) -> Vec<(Vec<String>, f64)> {
        let vocab = self.vocab();
        let hyps = beam_search(
            |prefix| self.next_token_probs(source, prefix),
            self.eos(),
            k.max(1),
            self.max_output_len(source),
        );
        hyps.into_iter()
            .take(k)
            .map(|h| {
                (
                    h.tokens.iter().map(|&t| vocab[t].clone()).collect(),
                    h.log_prob.exp(),
                )
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    /// Output token ids, without the end-of-sequence marker.
    pub tokens: Vec<usize>,
    pub log_prob: f64,
}

fn hyp_order(a: &Hypothesis, b: &Hypothesis) -> std::cmp::Ordering {
    b.log_prob
        .total_cmp(&a.log_prob)
        .then_with(|| a.tokens.cmp(&b.tokens))
}

/// Beam search over `step`, which maps a prefix to the next-token
/// distribution. A hypothesis completes when it emits `eos` or reaches
/// `max_len` tokens. All completed hypotheses are returned ranked by total
/// log-probability; with `beam_width >= |V|^max_len` the search is exhaustive.
pub fn beam_search<F>(step: F, eos: usize, beam_width: usize, max_len: usize) -> Vec<Hypothesis>
where
    F: Fn(&[usize]) -> Vec<f64>,
{
    let mut live = vec![Hypothesis {
        tokens: Vec::new(),
        log_prob: 0.0,
    }];
    let mut done = Vec::new();
    for _ in 0..max_len {
        let mut expanded = Vec::new();
        for hyp in &live {
            for (tok, p) in step(&hyp.tokens).into_iter().enumerate() {
                if p <= 0.0 {
                    continue;
                }
                let log_prob = hyp.log_prob + p.ln();
                if tok == eos {
                    done.push(Hypothesis {
                        tokens: hyp.tokens.clone(),
                        log_prob,
                    });
                } else {
                    let mut tokens = hyp.tokens.clone();
                    tokens.push(tok);
                    expanded.push(Hypothesis { tokens, log_prob });
                }
            }
        }
        expanded.sort_by(hyp_order);
        expanded.truncate(beam_width);
        live = expanded;
        if live.is_empty() {
            break;
        }
    }
    done.extend(live);
    done.sort_by(hyp_order);
    done
}

/// K-best pivots with probabilities renormalized to sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct PivotSet {
    pivots: Vec<(Vec<String>, f64)>,
}

impl PivotSet {
    pub fn new(pivots: Vec<(Vec<String>, f64)>) -> Result<Self> {
        if pivots.is_empty() {
            return Err(Error::InvalidArgument("empty pivot set".into()));
        }
        if let Some((_, p)) = pivots.iter().find(|(_, p)| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidArgument(format!("pivot probability {p} is not positive")));
        }
        let total: f64 = pivots.iter().map(|(_, p)| p).sum();
        Ok(PivotSet {
            pivots: pivots.into_iter().map(|(g, p)| (g, p / total)).collect(),
        })
    }

    pub fn pivots(&self) -> &[(Vec<String>, f64)] {
        &self.pivots
    }

    pub fn len(&self) -> usize {
        self.pivots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivots.is_empty()
    }
}

/// `p(y_t | y_<t, G) = Σ_k p(g_k | q) · p(y_t | y_<t, g_k)`.
pub fn fused_step_distribution(pivots: &PivotSet, back: &dyn SeqModel, prefix: &[usize]) -> Vec<f64> {
    let mut fused = vec![0.0; back.vocab().len()];
    for (pivot, weight) in &pivots.pivots {
        for (acc, p) in fused.iter_mut().zip(back.next_token_probs(pivot, prefix)) {
            *acc += weight * p;
        }
    }
    fused
}

/// Decodes paraphrases conditioned jointly on every pivot. Returns up to
/// `top` non-empty outputs ranked by total fused log-probability, which is
/// also their `gen_score`.
pub fn fuse_decode(
    pivots: &PivotSet,
    back: &dyn SeqModel,
    beam_width: usize,
    max_len: usize,
    top: usize,
) -> Result<Vec<ParaphraseCandidate>> {
    if beam_width < 1 {
        return Err(Error::InvalidArgument("beam width must be at least 1".into()));
    }
    if max_len < 1 {
        return Err(Error::InvalidArgument("max_len must be at least 1".into()));
    }
    if pivots.is_empty() {
        return Err(Error::InvalidArgument("empty pivot set".into()));
    }
    let vocab = back.vocab();
    let hyps = beam_search(
        |prefix| fused_step_distribution(pivots, back, prefix),
        back.eos(),
        beam_width,
        max_len,
    );
    let mut ranked: Vec<(Vec<&str>, f64)> = hyps
        .iter()
        .filter(|h| !h.tokens.is_empty())
        .map(|h| (h.tokens.iter().map(|&t| vocab[t].as_str()).collect(), h.log_prob))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(ranked
        .into_iter()
        .filter_map(|(words, log_prob)| {
            Some(ParaphraseCandidate {
                tokens: TokenSeq::from_words(&words).ok()?,
                origin: Origin::Pivot,
                gen_score: log_prob,
            })
        })
        .take(top)
        .collect())
}

/// A lookup-table sequence model. Contexts without an entry emit [`EOS`] with
/// probability one.
#[derive(Clone, Debug, Default)]
pub struct TableModel {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    next: HashMap<(Vec<String>, Vec<usize>), Vec<f64>>,
    kbest: HashMap<Vec<String>, Vec<(Vec<String>, f64)>>,
}

#[derive(Default)]
pub struct TableModelBuilder {
    next: Vec<(Vec<String>, Vec<String>, String, f64)>,
    kbest: Vec<(Vec<String>, Vec<String>, f64)>,
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

impl TableModelBuilder {
    pub fn next(mut self, source: &str, prefix: &str, token: &str, prob: f64) -> Self {
        self.add_next(source, prefix, token, prob);
        self
    }

    pub fn add_next(&mut self, source: &str, prefix: &str, token: &str, prob: f64) {
        self.next
            .push((words(source), words(prefix), token.to_string(), prob));
    }

    pub fn kbest(mut self, source: &str, target: &str, prob: f64) -> Self {
        self.add_kbest(source, target, prob);
        self
    }

    pub fn add_kbest(&mut self, source: &str, target: &str, prob: f64) {
        self.kbest.push((words(source), words(target), prob));
    }

    /// Fails when a context's probabilities do not sum to one.
    pub fn build(self) -> Result<TableModel> {
        let mut tokens: Vec<String> = self
            .next
            .iter()
            .flat_map(|(_, prefix, tok, _)| prefix.iter().chain(std::iter::once(tok)))
            .filter(|t| *t != EOS)
            .cloned()
            .collect();
        tokens.sort();
        tokens.dedup();
        let mut vocab = vec![EOS.to_string()];
        vocab.extend(tokens);
        let index: HashMap<String, usize> =
            vocab.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();

        let mut next: HashMap<(Vec<String>, Vec<usize>), Vec<f64>> = HashMap::new();
        for (source, prefix, tok, p) in self.next {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidArgument(format!("bad probability {p}")));
            }
            let prefix_ids = prefix.iter().map(|t| index[t]).collect();
            let dist = next
                .entry((source, prefix_ids))
                .or_insert_with(|| vec![0.0; vocab.len()]);
            dist[index[&tok]] += p;
        }
        for ((source, prefix), dist) in &next {
            let total: f64 = dist.iter().sum();
            if (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
                return Err(Error::InvalidArgument(format!(
                    "distribution for `{}` after `{}` sums to {total}",
                    source.join(" "),
                    prefix.iter().map(|&i| vocab[i].as_str()).collect::<Vec<_>>().join(" ")
                )));
            }
        }
        let mut kbest: HashMap<Vec<String>, Vec<(Vec<String>, f64)>> = HashMap::new();
        for (source, target, p) in self.kbest {
            kbest.entry(source).or_default().push((target, p));
        }
        for list in kbest.values_mut() {
            list.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        }
        Ok(TableModel {
            vocab,
            index,
            next,
            kbest,
        })
    }
}

impl TableModel {
    pub fn builder() -> TableModelBuilder {
        TableModelBuilder::default()
    }

    pub fn token_id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Reads a TSV model file with two record kinds:
    /// `kbest<TAB>source<TAB>output<TAB>prob` and
    /// `next<TAB>source<TAB>prefix<TAB>token<TAB>prob` (prefix may be empty).
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut b = TableModelBuilder::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let prob = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::parse(path, i + 1, format!("bad probability `{s}`")))
            };
            match (cols[0], cols.len()) {
                ("kbest", 4) => b.add_kbest(cols[1], cols[2], prob(cols[3])?),
                ("next", 5) => b.add_next(cols[1], cols[2], cols[3], prob(cols[4])?),
                _ => return Err(Error::parse(path, i + 1, "expected a kbest or next record")),
            }
        }
        b.build().map_err(|e| Error::parse(path, 0, e.to_string()))
    }
}

impl SeqModel for TableModel {
    fn vocab(&self) -> &[String] {
        &self.vocab
    }

    fn eos(&self) -> usize {
        0
    }

    fn next_token_probs(&self, source: &[String], prefix: &[usize]) -> Vec<f64> {
        match self.next.get(&(source.to_vec(), prefix.to_vec())) {
            Some(d) => d.clone(),
            None => {
                let mut d = vec![0.0; self.vocab.len()];
                d[0] = 1.0;
                d
            }
        }
    }

    fn k_best(&self, source: &[String], k: usize) -> Vec<(Vec<String>, f64)> {
        self.kbest
            .get(source)
            .map(|list| list.iter().take(k).cloned().collect())
            .unwrap_or_default()
    }
}

/// Translates the question into `k` pivots with `forward`, then fuses them
/// while decoding with `back`.
pub struct PivotGenerator {
    forward: Box<dyn SeqModel>,
    back: Box<dyn SeqModel>,
    pub k: usize,
    pub beam_width: usize,
    pub max_len: usize,
    pub cap: usize,
}

impl PivotGenerator {
    pub fn new(forward: Box<dyn SeqModel>, back: Box<dyn SeqModel>) -> Self {
        PivotGenerator {
            forward,
            back,
            k: 5,
            beam_width: 15,
            max_len: 30,
            cap: 15,
        }
    }
}

impl ParaphraseGenerator for PivotGenerator {
    fn name(&self) -> &str {
        "pivot"
    }

    fn generate(&self, q: &TokenSeq) -> Vec<ParaphraseCandidate> {
        let pivots = self.forward.k_best(&q.to_strings(), self.k);
        let Ok(pivots) = PivotSet::new(pivots) else {
            return Vec::new();
        };
        fuse_decode(&pivots, self.back.as_ref(), self.beam_width, self.max_len, self.cap)
            .unwrap_or_default()
    }
}
