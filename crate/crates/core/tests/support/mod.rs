//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use paraqa::paragen::{PivotSet, SeqModel, TableModel, WILDCARD};
use rand::seq::SliceRandom;
use rand::Rng;

// ---------------------------------------------------------------- decoding

/// Every non-empty output of at most `max_len` tokens with its fused
/// log-probability. Outputs shorter than `max_len` pay for the end marker;
/// outputs of exactly `max_len` tokens stop without it. Ranked by score,
/// then by token strings.
pub fn decode_oracle(pivots: &PivotSet, back: &dyn SeqModel, max_len: usize) -> Vec<(Vec<String>, f64)> {
    let vocab = back.vocab();
    let eos = back.eos();
    let words: Vec<usize> = (0..vocab.len()).filter(|&t| t != eos).collect();
    let prob = |prefix: &[usize], tok: usize| -> f64 {
        pivots
            .pivots()
            .iter()
            .map(|(g, w)| w * back.next_token_probs(g, prefix)[tok])
            .sum()
    };
    let mut out = Vec::new();
    let mut seqs: Vec<Vec<usize>> = vec![Vec::new()];
    for len in 1..=max_len {
        seqs = seqs
            .iter()
            .flat_map(|s| {
                words.iter().map(move |&t| {
                    let mut n = s.clone();
                    n.push(t);
                    n
                })
            })
            .collect();
        for s in &seqs {
            let mut factors: Vec<f64> = (0..len).map(|i| prob(&s[..i], s[i])).collect();
            if len < max_len {
                factors.push(prob(s, eos));
            }
            if factors.iter().any(|&p| p <= 0.0) {
                continue;
            }
            let score = factors.iter().fold(0.0, |acc, p| acc + p.ln());
            out.push((s.iter().map(|&t| vocab[t].clone()).collect::<Vec<_>>(), score));
        }
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

pub const TOY_WORDS: [&str; 3] = ["a", "b", "c"];

fn random_dist<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    // Zeros are allowed so that some paths die.
    let raw: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.15) { 0.0 } else { rng.gen_range(0.05..1.0) })
        .collect();
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        let mut d = vec![0.0; n];
        d[0] = 1.0;
        return d;
    }
    raw.iter().map(|x| x / total).collect()
}

/// A random back-translation table over `vocab` words plus the end marker
/// for `k` pivots, defined on every prefix shorter than `max_len`, and the
/// matching random pivot set.
pub fn random_decoding_model<R: Rng>(rng: &mut R, vocab: usize, k: usize, max_len: usize) -> (TableModel, PivotSet) {
    let words = &TOY_WORDS[..vocab];
    let mut b = TableModel::builder();
    let mut pivots = Vec::new();
    for g in 0..k {
        let source = format!("g{g}");
        let mut prefixes: Vec<Vec<&str>> = vec![Vec::new()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for p in &prefixes {
                let dist = random_dist(rng, vocab + 1);
                let prefix = p.join(" ");
                b.add_next(&source, &prefix, paraqa::paragen::EOS, dist[0]);
                for (w, pr) in words.iter().zip(&dist[1..]) {
                    b.add_next(&source, &prefix, w, *pr);
                    let mut n = p.clone();
                    n.push(w);
                    next.push(n);
                }
            }
            prefixes = next;
        }
        pivots.push((vec![source], rng.gen_range(0.1..1.0)));
    }
    (b.build().expect("normalized"), PivotSet::new(pivots).expect("positive"))
}

// ------------------------------------------------------------------ mining

pub type Template = Vec<String>;

/// `(template, argument)` for the whole question and for every span of at
/// most six tokens that leaves a literal behind.
fn oracle_abstractions(q: &[String]) -> Vec<(Template, Vec<String>)> {
    let mut out = vec![(q.to_vec(), Vec::new())];
    for i in 0..q.len() {
        for j in i + 1..=q.len() {
            if j - i > 6 || j - i == q.len() {
                continue;
            }
            let mut t = q[..i].to_vec();
            t.push(WILDCARD.to_string());
            t.extend_from_slice(&q[j..]);
            out.push((t, q[i..j].to_vec()));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleRule {
    pub source: Template,
    pub target: Template,
    pub cooccur: usize,
    pub pmi: f64,
}

/// Every ordered pair of distinct templates, each seen in at least
/// `min_support` clusters, that two different questions of more than
/// `min_cooccur` clusters instantiate with the same argument; ranked by PMI,
/// then count, then source and target.
pub fn mining_oracle(clusters: &[Vec<Vec<String>>], min_support: usize, min_cooccur: usize) -> Vec<OracleRule> {
    let per_cluster: Vec<Vec<Vec<(Template, Vec<String>)>>> = clusters
        .iter()
        .map(|c| {
            let qs: BTreeSet<&Vec<String>> = c.iter().collect();
            qs.into_iter().map(|q| oracle_abstractions(q)).collect()
        })
        .collect();
    let mut support: BTreeMap<Template, usize> = BTreeMap::new();
    for qs in &per_cluster {
        let here: BTreeSet<&Template> = qs.iter().flatten().map(|(t, _)| t).collect();
        for t in here {
            *support.entry(t.clone()).or_default() += 1;
        }
    }
    let frequent: Vec<&Template> = support.iter().filter(|(_, &c)| c >= min_support).map(|(t, _)| t).collect();
    let n = clusters.len() as f64;
    let mut rules = Vec::new();
    for s in &frequent {
        for t in &frequent {
            if s == t {
                continue;
            }
            let mut count = 0;
            for qs in &per_cluster {
                let hit = (0..qs.len()).any(|i| {
                    (0..qs.len()).any(|j| {
                        i != j
                            && qs[i].iter().any(|(ts, a)| {
                                ts == *s && qs[j].iter().any(|(tt, b)| tt == *t && a == b)
                            })
                    })
                });
                if hit {
                    count += 1;
                }
            }
            if count > min_cooccur {
                let cs = support[*s] as f64;
                let ct = support[*t] as f64;
                rules.push(OracleRule {
                    source: (*s).clone(),
                    target: (*t).clone(),
                    cooccur: count,
                    pmi: (n * count as f64 / (cs * ct)).ln(),
                });
            }
        }
    }
    rules.sort_by(|a, b| {
        b.pmi
            .total_cmp(&a.pmi)
            .then(b.cooccur.cmp(&a.cooccur))
            .then_with(|| a.source.cmp(&b.source))
            .then_with(|| a.target.cmp(&b.target))
    });
    rules
}

const PATTERNS: [&str; 6] = [
    "what be the capital of __",
    "__ capital",
    "capital city of __",
    "which city be the capital of __",
    "where do __ govern from",
    "name the seat of __",
];

const ARGS: [&str; 8] = ["france", "peru", "new zealand", "chad", "the united kingdom", "laos", "fiji", "oman"];

/// Clusters of paraphrased questions built from a handful of patterns and
/// arguments, with occasional noise questions, so that mining finds rules.
pub fn random_corpus<R: Rng>(rng: &mut R, clusters: usize) -> Vec<Vec<Vec<String>>> {
    (0..clusters)
        .map(|_| {
            let arg = ARGS.choose(rng).unwrap();
            let k = rng.gen_range(1..=4);
            let mut cluster: Vec<Vec<String>> = PATTERNS
                .choose_multiple(rng, k)
                .map(|p| p.replace(WILDCARD, arg).split(' ').map(str::to_string).collect())
                .collect();
            if rng.gen_bool(0.3) {
                cluster.push(vec!["tell".into(), "me".into(), "about".into(), arg.to_string()]);
            }
            cluster
        })
        .collect()
}

// ---------------------------------------------------------------------- ter

fn levenshtein(a: &[&str], b: &[&str]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for i in 1..=a.len() {
        let mut cur = vec![i; b.len() + 1];
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Fewest edits turning `hyp` into `reference` when any block of the
/// hypothesis may be moved anywhere at a cost of one edit: breadth-first
/// search over all shift sequences, each state finished by edit distance.
pub fn ter_edits_oracle(hyp: &[&str], reference: &[&str]) -> usize {
    let mut best = levenshtein(hyp, reference);
    let mut seen: HashMap<Vec<&str>, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    seen.insert(hyp.to_vec(), 0);
    queue.push_back(hyp.to_vec());
    while let Some(s) = queue.pop_front() {
        let d = seen[&s];
        best = best.min(d + levenshtein(&s, reference));
        if d + 1 >= best {
            continue;
        }
        for i in 0..s.len() {
            for j in i + 1..=s.len() {
                let block = &s[i..j];
                let mut rest = s[..i].to_vec();
                rest.extend_from_slice(&s[j..]);
                for k in 0..=rest.len() {
                    let mut moved = rest[..k].to_vec();
                    moved.extend_from_slice(block);
                    moved.extend_from_slice(&rest[k..]);
                    if !seen.contains_key(&moved) {
                        seen.insert(moved.clone(), d + 1);
                        queue.push_back(moved);
                    }
                }
            }
        }
    }
    best
}

// ------------------------------------------------------------------ ranking

/// Average precision and reciprocal rank of one list, ranks computed by
/// counting the items placed ahead (higher score, or equal score earlier in
/// the input).
pub fn ap_rr_oracle(scores: &[f64], labels: &[bool]) -> Option<(f64, f64)> {
    let rank = |i: usize| 1 + (0..scores.len()).filter(|&j| scores[j] > scores[i] || (scores[j] == scores[i] && j < i)).count();
    let positives: Vec<usize> = (0..scores.len()).filter(|&i| labels[i]).collect();
    if positives.is_empty() {
        return None;
    }
    let mut ap = 0.0;
    for &p in &positives {
        let r = rank(p);
        let above = positives.iter().filter(|&&q| rank(q) <= r).count();
        ap += above as f64 / r as f64;
    }
    let first = positives.iter().map(|&p| rank(p)).min().unwrap();
    Some((ap / positives.len() as f64, 1.0 / first as f64))
}
