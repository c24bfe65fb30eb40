//! Toy knowledge base, entity linking, subgraph candidates and the
//! logistic-regression ranker.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::f1_vs_gold;
use crate::scalar::{sigmoid, Scalar};
use crate::tensornet::{ParamId, ParamStore, Tape, Tensor, Var};
use crate::textkit::{is_stopword, normalize, normalize_token, TokenSeq};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

impl Triple {
    pub fn new(subject: &str, relation: &str, object: &str) -> Self {
        Triple {
            subject: subject.to_string(),
            relation: relation.to_string(),
            object: object.to_string(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ToyKb {
    triples: Vec<Triple>,
    relations: Vec<String>,
    relation_words: BTreeMap<String, Vec<String>>,
    /// Normalized alias tokens → entity ids, in file order.
    aliases: BTreeMap<Vec<String>, Vec<String>>,
    max_alias_len: usize,
    by_subject: BTreeMap<String, Vec<usize>>,
}

/// Normalized content words of a relation name split on non-alphanumerics.
pub fn relation_words(relation: &str) -> Vec<String> {
    relation
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(normalize_token)
        .filter(|w| !is_stopword(w))
        .collect()
}

impl ToyKb {
    pub fn new(triples: Vec<Triple>, aliases: Vec<(String, String)>) -> Result<Self> {
        let mut triples = triples;
        for t in &triples {
            if t.subject.is_empty() || t.relation.is_empty() || t.object.is_empty() {
                return Err(Error::InvalidArgument(format!("triple with an empty field: {t:?}")));
            }
        }
        triples.sort();
        triples.dedup();
        let relations: Vec<String> = triples
            .iter()
            .map(|t| t.relation.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let relation_words = relations.iter().map(|r| (r.clone(), relation_words(r))).collect();
        let mut alias_map: BTreeMap<Vec<String>, Vec<String>> = BTreeMap::new();
        for (surface, entity) in aliases {
            let key = normalize(&surface)?.to_strings();
            let list = alias_map.entry(key).or_default();
            if !list.contains(&entity) {
                list.push(entity);
            }
        }
        let max_alias_len = alias_map.keys().map(Vec::len).max().unwrap_or(0);
        let mut by_subject: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, t) in triples.iter().enumerate() {
            by_subject.entry(t.subject.clone()).or_default().push(i);
        }
        Ok(ToyKb {
            triples,
            relations,
            relation_words,
            aliases: alias_map,
            max_alias_len,
            by_subject,
        })
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    /// Sorted relation vocabulary.
    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn relation_words(&self, relation: &str) -> &[String] {
        self.relation_words.get(relation).map_or(&[], Vec::as_slice)
    }

    /// Triples with `subject`, sorted.
    pub fn outgoing(&self, subject: &str) -> impl Iterator<Item = &Triple> {
        self.by_subject
            .get(subject)
            .into_iter()
            .flatten()
            .map(|&i| &self.triples[i])
    }

    pub fn objects(&self, subject: &str, relation: &str) -> BTreeSet<String> {
        self.outgoing(subject)
            .filter(|t| t.relation == relation)
            .map(|t| t.object.clone())
            .collect()
    }

    pub fn has_triple(&self, subject: &str, relation: &str, object: &str) -> bool {
        self.outgoing(subject).any(|t| t.relation == relation && t.object == object)
    }
}

fn read_tsv(path: &Path, columns: usize) -> Result<Vec<Vec<String>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<String> = line.split('\t').map(|f| f.trim().to_string()).collect();
        if fields.len() != columns || fields.iter().any(String::is_empty) {
            return Err(Error::parse(path, n + 1, format!("expected {columns} non-empty tab-separated fields")));
        }
        rows.push(fields);
    }
    Ok(rows)
}

/// Triples as `subject<TAB>relation<TAB>object`, aliases as
/// `surface<TAB>entity`.
pub fn read_kb(triples_path: &Path, aliases_path: &Path) -> Result<ToyKb> {
    let triples = read_tsv(triples_path, 3)?
        .into_iter()
        .map(|f| Triple::new(&f[0], &f[1], &f[2]))
        .collect();
    let aliases = read_tsv(aliases_path, 2)?
        .into_iter()
        .map(|mut f| (std::mem::take(&mut f[0]), std::mem::take(&mut f[1])))
        .collect();
    ToyKb::new(triples, aliases)
}

/// Exact alias matches in `q`, longest spans first, never overlapping.
pub fn link_entities(q: &TokenSeq, kb: &ToyKb) -> Vec<String> {
    let words = q.to_strings();
    let mut matches = Vec::new();
    for start in 0..words.len() {
        let longest = kb.max_alias_len.min(words.len() - start);
        for len in (1..=longest).rev() {
            if let Some(ents) = kb.aliases.get(&words[start..start + len]) {
                matches.push((len, start, ents));
                break;
            }
        }
    }
    matches.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut taken = vec![false; words.len()];
    let mut out: Vec<String> = Vec::new();
    for (len, start, ents) in matches {
        if taken[start..start + len].iter().any(|&t| t) {
            continue;
        }
        taken[start..start + len].fill(true);
        for e in ents {
            if !out.contains(e) {
                out.push(e.clone());
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constraint {
    pub relation: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubgraphCandidate {
    pub topic: String,
    /// One or two relations.
    pub path: Vec<String>,
    /// Filter on the intermediate node of a two-relation path.
    pub constraint: Option<Constraint>,
    pub denotation: BTreeSet<String>,
    /// Filled in against a gold set by [`SubgraphCandidate::with_gold`].
    pub f1: f64,
}

impl SubgraphCandidate {
    pub fn with_gold(mut self, gold: &BTreeSet<String>) -> Self {
        self.f1 = f1_vs_gold(&self.denotation, gold);
        self
    }

    /// Every relation the candidate mentions.
    pub fn relations(&self) -> impl Iterator<Item = &str> {
        self.path
            .iter()
            .map(String::as_str)
            .chain(self.constraint.iter().map(|c| c.relation.as_str()))
    }
}

impl std::fmt::Display for SubgraphCandidate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}", self.topic, self.path.join(" "))?;
        if let Some(c) = &self.constraint {
            write!(f, " [{}={}]", c.relation, c.value)?;
        }
        Ok(())
    }
}

/// All one-relation paths from each entity, plus two-relation paths (at
/// most `max_hops`) with and without one constraint on the intermediate
/// node. Constraints that leave the denotation unchanged are dropped, as are
/// empty denotations.
pub fn generate_subgraphs(entities: &[String], kb: &ToyKb, max_hops: usize) -> Result<Vec<SubgraphCandidate>> {
    if entities.is_empty() {
        return Err(Error::InvalidArgument("no topic entities".into()));
    }
    let mut out = Vec::new();
    for topic in entities {
        let mut first: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for t in kb.outgoing(topic) {
            first.entry(&t.relation).or_default().insert(&t.object);
        }
        for (r1, mids) in &first {
            out.push(SubgraphCandidate {
                topic: topic.clone(),
                path: vec![r1.to_string()],
                constraint: None,
                denotation: mids.iter().map(|m| m.to_string()).collect(),
                f1: 0.0,
            });
            if max_hops < 2 {
                continue;
            }
            // r2 -> mid -> answers reached through it
            let mut second: BTreeMap<&str, BTreeMap<&str, BTreeSet<&str>>> = BTreeMap::new();
            let mut constraints: BTreeSet<(&str, &str)> = BTreeSet::new();
            for m in mids {
                for t in kb.outgoing(m) {
                    second
                        .entry(&t.relation)
                        .or_default()
                        .entry(m)
                        .or_default()
                        .insert(&t.object);
                    constraints.insert((&t.relation, &t.object));
                }
            }
            for (r2, by_mid) in &second {
                let full: BTreeSet<String> = by_mid.values().flatten().map(|a| a.to_string()).collect();
                let path = vec![r1.to_string(), r2.to_string()];
                for (cr, cv) in &constraints {
                    let narrowed: BTreeSet<String> = by_mid
                        .iter()
                        .filter(|(m, _)| kb.has_triple(m, cr, cv))
                        .flat_map(|(_, answers)| answers.iter().map(|a| a.to_string()))
                        .collect();
                    if narrowed.is_empty() || narrowed == full {
                        continue;
                    }
                    out.push(SubgraphCandidate {
                        topic: topic.clone(),
                        path: path.clone(),
                        constraint: Some(Constraint {
                            relation: cr.to_string(),
                            value: cv.to_string(),
                        }),
                        denotation: narrowed,
                        f1: 0.0,
                    });
                }
                out.push(SubgraphCandidate {
                    topic: topic.clone(),
                    path,
                    constraint: None,
                    denotation: full,
                    f1: 0.0,
                });
            }
        }
    }
    Ok(out)
}

/// Two tokens match when equal, or when the shorter one has at least four
/// characters and begins the longer one (`found` / `founder`).
pub fn words_match(a: &str, b: &str) -> bool {
    if a == b {
        return true;
    }
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    short.chars().count() >= 4 && long.starts_with(short)
}

pub const CARDINALITY_BUCKETS: [&str; 3] = ["card=1", "card=2-4", "card>=5"];

/// Names of the [`kb_features`] entries, in order.
pub fn kb_feature_names(kb: &ToyKb) -> Vec<String> {
    let mut names: Vec<String> = ["overlap", "path_len", "constraint"].iter().map(|s| s.to_string()).collect();
    names.extend(CARDINALITY_BUCKETS.iter().map(|s| s.to_string()));
    names.extend(kb.relations().iter().map(|r| format!("rel:{r}")));
    names
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

/// Feature values for a (paraphrase, candidate) pair. Layout follows
/// [`kb_feature_names`].
pub fn kb_feature_values(q: &TokenSeq, c: &SubgraphCandidate, kb: &ToyKb) -> Vec<f64> {
    let rel_words: Vec<&String> = c.relations().flat_map(|r| kb.relation_words(r)).collect();
    let overlap = q
        .content()
        .iter()
        .filter(|t| rel_words.iter().any(|w| words_match(t, w)))
        .count();
    let card = c.denotation.len();
    let bucket = match card {
        0 | 1 => 0,
        2..=4 => 1,
        _ => 2,
    };
    let mut v = vec![overlap as f64, c.path.len() as f64, f64::from(u8::from(c.constraint.is_some()))];
    v.extend((0..3).map(|b| if b == bucket { 1.0 } else { 0.0 }));
    v.extend(
        kb.relations()
            .iter()
            .map(|r| if c.relations().any(|x| x == r) { 1.0 } else { 0.0 }),
    );
    v
}

pub fn kb_features(q: &TokenSeq, c: &SubgraphCandidate, kb: &ToyKb) -> FeatureVector {
    FeatureVector {
        names: kb_feature_names(kb),
        values: kb_feature_values(q, c, kb),
    }
}

/// Logistic-regression weights of the KB ranker.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KbParams {
    pub weights: ParamId,
    pub bias: ParamId,
}

pub const KB_PREFIX: &str = "qa.kb";

impl KbParams {
    pub fn register<T: Scalar>(store: &mut ParamStore<T>, feature_count: usize) -> Result<Self> {
        let weights = store.add(&format!("{KB_PREFIX}.w"), Tensor::zeros(vec![feature_count]), true)?;
        let bias = store.add(&format!("{KB_PREFIX}.b"), Tensor::zeros(vec![1]), true)?;
        Ok(KbParams { weights, bias })
    }

    pub fn load<T: Scalar>(store: &ParamStore<T>, feature_count: usize) -> Result<Self> {
        let weights = store.require(&format!("{KB_PREFIX}.w"))?;
        let bias = store.require(&format!("{KB_PREFIX}.b"))?;
        if store.value(weights).len() != feature_count {
            return Err(Error::Checkpoint(format!(
                "KB ranker has {} weights, the knowledge base defines {feature_count} features",
                store.value(weights).len()
            )));
        }
        Ok(KbParams { weights, bias })
    }

    pub fn prob_on<T: Scalar>(&self, tape: &mut Tape<'_, T>, features: &[f64]) -> Result<Var> {
        let f = tape.input(features.iter().map(|&x| T::lit(x)).collect());
        let w = tape.param(self.weights);
        let z = tape.dot(w, f)?;
        let b = tape.param(self.bias);
        let z = tape.add(z, b)?;
        Ok(tape.sigmoid(z))
    }
}

/// `sigmoid(w · f + b)`.
pub fn kb_prob<T: Scalar>(features: &[T], weights: &[T], bias: T) -> Result<T> {
    if features.len() != weights.len() {
        return Err(Error::Shape(format!(
            "{} features for {} weights",
            features.len(),
            weights.len()
        )));
    }
    let z = features.iter().zip(weights).fold(bias, |acc, (&f, &w)| acc + f * w);
    Ok(sigmoid(z))
}
