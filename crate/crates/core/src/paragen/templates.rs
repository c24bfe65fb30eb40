//! Question templates mined from clusters of related questions, ranked by
//! pointwise mutual information, and applied by exact or stopword-insensitive
//! matching.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use super::{Origin, ParaphraseCandidate, ParaphraseGenerator};
use crate::error::{Error, Result};
use crate::textkit::{is_stopword, normalize, TokenSeq};

pub const WILDCARD: &str = "__";

/// Longest argument abstracted to the wildcard during mining.
pub const MAX_ARGUMENT_LEN: usize = 6;

/// A question pattern with at most one wildcard slot.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuestionTemplate {
    tokens: Vec<String>,
}

impl QuestionTemplate {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        let wildcards = tokens.iter().filter(|t| *t == WILDCARD).count();
        if wildcards > 1 {
            return Err(Error::InvalidArgument(format!(
                "template `{}` has {wildcards} wildcards",
                tokens.join(" ")
            )));
        }
        if tokens.iter().all(|t| t == WILDCARD) {
            return Err(Error::InvalidArgument("template has no literal token".into()));
        }
        Ok(QuestionTemplate { tokens })
    }

    /// Parses whitespace-separated text, normalizing every non-wildcard token.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = Vec::new();
        for word in text.split_whitespace() {
            if word == WILDCARD {
                tokens.push(WILDCARD.to_string());
            } else {
                tokens.extend(normalize(word)?.to_strings());
            }
        }
        Self::new(tokens)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn wildcard_count(&self) -> usize {
        usize::from(self.wildcard_pos().is_some())
    }

    pub fn wildcard_pos(&self) -> Option<usize> {
        self.tokens.iter().position(|t| t == WILDCARD)
    }

    /// Replaces the wildcard with `arg`.
    pub fn instantiate(&self, arg: &[String]) -> Vec<String> {
        let mut out = Vec::with_capacity(self.tokens.len() + arg.len());
        for t in &self.tokens {
            if t == WILDCARD {
                out.extend_from_slice(arg);
            } else {
                out.push(t.clone());
            }
        }
        out
    }

    /// Binds the wildcard against `words`, requiring the literal tokens to
    /// match the whole sequence and the argument to be non-empty.
    fn bind<'a>(&self, words: &'a [String]) -> Option<&'a [String]> {
        match self.wildcard_pos() {
            None => (words == self.tokens.as_slice()).then_some(&words[..0]),
            Some(pos) => {
                let prefix = &self.tokens[..pos];
                let suffix = &self.tokens[pos + 1..];
                if words.len() < prefix.len() + suffix.len() + 1 {
                    return None;
                }
                let end = words.len() - suffix.len();
                (words.starts_with(prefix) && words.ends_with(suffix))
                    .then(|| &words[prefix.len()..end])
            }
        }
    }
}

impl fmt::Display for QuestionTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

/// A mined template rewrite.
#[derive(Clone, Debug, PartialEq)]
pub struct TemplateRulePair {
    pub source: QuestionTemplate,
    pub target: QuestionTemplate,
    pub pmi: f64,
    pub cooccur_count: usize,
}

/// Every (template, argument) abstraction of one question: the question itself
/// with an empty argument, and each contiguous span of up to
/// [`MAX_ARGUMENT_LEN`] tokens replaced by the wildcard, provided at least one
/// literal token remains.
pub fn abstractions(words: &[String]) -> Vec<(QuestionTemplate, Vec<String>)> {
    let n = words.len();
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    out.push((
        QuestionTemplate {
            tokens: words.to_vec(),
        },
        Vec::new(),
    ));
    for start in 0..n {
        for len in 1..=MAX_ARGUMENT_LEN.min(n - start) {
            if len == n {
                continue;
            }
            let mut tokens = words[..start].to_vec();
            tokens.push(WILDCARD.to_string());
            tokens.extend_from_slice(&words[start + len..]);
            out.push((QuestionTemplate { tokens }, words[start..start + len].to_vec()));
        }
    }
    out
}

fn unique_questions(cluster: &[TokenSeq]) -> Vec<Vec<String>> {
    let set: BTreeSet<Vec<String>> = cluster.iter().map(TokenSeq::to_strings).collect();
    set.into_iter().collect()
}

/// Number of distinct clusters each template occurs in.
fn template_support(clusters: &[Vec<TokenSeq>]) -> HashMap<QuestionTemplate, usize> {
    let mut support: HashMap<QuestionTemplate, usize> = HashMap::new();
    for cluster in clusters {
        let mut in_cluster: HashSet<QuestionTemplate> = HashSet::new();
        for q in unique_questions(cluster) {
            for (t, _) in abstractions(&q) {
                in_cluster.insert(t);
            }
        }
        for t in in_cluster {
            *support.entry(t).or_insert(0) += 1;
        }
    }
    support
}

/// Extracts template pairs that co-occur with identical arguments in more than
/// `min_cooccur` clusters, keeping only templates seen in at least
/// `min_cluster_support` clusters. Both directions of each pair are emitted;
/// `pmi` is left at zero until [`rank_rules_pmi`].
pub fn mine_template_rules(
    clusters: &[Vec<TokenSeq>],
    min_cluster_support: usize,
    min_cooccur: usize,
) -> Vec<TemplateRulePair> {
    let support = template_support(clusters);
    let frequent = |t: &QuestionTemplate| support.get(t).is_some_and(|&c| c >= min_cluster_support);

    let mut cooccur: HashMap<(QuestionTemplate, QuestionTemplate), usize> = HashMap::new();
    for cluster in clusters {
        // argument -> (template, question index)
        let mut by_arg: HashMap<Vec<String>, Vec<(QuestionTemplate, usize)>> = HashMap::new();
        for (qi, q) in unique_questions(cluster).into_iter().enumerate() {
            for (t, arg) in abstractions(&q) {
                if frequent(&t) {
                    by_arg.entry(arg).or_default().push((t, qi));
                }
            }
        }
        let mut pairs_here: HashSet<(QuestionTemplate, QuestionTemplate)> = HashSet::new();
        for group in by_arg.values() {
            for (s, qs) in group {
                for (t, qt) in group {
                    if qs != qt && s != t {
                        pairs_here.insert((s.clone(), t.clone()));
                    }
                }
            }
        }
        for pair in pairs_here {
            *cooccur.entry(pair).or_insert(0) += 1;
        }
    }

    let mut out: Vec<TemplateRulePair> = cooccur
        .into_iter()
        .filter(|(_, c)| *c > min_cooccur)
        .map(|((source, target), cooccur_count)| TemplateRulePair {
            source,
            target,
            pmi: 0.0,
            cooccur_count,
        })
        .collect();
    out.sort_by(|a, b| (&a.source, &a.target).cmp(&(&b.source, &b.target)));
    out
}

fn rank_order(a: &TemplateRulePair, b: &TemplateRulePair) -> Ordering {
    b.pmi
        .total_cmp(&a.pmi)
        .then(b.cooccur_count.cmp(&a.cooccur_count))
        .then_with(|| a.source.cmp(&b.source))
        .then_with(|| a.target.cmp(&b.target))
}

/// Sets `pmi = ln(N · c(s,t) / (c(s) · c(t)))` from the cluster corpus and sorts
/// by PMI, then co-occurrence count, then template order.
pub fn rank_rules_pmi(
    pairs: Vec<TemplateRulePair>,
    clusters: &[Vec<TokenSeq>],
) -> Vec<TemplateRulePair> {
    let support = template_support(clusters);
    let n = clusters.len() as f64;
    let mut out: Vec<TemplateRulePair> = pairs
        .into_iter()
        .map(|mut p| {
            let cs = support.get(&p.source).copied().unwrap_or(0) as f64;
            let ct = support.get(&p.target).copied().unwrap_or(0) as f64;
            p.pmi = (n * p.cooccur_count as f64 / (cs * ct)).ln();
            p
        })
        .collect();
    out.sort_by(rank_order);
    out
}

fn content_with_positions(words: &[String]) -> (Vec<String>, Vec<usize>) {
    words
        .iter()
        .enumerate()
        .filter(|(_, w)| !is_stopword(w))
        .map(|(i, w)| (w.clone(), i))
        .unzip()
}

/// Stopword-insensitive match: both sides are stripped of stopwords, the
/// residual literals must match exactly around one contiguous gap, and the
/// argument is the span of the original question covering the gap.
fn fuzzy_bind(source: &QuestionTemplate, words: &[String]) -> Option<Vec<String>> {
    let (content, positions) = content_with_positions(words);
    let stripped: Vec<String> = source
        .tokens
        .iter()
        .filter(|t| *t == WILDCARD || !is_stopword(t))
        .cloned()
        .collect();
    if stripped.is_empty() {
        return None;
    }
    let stripped = QuestionTemplate { tokens: stripped };
    match stripped.wildcard_pos() {
        None => (content == stripped.tokens).then(Vec::new),
        Some(pos) => {
            let prefix_len = pos;
            let bound = stripped.bind(&content)?;
            let first = positions[prefix_len];
            let last = positions[prefix_len + bound.len() - 1];
            Some(words[first..=last].to_vec())
        }
    }
}

/// Rewrites `q` with every matching rule. Exact matches are used when any
/// exist; otherwise stopword-insensitive matching is tried. Results are ranked
/// by PMI and truncated to `cap`.
pub fn apply_template_rules(
    q: &TokenSeq,
    rules: &[TemplateRulePair],
    cap: usize,
) -> Vec<ParaphraseCandidate> {
    let words = q.to_strings();
    let mut found: Vec<(Vec<String>, f64)> = rules
        .iter()
        .filter_map(|r| {
            let arg = r.source.bind(&words)?;
            Some((r.target.instantiate(arg), r.pmi))
        })
        .collect();
    if found.is_empty() {
        found = rules
            .iter()
            .filter_map(|r| {
                let arg = fuzzy_bind(&r.source, &words)?;
                Some((r.target.instantiate(&arg), r.pmi))
            })
            .collect();
    }
    found.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut seen = HashSet::new();
    found
        .into_iter()
        .filter(|(w, _)| seen.insert(w.clone()))
        .take(cap)
        .filter_map(|(w, pmi)| {
            Some(ParaphraseCandidate {
                tokens: TokenSeq::from_words(&w).ok()?,
                origin: Origin::Template,
                gen_score: pmi,
            })
        })
        .collect()
}

/// Reads a cluster corpus: one cluster per line, questions separated by tabs.
pub fn read_clusters(path: &Path) -> Result<Vec<Vec<TokenSeq>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut clusters = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut cluster = Vec::new();
        for field in line.split('\t') {
            if field.trim().is_empty() {
                continue;
            }
            cluster.push(normalize(field).map_err(|e| Error::parse(path, i + 1, e.to_string()))?);
        }
        clusters.push(cluster);
    }
    Ok(clusters)
}

/// Reads `source<TAB>target<TAB>pmi<TAB>cooccur_count` lines.
pub fn read_template_rules(path: &Path) -> Result<Vec<TemplateRulePair>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rules = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::parse(path, i + 1, msg);
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(err(format!("expected 4 columns, found {}", cols.len())));
        }
        let source = QuestionTemplate::parse(cols[0]).map_err(|e| err(e.to_string()))?;
        let target = QuestionTemplate::parse(cols[1]).map_err(|e| err(e.to_string()))?;
        if source.wildcard_count() != target.wildcard_count() {
            return Err(err("templates differ in wildcard count".into()));
        }
        let pmi: f64 = cols[2].trim().parse().map_err(|_| err(format!("bad pmi `{}`", cols[2])))?;
        let cooccur_count: usize = cols[3]
            .trim()
            .parse()
            .map_err(|_| err(format!("bad count `{}`", cols[3])))?;
        rules.push(TemplateRulePair {
            source,
            target,
            pmi,
            cooccur_count,
        });
    }
    Ok(rules)
}

pub fn write_template_rules(path: &Path, rules: &[TemplateRulePair]) -> Result<()> {
    let mut buf = Vec::new();
    for r in rules {
        writeln!(buf, "{}\t{}\t{}\t{}", r.source, r.target, r.pmi, r.cooccur_count)
            .expect("write to vec");
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub struct TemplateGenerator {
    rules: Vec<TemplateRulePair>,
    cap: usize,
}

impl TemplateGenerator {
    /// Rules are re-sorted by PMI so that caller order does not matter.
    pub fn new(mut rules: Vec<TemplateRulePair>, cap: usize) -> Self {
        rules.sort_by(rank_order);
        TemplateGenerator { rules, cap }
    }
}

impl ParaphraseGenerator for TemplateGenerator {
    fn name(&self) -> &str {
        "template"
    }

    fn generate(&self, q: &TokenSeq) -> Vec<ParaphraseCandidate> {
        apply_template_rules(q, &self.rules, self.cap)
    }
}

/// Groups pairs by source template, for inspection.
pub fn rules_by_source(rules: &[TemplateRulePair]) -> BTreeMap<String, Vec<&TemplateRulePair>> {
    let mut map: BTreeMap<String, Vec<&TemplateRulePair>> = BTreeMap::new();
    for r in rules {
        map.entry(r.source.to_string()).or_default().push(r);
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> TokenSeq {
        normalize(s).unwrap()
    }

    fn rule(src: &str, tgt: &str, pmi: f64) -> TemplateRulePair {
        TemplateRulePair {
            source: QuestionTemplate::parse(src).unwrap(),
            target: QuestionTemplate::parse(tgt).unwrap(),
            pmi,
            cooccur_count: 6,
        }
    }

    #[test]
    fn template_wildcard_limits() {
        assert!(QuestionTemplate::parse("__ and __").is_err());
        assert!(QuestionTemplate::parse("__").is_err());
        assert_eq!(QuestionTemplate::parse("what be __").unwrap().wildcard_count(), 1);
        assert_eq!(QuestionTemplate::parse("what is it").unwrap().tokens(), ["what", "be", "it"]);
    }

    #[test]
    fn exact_rule_application() {
        let rules = vec![rule("what be the zip code of __", "zip code of __", 2.0)];
        let out = apply_template_rules(&q("what be the zip code of the largest car manufacturer"), &rules, 10);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].tokens, q("zip code of the largest car manufacturer"));
        assert_eq!(out[0].origin, Origin::Template);
    }

    #[test]
    fn unmatched_question_yields_nothing() {
        let rules = vec![rule("what be the zip code of __", "zip code of __", 2.0)];
        assert!(apply_template_rules(&q("who found microsoft"), &rules, 10).is_empty());
    }

    #[test]
    fn fuzzy_binding_trace() {
        // Stripping {be, the, in} leaves "what currenc __" against "what currenc franc",
        // binding the wildcard to "france".
        let rules = vec![rule("what be the currency in __", "what currency do __ use", 1.0)];
        let out = apply_template_rules(&q("what be currency in france"), &rules, 10);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].tokens.to_string(), "what currenc do franc us");
    }

    #[test]
    fn fuzzy_argument_keeps_inner_stopwords() {
        let rules = vec![rule("what be the capital of __", "__ capital", 1.0)];
        let out = apply_template_rules(&q("what be capital of the bank of america"), &rules, 10);
        assert_eq!(out[0].tokens.to_string(), "bank of america capit");
    }

    #[test]
    fn exact_match_suppresses_fuzzy() {
        let rules = vec![
            rule("who make __", "who found __", 1.0),
            rule("make __", "__ maker", 3.0),
        ];
        let out = apply_template_rules(&q("who make acme"), &rules, 10);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].tokens.to_string(), "who found acm");
    }

    #[test]
    fn pmi_hand_values() {
        // N = 100, c(s) = c(t) = c(s,t) = 10
        let mut clusters: Vec<Vec<TokenSeq>> = (0..10)
            .map(|i| vec![q(&format!("what be the money in land{i}")), q(&format!("what currency do land{i} use"))])
            .collect();
        clusters.extend((0..90).map(|i| vec![q(&format!("filler{i} question{i}"))]));
        let ranked = rank_rules_pmi(mine_template_rules(&clusters, 10, 5), &clusters);
        let hit = ranked
            .iter()
            .find(|r| {
                r.source == QuestionTemplate::parse("what be the money in __").unwrap()
                    && r.target == QuestionTemplate::parse("what currency do __ use").unwrap()
            })
            .expect("pair mined");
        assert_eq!(hit.cooccur_count, 10);
        assert!((hit.pmi - 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn single_cluster_mines_nothing() {
        let clusters = vec![vec![q("what be the money in france"), q("what currency do france use")]];
        assert!(mine_template_rules(&clusters, 10, 5).is_empty());
        assert!(mine_template_rules(&[], 10, 5).is_empty());
    }

    #[test]
    fn money_currency_pair_is_mined() {
        let countries = [
            "france", "spain", "japan", "china", "peru", "chile", "kenya", "egypt", "india", "italy", "greece", "cuba",
        ];
        let clusters: Vec<Vec<TokenSeq>> = countries
            .iter()
            .map(|c| vec![q(&format!("what be the money in {c}")), q(&format!("what currency do {c} use"))])
            .collect();
        let ranked = rank_rules_pmi(mine_template_rules(&clusters, 10, 5), &clusters);
        let wanted = (
            QuestionTemplate::parse("what be the money in __").unwrap(),
            QuestionTemplate::parse("what currency do __ use").unwrap(),
        );
        let hit = ranked
            .iter()
            .find(|r| r.source == wanted.0 && r.target == wanted.1)
            .expect("pair mined");
        assert_eq!(hit.cooccur_count, 12);
        // N = c(s) = c(t) = c(s,t) = 12
        // N = c(s) = c(t) = c(s,t): the independence point
        assert!(hit.pmi.abs() < 1e-12);
    }

    #[test]
    fn rule_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rules.tsv");
        let rules = vec![rule("what be the money in __", "what currency do __ use", 1.25)];
        write_template_rules(&path, &rules).unwrap();
        assert_eq!(read_template_rules(&path).unwrap(), rules);
    }
}
