//! Lexical and phrasal substitution with a weighted rule dictionary.

use std::path::Path;

use super::{Origin, ParaphraseCandidate, ParaphraseGenerator};
use crate::error::{Error, Result};
use crate::textkit::{normalize, TokenSeq};

pub const MAX_PHRASE_LEN: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct RewriteRule {
    source: Vec<String>,
    target: Vec<String>,
    pub weight: f64,
}

impl RewriteRule {
    /// Normalizes both phrases; each must hold 1 to 5 tokens and the two must differ.
    pub fn new(source: &str, target: &str, weight: f64) -> Result<Self> {
        let source = normalize(source)?.to_strings();
        let target = normalize(target)?.to_strings();
        if source.len() > MAX_PHRASE_LEN || target.len() > MAX_PHRASE_LEN {
            return Err(Error::InvalidArgument(format!(
                "rule phrases are limited to {MAX_PHRASE_LEN} tokens"
            )));
        }
        if source == target {
            return Err(Error::InvalidArgument(format!(
                "rule rewrites `{}` to itself",
                source.join(" ")
            )));
        }
        if !weight.is_finite() {
            return Err(Error::InvalidArgument("rule weight must be finite".into()));
        }
        Ok(RewriteRule {
            source,
            target,
            weight,
        })
    }

    pub fn source(&self) -> &[String] {
        &self.source
    }

    pub fn target(&self) -> &[String] {
        &self.target
    }
}

/// One candidate per (rule, match position), ranked by rule weight then
/// token order, truncated to `cap`.
pub fn apply_lexical_rules(
    q: &TokenSeq,
    rules: &[RewriteRule],
    cap: usize,
) -> Vec<ParaphraseCandidate> {
    let words = q.to_strings();
    let mut out: Vec<(Vec<String>, f64)> = Vec::new();
    for rule in rules {
        let n = rule.source.len();
        if n > words.len() {
            continue;
        }
        for start in 0..=(words.len() - n) {
            if words[start..start + n] != rule.source[..] {
                continue;
            }
            let mut rewritten = words[..start].to_vec();
            rewritten.extend(rule.target.iter().cloned());
            rewritten.extend_from_slice(&words[start + n..]);
            out.push((rewritten, rule.weight));
        }
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out.into_iter()
        .take(cap)
        .filter_map(|(words, weight)| {
            Some(ParaphraseCandidate {
                tokens: TokenSeq::from_words(&words).ok()?,
                origin: Origin::Lexical,
                gen_score: weight,
            })
        })
        .collect()
}

/// Reads a `source<TAB>target<TAB>weight` dictionary. Lines starting with `#`
/// and blank lines are skipped.
pub fn read_rule_dictionary(path: &Path) -> Result<Vec<RewriteRule>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rules = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::parse(path, i + 1, format!("expected 3 columns, found {}", cols.len())));
        }
        let weight: f64 = cols[2]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, i + 1, format!("bad weight `{}`", cols[2])))?;
        let rule = RewriteRule::new(cols[0], cols[1], weight)
            .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        rules.push(rule);
    }
    Ok(rules)
}

pub struct LexicalGenerator {
    rules: Vec<RewriteRule>,
    cap: usize,
}

impl LexicalGenerator {
    pub fn new(rules: Vec<RewriteRule>, cap: usize) -> Self {
        LexicalGenerator { rules, cap }
    }
}

impl ParaphraseGenerator for LexicalGenerator {
    fn name(&self) -> &str {
        "lexical"
    }

    fn generate(&self, q: &TokenSeq) -> Vec<ParaphraseCandidate> {
        apply_lexical_rules(q, &self.rules, self.cap)
    }
}
