//! Candidate paraphrase generation: lexical/phrasal rule substitution, mined
//! template rewriting, and multi-pivot fused beam decoding.

pub mod lexical;
pub mod pivot;
pub mod templates;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::textkit::TokenSeq;

pub use lexical::{apply_lexical_rules, read_rule_dictionary, LexicalGenerator, RewriteRule};
pub use pivot::{
    beam_search, fuse_decode, fused_step_distribution, Hypothesis, PivotGenerator, PivotSet,
    SeqModel, TableModel, EOS,
};
pub use templates::{
    apply_template_rules, mine_template_rules, rank_rules_pmi, read_clusters, read_template_rules,
    write_template_rules, QuestionTemplate, TemplateGenerator, TemplateRulePair, WILDCARD,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Origin {
    Identity,
    Lexical,
    Template,
    Pivot,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Identity => "identity",
            Origin::Lexical => "lexical",
            Origin::Template => "template",
            Origin::Pivot => "pivot",
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Origin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" => Ok(Origin::Identity),
            "lexical" => Ok(Origin::Lexical),
            "template" => Ok(Origin::Template),
            "pivot" => Ok(Origin::Pivot),
            other => Err(Error::InvalidArgument(format!("unknown origin `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParaphraseCandidate {
    pub tokens: TokenSeq,
    pub origin: Origin,
    /// Generator-internal score (rule weight, PMI, or decoder log-probability).
    pub gen_score: f64,
}

impl ParaphraseCandidate {
    pub fn identity(q: &TokenSeq) -> Self {
        ParaphraseCandidate {
            tokens: q.clone(),
            origin: Origin::Identity,
            gen_score: 0.0,
        }
    }
}

/// A source of candidate paraphrases. Implementations are read-only after
/// construction and may be shared across threads.
pub trait ParaphraseGenerator: Send + Sync {
    fn name(&self) -> &str;
    fn generate(&self, q: &TokenSeq) -> Vec<ParaphraseCandidate>;
}

/// True when `cand` only rewrites stopwords or punctuation of `q`.
pub fn is_trivial_rewrite(q: &TokenSeq, cand: &TokenSeq) -> bool {
    q.content() == cand.content()
}

/// The enabled generators, queried in order.
#[derive(Default)]
pub struct GeneratorSet {
    generators: Vec<Box<dyn ParaphraseGenerator>>,
}

impl GeneratorSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, g: impl ParaphraseGenerator + 'static) -> Self {
        self.generators.push(Box::new(g));
        self
    }

    pub fn push(&mut self, g: Box<dyn ParaphraseGenerator>) {
        self.generators.push(g);
    }

    pub fn generators(&self) -> &[Box<dyn ParaphraseGenerator>] {
        &self.generators
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// `H_q ∪ {q}`: deduplicated, non-trivial candidates of every generator,
    /// followed by the identity candidate.
    pub fn generate_all(&self, q: &TokenSeq) -> Vec<ParaphraseCandidate> {
        let mut seen: HashSet<Vec<String>> = HashSet::new();
        seen.insert(q.to_strings());
        let mut out = Vec::new();
        for g in &self.generators {
            for cand in g.generate(q) {
                if is_trivial_rewrite(q, &cand.tokens) {
                    continue;
                }
                if seen.insert(cand.tokens.to_strings()) {
                    out.push(cand);
                }
            }
        }
        out.push(ParaphraseCandidate::identity(q));
        out
    }
}

pub fn generate_all(q: &TokenSeq, generators: &GeneratorSet) -> Vec<ParaphraseCandidate> {
    generators.generate_all(q)
}
