//! QA back-ends producing the per-paraphrase answer probabilities.

mod data;
mod kb;
mod sentsel;

pub use crate::metrics::f1_vs_gold;
pub use data::{parse_dataset, read_dataset, write_dataset, Gold, QaInstance, Task};
pub use kb::{
    generate_subgraphs, kb_feature_names, kb_feature_values, kb_features, kb_prob, link_entities, read_kb,
    relation_words, words_match, Constraint, FeatureVector, KbParams, SubgraphCandidate, ToyKb, Triple,
    CARDINALITY_BUCKETS, KB_PREFIX,
};
pub use sentsel::{sentsel_prob, word_match_features, IdfTable, SentSelParams, SENTSEL_PREFIX};

#[cfg(test)]
mod tests;
