//! Per-generator paraphrase statistics: lengths, counts, coverage, BLEU, TER.

use std::collections::HashSet;
use std::fmt::Write;

use super::{bleu, ter};
use crate::paragen::{is_trivial_rewrite, ParaphraseGenerator};
use crate::textkit::TokenSeq;

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorStats {
    pub name: String,
    pub enabled: bool,
    /// Mean paraphrase length in tokens; `None` without paraphrases.
    pub avg_paraphrase_len: Option<f64>,
    /// Mean number of paraphrases per question, counting zeros.
    pub avg_count: f64,
    /// Percentage of questions with at least one paraphrase.
    pub coverage: f64,
    /// Mean sentence BLEU (%) of each paraphrase against its question.
    pub bleu: Option<f64>,
    /// Mean TER (%) of each paraphrase against its question.
    pub ter: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StatsReport {
    pub questions: usize,
    pub avg_question_len: f64,
    pub columns: Vec<GeneratorStats>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Computes statistics for each named generator over `questions`. A `None`
/// generator is reported as disabled. With `filter_trivial`, duplicates and
/// rewrites that only touch stopwords or punctuation are discarded first.
pub fn paraphrase_stats(
    questions: &[TokenSeq],
    generators: &[(&str, Option<&dyn ParaphraseGenerator>)],
    filter_trivial: bool,
) -> StatsReport {
    let nq = questions.len().max(1) as f64;
    let avg_question_len =
        mean(&questions.iter().map(|q| q.len() as f64).collect::<Vec<_>>()).unwrap_or(0.0);
    let columns = generators
        .iter()
        .map(|(name, generator)| {
            let Some(generator) = generator else {
                return GeneratorStats {
                    name: name.to_string(),
                    enabled: false,
                    avg_paraphrase_len: None,
                    avg_count: 0.0,
                    coverage: 0.0,
                    bleu: None,
                    ter: None,
                };
            };
            let mut lens = Vec::new();
            let mut bleus = Vec::new();
            let mut ters = Vec::new();
            let mut covered = 0usize;
            for q in questions {
                let mut seen: HashSet<Vec<String>> = HashSet::new();
                if filter_trivial {
                    seen.insert(q.to_strings());
                }
                let mut count = 0usize;
                for cand in generator.generate(q) {
                    if filter_trivial
                        && (is_trivial_rewrite(q, &cand.tokens) || !seen.insert(cand.tokens.to_strings()))
                    {
                        continue;
                    }
                    count += 1;
                    lens.push(cand.tokens.len() as f64);
                    bleus.push(100.0 * bleu(&cand.tokens, q, 4));
                    ters.push(100.0 * ter(&cand.tokens, q));
                }
                if count > 0 {
                    covered += 1;
                }
            }
            GeneratorStats {
                name: name.to_string(),
                enabled: true,
                avg_paraphrase_len: mean(&lens),
                avg_count: lens.len() as f64 / nq,
                coverage: 100.0 * covered as f64 / nq,
                bleu: mean(&bleus),
                ter: mean(&ters),
            }
        })
        .collect();
    StatsReport {
        questions: questions.len(),
        avg_question_len,
        columns,
    }
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.2}")).unwrap_or_default()
}

impl StatsReport {
    pub const ROWS: [&'static str; 6] = ["avg(|q|)", "avg(|q'|)", "avg(#q')", "Coverage (%)", "BLEU (%)", "TER (%)"];

    /// Rows of cells; the first column is the metric name.
    pub fn cells(&self) -> Vec<Vec<String>> {
        let mut rows = vec![{
            let mut header = vec!["Metric".to_string()];
            header.extend(self.columns.iter().map(|c| c.name.clone()));
            header
        }];
        for (r, label) in Self::ROWS.iter().enumerate() {
            let mut row = vec![label.to_string()];
            for c in &self.columns {
                let value = match r {
                    0 => Some(self.avg_question_len),
                    1 => c.avg_paraphrase_len,
                    2 => Some(c.avg_count),
                    3 => Some(c.coverage),
                    4 => c.bleu,
                    _ => c.ter,
                };
                row.push(cell(value));
            }
            rows.push(row);
        }
        rows
    }

    pub fn to_tsv(&self) -> String {
        self.cells()
            .into_iter()
            .map(|row| row.join("\t") + "\n")
            .collect()
    }

    /// Plain-text table with right-aligned columns; empty cells print as `-`.
    pub fn to_table(&self) -> String {
        let rows = self.cells();
        let ncol = rows[0].len();
        let widths: Vec<usize> = (0..ncol)
            .map(|c| rows.iter().map(|r| r[c].len().max(1)).max().unwrap_or(1))
            .collect();
        let mut out = String::new();
        for row in &rows {
            for (c, value) in row.iter().enumerate() {
                let value = if value.is_empty() { "-" } else { value };
                if c == 0 {
                    let _ = write!(out, "{value:<w$}", w = widths[0]);
                } else {
                    let _ = write!(out, "  {value:>w$}", w = widths[c]);
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paragen::{Origin, ParaphraseCandidate};
    use crate::textkit::normalize;

    struct Echo;

    impl ParaphraseGenerator for Echo {
        fn name(&self) -> &str {
            "echo"
        }

        fn generate(&self, q: &TokenSeq) -> Vec<ParaphraseCandidate> {
            vec![ParaphraseCandidate {
                tokens: q.clone(),
                origin: Origin::Pivot,
                gen_score: 0.0,
            }]
        }
    }

    #[test]
    fn disabled_column_is_empty() {
        let qs = vec![normalize("who found acme").unwrap()];
        let report = paraphrase_stats(&qs, &[("pivot", None)], true);
        let c = &report.columns[0];
        assert_eq!((c.avg_count, c.coverage), (0.0, 0.0));
        assert_eq!((c.avg_paraphrase_len, c.bleu, c.ter), (None, None, None));
        assert!(report.to_table().contains('-'));
    }

    #[test]
    fn identity_generator_unfiltered() {
        let qs = vec![normalize("who found acme").unwrap(), normalize("where be acme locate").unwrap()];
        let report = paraphrase_stats(&qs, &[("echo", Some(&Echo))], false);
        let c = &report.columns[0];
        assert_eq!(c.bleu, Some(100.0));
        assert_eq!(c.ter, Some(0.0));
        assert_eq!(c.coverage, 100.0);
        assert_eq!(report.avg_question_len, 3.5);
        let filtered = paraphrase_stats(&qs, &[("echo", Some(&Echo))], true);
        assert_eq!(filtered.columns[0].avg_count, 0.0);
    }
}
