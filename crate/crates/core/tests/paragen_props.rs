mod support;

use paraqa::paragen::{
    fuse_decode, fused_step_distribution, mine_template_rules, rank_rules_pmi, GeneratorSet, LexicalGenerator,
    Origin, RewriteRule, TemplateGenerator, TemplateRulePair, QuestionTemplate,
};
use paraqa::textkit::{normalize, TokenSeq};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::*;

fn normalized_corpus(raw: &[Vec<Vec<String>>]) -> (Vec<Vec<TokenSeq>>, Vec<Vec<Vec<String>>>) {
    let seqs: Vec<Vec<TokenSeq>> = raw
        .iter()
        .map(|c| c.iter().map(|q| normalize(&q.join(" ")).unwrap()).collect())
        .collect();
    let words = seqs.iter().map(|c| c.iter().map(TokenSeq::to_strings).collect()).collect();
    (seqs, words)
}

fn as_oracle(rules: &[TemplateRulePair]) -> Vec<OracleRule> {
    rules
        .iter()
        .map(|r| OracleRule {
            source: r.source.tokens().to_vec(),
            target: r.target.tokens().to_vec(),
            cooccur: r.cooccur_count,
            pmi: r.pmi,
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn fused_steps_are_distributions(seed in any::<u64>(), vocab in 1usize..=3, k in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (model, pivots) = random_decoding_model(&mut rng, vocab, k, 2);
        for prefix in [vec![], vec![1], vec![1, 1]] {
            let total: f64 = fused_step_distribution(&pivots, &model, &prefix).iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn exhaustive_beam_equals_enumeration(seed in any::<u64>(), vocab in 1usize..=3, k in 1usize..=3, max_len in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (model, pivots) = random_decoding_model(&mut rng, vocab, k, max_len);
        let beam = (vocab + 1).pow(max_len as u32);
        let got = fuse_decode(&pivots, &model, beam, max_len, usize::MAX).unwrap();
        let want = decode_oracle(&pivots, &model, max_len);
        prop_assert_eq!(got.len(), want.len());
        for (g, (w, score)) in got.iter().zip(&want) {
            prop_assert_eq!(&g.tokens.to_strings(), w);
            prop_assert!((g.gen_score - score).abs() < 1e-12);
        }
    }

    #[test]
    fn mining_matches_oracle(seed in any::<u64>(), n in 1usize..=50, support in 2usize..=10, cooccur in 0usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (seqs, words) = normalized_corpus(&random_corpus(&mut rng, n));
        let got = rank_rules_pmi(mine_template_rules(&seqs, support, cooccur), &seqs);
        prop_assert_eq!(as_oracle(&got), mining_oracle(&words, support, cooccur));
    }

    #[test]
    fn candidate_sets_are_clean(words in proptest::collection::vec(prop::sample::select(vec!["who", "found", "the", "acme", "car", "a", "of"]), 1..7)) {
        let q = normalize(&words.join(" ")).unwrap();
        let lexical = vec![
            RewriteRule::new("car", "vehicle", 0.5).unwrap(),
            RewriteRule::new("the", "a", 0.9).unwrap(),
            RewriteRule::new("found", "start", 0.3).unwrap(),
        ];
        let templates = vec![TemplateRulePair {
            source: QuestionTemplate::parse("who found __").unwrap(),
            target: QuestionTemplate::parse("__ founder").unwrap(),
            pmi: 1.0,
            cooccur_count: 6,
        }];
        let set = GeneratorSet::new()
            .with(LexicalGenerator::new(lexical.clone(), 10))
            .with(LexicalGenerator::new(lexical, 10))
            .with(TemplateGenerator::new(templates, 10));
        let cands = set.generate_all(&q);
        prop_assert_eq!(cands.iter().filter(|c| c.origin == Origin::Identity).count(), 1);
        prop_assert_eq!(&cands.last().unwrap().tokens, &q);
        let mut texts: Vec<Vec<String>> = cands.iter().map(|c| c.tokens.to_strings()).collect();
        texts.sort();
        texts.dedup();
        prop_assert_eq!(texts.len(), cands.len());
        for c in &cands[..cands.len() - 1] {
            prop_assert_ne!(c.tokens.content(), q.content());
        }
    }
}

#[test]
fn toy_corpus_yields_rules() {
    // Guards the generator above against producing only empty rule sets.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (seqs, words) = normalized_corpus(&random_corpus(&mut rng, 30));
    let want = mining_oracle(&words, 10, 5);
    let got = rank_rules_pmi(mine_template_rules(&seqs, 10, 5), &seqs);
    assert!(!want.is_empty(), "{} clusters", seqs.len());
    assert_eq!(as_oracle(&got), want);
}
