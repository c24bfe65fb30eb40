use std::collections::BTreeSet;
use std::path::Path;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::tensornet::{gradient_check, init_uniform, stream_rng, ParamStore, Stream, Tape, Vocab};
use crate::testutil::{reference_encode, reference_trilinear};
use crate::textkit::normalize;

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn kb(triples: &[(&str, &str, &str)], aliases: &[(&str, &str)]) -> ToyKb {
    ToyKb::new(
        triples.iter().map(|(s, r, o)| Triple::new(s, r, o)).collect(),
        aliases.iter().map(|(a, e)| (a.to_string(), e.to_string())).collect(),
    )
    .unwrap()
}

#[test]
fn link_single_alias() {
    let k = kb(&[("E1", "founder", "P1")], &[("Microsoft", "E1")]);
    assert_eq!(link_entities(&normalize("who start microsoft").unwrap(), &k), vec!["E1"]);
    assert!(link_entities(&normalize("who start apple").unwrap(), &k).is_empty());
}

#[test]
fn link_prefers_longest_alias() {
    let k = kb(&[], &[("new york", "NY"), ("york", "YK")]);
    assert_eq!(link_entities(&normalize("mayor of new york").unwrap(), &k), vec!["NY"]);
    assert_eq!(link_entities(&normalize("duke of york").unwrap(), &k), vec!["YK"]);
}

#[test]
fn link_returns_longest_first() {
    let k = kb(&[], &[("bank of america", "BOA"), ("ohio", "OH")]);
    let q = normalize("ohio branch of bank of america").unwrap();
    assert_eq!(link_entities(&q, &k), vec!["BOA", "OH"]);
}

#[test]
fn single_edge_subgraph() {
    let k = kb(&[("E1", "founder", "P1")], &[]);
    let c = generate_subgraphs(&["E1".into()], &k, 2).unwrap();
    assert_eq!(c.len(), 1);
    assert_eq!(c[0].denotation, set(&["P1"]));
    assert_eq!(c[0].path, vec!["founder"]);
}

#[test]
fn chain_gives_two_hop_candidate() {
    let k = kb(&[("E1", "r1", "M"), ("M", "r2", "P2")], &[]);
    let c = generate_subgraphs(&["E1".into()], &k, 2).unwrap();
    let two: Vec<_> = c.iter().filter(|c| c.path.len() == 2).collect();
    assert_eq!(two.len(), 1);
    assert_eq!(two[0].denotation, set(&["P2"]));
    assert_eq!(generate_subgraphs(&["E1".into()], &k, 1).unwrap().len(), 1);
    assert!(generate_subgraphs(&[], &k, 2).is_err());
}

#[test]
fn constraint_narrows_denotation() {
    let k = kb(
        &[
            ("MSFT", "employment", "M1"),
            ("MSFT", "employment", "M2"),
            ("M1", "person", "Ballmer"),
            ("M1", "year", "2008"),
            ("M2", "person", "Nadella"),
            ("M2", "year", "2014"),
        ],
        &[],
    );
    let c = generate_subgraphs(&["MSFT".into()], &k, 2).unwrap();
    let plain = c
        .iter()
        .find(|c| c.path == ["employment", "person"] && c.constraint.is_none())
        .unwrap();
    assert_eq!(plain.denotation, set(&["Ballmer", "Nadella"]));
    let y2008 = c
        .iter()
        .find(|c| {
            c.path == ["employment", "person"]
                && c.constraint == Some(Constraint { relation: "year".into(), value: "2008".into() })
        })
        .unwrap();
    assert_eq!(y2008.denotation, set(&["Ballmer"]));
}

#[test]
fn overlap_feature_uses_shared_prefix() {
    let k = kb(&[("E1", "founder", "P1"), ("E1", "location", "C1"), ("C1", "country", "X")], &[]);
    let cands = generate_subgraphs(&["E1".into()], &k, 2).unwrap();
    let founder = cands.iter().find(|c| c.path == ["founder"]).unwrap();
    let f = kb_features(&normalize("who found microsoft").unwrap(), founder, &k);
    assert!(f.get("overlap").unwrap() >= 1.0);
    assert_eq!(f.get("rel:founder"), Some(1.0));
    assert_eq!(f.get("rel:location"), Some(0.0));
    assert_eq!(f.get("card=1"), Some(1.0));
    let f0 = kb_features(&normalize("where be microsoft").unwrap(), founder, &k);
    assert_eq!(f0.get("overlap"), Some(0.0));
    let two = cands.iter().find(|c| c.path.len() == 2).unwrap();
    assert_eq!(kb_features(&normalize("x").unwrap(), two, &k).get("path_len"), Some(2.0));
    assert_eq!(f.values.len(), kb_feature_names(&k).len());
}

#[test]
fn word_match_rule() {
    assert!(words_match("found", "founder"));
    assert!(words_match("ceo", "ceo"));
    assert!(!words_match("ceo", "ceos"));
    assert!(!words_match("found", "profound"));
}

#[test]
fn kb_prob_examples() {
    assert_eq!(kb_prob(&[1.0, 2.0, 3.0], &[0.0; 3], 0.0).unwrap(), 0.5);
    let p = kb_prob(&[1.0, 2.0], &[0.5, -1.0], 0.25).unwrap();
    let z: f64 = 0.5 - 2.0 + 0.25;
    assert!((p - 1.0 / (1.0 + (-z).exp())).abs() < 1e-15);
    assert!(kb_prob(&[1.0], &[0.5, 1.0], 0.0).is_err());
}

#[test]
fn f1_examples() {
    assert_eq!(f1_vs_gold(&set(&["a", "b"]), &set(&["a", "b"])), 1.0);
    assert_eq!(f1_vs_gold(&set(&["a"]), &set(&["b"])), 0.0);
    assert_eq!(f1_vs_gold(&set(&["a", "b"]), &set(&["b", "c"])), 0.5);
}

fn ss_setup(use_counts: bool, seed: u64) -> (ParamStore<f64>, SentSelParams, Vocab) {
    let vocab = Vocab::from_words(["who", "found", "acm", "john", "smith", "in", "1990"]);
    let mut store = ParamStore::new();
    let p = SentSelParams::register(&mut store, &vocab, 3, 2, None, use_counts).unwrap();
    init_uniform(&mut store, -0.5, 0.5, &mut stream_rng(seed, Stream::Init)).unwrap();
    (store, p, vocab)
}

#[test]
fn sentsel_zero_head_is_half() {
    let (mut store, p, vocab) = ss_setup(false, 1);
    store.value_mut(p.head.weights).data_mut().fill(0.0);
    store.value_mut(p.head.bias).data_mut().fill(0.0);
    let q = normalize("who found acme").unwrap();
    let s = normalize("john smith found acme in 1990").unwrap();
    assert_eq!(sentsel_prob(&q, &s, &store, &p, &vocab, None, 0.0, None).unwrap(), 0.5);
}

#[test]
fn sentsel_matches_reference_pipeline() {
    let (store, p, vocab) = ss_setup(false, 2);
    let q = normalize("who found").unwrap();
    let s = normalize("john smith").unwrap();
    let got = sentsel_prob(&q, &s, &store, &p, &vocab, None, 0.0, None).unwrap();
    let qv = reference_encode(&store, &p.question, &vocab, &["who", "found"]);
    let sv = reference_encode(&store, &p.sentence, &vocab, &["john", "smith"]);
    let z = reference_trilinear(
        store.value(p.head.weights).data(),
        store.value(p.head.bias).data()[0],
        &qv,
        &sv,
    );
    assert!((got - 1.0 / (1.0 + (-z).exp())).abs() < 1e-10);
}

#[test]
fn sentsel_count_fusion() {
    let (mut store, p, vocab) = ss_setup(true, 3);
    let q = normalize("who found acme").unwrap();
    let s = normalize("john smith found acme").unwrap();
    p.reset_count_weights(&mut store);
    let with = sentsel_prob(&q, &s, &store, &p, &vocab, Some([2.0, 1.5]), 0.0, None).unwrap();
    let (plain_store, plain, _) = {
        let mut st = store.clone();
        let id = p.count_weights.unwrap();
        st.value_mut(id).data_mut().copy_from_slice(&[1.0, 0.0, 0.0]);
        (st, p, ())
    };
    let base = sentsel_prob(&q, &s, &plain_store, &plain, &vocab, Some([0.0, 0.0]), 0.0, None).unwrap();
    assert_eq!(with, base);
    store.value_mut(p.count_weights.unwrap()).data_mut().copy_from_slice(&[1.0, 0.5, 0.25]);
    let boosted = sentsel_prob(&q, &s, &store, &p, &vocab, Some([2.0, 1.5]), 0.0, None).unwrap();
    let z = (base / (1.0 - base)).ln() + 1.0 + 0.375;
    assert!((boosted - 1.0 / (1.0 + (-z).exp())).abs() < 1e-12);
    assert!(sentsel_prob(&q, &s, &store, &p, &vocab, None, 0.0, None).is_err());
}

#[test]
fn sentsel_gradients_through_both_encoders() {
    let (store, p, vocab) = ss_setup(true, 4);
    let rel = gradient_check(&store, 1e-4, |s| {
        let mut tape = Tape::new(s);
        let qv = p.question.encode(&mut tape, &vocab, &["who", "found", "acm"], 0.0, None)?;
        let sv = p.sentence.encode(&mut tape, &vocab, &["john", "found", "acm"], 0.0, None)?;
        let prob = p.prob_on(&mut tape, qv, sv, Some([2.0, 0.7]))?;
        let l = tape.bce(prob, 1.0);
        Ok((tape.scalar(l), tape.backward(l)))
    })
    .unwrap();
    assert!(rel < 1e-3, "relative error {rel}");
    let g = {
        let mut tape = Tape::new(&store);
        let qv = p.question.encode(&mut tape, &vocab, &["who"], 0.0, None).unwrap();
        let sv = p.sentence.encode(&mut tape, &vocab, &["john"], 0.0, None).unwrap();
        let prob = p.prob_on(&mut tape, qv, sv, Some([0.0, 0.0])).unwrap();
        let l = tape.bce(prob, 1.0);
        tape.backward(l)
    };
    for enc in [p.question, p.sentence] {
        assert!(g.get(enc.fwd.input).unwrap().data().iter().any(|&v| v != 0.0));
    }
}

#[test]
fn word_match_examples() {
    let corpus: Vec<_> = ["the cat sits", "the dog sits", "a cat ran"]
        .iter()
        .map(|s| normalize(s).unwrap())
        .collect();
    let idf = IdfTable::from_sentences(&corpus);
    let q = normalize("where does the cat sit").unwrap();
    assert_eq!(word_match_features(&q, &normalize("dog run").unwrap(), &idf), [0.0, 0.0]);
    // shared content words: cat (df 2) and sit (df 2)
    let [c, w] = word_match_features(&q, &corpus[0], &idf);
    assert_eq!(c, 2.0);
    assert!((w - 2.0 * (1.5f64).ln()).abs() < 1e-12);
    let s = normalize("acme found acme in 1990").unwrap();
    assert_eq!(word_match_features(&s, &s, &idf)[0], 3.0);
}

#[test]
fn dataset_round_trip() {
    let text = "q1\tkb\tWho founded Acme?\tP1|P2\n# comment\n\nq2\tsentsel\twho found acme\t1\tjohn found acme\t0\tacme sells cars\n";
    let data = parse_dataset(text, Path::new("x")).unwrap();
    assert_eq!(data.len(), 2);
    assert_eq!(data[0].task(), Task::Kb);
    assert_eq!(data[0].gold, Gold::Kb(set(&["P1", "P2"])));
    match &data[1].gold {
        Gold::SentSel(s) => {
            assert_eq!(s.len(), 2);
            assert!(s[0].1 && !s[1].1);
        }
        _ => panic!("wrong task"),
    }
    let again = parse_dataset(&data.iter().map(|d| d.to_line() + "\n").collect::<String>(), Path::new("x")).unwrap();
    assert_eq!(again, data);
}

#[test]
fn dataset_errors_carry_line_numbers() {
    let err = parse_dataset("q1\tkb\tx\ta\nq2\tfoo\tx\ta\n", Path::new("d.tsv")).unwrap_err();
    assert!(matches!(err, crate::Error::Parse { line: 2, .. }));
    let err = parse_dataset("q1\tsentsel\tx\t2\ty\n", Path::new("d.tsv")).unwrap_err();
    assert!(matches!(err, crate::Error::Parse { line: 1, .. }));
}

/// Exhaustive enumeration of every path/constraint combination.
fn brute_force(topic: &str, kb: &ToyKb) -> Vec<(Vec<String>, Option<(String, String)>, BTreeSet<String>)> {
    let t = kb.triples();
    let mut out = Vec::new();
    for r1 in kb.relations() {
        let mids: BTreeSet<&str> = t
            .iter()
            .filter(|x| x.subject == topic && &x.relation == r1)
            .map(|x| x.object.as_str())
            .collect();
        if mids.is_empty() {
            continue;
        }
        out.push((vec![r1.clone()], None, mids.iter().map(|m| m.to_string()).collect()));
        for r2 in kb.relations() {
            let deno = |filter: &dyn Fn(&str) -> bool| -> BTreeSet<String> {
                t.iter()
                    .filter(|x| &x.relation == r2 && mids.contains(x.subject.as_str()) && filter(&x.subject))
                    .map(|x| x.object.clone())
                    .collect()
            };
            let full = deno(&|_| true);
            if full.is_empty() {
                continue;
            }
            for c in t {
                let (cr, cv) = (&c.relation, &c.object);
                let narrowed = deno(&|m| t.iter().any(|y| y.subject == m && &y.relation == cr && &y.object == cv));
                if !narrowed.is_empty() && narrowed != full {
                    out.push((vec![r1.clone(), r2.clone()], Some((cr.clone(), cv.clone())), narrowed));
                }
            }
            out.push((vec![r1.clone(), r2.clone()], None, full));
        }
    }
    out.sort();
    out.dedup();
    out
}

proptest! {
    #[test]
    fn subgraphs_match_exhaustive_traversal(seed in 0u64..200, size in 1usize..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ents = 12;
        let triples: Vec<Triple> = (0..size)
            .map(|_| {
                Triple::new(
                    &format!("e{}", rng.gen_range(0..ents)),
                    &format!("r{}", rng.gen_range(0..4)),
                    &format!("e{}", rng.gen_range(0..ents)),
                )
            })
            .collect();
        let k = ToyKb::new(triples, vec![]).unwrap();
        let topic = format!("e{}", rng.gen_range(0..ents));
        let mut got: Vec<_> = generate_subgraphs(&[topic.clone()], &k, 2)
            .unwrap()
            .into_iter()
            .map(|c| (c.path, c.constraint.map(|c| (c.relation, c.value)), c.denotation))
            .collect();
        got.sort();
        prop_assert_eq!(got, brute_force(&topic, &k));
    }

    #[test]
    fn f1_in_unit_interval(a in proptest::collection::btree_set(0u8..10, 1..6), b in proptest::collection::btree_set(0u8..10, 1..6)) {
        let f = f1_vs_gold(&a, &b);
        prop_assert!((0.0..=1.0).contains(&f));
        if a.len() == b.len() {
            prop_assert_eq!(f, f1_vs_gold(&b, &a));
        }
    }

    #[test]
    fn kb_prob_strictly_inside(f in proptest::collection::vec(-5.0f64..5.0, 4), w in proptest::collection::vec(-3.0f64..3.0, 4)) {
        let p = kb_prob(&f, &w, 0.1).unwrap();
        prop_assert!(p > 0.0 && p < 1.0);
    }
}
