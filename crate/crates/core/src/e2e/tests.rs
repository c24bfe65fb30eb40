use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::paragen::{Origin, ParaphraseCandidate};
use crate::qamodels::{Constraint, SubgraphCandidate, Task};
use crate::tensornet::{gradient_check, init_uniform, Tape, Vocab};
use crate::textkit::{normalize, TokenSeq};

fn para(text: &str, origin: Origin) -> ParaphraseCandidate {
    ParaphraseCandidate {
        tokens: normalize(text).unwrap(),
        origin,
        gen_score: 0.0,
    }
}

fn cand(rel: &str, answer: &str, f1: f64) -> SubgraphCandidate {
    SubgraphCandidate {
        topic: "E".into(),
        path: vec![rel.into()],
        constraint: None::<Constraint>,
        denotation: [answer.to_string()].into_iter().collect(),
        f1,
    }
}

/// Two rewrites plus identity, two answers; rows differ per paraphrase.
fn kb_instance() -> PreparedInstance {
    let q = normalize("who set up acme").unwrap();
    PreparedInstance {
        id: "t".into(),
        question: q.clone(),
        paraphrases: vec![
            para("who be the founder of acme", Origin::Lexical),
            para("acme ceo", Origin::Template),
            ParaphraseCandidate::identity(&q),
        ],
        answers: Answers::Kb {
            candidates: vec![cand("founder", "P", 1.0), cand("ceo", "C", 0.0)],
            features: vec![
                vec![vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]],
                vec![vec![0.0, 1.0, 0.0], vec![1.0, 1.0, 1.0]],
                vec![vec![0.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]],
            ],
            gold: ["P".to_string()].into_iter().collect(),
        },
    }
}

fn sentsel_instance() -> PreparedInstance {
    let q = normalize("who set up acme").unwrap();
    PreparedInstance {
        id: "s".into(),
        question: q.clone(),
        paraphrases: vec![para("who found acme", Origin::Lexical), ParaphraseCandidate::identity(&q)],
        answers: Answers::SentSel {
            sentences: vec![normalize("john found acme").unwrap(), normalize("acme sells cars").unwrap()],
            labels: vec![true, false],
            counts: vec![vec![[2.0, 1.0], [1.0, 0.0]], vec![[1.0, 0.0], [1.0, 0.0]]],
        },
    }
}

fn vocab_of(insts: &[&PreparedInstance]) -> Vocab {
    Vocab::from_words(insts.iter().flat_map(|i| i.words()))
}

fn model(task: Task, inst: &PreparedInstance, counts: bool, seed: u64) -> Model<f64> {
    let dims = ModelDims { hidden: 4, embed: 4 };
    let mut m = Model::new(task, vocab_of(&[inst]), dims, 3, counts, None, 0.0, seed).unwrap();
    init_uniform(&mut m.store, -0.5, 0.5, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    m
}

#[test]
fn singleton_candidate_set_is_the_qa_model() {
    let inst = kb_instance().identity_only();
    let m = model(Task::Kb, &inst, false, 1);
    let out = m.mixture_predict(&inst, Weighting::Learned).unwrap();
    assert_eq!(out.weights, vec![1.0]);
    assert_eq!(out.mixture, out.qa[0]);
}

#[test]
fn hand_mixture() {
    let p = mixture::<f64>(&[0.75, 0.25], &[vec![0.2], vec![0.8]]).unwrap();
    assert!((p[0] - 0.35).abs() < 1e-15);
    assert_eq!(mixture::<f64>(&[1.0], &[vec![]]).unwrap_err().kind(), "NoCandidates");
    assert_eq!(mixture(&[1.0], &[vec![0.1], vec![0.2]]).unwrap_err().kind(), "ShapeError");
}

#[test]
fn constant_scores_average_the_qa_model() {
    let inst = kb_instance();
    let mut m = model(Task::Kb, &inst, false, 2);
    m.store.value_mut(m.scorer.weights).data_mut().fill(0.0);
    let learned = m.mixture_predict(&inst, Weighting::Learned).unwrap();
    let avg = baseline_avgpara(&m, &inst).unwrap();
    assert_eq!(learned, avg);
    for a in 0..2 {
        let mean = (avg.qa[0][a] + avg.qa[1][a] + avg.qa[2][a]) / 3.0;
        assert!((avg.mixture[a] - mean).abs() < 1e-15);
    }
}

#[test]
fn avgpara_hand_values() {
    let p = mixture::<f64>(&crate::scorer::normalize(&[0.0, 0.0]).unwrap(), &[vec![0.2], vec![0.8]]).unwrap();
    assert!((p[0] - 0.5).abs() < 1e-15);
    let inst = kb_instance().identity_only();
    let m = model(Task::Kb, &inst, false, 3);
    assert_eq!(
        baseline_avgpara(&m, &inst).unwrap(),
        m.mixture_predict(&inst, Weighting::Learned).unwrap()
    );
}

#[test]
fn loss_hand_values() {
    let store = crate::tensornet::ParamStore::<f64>::new();
    let mut tape = Tape::new(&store);
    let p = tape.input(vec![1.0]);
    let l = tape.bce(p, 1.0);
    assert!(tape.scalar(l) < 1e-10);
    let h = tape.input(vec![0.5]);
    let l = tape.bce(h, 0.5);
    assert!((tape.scalar(l) - 2f64.ln()).abs() < 1e-15);
}

#[test]
fn loss_is_mean_bce_of_mixture() {
    let inst = kb_instance();
    let m = model(Task::Kb, &inst, false, 4);
    let out = m.mixture_predict(&inst, Weighting::Learned).unwrap();
    let want = -((out.mixture[0]).ln() + (1.0 - out.mixture[1]).ln()) / 2.0;
    assert!((m.loss(&inst, Weighting::Learned).unwrap() - want).abs() < 1e-12);
}

#[test]
fn kb_joint_gradients_match_finite_differences() {
    let inst = kb_instance();
    let m = model(Task::Kb, &inst, false, 5);
    let rel = gradient_check(&m.store, 1e-4, |s| Model::loss_and_grads_with(s, &m, &inst, Weighting::Learned, None)).unwrap();
    assert!(rel < 1e-3, "relative error {rel}");
}

#[test]
fn sentsel_joint_gradients_match_finite_differences() {
    let inst = sentsel_instance();
    let m = model(Task::SentSel, &inst, true, 6);
    let rel = gradient_check(&m.store, 1e-4, |s| Model::loss_and_grads_with(s, &m, &inst, Weighting::Learned, None)).unwrap();
    assert!(rel < 1e-3, "relative error {rel}");
}

fn scorer_grad_norm(m: &Model<f64>, inst: &PreparedInstance) -> f64 {
    let (_, g) = m.loss_and_grads(inst, Weighting::Learned, None).unwrap();
    g.iter()
        .filter(|(id, _)| m.store.name(*id).starts_with("scorer."))
        .map(|(_, t)| t.sq_norm())
        .sum::<f64>()
        .sqrt()
}

#[test]
fn scorer_gradient_vanishes_only_when_paraphrases_agree() {
    let inst = kb_instance();
    let m = model(Task::Kb, &inst, false, 7);
    assert!(scorer_grad_norm(&m, &inst) > 1e-6);
    let mut same = inst.clone();
    if let Answers::Kb { features, .. } = &mut same.answers {
        let row = features[0].clone();
        features.iter_mut().for_each(|f| *f = row.clone());
    }
    assert!(scorer_grad_norm(&m, &same) < 1e-12);
}

#[test]
fn infer_examples() {
    assert_eq!(infer(&[0.3]).unwrap(), 0);
    assert_eq!(infer(&[0.2, 0.8]).unwrap(), 1);
    assert_eq!(infer(&[0.5, 0.5, 0.1]).unwrap(), 0);
    assert_eq!(infer::<f64>(&[]).unwrap_err().kind(), "NoCandidates");
}

#[test]
fn dataaugment_counts_and_golds() {
    let inst = kb_instance();
    let aug = baseline_dataaugment(std::slice::from_ref(&inst));
    assert_eq!(aug.len(), 3);
    let gold = |p: &PreparedInstance| match &p.answers {
        Answers::Kb { gold, .. } => gold.clone(),
        _ => unreachable!(),
    };
    assert!(aug.iter().all(|a| gold(a) == gold(&inst) && a.paraphrases.len() == 1));
    assert_eq!(aug[1].question, inst.paraphrases[0].tokens);
    let mut four = inst.clone();
    four.paraphrases.insert(0, para("acme founder", Origin::Pivot));
    if let Answers::Kb { features, .. } = &mut four.answers {
        features.insert(0, features[0].clone());
    }
    assert_eq!(baseline_dataaugment(&[four]).len(), 4);
    let bare = inst.identity_only();
    assert_eq!(baseline_dataaugment(std::slice::from_ref(&bare)), vec![bare]);
}

#[test]
fn train_rejects_empty_data() {
    let inst = kb_instance();
    let mut m = model(Task::Kb, &inst, false, 8);
    let err = train(&mut m, &[], std::slice::from_ref(&inst), Mode::Para4Qa, &TrainConfig::default()).unwrap_err();
    assert_eq!(err.kind(), "InvalidArgument");
}

#[test]
fn training_is_deterministic_and_keeps_best() {
    let inst = kb_instance();
    let data = vec![inst.clone(), inst.identity_only()];
    let cfg = TrainConfig {
        batch: 1,
        max_epochs: 6,
        patience: 2,
        seed: 9,
        ..TrainConfig::default()
    };
    let run = || {
        let mut m = model(Task::Kb, &inst, false, 9);
        m.dropout = 0.3;
        let log = train(&mut m, &data, &data, Mode::Para4Qa, &cfg).unwrap();
        (log, m.store)
    };
    let (a, sa) = run();
    let (b, sb) = run();
    assert_eq!(a.to_tsv(), b.to_tsv());
    assert_eq!(sa, sb);
    assert!(a.records.len() <= 6 && a.best_epoch >= 1);
    let best = a.records.iter().map(|r| r.dev_metric).fold(f64::MIN, f64::max);
    assert_eq!(a.records[a.best_epoch - 1].dev_metric, best);
}

#[test]
fn model_checkpoint_round_trip() {
    let inst = sentsel_instance();
    let m = model(Task::SentSel, &inst, true, 10);
    let text = crate::tensornet::checkpoint_to_string(&m.store, &m.checkpoint_meta()).unwrap();
    let back = Model::<f64>::from_checkpoint(crate::tensornet::checkpoint_from_str(&text).unwrap(), 0).unwrap();
    assert_eq!(back.vocab, m.vocab);
    assert_eq!(back.mixture_predict(&inst, Weighting::Learned).unwrap(), m.mixture_predict(&inst, Weighting::Learned).unwrap());
}

#[test]
fn mode_names() {
    for m in Mode::ALL {
        assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
    }
    assert!("nope".parse::<Mode>().is_err());
}

fn words(s: &str) -> TokenSeq {
    TokenSeq::from_words(&s.split(' ').collect::<Vec<_>>()).unwrap()
}

#[test]
fn seppara_learns_separable_pairs() {
    // positive pairs mention the same topic word
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let topics = ["car", "bank", "zip", "river", "song", "film"];
    let mut pairs = Vec::new();
    for _ in 0..200 {
        let a = topics[rng.gen_range(0..topics.len())];
        let positive = rng.gen_bool(0.5);
        let b = if positive {
            a
        } else {
            let mut b = a;
            while b == a {
                b = topics[rng.gen_range(0..topics.len())];
            }
            b
        };
        pairs.push(PairExample {
            question: words(&format!("what be the {a}")),
            other: words(&format!("which {b} be it")),
            paraphrase: positive,
        });
    }
    let (train_pairs, held) = pairs.split_at(180);
    let vocab = Vocab::from_words(pairs.iter().flat_map(|p| p.question.to_strings().into_iter().chain(p.other.to_strings())));
    let dims = ModelDims { hidden: 8, embed: 8 };
    let mut m = Model::<f64>::new(Task::Kb, vocab, dims, 1, false, None, 0.0, 3).unwrap();
    let cfg = TrainConfig {
        batch: 10,
        optimizer: crate::tensornet::RmsProp { lr: 0.02, ..Default::default() },
        ..TrainConfig::default()
    };
    let hist = baseline_seppara_train(&mut m, train_pairs, &cfg, 120).unwrap();
    assert!(hist.last().unwrap() < &hist[0]);
    let correct = held
        .iter()
        .filter(|p| (m.pair_prob(p).unwrap() > 0.5) == p.paraphrase)
        .count();
    assert!(correct as f64 / held.len() as f64 >= 0.99, "{correct}/{}", held.len());
    assert!(!m.store.is_trainable(m.scorer.weights));
}

#[test]
fn pair_loss_monotone_in_score() {
    let store = crate::tensornet::ParamStore::<f64>::new();
    let mut prev = f64::MAX;
    for s in [-2.0, -1.0, 0.0, 1.0, 2.0].iter().rev() {
        let mut tape = Tape::new(&store);
        let x = tape.input(vec![*s]);
        let p = tape.sigmoid(x);
        let l = tape.bce(p, 0.0);
        assert!(tape.scalar(l) < prev || prev == f64::MAX);
        prev = tape.scalar(l);
    }
}

proptest! {
    #[test]
    fn mixture_is_convex(seed in 0u64..2000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.gen_range(1..8);
        let answers = rng.gen_range(1..6);
        let scores: Vec<f64> = (0..m).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let w = crate::scorer::normalize(&scores).unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let qa: Vec<Vec<f64>> = (0..m).map(|_| (0..answers).map(|_| rng.gen::<f64>()).collect()).collect();
        let p = mixture(&w, &qa).unwrap();
        for a in 0..answers {
            let lo = qa.iter().map(|r| r[a]).fold(f64::MAX, f64::min);
            let hi = qa.iter().map(|r| r[a]).fold(f64::MIN, f64::max);
            prop_assert!(p[a] >= lo - 1e-12 && p[a] <= hi + 1e-12);
        }
    }

    #[test]
    fn argmax_invariant_under_monotone_maps(v in proptest::collection::vec(0.0f64..1.0, 1..10)) {
        let i = infer(&v).unwrap();
        let logit: Vec<f64> = v.iter().map(|p| (p / (1.0 - p)).ln()).collect();
        let cubed: Vec<f64> = v.iter().map(|p| 3.0 * p * p * p + 1.0).collect();
        prop_assert_eq!(infer(&logit).unwrap(), i);
        prop_assert_eq!(infer(&cubed).unwrap(), i);
    }
}

#[test]
fn kb_empty_candidate_set_errors() {
    let mut inst = kb_instance();
    if let Answers::Kb { candidates, features, .. } = &mut inst.answers {
        candidates.clear();
        features.iter_mut().for_each(Vec::clear);
    }
    let m = model(Task::Kb, &kb_instance(), false, 11);
    assert_eq!(m.mixture_predict(&inst, Weighting::Learned).unwrap_err().kind(), "NoCandidates");
}
