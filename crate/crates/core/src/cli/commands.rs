use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use crate::e2e::{
    baseline_seppara_train, evaluate, prepare_dataset, read_pairs, train, Answers, Backend,
    EvalReport, InstanceResult, Mode, Model, PreparedInstance, QaParams, TrainLog,
};
use crate::error::{Error, Result};
use crate::metrics::{paraphrase_stats, StatsReport};
use crate::paragen::{
    mine_template_rules, rank_rules_pmi, read_clusters, read_rule_dictionary, read_template_rules,
    write_template_rules, GeneratorSet, LexicalGenerator, ParaphraseGenerator, PivotGenerator, TableModel,
    TemplateGenerator,
};
use crate::qamodels::{kb_feature_names, read_dataset, read_kb, Gold, IdfTable, QaInstance, Task, ToyKb};
use crate::tensornet::{read_checkpoint, read_embeddings, write_checkpoint, Pretrained, Vocab};
use crate::textkit::{normalize, TokenSeq};

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const LOG_FILE: &str = "log.tsv";
pub const TIMING_FILE: &str = "timing.tsv";
pub const SEPPARA_LOG_FILE: &str = "seppara_log.tsv";
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved.txt";
pub const REPORT_TSV_FILE: &str = "report.tsv";
pub const REPORT_TEXT_FILE: &str = "report.txt";
pub const PREDICTIONS_FILE: &str = "predictions.tsv";
pub const WEIGHTS_FILE: &str = "weights.tsv";
pub const STATS_TSV_FILE: &str = "stats.tsv";
pub const STATS_TEXT_FILE: &str = "stats.txt";

/// Thresholds of the template mining step.
pub const DEFAULT_MIN_SUPPORT: usize = 10;
pub const DEFAULT_MIN_COOCCUR: usize = 5;

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn output_dir(cfg: &ExperimentConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    Ok(&cfg.output_dir)
}

fn required<'a>(field: &str, p: &'a Option<PathBuf>) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| Error::config(field, "required by the configuration"))
}

/// Mines template rules from a cluster corpus, ranks them by PMI and writes
/// them to `out`. Returns the number of rules.
pub fn cmd_mine_rules(corpus: &Path, out: &Path, min_support: usize, min_cooccur: usize) -> Result<usize> {
    let clusters = read_clusters(corpus)?;
    if clusters.is_empty() {
        log::warn!("{}: no clusters, writing an empty rule file", corpus.display());
    }
    let rules = rank_rules_pmi(mine_template_rules(&clusters, min_support, min_cooccur), &clusters);
    write_template_rules(out, &rules)?;
    log::info!("{} clusters, {} rules written to {}", clusters.len(), rules.len(), out.display());
    Ok(rules.len())
}

/// The three generator columns in fixed order, `None` when disabled.
pub fn generator_columns(cfg: &ExperimentConfig) -> Result<Vec<(&'static str, Option<Box<dyn ParaphraseGenerator>>)>> {
    let lexical: Option<Box<dyn ParaphraseGenerator>> = if cfg.lexical {
        let rules = read_rule_dictionary(required("lexical_rules", &cfg.lexical_rules)?)?;
        Some(Box::new(LexicalGenerator::new(rules, cfg.lexical_cap)))
    } else {
        None
    };
    let template: Option<Box<dyn ParaphraseGenerator>> = if cfg.template {
        let rules = read_template_rules(required("template_rules", &cfg.template_rules)?)?;
        Some(Box::new(TemplateGenerator::new(rules, cfg.template_cap)))
    } else {
        None
    };
    let pivot: Option<Box<dyn ParaphraseGenerator>> = if cfg.pivot {
        let fwd = TableModel::read(required("pivot_forward", &cfg.pivot_forward)?)?;
        let back = TableModel::read(required("pivot_back", &cfg.pivot_back)?)?;
        let mut g = PivotGenerator::new(Box::new(fwd), Box::new(back));
        g.k = cfg.pivot_k;
        g.beam_width = cfg.pivot_beam;
        g.cap = cfg.pivot_cap;
        Some(Box::new(g))
    } else {
        None
    };
    Ok(vec![("lexical", lexical), ("template", template), ("pivot", pivot)])
}

pub fn build_generators(cfg: &ExperimentConfig) -> Result<GeneratorSet> {
    let mut set = GeneratorSet::new();
    for (_, g) in generator_columns(cfg)? {
        if let Some(g) = g {
            set.push(g);
        }
    }
    Ok(set)
}

fn load_kb(cfg: &ExperimentConfig) -> Result<ToyKb> {
    read_kb(required("kb_triples", &cfg.kb_triples)?, required("kb_aliases", &cfg.kb_aliases)?)
}

fn read_task_dataset(path: &Path, task: Task) -> Result<Vec<QaInstance>> {
    let data = read_dataset(path)?;
    if let Some(bad) = data.iter().find(|i| i.task() != task) {
        return Err(Error::config(
            "task",
            format!("{}: instance `{}` is a {} instance, config says {task}", path.display(), bad.id, bad.task()),
        ));
    }
    Ok(data)
}

/// Reads `id<TAB>question` lines. Dataset lines (`id<TAB>task<TAB>question...`)
/// are accepted too; a line without a tab gets the id `q<line>`.
pub fn read_questions(path: &Path) -> Result<Vec<(String, TokenSeq)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let (id, raw) = match cols.len() {
            1 => (format!("q{}", n + 1), cols[0]),
            2 => (cols[0].to_string(), cols[1]),
            _ if cols[1].parse::<Task>().is_ok() => (cols[0].to_string(), cols[2]),
            _ => return Err(Error::parse(path, n + 1, "expected `id<TAB>question`")),
        };
        let q = normalize(raw).map_err(|e| Error::parse(path, n + 1, e.to_string()))?;
        out.push((id, q));
    }
    Ok(out)
}

/// Writes `id<TAB>origin<TAB>gen_score<TAB>paraphrase` for every candidate,
/// identity included. Returns the number of lines.
pub fn cmd_generate(questions: &Path, cfg: &ExperimentConfig, out: &Path) -> Result<usize> {
    let generators = build_generators(cfg)?;
    let mut text = String::new();
    let mut lines = 0;
    for (id, q) in read_questions(questions)? {
        for cand in generators.generate_all(&q) {
            writeln!(text, "{id}\t{}\t{}\t{}", cand.origin, cand.gen_score, cand.tokens).unwrap();
            lines += 1;
        }
    }
    write_file(out, &text)?;
    Ok(lines)
}

/// What `cmd_train` produced.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub log: TrainLog,
    pub seppara_losses: Vec<f64>,
    pub model: Model<f64>,
    pub checkpoint: PathBuf,
    pub train_instances: usize,
    pub dev_instances: usize,
}

const IDF_DOCS_KEY: &str = "idf_docs";
const IDF_KEY: &str = "idf";

fn idf_meta(idf: &IdfTable) -> Vec<(String, String)> {
    let mut meta = vec![(IDF_DOCS_KEY.to_string(), idf.docs().to_string())];
    meta.extend(idf.counts().into_iter().map(|(w, n)| (IDF_KEY.to_string(), format!("{w} {n}"))));
    meta
}

fn idf_from_meta(meta: &[(String, String)]) -> Result<IdfTable> {
    let bad = || Error::Checkpoint("bad idf metadata".into());
    let docs = meta
        .iter()
        .find(|(k, _)| k == IDF_DOCS_KEY)
        .ok_or_else(|| Error::Checkpoint("missing `idf_docs` metadata".into()))?
        .1
        .parse()
        .map_err(|_| bad())?;
    let mut df = Vec::new();
    for (_, v) in meta.iter().filter(|(k, _)| k == IDF_KEY) {
        let (w, n) = v.rsplit_once(' ').ok_or_else(bad)?;
        df.push((w.to_string(), n.parse().map_err(|_| bad())?));
    }
    Ok(IdfTable::from_counts(docs, df))
}

fn training_idf(data: &[QaInstance]) -> IdfTable {
    IdfTable::from_sentences(data.iter().flat_map(|i| match &i.gold {
        Gold::SentSel(s) => s.iter().map(|(t, _)| t).collect::<Vec<_>>(),
        Gold::Kb(_) => Vec::new(),
    }))
}

fn load_pretrained(cfg: &ExperimentConfig) -> Result<Option<Pretrained>> {
    let Some(path) = &cfg.embeddings else { return Ok(None) };
    let p = read_embeddings(path)?;
    if p.dim != cfg.embed {
        return Err(Error::config(
            "embeddings",
            format!("{} has dimension {}, config says embed = {}", path.display(), p.dim, cfg.embed),
        ));
    }
    Ok(Some(p))
}

/// Trains the configured system, then writes the best checkpoint, the epoch
/// log, the wall-clock timings and the resolved config to the output
/// directory.
pub fn cmd_train(train_path: &Path, dev_path: &Path, cfg: &ExperimentConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let train_raw = read_task_dataset(train_path, cfg.task)?;
    let dev_raw = read_task_dataset(dev_path, cfg.task)?;
    let generators = build_generators(cfg)?;
    let pretrained = load_pretrained(cfg)?;
    let kb;
    let idf;
    let (backend, kb_features) = match cfg.task {
        Task::Kb => {
            kb = load_kb(cfg)?;
            (Backend::Kb(&kb), kb_feature_names(&kb).len())
        }
        Task::SentSel => {
            idf = training_idf(&train_raw);
            (Backend::SentSel(&idf), 0)
        }
    };
    let train_set = prepare_dataset(&train_raw, &generators, &backend)?;
    let dev_set = prepare_dataset(&dev_raw, &generators, &backend)?;
    let pairs = match cfg.mode {
        Mode::SepPara => read_pairs(required("seppara_pairs", &cfg.seppara_pairs)?)?,
        _ => Vec::new(),
    };
    let mut vocab_words: Vec<&str> = train_set.iter().flat_map(|d| d.words()).collect();
    for p in &pairs {
        vocab_words.extend(p.question.texts());
        vocab_words.extend(p.other.texts());
    }
    let vocab = Vocab::from_words(
        vocab_words
            .into_iter()
            .filter(|w| pretrained.as_ref().is_none_or(|p| p.vectors.contains_key(*w))),
    );
    let mut model = Model::<f64>::new(
        cfg.task,
        vocab,
        cfg.dims(),
        kb_features,
        cfg.use_cnt,
        pretrained.as_ref(),
        cfg.dropout,
        cfg.seed,
    )?;
    let tc = cfg.train_config();
    let seppara_losses = if cfg.mode == Mode::SepPara {
        baseline_seppara_train(&mut model, &pairs, &tc, cfg.seppara_epochs)?
    } else {
        Vec::new()
    };
    let log = train(&mut model, &train_set, &dev_set, cfg.mode, &tc)?;

    let dir = output_dir(cfg)?;
    let mut meta = model.checkpoint_meta();
    meta.push(("mode".into(), cfg.mode.to_string()));
    if let Backend::SentSel(idf) = backend {
        meta.extend(idf_meta(idf));
    }
    let checkpoint = dir.join(CHECKPOINT_FILE);
    write_checkpoint(&checkpoint, &model.store, &meta)?;
    write_file(&dir.join(LOG_FILE), &log.to_tsv())?;
    write_file(&dir.join(TIMING_FILE), &log.timing_tsv())?;
    if !seppara_losses.is_empty() {
        let mut text = String::from("epoch\tpair_loss\n");
        for (i, l) in seppara_losses.iter().enumerate() {
            writeln!(text, "{}\t{l:?}", i + 1).unwrap();
        }
        write_file(&dir.join(SEPPARA_LOG_FILE), &text)?;
    }
    write_file(&dir.join(RESOLVED_CONFIG_FILE), &cfg.snapshot())?;
    Ok(TrainOutcome {
        log,
        seppara_losses,
        model,
        checkpoint,
        train_instances: train_set.len(),
        dev_instances: dev_set.len(),
    })
}

/// One row of the evaluation report.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub system: String,
    pub report: EvalReport,
}

#[derive(Clone, Debug)]
pub struct EvalOutcome {
    /// Questions in the dataset file, including any that could not be
    /// answered at all.
    pub questions: usize,
    pub rows: Vec<ReportRow>,
    pub results: Vec<InstanceResult<f64>>,
    pub prepared: Vec<PreparedInstance>,
    pub tsv: String,
    pub text: String,
}

impl EvalOutcome {
    pub fn headline(&self) -> f64 {
        self.rows[0].report.headline()
    }
}

fn format_report(task: Task, questions: usize, rows: &[ReportRow]) -> (String, String) {
    let header: Vec<&str> = match task {
        Task::Kb => vec!["system", "questions", "answered", "avg_F1"],
        Task::SentSel => vec!["system", "questions", "answered", "MAP", "MRR"],
    };
    let mut table: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for r in rows {
        let mut row = vec![r.system.clone(), questions.to_string(), r.report.instances.to_string()];
        match task {
            Task::Kb => row.push(format!("{:.4}", r.report.avg_f1.unwrap_or(0.0))),
            Task::SentSel => {
                row.push(format!("{:.4}", r.report.map.unwrap_or(0.0)));
                row.push(format!("{:.4}", r.report.mrr.unwrap_or(0.0)));
            }
        }
        table.push(row);
    }
    let tsv: String = table.iter().map(|r| r.join("\t") + "\n").collect();
    let widths: Vec<usize> = (0..table[0].len())
        .map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut text = String::new();
    for r in &table {
        for (c, v) in r.iter().enumerate() {
            if c == 0 {
                write!(text, "{v:<w$}", w = widths[0]).unwrap();
            } else {
                write!(text, "  {v:>w$}", w = widths[c]).unwrap();
            }
        }
        text.push('\n');
    }
    (tsv, text)
}

fn predictions_tsv(prepared: &[PreparedInstance], results: &[InstanceResult<f64>]) -> String {
    let mut out = String::from("id\tpredicted\tscore\n");
    for (inst, r) in prepared.iter().zip(results) {
        let answer = match &inst.answers {
            Answers::Kb { candidates, .. } => candidates[r.predicted].denotation.iter().cloned().collect::<Vec<_>>().join("|"),
            Answers::SentSel { sentences, .. } => sentences[r.predicted].to_string(),
        };
        writeln!(out, "{}\t{answer}\t{:?}", r.id, r.output.mixture[r.predicted]).unwrap();
    }
    out
}

/// Every candidate's weight per question, highest first.
pub fn weights_tsv(prepared: &[PreparedInstance], results: &[InstanceResult<f64>]) -> String {
    let mut out = String::from("id\trank\torigin\tweight\tparaphrase\n");
    for (inst, r) in prepared.iter().zip(results) {
        let mut order: Vec<usize> = (0..r.output.weights.len()).collect();
        order.sort_by(|&a, &b| r.output.weights[b].total_cmp(&r.output.weights[a]).then(a.cmp(&b)));
        for (rank, &k) in order.iter().enumerate() {
            let p = &inst.paraphrases[k];
            writeln!(out, "{}\t{}\t{}\t{}\t{}", r.id, rank + 1, p.origin, r.output.weights[k], p.tokens).unwrap();
        }
    }
    out
}

/// Evaluates a checkpoint under the configured mode. KB questions that
/// cannot be linked to the KB count as F1 0. Writes the report (TSV and
/// aligned text) and the predictions; with `dump_weights`, also the
/// per-question paraphrase weights.
pub fn cmd_evaluate(checkpoint: &Path, dataset: &Path, cfg: &ExperimentConfig, dump_weights: bool) -> Result<EvalOutcome> {
    let ckpt = read_checkpoint::<f64>(checkpoint)?;
    let meta = ckpt.meta.clone();
    let kb = match cfg.task {
        Task::Kb => Some(load_kb(cfg)?),
        Task::SentSel => None,
    };
    let kb_features = kb.as_ref().map_or(0, |k| kb_feature_names(k).len());
    let mut model = Model::<f64>::from_checkpoint(ckpt, kb_features)?;
    if model.task != cfg.task {
        return Err(Error::Checkpoint(format!("checkpoint is for task {}, config says {}", model.task, cfg.task)));
    }
    if model.dims != cfg.dims() {
        return Err(Error::Checkpoint(format!(
            "checkpoint has hidden = {}, embed = {}; config says hidden = {}, embed = {}",
            model.dims.hidden, model.dims.embed, cfg.hidden, cfg.embed
        )));
    }
    let idf;
    let backend = match &kb {
        Some(kb) => Backend::Kb(kb),
        None => {
            idf = idf_from_meta(&meta)?;
            Backend::SentSel(&idf)
        }
    };
    let raw = read_task_dataset(dataset, cfg.task)?;
    let generators = build_generators(cfg)?;
    let prepared = prepare_dataset(&raw, &generators, &backend)?;
    if prepared.is_empty() {
        return Err(Error::InvalidArgument(format!("{}: no answerable questions", dataset.display())));
    }
    let (mut report, results) = evaluate(&model, &prepared, cfg.mode)?;
    if let (Task::Kb, Some(f1)) = (cfg.task, report.avg_f1) {
        report.avg_f1 = Some(f1 * prepared.len() as f64 / raw.len() as f64);
    }
    let mut rows = vec![ReportRow {
        system: cfg.mode.to_string(),
        report,
    }];
    if let QaParams::SentSel(p) = model.qa {
        if p.count_weights.is_some() {
            rows[0].system = format!("{}+cnt", cfg.mode);
            p.reset_count_weights(&mut model.store);
            let (plain, _) = evaluate(&model, &prepared, cfg.mode)?;
            rows.push(ReportRow {
                system: cfg.mode.to_string(),
                report: plain,
            });
        }
    }
    let (tsv, text) = format_report(cfg.task, raw.len(), &rows);
    let dir = output_dir(cfg)?;
    write_file(&dir.join(REPORT_TSV_FILE), &tsv)?;
    write_file(&dir.join(REPORT_TEXT_FILE), &text)?;
    write_file(&dir.join(PREDICTIONS_FILE), &predictions_tsv(&prepared, &results))?;
    if dump_weights {
        write_file(&dir.join(WEIGHTS_FILE), &weights_tsv(&prepared, &results))?;
    }
    Ok(EvalOutcome {
        questions: raw.len(),
        rows,
        results,
        prepared,
        tsv,
        text,
    })
}

/// Paraphrase statistics of the dataset questions for the lexical, template
/// and pivot generators; disabled ones are reported as empty columns.
pub fn cmd_stats(dataset: &Path, cfg: &ExperimentConfig) -> Result<StatsReport> {
    let questions: Vec<TokenSeq> = read_questions(dataset)?.into_iter().map(|(_, q)| q).collect();
    let columns = generator_columns(cfg)?;
    let refs: Vec<(&str, Option<&dyn ParaphraseGenerator>)> =
        columns.iter().map(|(n, g)| (*n, g.as_deref())).collect();
    let report = paraphrase_stats(&questions, &refs, cfg.filter_trivial);
    let dir = output_dir(cfg)?;
    write_file(&dir.join(STATS_TSV_FILE), &report.to_tsv())?;
    write_file(&dir.join(STATS_TEXT_FILE), &report.to_table())?;
    Ok(report)
}
