use std::time::Instant;

use rand::seq::SliceRandom;

use super::model::{DropoutRngs, Model};
use super::prepare::{baseline_dataaugment, Answers, PreparedInstance};
use super::{infer, MixtureOutput, Mode};
use crate::error::{Error, Result};
use crate::metrics::{average_f1, map_mrr};
use crate::qamodels::Task;
use crate::scalar::Scalar;
use crate::tensornet::{clip_grad_norm, rmsprop_update, stream_rng, Grads, RmsProp, Stream};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch: usize,
    pub optimizer: RmsProp,
    pub clip: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch: 150,
            optimizer: RmsProp::default(),
            clip: 5.0,
            patience: 5,
            max_epochs: 50,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_metric: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (1-based).
    pub best_epoch: usize,
}

impl TrainLog {
    /// `epoch, train_loss, dev_metric` per line. Wall time is kept out so
    /// that identical runs give identical files.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("epoch\ttrain_loss\tdev_metric\n");
        for r in &self.records {
            out.push_str(&format!("{}\t{:?}\t{:?}\n", r.epoch, r.train_loss, r.dev_metric));
        }
        out
    }

    pub fn timing_tsv(&self) -> String {
        let mut out = String::from("epoch\tseconds\n");
        for r in &self.records {
            out.push_str(&format!("{}\t{:.3}\n", r.epoch, r.seconds));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceResult<T> {
    pub id: String,
    pub predicted: usize,
    pub output: MixtureOutput<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub task: Task,
    pub instances: usize,
    pub avg_f1: Option<f64>,
    pub map: Option<f64>,
    pub mrr: Option<f64>,
}

impl EvalReport {
    /// Average F1 for the KB task, MAP for sentence selection.
    pub fn headline(&self) -> f64 {
        match self.task {
            Task::Kb => self.avg_f1.unwrap_or(0.0),
            Task::SentSel => self.map.unwrap_or(0.0),
        }
    }
}

fn view(inst: &PreparedInstance, mode: Mode) -> PreparedInstance {
    if mode.identity_only() {
        inst.identity_only()
    } else {
        inst.clone()
    }
}

/// Mixture output and argmax answer for every instance, in order.
pub fn predict_all<T: Scalar>(model: &Model<T>, data: &[PreparedInstance], mode: Mode) -> Result<Vec<InstanceResult<T>>> {
    data.iter()
        .map(|inst| {
            let output = model.mixture_predict(&view(inst, mode), mode.weighting())?;
            let predicted = infer(&output.mixture)?;
            Ok(InstanceResult {
                id: inst.id.clone(),
                predicted,
                output,
            })
        })
        .collect()
}

pub fn evaluate<T: Scalar>(
    model: &Model<T>,
    data: &[PreparedInstance],
    mode: Mode,
) -> Result<(EvalReport, Vec<InstanceResult<T>>)> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty evaluation set".into()));
    }
    let results = predict_all(model, data, mode)?;
    let mut report = EvalReport {
        task: model.task,
        instances: data.len(),
        avg_f1: None,
        map: None,
        mrr: None,
    };
    match model.task {
        Task::Kb => {
            let mut preds = Vec::with_capacity(data.len());
            let mut golds = Vec::with_capacity(data.len());
            for (inst, r) in data.iter().zip(&results) {
                let Answers::Kb { candidates, gold, .. } = &inst.answers else {
                    return Err(Error::InvalidArgument(format!("{}: not a KB instance", inst.id)));
                };
                preds.push(candidates[r.predicted].denotation.clone());
                golds.push(gold.clone());
            }
            report.avg_f1 = Some(average_f1::<String>(&preds, &golds)?);
        }
        Task::SentSel => {
            let mut lists = Vec::with_capacity(data.len());
            for (inst, r) in data.iter().zip(&results) {
                let Answers::SentSel { labels, .. } = &inst.answers else {
                    return Err(Error::InvalidArgument(format!("{}: not a sentence instance", inst.id)));
                };
                let scores = r.output.mixture.iter().map(|p| p.as_f64()).collect();
                lists.push((scores, labels.clone()));
            }
            let s = map_mrr(&lists)?;
            report.map = Some(s.map);
            report.mrr = Some(s.mrr);
        }
    }
    Ok((report, results))
}

/// Minibatch RMSProp with per-batch clipping and early stopping on the dev
/// headline metric. The model ends up holding the best-dev parameters.
pub fn train<T: Scalar>(
    model: &mut Model<T>,
    train_set: &[PreparedInstance],
    dev: &[PreparedInstance],
    mode: Mode,
    cfg: &TrainConfig,
) -> Result<TrainLog> {
    if train_set.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    if dev.is_empty() {
        return Err(Error::InvalidArgument("empty development set".into()));
    }
    if cfg.batch == 0 || cfg.max_epochs == 0 {
        return Err(Error::InvalidArgument("batch size and epoch limit must be positive".into()));
    }
    let data: Vec<PreparedInstance> = match mode {
        Mode::DataAugment => baseline_dataaugment(train_set),
        Mode::Base => train_set.iter().map(PreparedInstance::identity_only).collect(),
        _ => train_set.to_vec(),
    };
    let weighting = mode.weighting();
    let mut shuffle = stream_rng(cfg.seed, Stream::Shuffle);
    let mut qa_drop = stream_rng(cfg.seed, Stream::Dropout);
    let mut sc_drop = stream_rng(cfg.seed, Stream::ScorerDropout);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = TrainLog::default();
    let mut best: Option<(f64, crate::tensornet::ParamStore<T>)> = None;
    let mut stale = 0;
    for epoch in 1..=cfg.max_epochs {
        let start = Instant::now();
        order.shuffle(&mut shuffle);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch) {
            let mut total = Grads::zeros(&model.store);
            let scale = T::one() / T::lit(batch.len() as f64);
            for &i in batch {
                let rngs = DropoutRngs {
                    qa: &mut qa_drop,
                    scorer: &mut sc_drop,
                };
                let (l, g) = model.loss_and_grads(&data[i], weighting, Some(rngs))?;
                loss_sum += l.as_f64();
                total.accumulate(&g, scale);
            }
            clip_grad_norm(&mut total, T::lit(cfg.clip));
            rmsprop_update(&mut model.store, &total, cfg.optimizer);
        }
        let (report, _) = evaluate(model, dev, mode)?;
        let metric = report.headline();
        let train_loss = loss_sum / data.len() as f64;
        log.records.push(EpochRecord {
            epoch,
            train_loss,
            dev_metric: metric,
            seconds: start.elapsed().as_secs_f64(),
        });
        log::info!("{mode} epoch {epoch}: loss {train_loss:.5} dev {metric:.4}");
        if best.as_ref().is_none_or(|(b, _)| metric > *b) {
            best = Some((metric, model.store.clone()));
            log.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    if let Some((_, store)) = best {
        model.store = store;
    }
    Ok(log)
}
