//! `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Relative paths are resolved
//! against the directory holding the config file. The only environment
//! override is `PARAQA_OUTPUT_DIR`, which replaces `output_dir`.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `task` | required | `kb` or `sentsel` |
//! | `mode` | `para4qa` | `para4qa`, `avgpara`, `seppara`, `dataaugment`, `base` |
//! | `kb_triples`, `kb_aliases` | | KB files, required for `kb` |
//! | `lexical`, `template`, `pivot` | `false` | generator switches |
//! | `lexical_rules` | | rule dictionary, required when `lexical` |
//! | `template_rules` | | mined rule file, required when `template` |
//! | `pivot_forward`, `pivot_back` | | table models, required when `pivot` |
//! | `lexical_cap`, `template_cap`, `pivot_cap` | 10, 10, 15 | candidates kept per generator |
//! | `pivot_k`, `pivot_beam` | 5, 15 | pivots fused, beam width |
//! | `hidden`, `embed` | 100, 100 | LSTM and embedding sizes |
//! | `dropout` | 0.2 | one of 0.2, 0.3, 0.4 |
//! | `lr`, `decay`, `clip` | 0.01, 0.95, 5 | RMSProp and clipping |
//! | `batch`, `seed`, `patience`, `max_epochs` | 150, 1, 5, 50 | training loop |
//! | `embeddings` | | pretrained vectors, dimension must equal `embed` |
//! | `use_cnt` | `false` | word-count features for `sentsel` |
//! | `seppara_pairs`, `seppara_epochs` | , 10 | pair file and epochs for `seppara` |
//! | `filter_trivial` | `true` | drop trivial rewrites in `stats` |
//! | `output_dir` | `out` | where commands write their artifacts |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::e2e::{Mode, ModelDims, TrainConfig};
use crate::error::{Error, Result};
use crate::qamodels::Task;
use crate::tensornet::RmsProp;

pub const OUTPUT_DIR_ENV: &str = "PARAQA_OUTPUT_DIR";

pub const DROPOUT_GRID: [f64; 3] = [0.2, 0.3, 0.4];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    pub mode: Mode,
    pub kb_triples: Option<PathBuf>,
    pub kb_aliases: Option<PathBuf>,
    pub lexical: bool,
    pub lexical_rules: Option<PathBuf>,
    pub lexical_cap: usize,
    pub template: bool,
    pub template_rules: Option<PathBuf>,
    pub template_cap: usize,
    pub pivot: bool,
    pub pivot_forward: Option<PathBuf>,
    pub pivot_back: Option<PathBuf>,
    pub pivot_cap: usize,
    pub pivot_k: usize,
    pub pivot_beam: usize,
    pub hidden: usize,
    pub embed: usize,
    pub dropout: f64,
    pub lr: f64,
    pub decay: f64,
    pub clip: f64,
    pub batch: usize,
    pub seed: u64,
    pub patience: usize,
    pub max_epochs: usize,
    pub embeddings: Option<PathBuf>,
    pub use_cnt: bool,
    pub seppara_pairs: Option<PathBuf>,
    pub seppara_epochs: usize,
    pub filter_trivial: bool,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Defaults for `task` with every generator off and paths unset.
    pub fn new(task: Task) -> Self {
        ExperimentConfig {
            task,
            mode: Mode::Para4Qa,
            kb_triples: None,
            kb_aliases: None,
            lexical: false,
            lexical_rules: None,
            lexical_cap: 10,
            template: false,
            template_rules: None,
            template_cap: 10,
            pivot: false,
            pivot_forward: None,
            pivot_back: None,
            pivot_cap: 15,
            pivot_k: 5,
            pivot_beam: 15,
            hidden: 100,
            embed: 100,
            dropout: 0.2,
            lr: 0.01,
            decay: 0.95,
            clip: 5.0,
            batch: 150,
            seed: 1,
            patience: 5,
            max_epochs: 50,
            embeddings: None,
            use_cnt: false,
            seppara_pairs: None,
            seppara_epochs: 10,
            filter_trivial: true,
            output_dir: PathBuf::from("out"),
        }
    }

    /// Parses and validates config text; relative paths are joined to `base`.
    /// Does not touch the file system.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::config(format!("line {}", n + 1), "expected `key = value`"));
            };
            let k = k.trim().to_string();
            if entries.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(Error::config(k, "given more than once"));
            }
        }
        let task = match entries.remove("task") {
            Some(v) => v.parse::<Task>().map_err(|_| Error::config("task", format!("unknown task `{v}`")))?,
            None => return Err(Error::config("task", "missing")),
        };
        let mut cfg = ExperimentConfig::new(task);
        cfg.output_dir = base.join("out");
        for (k, v) in &entries {
            cfg.set(k, v, base)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads the file, applies the output-directory override and checks that
    /// every configured input path exists.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let mut cfg = Self::parse(&text, base)?;
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            cfg.output_dir = PathBuf::from(dir);
        }
        cfg.check_paths()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        fn num<N: std::str::FromStr>(key: &str, value: &str) -> Result<N> {
            value
                .parse()
                .map_err(|_| Error::config(key, format!("`{value}` is not a valid number")))
        }
        fn flag(key: &str, value: &str) -> Result<bool> {
            match value {
                "true" | "on" | "1" => Ok(true),
                "false" | "off" | "0" => Ok(false),
                _ => Err(Error::config(key, format!("`{value}` is not a boolean"))),
            }
        }
        let path = |value: &str| -> Option<PathBuf> { (!value.is_empty()).then(|| base.join(value)) };
        match key {
            "mode" => {
                self.mode = value
                    .parse()
                    .map_err(|_| Error::config(key, format!("unknown mode `{value}`")))?
            }
            "kb_triples" => self.kb_triples = path(value),
            "kb_aliases" => self.kb_aliases = path(value),
            "lexical" => self.lexical = flag(key, value)?,
            "lexical_rules" => self.lexical_rules = path(value),
            "lexical_cap" => self.lexical_cap = num(key, value)?,
            "template" => self.template = flag(key, value)?,
            "template_rules" => self.template_rules = path(value),
            "template_cap" => self.template_cap = num(key, value)?,
            "pivot" => self.pivot = flag(key, value)?,
            "pivot_forward" => self.pivot_forward = path(value),
            "pivot_back" => self.pivot_back = path(value),
            "pivot_cap" => self.pivot_cap = num(key, value)?,
            "pivot_k" => self.pivot_k = num(key, value)?,
            "pivot_beam" => self.pivot_beam = num(key, value)?,
            "hidden" => self.hidden = num(key, value)?,
            "embed" => self.embed = num(key, value)?,
            "dropout" => self.dropout = num(key, value)?,
            "lr" => self.lr = num(key, value)?,
            "decay" => self.decay = num(key, value)?,
            "clip" => self.clip = num(key, value)?,
            "batch" => self.batch = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "patience" => self.patience = num(key, value)?,
            "max_epochs" => self.max_epochs = num(key, value)?,
            "embeddings" => self.embeddings = path(value),
            "use_cnt" => self.use_cnt = flag(key, value)?,
            "seppara_pairs" => self.seppara_pairs = path(value),
            "seppara_epochs" => self.seppara_epochs = num(key, value)?,
            "filter_trivial" => self.filter_trivial = flag(key, value)?,
            "output_dir" => self.output_dir = base.join(value),
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("hidden", self.hidden),
            ("embed", self.embed),
            ("batch", self.batch),
            ("patience", self.patience),
            ("max_epochs", self.max_epochs),
            ("lexical_cap", self.lexical_cap),
            ("template_cap", self.template_cap),
            ("pivot_cap", self.pivot_cap),
            ("pivot_k", self.pivot_k),
            ("pivot_beam", self.pivot_beam),
            ("seppara_epochs", self.seppara_epochs),
        ];
        for (field, v) in positive {
            if v == 0 {
                return Err(Error::config(field, "must be positive"));
            }
        }
        if !DROPOUT_GRID.contains(&self.dropout) {
            return Err(Error::config("dropout", format!("{} is not one of 0.2, 0.3, 0.4", self.dropout)));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::config("lr", "must be positive"));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::config("decay", "must lie in (0, 1)"));
        }
        if !(self.clip.is_finite() && self.clip > 0.0) {
            return Err(Error::config("clip", "must be positive"));
        }
        let need = |field: &str, p: &Option<PathBuf>| -> Result<()> {
            match p {
                Some(_) => Ok(()),
                None => Err(Error::config(field, "required by the configuration")),
            }
        };
        if self.task == Task::Kb {
            need("kb_triples", &self.kb_triples)?;
            need("kb_aliases", &self.kb_aliases)?;
        }
        if self.lexical {
            need("lexical_rules", &self.lexical_rules)?;
        }
        if self.template {
            need("template_rules", &self.template_rules)?;
        }
        if self.pivot {
            need("pivot_forward", &self.pivot_forward)?;
            need("pivot_back", &self.pivot_back)?;
        }
        if self.mode == Mode::SepPara {
            need("seppara_pairs", &self.seppara_pairs)?;
        }
        if self.use_cnt && self.task != Task::SentSel {
            return Err(Error::config("use_cnt", "only applies to the sentsel task"));
        }
        Ok(())
    }

    /// Fails with a ConfigError naming the first configured path that does
    /// not exist. Paths of disabled generators are not checked.
    pub fn check_paths(&self) -> Result<()> {
        let mut paths: Vec<(&str, &Option<PathBuf>)> = vec![
            ("kb_triples", &self.kb_triples),
            ("kb_aliases", &self.kb_aliases),
            ("embeddings", &self.embeddings),
        ];
        if self.lexical {
            paths.push(("lexical_rules", &self.lexical_rules));
        }
        if self.template {
            paths.push(("template_rules", &self.template_rules));
        }
        if self.pivot {
            paths.push(("pivot_forward", &self.pivot_forward));
            paths.push(("pivot_back", &self.pivot_back));
        }
        if self.mode == Mode::SepPara {
            paths.push(("seppara_pairs", &self.seppara_pairs));
        }
        for (field, p) in paths {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(Error::config(field, format!("{} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            hidden: self.hidden,
            embed: self.embed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch: self.batch,
            optimizer: RmsProp {
                lr: self.lr,
                decay: self.decay,
                eps: RmsProp::default().eps,
            },
            clip: self.clip,
            patience: self.patience,
            max_epochs: self.max_epochs,
            seed: self.seed,
        }
    }

    /// Every key with its resolved value, absolute where the input was a
    /// path. Parsing the snapshot gives back an equal config.
    pub fn snapshot(&self) -> String {
        fn p(v: &Option<PathBuf>) -> String {
            v.as_ref().map(|p| absolute(p).display().to_string()).unwrap_or_default()
        }
        let lines = [
            ("task", self.task.to_string()),
            ("mode", self.mode.to_string()),
            ("kb_triples", p(&self.kb_triples)),
            ("kb_aliases", p(&self.kb_aliases)),
            ("lexical", self.lexical.to_string()),
            ("lexical_rules", p(&self.lexical_rules)),
            ("lexical_cap", self.lexical_cap.to_string()),
            ("template", self.template.to_string()),
            ("template_rules", p(&self.template_rules)),
            ("template_cap", self.template_cap.to_string()),
            ("pivot", self.pivot.to_string()),
            ("pivot_forward", p(&self.pivot_forward)),
            ("pivot_back", p(&self.pivot_back)),
            ("pivot_cap", self.pivot_cap.to_string()),
            ("pivot_k", self.pivot_k.to_string()),
            ("pivot_beam", self.pivot_beam.to_string()),
            ("hidden", self.hidden.to_string()),
            ("embed", self.embed.to_string()),
            ("dropout", format!("{:?}", self.dropout)),
            ("lr", format!("{:?}", self.lr)),
            ("decay", format!("{:?}", self.decay)),
            ("clip", format!("{:?}", self.clip)),
            ("batch", self.batch.to_string()),
            ("seed", self.seed.to_string()),
            ("patience", self.patience.to_string()),
            ("max_epochs", self.max_epochs.to_string()),
            ("embeddings", p(&self.embeddings)),
            ("use_cnt", self.use_cnt.to_string()),
            ("seppara_pairs", p(&self.seppara_pairs)),
            ("seppara_epochs", self.seppara_epochs.to_string()),
            ("filter_trivial", self.filter_trivial.to_string()),
            ("output_dir", absolute(&self.output_dir).display().to_string()),
        ];
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}
