//! QA dataset records.
//!
//! One instance per line, tab-separated:
//!
//! ```text
//! id  kb       question  ans1|ans2|...
//! id  sentsel  question  label  sentence  label  sentence ...
//! ```
//!
//! Labels are `0` or `1`. Blank lines and lines starting with `#` are skipped.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::textkit::{normalize, TokenSeq};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Task {
    Kb,
    SentSel,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Kb => "kb",
            Task::SentSel => "sentsel",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kb" => Ok(Task::Kb),
            "sentsel" => Ok(Task::SentSel),
            _ => Err(Error::InvalidArgument(format!("unknown task `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Gold {
    /// Gold answer entity ids.
    Kb(BTreeSet<String>),
    /// Candidate sentences with their labels.
    SentSel(Vec<(TokenSeq, bool)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct QaInstance {
    pub id: String,
    pub text: String,
    pub question: TokenSeq,
    pub gold: Gold,
}

impl QaInstance {
    pub fn task(&self) -> Task {
        match self.gold {
            Gold::Kb(_) => Task::Kb,
            Gold::SentSel(_) => Task::SentSel,
        }
    }

    pub fn kb(id: &str, text: &str, answers: &[&str]) -> Result<Self> {
        Ok(QaInstance {
            id: id.to_string(),
            text: text.to_string(),
            question: normalize(text)?,
            gold: Gold::Kb(answers.iter().map(|a| a.to_string()).collect()),
        })
    }

    pub fn sentsel(id: &str, text: &str, sentences: &[(&str, bool)]) -> Result<Self> {
        let sents = sentences
            .iter()
            .map(|(s, l)| Ok((normalize(s)?, *l)))
            .collect::<Result<Vec<_>>>()?;
        Ok(QaInstance {
            id: id.to_string(),
            text: text.to_string(),
            question: normalize(text)?,
            gold: Gold::SentSel(sents),
        })
    }

    /// The record line for this instance (sentences are written in their
    /// normalized form).
    pub fn to_line(&self) -> String {
        match &self.gold {
            Gold::Kb(ans) => format!(
                "{}\tkb\t{}\t{}",
                self.id,
                self.text,
                ans.iter().cloned().collect::<Vec<_>>().join("|")
            ),
            Gold::SentSel(sents) => {
                let mut line = format!("{}\tsentsel\t{}", self.id, self.text);
                for (s, l) in sents {
                    line.push_str(&format!("\t{}\t{}", u8::from(*l), s));
                }
                line
            }
        }
    }
}

pub fn parse_dataset(text: &str, path: &Path) -> Result<Vec<QaInstance>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let ln = n + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 4 {
            return Err(Error::parse(path, ln, "expected id, task, question and answers"));
        }
        let (id, task, text) = (fields[0], fields[1], fields[2]);
        let question = normalize(text).map_err(|e| Error::parse(path, ln, e.to_string()))?;
        let gold = match Task::from_str(task).map_err(|e| Error::parse(path, ln, e.to_string()))? {
            Task::Kb => {
                if fields.len() != 4 {
                    return Err(Error::parse(path, ln, "kb records have exactly four fields"));
                }
                let ans: BTreeSet<String> = fields[3]
                    .split('|')
                    .map(str::trim)
                    .filter(|a| !a.is_empty())
                    .map(String::from)
                    .collect();
                if ans.is_empty() {
                    return Err(Error::parse(path, ln, "empty gold answer set"));
                }
                Gold::Kb(ans)
            }
            Task::SentSel => {
                let rest = &fields[3..];
                if rest.len() % 2 != 0 {
                    return Err(Error::parse(path, ln, "sentences must come in label/sentence pairs"));
                }
                let mut sents = Vec::with_capacity(rest.len() / 2);
                for pair in rest.chunks(2) {
                    let label = match pair[0] {
                        "0" => false,
                        "1" => true,
                        other => return Err(Error::parse(path, ln, format!("label `{other}` is not 0 or 1"))),
                    };
                    let s = normalize(pair[1]).map_err(|e| Error::parse(path, ln, e.to_string()))?;
                    sents.push((s, label));
                }
                Gold::SentSel(sents)
            }
        };
        out.push(QaInstance {
            id: id.to_string(),
            text: text.to_string(),
            question,
            gold,
        });
    }
    Ok(out)
}

pub fn read_dataset(path: &Path) -> Result<Vec<QaInstance>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, path)
}

pub fn write_dataset(path: &Path, data: &[QaInstance]) -> Result<()> {
    let mut text = String::new();
    for inst in data {
        text.push_str(&inst.to_line());
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
