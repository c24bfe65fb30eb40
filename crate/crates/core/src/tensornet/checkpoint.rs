//! Text checkpoint of a [`ParamStore`] plus free-form metadata.
//!
//! ```text
//! paraqa-checkpoint<TAB>1
//! meta<TAB>key<TAB>value
//! param<TAB>name<TAB>trainable(0|1)<TAB>d1,d2,...
//! values<TAB>v1 v2 ...
//! accum<TAB>a1 a2 ...
//! ```
//!
//! Values are written with the shortest representation that parses back to
//! the same `f64`, so a round trip is bit-exact for `f32` and `f64`.

use std::fs;
use std::path::Path;

use super::params::{Param, ParamStore};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const CHECKPOINT_MAGIC: &str = "paraqa-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<T> {
    /// Ordered key/value pairs; keys may repeat.
    pub meta: Vec<(String, String)>,
    pub store: ParamStore<T>,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn meta_values<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> {
        self.meta.iter().filter(move |(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn clean(field: &str) -> Result<&str> {
    if field.contains(['\t', '\n', '\r']) {
        return Err(Error::Checkpoint(format!("field {field:?} contains a tab or newline")));
    }
    Ok(field)
}

fn join_values<T: Scalar>(t: &Tensor<T>) -> String {
    t.data()
        .iter()
        .map(|v| format!("{:?}", v.as_f64()))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn checkpoint_to_string<T: Scalar>(store: &ParamStore<T>, meta: &[(String, String)]) -> Result<String> {
    let mut out = format!("{CHECKPOINT_MAGIC}\t{CHECKPOINT_VERSION}\n");
    for (k, v) in meta {
        out.push_str(&format!("meta\t{}\t{}\n", clean(k)?, clean(v)?));
    }
    for p in store.iter() {
        let dims = p.value.shape().iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",");
        out.push_str(&format!("param\t{}\t{}\t{dims}\n", clean(&p.name)?, u8::from(p.trainable)));
        out.push_str(&format!("values\t{}\n", join_values(&p.value)));
        out.push_str(&format!("accum\t{}\n", join_values(&p.accum)));
    }
    Ok(out)
}

pub fn checkpoint_from_str<T: Scalar>(text: &str) -> Result<Checkpoint<T>> {
    let bad = |line: usize, msg: &str| Error::Checkpoint(format!("line {line}: {msg}"));
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, header)) if header == format!("{CHECKPOINT_MAGIC}\t{CHECKPOINT_VERSION}") => {}
        _ => return Err(bad(1, "not a version 1 checkpoint")),
    }
    let parse_values = |n: usize, line: Option<(usize, &str)>, tag: &str, shape: &[usize]| -> Result<Tensor<T>> {
        let (ln, l) = line.ok_or_else(|| bad(n + 1, &format!("missing `{tag}` line")))?;
        let rest = l
            .strip_prefix(tag)
            .and_then(|r| r.strip_prefix('\t'))
            .ok_or_else(|| bad(ln, &format!("expected `{tag}`")))?;
        let data: Vec<T> = rest
            .split_whitespace()
            .map(|v| v.parse::<f64>().map(T::lit))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(ln, &e.to_string()))?;
        Tensor::new(shape.to_vec(), data).map_err(|e| bad(ln, &e.to_string()))
    };
    let mut meta = Vec::new();
    let mut store = ParamStore::new();
    while let Some((n, line)) = lines.next() {
        let fields: Vec<&str> = line.split('\t').collect();
        match fields.as_slice() {
            ["meta", k, v] => meta.push((k.to_string(), v.to_string())),
            ["param", name, flag, dims] => {
                let trainable = match *flag {
                    "0" => false,
                    "1" => true,
                    _ => return Err(bad(n, "trainable flag must be 0 or 1")),
                };
                let shape: Vec<usize> = if dims.is_empty() {
                    Vec::new()
                } else {
                    dims.split(',')
                        .map(|d| d.parse())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad(n, "bad shape"))?
                };
                let value = parse_values(n, lines.next(), "values", &shape)?;
                let accum = parse_values(n + 1, lines.next(), "accum", &shape)?;
                store
                    .push_raw(Param {
                        name: name.to_string(),
                        value,
                        trainable,
                        accum,
                    })
                    .map_err(|e| bad(n, &e.to_string()))?;
            }
            [""] => {}
            _ => return Err(bad(n, "unrecognized record")),
        }
    }
    Ok(Checkpoint { meta, store })
}

pub fn write_checkpoint<T: Scalar>(path: &Path, store: &ParamStore<T>, meta: &[(String, String)]) -> Result<()> {
    let text = checkpoint_to_string(store, meta)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint<T: Scalar>(path: &Path) -> Result<Checkpoint<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_str(&text)
}
