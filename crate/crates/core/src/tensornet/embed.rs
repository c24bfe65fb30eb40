use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::params::{ParamId, ParamStore};
use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::textkit::normalize_token;

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK_ID: usize = 0;
pub const BOS_ID: usize = 1;
pub const EOS_ID: usize = 2;
pub const SPECIAL_COUNT: usize = 3;

/// Token index: the three specials first, then words in sorted order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut list: Vec<String> = words
            .into_iter()
            .map(|w| w.as_ref().to_string())
            .filter(|w| ![UNK, BOS, EOS].contains(&w.as_str()))
            .collect();
        list.sort();
        list.dedup();
        let tokens: Vec<String> = [UNK, BOS, EOS]
            .iter()
            .map(|s| s.to_string())
            .chain(list)
            .collect();
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocab { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of `token`, or the unknown symbol.
    pub fn get(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i]
    }

    /// Non-special entries.
    pub fn words(&self) -> &[String] {
        &self.tokens[SPECIAL_COUNT..]
    }
}

/// Rows of `table` (one per vocabulary entry) for each token.
pub fn embed<T: Scalar, S: AsRef<str>>(tokens: &[S], table: &Tensor<T>, vocab: &Vocab) -> Result<Tensor<T>> {
    if table.rows() != vocab.len() {
        return Err(Error::Shape(format!(
            "embedding table has {} rows for {} vocabulary entries",
            table.rows(),
            vocab.len()
        )));
    }
    let d = table.cols();
    let mut data = Vec::with_capacity(tokens.len() * d);
    for t in tokens {
        data.extend_from_slice(table.row(vocab.get(t.as_ref())));
    }
    Tensor::matrix(tokens.len(), d, data)
}

/// Word vectors read from a text file.
#[derive(Clone, Debug, PartialEq)]
pub struct Pretrained {
    pub dim: usize,
    pub vectors: HashMap<String, Vec<f64>>,
}

/// Reads `word v1 ... vd` lines. Words are normalized; the first vector seen
/// for a normalized form wins.
pub fn read_embeddings(path: &Path) -> Result<Pretrained> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut dim = None;
    let mut vectors = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let values: Vec<f64> = parts
            .map(|p| p.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(path, n + 1, format!("bad number: {e}")))?;
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(path, n + 1, "expected finite vector components"));
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::parse(
                    path,
                    n + 1,
                    format!("vector has {} components, expected {d}", values.len()),
                ))
            }
            _ => {}
        }
        vectors.entry(normalize_token(word)).or_insert(values);
    }
    let dim = dim.ok_or_else(|| Error::parse(path, 0, "no vectors"))?;
    Ok(Pretrained { dim, vectors })
}

/// Embedding matrix split into the three special rows (always trainable)
/// and the word rows (frozen when pretrained).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmbeddingParams {
    pub special: ParamId,
    pub words: Option<ParamId>,
    pub dim: usize,
}

impl EmbeddingParams {
    pub fn register<T: Scalar>(
        store: &mut ParamStore<T>,
        prefix: &str,
        vocab: &Vocab,
        dim: usize,
        pretrained: Option<&Pretrained>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding size must be positive".into()));
        }
        let special = store.add(&format!("{prefix}.emb.special"), Tensor::zeros(vec![SPECIAL_COUNT, dim]), true)?;
        let nwords = vocab.words().len();
        let words = if nwords == 0 {
            None
        } else {
            let (value, trainable) = match pretrained {
                Some(p) => {
                    if p.dim != dim {
                        return Err(Error::config("d", format!("embedding file has dimension {}", p.dim)));
                    }
                    let mut data = Vec::with_capacity(nwords * dim);
                    for w in vocab.words() {
                        let v = p.vectors.get(w).ok_or_else(|| {
                            Error::InvalidArgument(format!("word `{w}` missing from pretrained vectors"))
                        })?;
                        data.extend(v.iter().map(|&x| T::lit(x)));
                    }
                    (Tensor::matrix(nwords, dim, data)?, false)
                }
                None => (Tensor::zeros(vec![nwords, dim]), true),
            };
            Some(store.add(&format!("{prefix}.emb.words"), value, trainable)?)
        };
        Ok(EmbeddingParams { special, words, dim })
    }

    pub fn load<T: Scalar>(store: &ParamStore<T>, prefix: &str) -> Result<Self> {
        let special = store.require(&format!("{prefix}.emb.special"))?;
        let words = store.id(&format!("{prefix}.emb.words"));
        let dim = store.value(special).cols();
        if let Some(w) = words {
            if store.value(w).cols() != dim {
                return Err(Error::Checkpoint(format!("`{prefix}` embedding widths differ")));
            }
        }
        Ok(EmbeddingParams { special, words, dim })
    }

    pub fn rows<T: Scalar>(&self, store: &ParamStore<T>) -> usize {
        SPECIAL_COUNT + self.words.map_or(0, |w| store.value(w).rows())
    }

    pub fn lookup<T: Scalar>(&self, tape: &mut Tape<'_, T>, index: usize) -> Result<Var> {
        if index < SPECIAL_COUNT {
            tape.row(self.special, index)
        } else {
            let w = self
                .words
                .ok_or_else(|| Error::Shape(format!("index {index} beyond special rows")))?;
            tape.row(w, index - SPECIAL_COUNT)
        }
    }

    /// The full table, one row per vocabulary entry.
    pub fn table<T: Scalar>(&self, store: &ParamStore<T>) -> Tensor<T> {
        let mut data = store.value(self.special).data().to_vec();
        if let Some(w) = self.words {
            data.extend_from_slice(store.value(w).data());
        }
        Tensor::matrix(data.len() / self.dim, self.dim, data).expect("consistent table shape")
    }
}
