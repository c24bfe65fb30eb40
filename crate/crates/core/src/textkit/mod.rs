//! Text normalization: tokenization, lowercasing, stemming and stopword tagging.

mod porter;

use std::collections::HashSet;
use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};

pub use porter::stem as porter_stem;

/// Frozen stopword list, one normalized token per line.
pub const STOPWORD_LIST: &str = include_str!("stopwords.txt");

/// Version tag of [`STOPWORD_LIST`].
pub const STOPWORD_LIST_VERSION: u32 = 1;

const IRREGULAR: &[(&str, &str)] = &[
    ("is", "be"),
    ("are", "be"),
    ("was", "be"),
    ("were", "be"),
    ("am", "be"),
    ("does", "do"),
    ("did", "do"),
    ("has", "have"),
    ("had", "have"),
];

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token {
    pub text: String,
    pub stop: bool,
}

/// A non-empty sequence of normalized tokens.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenSeq {
    tokens: Vec<Token>,
}

impl TokenSeq {
    /// Builds a sequence from tokens that are normalized one by one.
    pub fn from_words<S: AsRef<str>>(words: &[S]) -> Result<Self> {
        let tokens: Vec<Token> = words
            .iter()
            .map(|w| w.as_ref())
            .filter(|w| !w.is_empty())
            .map(|w| {
                let text = normalize_token(w);
                let stop = is_stopword(&text);
                Token { text, stop }
            })
            .collect();
        if tokens.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(TokenSeq { tokens })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn texts(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.text.clone()).collect()
    }

    /// Non-stopword tokens in order.
    pub fn content(&self) -> Vec<&str> {
        self.tokens
            .iter()
            .filter(|t| !t.stop)
            .map(|t| t.text.as_str())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(&t.text)?;
        }
        Ok(())
    }
}

/// Splits raw text into surface tokens: runs of alphanumerics, clitics such
/// as `'s`, and single punctuation characters.
pub fn tokenize(raw: &str) -> Vec<String> {
    let chars: Vec<char> = raw.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphanumeric() || (c == '\'' && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric())) {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i].is_alphanumeric() {
                i += 1;
            }
            out.push(chars[start..i].iter().collect());
        } else {
            out.push(c.to_string());
            i += 1;
        }
    }
    out
}

/// Lowercases, maps irregular verb forms and stems a single surface token.
/// Iterated to a fixed point so that the result is stable under renormalization.
pub fn normalize_token(word: &str) -> String {
    let mut cur = word.to_lowercase();
    for _ in 0..16 {
        let mapped = IRREGULAR
            .iter()
            .find(|(from, _)| *from == cur)
            .map_or(cur.as_str(), |(_, to)| to);
        let next = porter::stem(mapped);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

pub fn normalize(raw: &str) -> Result<TokenSeq> {
    TokenSeq::from_words(&tokenize(raw))
}

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORD_LIST
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect()
    })
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token)
}
