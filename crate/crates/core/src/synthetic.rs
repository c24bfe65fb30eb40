//! A small KB question-answering corpus where only one generator helps.
//!
//! Questions about 25 companies are phrased so that no question word matches
//! a relation name. A lexical rule set rewrites each phrasing into the
//! canonical "what be the <relation> of X" form, which does mention the
//! gold relation; a template rule set rewrites the same question into
//! "X <other relation>" forms that point at two wrong relations.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::tensornet::{stream_rng, Stream};

pub const SYNTHETIC_SEED: u64 = 7;
pub const TRAIN_SIZE: usize = 200;
pub const DEV_SIZE: usize = 50;

const COMPANIES: [&str; 25] = [
    "acme", "globex", "initech", "umbrella", "hooli", "vandelay", "wonka", "stark", "wayne",
    "tyrell", "cyberdyne", "soylent", "oscorp", "gringotts", "monarch", "zorg", "nakatomi",
    "virtucon", "dunder", "pendant", "kramerica", "genco", "sirius", "weyland", "rekall",
];

const FOUNDERS: [&str; 25] = [
    "ada", "bruno", "clara", "dario", "elena", "felix", "greta", "hugo", "ines", "jonas",
    "karla", "lukas", "mira", "nils", "olga", "pavel", "quinn", "rosa", "sven", "tilda",
    "ulrich", "vera", "willem", "xenia", "yusuf",
];

const CITIES: [&str; 25] = [
    "aachen", "bergen", "cork", "delft", "essen", "fargo", "ghent", "hilo", "izmir", "jena",
    "kiel", "lyon", "malmo", "nantes", "oslo", "porto", "quito", "riga", "split", "turku",
    "ulm", "varna", "wels", "xanthi", "york",
];

const CEOS: [&str; 25] = [
    "abbott", "baxter", "carver", "dunne", "ellis", "fowler", "garner", "hardy", "irwin",
    "jarvis", "keller", "lowry", "mercer", "norris", "oakley", "parker", "quincy", "royce",
    "sutton", "tanner", "upton", "vance", "walsh", "yates", "zeller",
];

const PRODUCTS: [&str; 25] = [
    "anvils", "bicycles", "candles", "drones", "engines", "fabric", "gloves", "helmets",
    "inks", "jackets", "kettles", "lamps", "magnets", "needles", "ovens", "pianos", "quilts",
    "radios", "skates", "tents", "umbrellas", "violins", "watches", "yachts", "zippers",
];

pub const RELATIONS: [&str; 4] = ["founder", "headquarters", "ceo", "product"];

/// Three surface phrasings per relation, entity last.
const PHRASINGS: [[&str; 3]; 4] = [
    ["who set up", "who started", "who created"],
    ["where is the home of", "in which city is", "where can one find"],
    ["who runs", "who leads", "who is the boss of"],
    ["what is sold by", "what goods come from", "what do people buy from"],
];

const CANONICAL: [&str; 4] = [
    "who is the founder of",
    "where is the headquarters of",
    "who is the ceo of",
    "what is the product of",
];

fn entity(company: &str) -> String {
    let mut c = company.chars();
    let first = c.next().map(|f| f.to_ascii_uppercase()).into_iter();
    format!("{}_Inc", first.chain(c).collect::<String>())
}

fn object(relation: usize, company: usize) -> &'static str {
    [FOUNDERS, CITIES, CEOS, PRODUCTS][relation][company]
}

/// File name and contents of every fixture file, in a fixed order.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticFixture {
    pub files: Vec<(&'static str, String)>,
}

impl SyntheticFixture {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| *n == name).map(|(_, c)| c.as_str())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, content) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

pub fn synthetic_fixture(seed: u64) -> SyntheticFixture {
    let mut rng = stream_rng(seed, Stream::Data);

    let mut triples = String::new();
    let mut aliases = String::new();
    for (c, name) in COMPANIES.iter().enumerate() {
        let e = entity(name);
        writeln!(aliases, "{name}\t{e}").unwrap();
        for (r, rel) in RELATIONS.iter().enumerate() {
            writeln!(triples, "{e}\t{rel}\t{}", object(r, c)).unwrap();
        }
    }

    let mut combos: Vec<(usize, usize, usize)> = Vec::new();
    for c in 0..COMPANIES.len() {
        for r in 0..RELATIONS.len() {
            for p in 0..3 {
                combos.push((c, r, p));
            }
        }
    }
    combos.shuffle(&mut rng);
    let line = |i: usize, &(c, r, p): &(usize, usize, usize)| {
        format!("syn{i:03}\tkb\t{} {}\t{}\n", PHRASINGS[r][p], COMPANIES[c], object(r, c))
    };
    let train: String = combos[..TRAIN_SIZE].iter().enumerate().map(|(i, x)| line(i, x)).collect();
    let dev: String = combos[TRAIN_SIZE..TRAIN_SIZE + DEV_SIZE]
        .iter()
        .enumerate()
        .map(|(i, x)| line(TRAIN_SIZE + i, x))
        .collect();

    let mut lexical = String::new();
    let mut templates = String::new();
    for r in 0..RELATIONS.len() {
        for p in 0..3 {
            writeln!(lexical, "{}\t{}\t1.0", PHRASINGS[r][p], CANONICAL[r]).unwrap();
            for shift in 1..=2 {
                let wrong = RELATIONS[(r + shift) % RELATIONS.len()];
                let pmi = 3.0 - shift as f64;
                writeln!(templates, "{} __\t__ {wrong}\t{pmi:?}\t12", PHRASINGS[r][p]).unwrap();
            }
        }
    }

    // Balanced pairs for the separately trained scorer: each training
    // question against its helpful rewrite and one misleading rewrite.
    let mut pairs = String::new();
    for &(c, r, p) in &combos[..TRAIN_SIZE] {
        let q = format!("{} {}", PHRASINGS[r][p], COMPANIES[c]);
        let shift = if rand::Rng::gen_bool(&mut rng, 0.5) { 1 } else { 2 };
        let wrong = RELATIONS[(r + shift) % RELATIONS.len()];
        writeln!(pairs, "1\t{q}\t{} {}", CANONICAL[r], COMPANIES[c]).unwrap();
        writeln!(pairs, "0\t{q}\t{} {wrong}", COMPANIES[c]).unwrap();
    }

    let config = "\
# synthetic KB separation experiment
task = kb
mode = para4qa
kb_triples = kb_triples.tsv
kb_aliases = kb_aliases.tsv
lexical = true
lexical_rules = lexical_rules.tsv
template = true
template_rules = template_rules.tsv
pivot = false
hidden = 8
embed = 8
dropout = 0.2
batch = 10
seed = 1
patience = 5
max_epochs = 40
seppara_pairs = seppara_pairs.tsv
output_dir = out
"
    .to_string();

    SyntheticFixture {
        files: vec![
            ("kb_triples.tsv", triples),
            ("kb_aliases.tsv", aliases),
            ("train.tsv", train),
            ("dev.tsv", dev),
            ("lexical_rules.tsv", lexical),
            ("template_rules.tsv", templates),
            ("seppara_pairs.tsv", pairs),
            ("config.txt", config),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qamodels::{relation_words, words_match};
    use crate::textkit::normalize;

    #[test]
    fn sizes() {
        let f = synthetic_fixture(SYNTHETIC_SEED);
        assert_eq!(f.get("kb_triples.tsv").unwrap().lines().count(), 100);
        assert_eq!(f.get("train.tsv").unwrap().lines().count(), TRAIN_SIZE);
        assert_eq!(f.get("dev.tsv").unwrap().lines().count(), DEV_SIZE);
        assert_eq!(f.get("seppara_pairs.tsv").unwrap().lines().count(), 2 * TRAIN_SIZE);
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(synthetic_fixture(3), synthetic_fixture(3));
        assert_ne!(synthetic_fixture(3).get("train.tsv"), synthetic_fixture(4).get("train.tsv"));
    }

    #[test]
    fn questions_never_name_a_relation() {
        let rel: Vec<String> = RELATIONS.iter().flat_map(|r| relation_words(r)).collect();
        for (c, name) in COMPANIES.iter().enumerate() {
            for r in 0..4 {
                for p in PHRASINGS[r] {
                    let q = normalize(&format!("{p} {name} {}", object(r, c))).unwrap();
                    for t in q.content() {
                        assert!(!rel.iter().any(|w| words_match(t, w)), "`{t}` in `{q}`");
                    }
                }
            }
        }
    }
}
