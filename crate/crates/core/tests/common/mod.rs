//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xmi_core::report::{CorpusSpec, RunConfig};
use xmi_core::scoring::Direction;

const SUBJECTS: &[&str] = &[
    "the cat",
    "the dog",
    "a bird",
    "my friend",
    "the teacher",
    "our neighbour",
    "the farmer",
    "a child",
    "the doctor",
    "her brother",
];
const VERBS: &[&str] = &["sees", "likes", "finds", "calls", "follows", "helps", "hears", "paints"];
const OBJECTS: &[&str] = &[
    "the house",
    "a green tree",
    "the old boat",
    "the river",
    "a small garden",
    "the market",
    "the red door",
    "a long road",
    "the quiet village",
];
const TAILS: &[&str] = &[
    "today",
    "in the morning",
    "every day",
    "again",
    "with care",
    "near the bridge",
    "at night",
    "before dinner",
];

/// Distinct English sentences from a small grammar.
pub fn english_sentences(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut s = format!(
            "{} {} {}",
            SUBJECTS[rng.random_range(0..SUBJECTS.len())],
            VERBS[rng.random_range(0..VERBS.len())],
            OBJECTS[rng.random_range(0..OBJECTS.len())]
        );
        if rng.random_bool(0.7) {
            s.push(' ');
            s.push_str(TAILS[rng.random_range(0..TAILS.len())]);
        }
        if rng.random_bool(0.2) {
            s.push_str(" and ");
            s.push_str(SUBJECTS[rng.random_range(0..SUBJECTS.len())]);
            s.push(' ');
            s.push_str(VERBS[rng.random_range(0..VERBS.len())]);
        }
        s.push_str(" .");
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    out
}

/// Word-by-word rendering of an English sentence in a made-up language.
/// "de" reverses and suffixes words; "fi" doubles vowels and glues articles
/// onto the following word, so the two differ in word count and vocabulary.
pub fn translate(sentence: &str, lang: &str) -> String {
    let words: Vec<&str> = sentence.split(' ').collect();
    match lang {
        "de" => words
            .iter()
            .map(|w| {
                if *w == "." {
                    ".".to_string()
                } else {
                    format!("{}en", w.chars().rev().collect::<String>())
                }
            })
            .collect::<Vec<_>>()
            .join(" "),
        "fi" => {
            let mut out = Vec::new();
            let mut carry = String::new();
            for w in words {
                if matches!(w, "the" | "a" | "my" | "our" | "her") {
                    carry = format!("{w}_");
                    continue;
                }
                let doubled: String = w
                    .chars()
                    .flat_map(|c| if "aeiou".contains(c) { vec![c, c] } else { vec![c] })
                    .collect();
                out.push(format!("{}{}", std::mem::take(&mut carry), doubled));
            }
            out.join(" ")
        }
        other => panic!("no toy language {other}"),
    }
}

/// Toy languages paired with English.
pub const TOY_LANGS: &[&str] = &["de", "fi"];
pub const TOY_SENTENCES: usize = 200;

/// Write the toy corpora under `dir` and return the corpus specs.
///
/// The de-en corpus lacks every tenth English sentence. The fi-en corpus is in
/// reverse order and repeats its first pair twice, so the multiway
/// intersection has to drop duplicates and realign by pivot text.
pub fn write_toy_corpora(dir: &Path) -> Vec<CorpusSpec> {
    let en = english_sentences(TOY_SENTENCES, 42);
    let mut specs = Vec::new();
    for lang in TOY_LANGS {
        let mut pivot: Vec<String> = Vec::new();
        match *lang {
            "de" => pivot.extend(
                en.iter()
                    .enumerate()
                    .filter(|(i, _)| i % 10 != 9)
                    .map(|(_, s)| s.clone()),
            ),
            _ => {
                pivot.extend(en.iter().rev().cloned());
                pivot.push(pivot[0].clone());
                pivot.push(pivot[0].clone());
            }
        }
        let other: Vec<String> = pivot.iter().map(|s| translate(s, lang)).collect();
        let text = dir.join(format!("{lang}-en.{lang}"));
        let pivot_text = dir.join(format!("{lang}-en.en"));
        fs::write(&text, other.join("\n") + "\n").unwrap();
        fs::write(&pivot_text, pivot.join("\n") + "\n").unwrap();
        specs.push(CorpusSpec {
            lang: lang.to_string(),
            text,
            pivot_text,
        });
    }
    specs
}

/// Number of pivot sentences present in every toy corpus.
pub fn toy_shared() -> usize {
    TOY_SENTENCES - TOY_SENTENCES / 10
}

/// A small, fast configuration over the toy corpora.
pub fn toy_config(data: &Path, out: PathBuf) -> RunConfig {
    let mut config = RunConfig {
        corpora: write_toy_corpora(data),
        output_dir: out,
        n_valid: 20,
        n_test: 40,
        bpe_merges: 150,
        ..RunConfig::default()
    };
    config.bootstrap.replicates = 50;
    config
}

/// Rows of the 40-direction results table: (direction, bleu, xmi, h_lm, h_mt).
pub fn table1() -> Vec<(Direction, f64, f64, f64, f64)> {
    let text = include_str!("../fixtures/table1.tsv");
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next().unwrap(), "direction\tbleu\txmi\th_lm\th_mt");
    lines
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            assert_eq!(f.len(), 5, "{l}");
            let num = |i: usize| f[i].parse::<f64>().unwrap();
            (f[0].parse().unwrap(), num(1), num(2), num(3), num(4))
        })
        .collect()
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Pairs of uniformly random word sequences and their word-by-word "de"
/// rendering: the target is fully determined by the source while a target
/// language model has little to go on.
pub fn random_parallel(n: usize, vocab: usize, seed: u64) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words: Vec<String> = (0..vocab).map(|i| format!("w{i}x")).collect();
    (0..n)
        .map(|_| {
            let len = rng.random_range(3..=10);
            let en: Vec<&str> = (0..len).map(|_| words[rng.random_range(0..vocab)].as_str()).collect();
            let en = en.join(" ");
            let de = translate(&en, "de");
            (en, de)
        })
        .collect()
}
