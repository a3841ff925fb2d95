//! Parallel corpus ingestion, filtering, multiway intersection and splitting.

mod split;
mod tokenize;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use split::{make_splits, split_positions, SplitManifest, SplitPositions, SplitSpec, Splits};
pub use tokenize::{normalize_whitespace, tokenize_13a};

/// Default maximum sentence length (in 13a tokens) kept by [`filter_by_length`].
pub const DEFAULT_MAX_LEN: usize = 80;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: u64,
    pub raw: String,
    pub tokens: Vec<String>,
}

impl Sentence {
    pub fn new(id: u64, raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let tokens = tokenize_13a(&raw);
        Sentence { id, raw, tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePair {
    pub source: Sentence,
    pub target: Sentence,
}

impl SentencePair {
    pub fn id(&self) -> u64 {
        self.source.id
    }
}

/// Which side of a corpus holds a given language.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Source,
    Target,
}

/// Sentence pairs aligned by id. Both sides always have the same length and
/// every pair carries one id shared by its two sentences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelCorpus {
    pub src_lang: String,
    pub tgt_lang: String,
    pairs: Vec<SentencePair>,
}

impl ParallelCorpus {
    pub fn new(src_lang: impl Into<String>, tgt_lang: impl Into<String>, pairs: Vec<SentencePair>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(pairs.len());
        for pair in &pairs {
            if pair.source.id != pair.target.id {
                return Err(Error::InvalidArgument(format!(
                    "pair ids differ: source {} vs target {}",
                    pair.source.id, pair.target.id
                )));
            }
            if !seen.insert(pair.id()) {
                return Err(Error::InvalidArgument(format!("duplicate sentence id {}", pair.id())));
            }
        }
        Ok(ParallelCorpus {
            src_lang: src_lang.into(),
            tgt_lang: tgt_lang.into(),
            pairs,
        })
    }

    /// Build a corpus from aligned raw lines, numbering pairs from zero.
    pub fn from_lines<S: AsRef<str>>(src_lang: &str, tgt_lang: &str, src_lines: &[S], tgt_lines: &[S]) -> Result<Self> {
        if src_lines.len() != tgt_lines.len() {
            return Err(Error::LengthMismatch {
                what: format!("{src_lang}-{tgt_lang} line counts"),
                left: src_lines.len(),
                right: tgt_lines.len(),
            });
        }
        let pairs = src_lines
            .iter()
            .zip(tgt_lines)
            .enumerate()
            .map(|(i, (s, t))| SentencePair {
                source: Sentence::new(i as u64, s.as_ref()),
                target: Sentence::new(i as u64, t.as_ref()),
            })
            .collect();
        ParallelCorpus::new(src_lang, tgt_lang, pairs)
    }

    /// Read two line-aligned UTF-8 files.
    pub fn read(src_lang: &str, tgt_lang: &str, src_path: &Path, tgt_path: &Path) -> Result<Self> {
        let src = read_lines(src_path)?;
        let tgt = read_lines(tgt_path)?;
        ParallelCorpus::from_lines(src_lang, tgt_lang, &src, &tgt)
    }

    /// Read two line-aligned files whose pairs carry the given ids.
    pub fn read_with_ids(
        src_lang: &str,
        tgt_lang: &str,
        src_path: &Path,
        tgt_path: &Path,
        ids: &[u64],
    ) -> Result<Self> {
        let src = read_lines(src_path)?;
        let tgt = read_lines(tgt_path)?;
        for (what, lines) in [("source", &src), ("target", &tgt)] {
            if lines.len() != ids.len() {
                return Err(Error::LengthMismatch {
                    what: format!("{what} lines vs ids"),
                    left: lines.len(),
                    right: ids.len(),
                });
            }
        }
        let pairs = ids
            .iter()
            .zip(src.iter().zip(&tgt))
            .map(|(&id, (s, t))| SentencePair {
                source: Sentence::new(id, s.as_str()),
                target: Sentence::new(id, t.as_str()),
            })
            .collect();
        ParallelCorpus::new(src_lang, tgt_lang, pairs)
    }

    /// Write raw text of both sides, one sentence per line.
    pub fn write(&self, src_path: &Path, tgt_path: &Path) -> Result<()> {
        write_lines(src_path, self.pairs.iter().map(|p| p.source.raw.as_str()))?;
        write_lines(tgt_path, self.pairs.iter().map(|p| p.target.raw.as_str()))
    }

    pub fn pairs(&self) -> &[SentencePair] {
        &self.pairs
    }

    pub fn into_pairs(self) -> Vec<SentencePair> {
        self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn ids(&self) -> Vec<u64> {
        self.pairs.iter().map(SentencePair::id).collect()
    }

    pub fn side_of(&self, lang: &str) -> Option<Side> {
        if self.src_lang == lang {
            Some(Side::Source)
        } else if self.tgt_lang == lang {
            Some(Side::Target)
        } else {
            None
        }
    }

    pub fn side(&self, side: Side) -> impl Iterator<Item = &Sentence> {
        self.pairs.iter().map(move |p| match side {
            Side::Source => &p.source,
            Side::Target => &p.target,
        })
    }

    /// The same pairs with source and target swapped.
    pub fn reversed(&self) -> ParallelCorpus {
        ParallelCorpus {
            src_lang: self.tgt_lang.clone(),
            tgt_lang: self.src_lang.clone(),
            pairs: self
                .pairs
                .iter()
                .map(|p| SentencePair {
                    source: p.target.clone(),
                    target: p.source.clone(),
                })
                .collect(),
        }
    }

    /// Keep the pairs for which `keep` returns true, preserving order.
    pub fn filtered(&self, mut keep: impl FnMut(&SentencePair) -> bool) -> ParallelCorpus {
        ParallelCorpus {
            src_lang: self.src_lang.clone(),
            tgt_lang: self.tgt_lang.clone(),
            pairs: self.pairs.iter().filter(|p| keep(p)).cloned().collect(),
        }
    }

    /// Pairs at the given positions, in the given order.
    pub fn select(&self, positions: &[usize]) -> ParallelCorpus {
        ParallelCorpus {
            src_lang: self.src_lang.clone(),
            tgt_lang: self.tgt_lang.clone(),
            pairs: positions.iter().map(|&i| self.pairs[i].clone()).collect(),
        }
    }
}

/// Drop every pair with more than `max_len` tokens on either side.
pub fn filter_by_length(corpus: &ParallelCorpus, max_len: usize) -> ParallelCorpus {
    corpus.filtered(|p| p.source.len() <= max_len && p.target.len() <= max_len)
}

/// Drop pairs where either side has no tokens.
pub fn drop_empty(corpus: &ParallelCorpus) -> ParallelCorpus {
    corpus.filtered(|p| !p.source.is_empty() && !p.target.is_empty())
}

/// Result of [`intersect_multiway`].
#[derive(Debug, Clone)]
pub struct Intersection {
    pub corpora: BTreeMap<String, ParallelCorpus>,
    /// Duplicate pivot sentences dropped per input corpus (first occurrence kept).
    pub duplicates: BTreeMap<String, usize>,
}

impl Intersection {
    pub fn shared_len(&self) -> usize {
        self.corpora.values().next().map_or(0, ParallelCorpus::len)
    }
}

/// Restrict every corpus to the pairs whose pivot sentence occurs in all of them.
///
/// Pivot sentences are matched on whitespace-normalized raw text. Outputs share
/// the pivot order of the first corpus (by key) and are renumbered so that the
/// same id denotes the same pivot sentence in every output.
pub fn intersect_multiway(corpora: &BTreeMap<String, ParallelCorpus>, pivot: &str) -> Result<Intersection> {
    let mut indexes = Vec::with_capacity(corpora.len());
    let mut duplicates = BTreeMap::new();

    for (key, corpus) in corpora {
        let side = corpus.side_of(pivot).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "corpus {key} ({}-{}) has no {pivot} side",
                corpus.src_lang, corpus.tgt_lang
            ))
        })?;
        let mut first_seen: HashMap<String, usize> = HashMap::with_capacity(corpus.len());
        let mut order = Vec::with_capacity(corpus.len());
        let mut dups = 0usize;
        for (pos, sentence) in corpus.side(side).enumerate() {
            let norm = normalize_whitespace(&sentence.raw);
            if first_seen.contains_key(&norm) {
                dups += 1;
            } else {
                first_seen.insert(norm.clone(), pos);
                order.push(norm);
            }
        }
        if dups > 0 {
            log::info!("{key}: dropped {dups} duplicate {pivot} sentences");
        }
        duplicates.insert(key.clone(), dups);
        indexes.push((key, corpus, first_seen, order));
    }

    let Some((_, _, _, first_order)) = indexes.first() else {
        return Ok(Intersection {
            corpora: BTreeMap::new(),
            duplicates,
        });
    };
    let shared: Vec<&String> = first_order
        .iter()
        .filter(|norm| indexes.iter().all(|(_, _, map, _)| map.contains_key(*norm)))
        .collect();

    let mut out = BTreeMap::new();
    for (key, corpus, map, _) in &indexes {
        let pairs = shared
            .iter()
            .enumerate()
            .map(|(new_id, norm)| {
                let pair = &corpus.pairs[map[*norm]];
                let mut source = pair.source.clone();
                let mut target = pair.target.clone();
                source.id = new_id as u64;
                target.id = new_id as u64;
                SentencePair { source, target }
            })
            .collect();
        out.insert(
            (*key).clone(),
            ParallelCorpus {
                src_lang: corpus.src_lang.clone(),
                tgt_lang: corpus.tgt_lang.clone(),
                pairs,
            },
        );
    }
    Ok(Intersection {
        corpora: out,
        duplicates,
    })
}

/// Keep, in every corpus, only the ids present in all of them.
///
/// Used after per-corpus filtering of already-intersected data, where ids
/// identify the same pivot sentence across corpora.
pub fn intersect_ids(corpora: &BTreeMap<String, ParallelCorpus>) -> BTreeMap<String, ParallelCorpus> {
    let mut common: Option<HashSet<u64>> = None;
    for corpus in corpora.values() {
        let ids: HashSet<u64> = corpus.pairs.iter().map(SentencePair::id).collect();
        common = Some(match common {
            None => ids,
            Some(c) => c.intersection(&ids).copied().collect(),
        });
    }
    let common = common.unwrap_or_default();
    corpora
        .iter()
        .map(|(k, c)| (k.clone(), c.filtered(|p| common.contains(&p.id()))))
        .collect()
}

pub(crate) fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn write_lines<'a>(path: &Path, lines: impl IntoIterator<Item = &'a str>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for line in lines {
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
