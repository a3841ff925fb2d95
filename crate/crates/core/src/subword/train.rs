use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet};
use std::sync::Arc;

use super::{initial_symbols, BpeModel, END_OF_WORD};
use crate::error::{Error, Result};

/// Default number of merge operations.
pub const DEFAULT_MERGES: usize = 16_000;

/// Count word types across any number of token streams.
pub fn word_frequencies<'a, I, S>(sentences: I) -> BTreeMap<String, u64>
where
    I: IntoIterator<Item = &'a [S]>,
    S: AsRef<str> + 'a,
{
    let mut freqs = BTreeMap::new();
    for sentence in sentences {
        for tok in sentence {
            *freqs.entry(tok.as_ref().to_string()).or_insert(0) += 1;
        }
    }
    freqs
}

#[derive(Debug)]
struct Word {
    symbols: Vec<u32>,
    freq: i64,
}

type Pair = (u32, u32);

/// Heap entry: highest count first, then lexicographically smallest pair.
#[derive(Debug, PartialEq, Eq)]
struct Candidate {
    count: i64,
    left: Arc<str>,
    right: Arc<str>,
    pair: Pair,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| Reverse((&self.left, &self.right)).cmp(&Reverse((&other.left, &other.right))))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Trainer {
    symbols: Vec<Arc<str>>,
    ids: HashMap<Arc<str>, u32>,
    words: Vec<Word>,
    counts: HashMap<Pair, i64>,
    occurs_in: HashMap<Pair, HashSet<usize>>,
    heap: BinaryHeap<Candidate>,
}

impl Trainer {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.symbols.len() as u32;
        let arc: Arc<str> = Arc::from(s);
        self.symbols.push(arc.clone());
        self.ids.insert(arc, id);
        id
    }

    fn push(&mut self, pair: Pair) {
        let count = self.counts.get(&pair).copied().unwrap_or(0);
        if count > 0 {
            self.heap.push(Candidate {
                count,
                left: self.symbols[pair.0 as usize].clone(),
                right: self.symbols[pair.1 as usize].clone(),
                pair,
            });
        }
    }

    fn add_word_pairs(&mut self, w: usize, sign: i64, touched: &mut BTreeSet<Pair>) {
        let freq = self.words[w].freq;
        for k in 0..self.words[w].symbols.len().saturating_sub(1) {
            let pair = (self.words[w].symbols[k], self.words[w].symbols[k + 1]);
            *self.counts.entry(pair).or_insert(0) += sign * freq;
            if sign > 0 {
                self.occurs_in.entry(pair).or_default().insert(w);
            }
            touched.insert(pair);
        }
    }

    /// Pop the best pair whose heap entry is still current.
    fn best(&mut self) -> Option<(Pair, i64)> {
        while let Some(c) = self.heap.pop() {
            if self.counts.get(&c.pair).copied() == Some(c.count) {
                return Some((c.pair, c.count));
            }
        }
        None
    }

    fn merge(&mut self, pair: Pair, merged: u32) {
        let mut affected: Vec<usize> = self
            .occurs_in
            .remove(&pair)
            .map(|s| s.into_iter().collect())
            .unwrap_or_default();
        affected.sort_unstable();
        let mut touched = BTreeSet::new();
        for w in affected {
            let syms = &self.words[w].symbols;
            if !syms.windows(2).any(|p| (p[0], p[1]) == pair) {
                continue;
            }
            self.add_word_pairs(w, -1, &mut touched);
            let old = std::mem::take(&mut self.words[w].symbols);
            let mut new = Vec::with_capacity(old.len());
            let mut i = 0;
            while i < old.len() {
                if i + 1 < old.len() && (old[i], old[i + 1]) == pair {
                    new.push(merged);
                    i += 2;
                } else {
                    new.push(old[i]);
                    i += 1;
                }
            }
            self.words[w].symbols = new;
            self.add_word_pairs(w, 1, &mut touched);
        }
        for p in touched {
            if self.counts.get(&p).is_some_and(|&c| c <= 0) {
                self.counts.remove(&p);
            }
            self.push(p);
        }
    }
}

/// Learn merges over a word-frequency table by greedy most-frequent-pair merging.
///
/// Pair counts are weighted by word frequency. Ties go to the lexicographically
/// smallest `(left, right)` pair. Training stops after `n_merges` merges or when
/// no pair occurs at least twice.
pub fn bpe_train(freqs: &BTreeMap<String, u64>, n_merges: usize) -> Result<BpeModel> {
    if freqs.values().all(|&f| f == 0) {
        return Err(Error::Empty("BPE training corpus has no tokens".into()));
    }
    let mut t = Trainer {
        symbols: Vec::new(),
        ids: HashMap::new(),
        words: Vec::with_capacity(freqs.len()),
        counts: HashMap::new(),
        occurs_in: HashMap::new(),
        heap: BinaryHeap::new(),
    };
    let mut vocab = BTreeSet::new();
    for (word, &freq) in freqs {
        if freq == 0 || word.is_empty() {
            continue;
        }
        let syms = initial_symbols(word);
        let symbols = syms.iter().map(|s| t.intern(s)).collect();
        vocab.extend(syms);
        t.words.push(Word {
            symbols,
            freq: freq as i64,
        });
    }
    let mut touched = BTreeSet::new();
    for w in 0..t.words.len() {
        t.add_word_pairs(w, 1, &mut touched);
    }
    for p in touched {
        t.push(p);
    }

    let mut merges = Vec::new();
    while merges.len() < n_merges {
        let Some((pair, count)) = t.best() else { break };
        if count < 2 {
            break;
        }
        let left = t.symbols[pair.0 as usize].to_string();
        let right = t.symbols[pair.1 as usize].to_string();
        let joined = format!("{left}{right}");
        let merged = t.intern(&joined);
        t.merge(pair, merged);
        vocab.insert(joined);
        merges.push((left, right));
    }
    Ok(BpeModel::from_parts(merges, vocab, END_OF_WORD.to_string()))
}
