use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};

/// Source-side placeholder aligned to target units with no source counterpart.
pub const NULL_WORD: &str = "<null>";

/// Word-translation table `t(target | source)` including the NULL source word.
#[derive(Debug, Clone)]
pub struct LexicalTable {
    src_ids: HashMap<String, u32>,
    tgt_ids: HashMap<String, u32>,
    tgt_symbols: Vec<String>,
    // indexed by source id; id 0 is NULL
    table: Vec<BTreeMap<u32, f64>>,
    log_likelihood: Vec<f64>,
}

impl LexicalTable {
    /// `t(target | source)`; `None` as source means NULL. Unseen pairs are 0.
    pub fn prob(&self, source: Option<&str>, target: &str) -> f64 {
        let src = match source {
            None => Some(0),
            Some(s) => self.src_ids.get(s).copied(),
        };
        match (src, self.tgt_ids.get(target)) {
            (Some(s), Some(t)) => self.table[s as usize].get(t).copied().unwrap_or(0.0),
            _ => 0.0,
        }
    }

    pub fn knows_source(&self, source: &str) -> bool {
        self.src_ids.contains_key(source)
    }

    pub fn target_vocab(&self) -> impl Iterator<Item = &str> {
        self.tgt_symbols.iter().map(String::as_str)
    }

    /// Distribution over targets for a source word (`None` = NULL).
    pub fn distribution(&self, source: Option<&str>) -> Vec<(&str, f64)> {
        let src = match source {
            None => 0,
            Some(s) => match self.src_ids.get(s) {
                Some(&id) => id,
                None => return Vec::new(),
            },
        };
        self.table[src as usize]
            .iter()
            .map(|(&t, &p)| (self.tgt_symbols[t as usize].as_str(), p))
            .collect()
    }

    /// Training log-likelihood (natural log) before the first and after each EM iteration.
    pub fn log_likelihood_history(&self) -> &[f64] {
        &self.log_likelihood
    }
}

struct Interned {
    ids: HashMap<String, u32>,
    symbols: Vec<String>,
}

impl Interned {
    fn new() -> Self {
        Interned {
            ids: HashMap::new(),
            symbols: Vec::new(),
        }
    }

    fn get(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.ids.insert(s.to_string(), id);
        self.symbols.push(s.to_string());
        id
    }
}

/// EM parameters in one flat vector: row `e` (a source id) holds the
/// co-occurring targets in ascending id order at `row_start[e]..row_start[e + 1]`.
struct FlatParams {
    index: HashMap<u64, usize>,
    row_start: Vec<usize>,
    cols: Vec<u32>,
}

fn key(e: u32, f: u32) -> u64 {
    (u64::from(e) << 32) | u64::from(f)
}

impl FlatParams {
    fn new(data: &[(Vec<u32>, Vec<u32>)], n_src: usize) -> Self {
        let mut rows: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n_src];
        for (src, tgt) in data {
            for &e in src {
                rows[e as usize].extend(tgt.iter().copied());
            }
        }
        let mut index = HashMap::new();
        let mut row_start = Vec::with_capacity(n_src + 1);
        let mut cols = Vec::new();
        for (e, row) in rows.into_iter().enumerate() {
            row_start.push(cols.len());
            for f in row {
                index.insert(key(e as u32, f), cols.len());
                cols.push(f);
            }
        }
        row_start.push(cols.len());
        FlatParams { index, row_start, cols }
    }

    /// One pass over the corpus. Adds expected alignment counts to `counts`
    /// when given and returns `sum_j ln( 1/(l+1) * sum_i t(f_j | e_i) )`.
    fn pass(&self, data: &[(Vec<u32>, Vec<u32>)], t: &[f64], mut counts: Option<&mut [f64]>) -> f64 {
        let mut ll = 0.0;
        let mut idx = Vec::new();
        for (src, tgt) in data {
            let norm = src.len() as f64;
            for &f in tgt {
                idx.clear();
                idx.extend(src.iter().map(|&e| self.index[&key(e, f)]));
                let denom: f64 = idx.iter().map(|&i| t[i]).sum();
                ll += (denom / norm).ln();
                if let Some(c) = counts.as_deref_mut() {
                    for &i in &idx {
                        c[i] += t[i] / denom;
                    }
                }
            }
        }
        ll
    }

    fn into_table(self, t: &[f64]) -> Vec<BTreeMap<u32, f64>> {
        self.row_start
            .windows(2)
            .map(|w| (w[0]..w[1]).map(|i| (self.cols[i], t[i])).collect())
            .collect()
    }
}

/// Estimate `t(target | source)` with EM over sentence pairs (source, target).
///
/// Every source sentence is extended with the NULL word. Parameters start
/// uniform over the target vocabulary for co-occurring pairs; each iteration
/// collects expected alignment counts and renormalizes per source word.
pub fn train_lex_table<S: AsRef<str>, T: AsRef<str>>(
    pairs: &[(Vec<S>, Vec<T>)],
    iterations: usize,
) -> Result<LexicalTable> {
    if iterations == 0 {
        return Err(Error::InvalidArgument("EM needs at least one iteration".into()));
    }
    if pairs.is_empty() {
        return Err(Error::Empty("lexical table training corpus".into()));
    }
    let mut src_ids = Interned::new();
    src_ids.get(NULL_WORD);
    let mut tgt_ids = Interned::new();
    let data: Vec<(Vec<u32>, Vec<u32>)> = pairs
        .iter()
        .map(|(s, t)| {
            let mut src = vec![0u32];
            src.extend(s.iter().map(|w| src_ids.get(w.as_ref())));
            let tgt = t.iter().map(|w| tgt_ids.get(w.as_ref())).collect();
            (src, tgt)
        })
        .collect();

    let params = FlatParams::new(&data, src_ids.symbols.len());
    let mut t = vec![1.0 / tgt_ids.symbols.len().max(1) as f64; params.cols.len()];
    let mut history = Vec::with_capacity(iterations + 1);
    for _ in 0..iterations {
        let mut counts = vec![0.0; t.len()];
        // the likelihood of the current parameters falls out of the E step
        history.push(params.pass(&data, &t, Some(&mut counts)));
        for w in params.row_start.windows(2) {
            let row = &mut counts[w[0]..w[1]];
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.iter_mut().for_each(|c| *c /= total);
            }
        }
        t = counts;
    }
    history.push(params.pass(&data, &t, None));

    Ok(LexicalTable {
        src_ids: src_ids.ids,
        tgt_ids: tgt_ids.ids,
        tgt_symbols: tgt_ids.symbols,
        table: params.into_table(&t),
        log_likelihood: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pair(s: &str, t: &str) -> (Vec<String>, Vec<String>) {
        (
            s.split_whitespace().map(String::from).collect(),
            t.split_whitespace().map(String::from).collect(),
        )
    }

    #[test]
    fn single_pair_single_target() {
        let t = train_lex_table(&[pair("a", "x")], 1).unwrap();
        assert_abs_diff_eq!(t.prob(Some("a"), "x"), 1.0);
        assert_abs_diff_eq!(t.prob(None, "x"), 1.0);
    }

    #[test]
    fn rows_normalize() {
        let t = train_lex_table(&[pair("a b c", "x y"), pair("b c", "y z z"), pair("a", "x w")], 5).unwrap();
        for src in [None, Some("a"), Some("b"), Some("c")] {
            let total: f64 = t.distribution(src).iter().map(|(_, p)| p).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
        assert!(t.distribution(Some("unseen")).is_empty());
        assert_eq!(t.prob(Some("unseen"), "x"), 0.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(train_lex_table::<String, String>(&[], 3).is_err());
        assert!(train_lex_table(&[pair("a", "x")], 0).is_err());
    }
}
