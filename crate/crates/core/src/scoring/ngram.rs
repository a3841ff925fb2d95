use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{SentenceScore, SentenceScorer};
use crate::error::{Error, Result};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

pub(crate) const BOS_ID: u32 = 0;
pub(crate) const EOS_ID: u32 = 1;
pub(crate) const UNK_ID: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothing {
    Mle,
    #[default]
    InterpolatedKneserNey,
}

/// Symbol table. Ids 0, 1, 2 are `<s>`, `</s>` and `<unk>`; `<s>` only ever
/// appears as context.
#[derive(Debug, Clone)]
pub struct Vocab {
    symbols: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocab {
    fn new() -> Self {
        let mut v = Vocab {
            symbols: Vec::new(),
            ids: HashMap::new(),
        };
        for s in [BOS, EOS, UNK] {
            v.insert(s);
        }
        v
    }

    fn insert(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.symbols.push(s.to_string());
        self.ids.insert(s.to_string(), id);
        id
    }

    pub fn id(&self, s: &str) -> u32 {
        self.ids.get(s).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, s: &str) -> bool {
        self.ids.contains_key(s)
    }

    pub fn symbol(&self, id: u32) -> &str {
        &self.symbols[id as usize]
    }

    /// Number of predictable units: every symbol except `<s>`.
    pub fn outcomes(&self) -> usize {
        self.symbols.len() - 1
    }

    /// Predictable units in id order (`</s>`, `<unk>`, then training symbols).
    pub fn outcome_symbols(&self) -> impl Iterator<Item = &str> {
        self.symbols[1..].iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, Default)]
struct ContextStats {
    total: u64,
    followers: HashMap<u32, u64>,
}

/// Back-off n-gram language model over subword units.
///
/// With Kneser-Ney smoothing the order-`k` estimate is
/// `max(a(h,w) - D_k, 0) / A(h) + D_k * T(h) / A(h) * p_{k-1}(w | h')`,
/// where `a` is the raw count at the highest order and the left-continuation
/// count below it, `A(h)` and `T(h)` are the sum and number of distinct
/// followers of `h`, and `D_k = n1 / (n1 + 2 n2)`. The recursion bottoms out
/// in the uniform distribution over all predictable units, so every unit
/// including `<unk>` gets positive probability.
#[derive(Debug, Clone)]
pub struct NgramLm {
    order: usize,
    smoothing: Smoothing,
    vocab: Vocab,
    levels: Vec<HashMap<Vec<u32>, ContextStats>>,
    discounts: Vec<f64>,
}

fn padded(order: usize, units: &[u32]) -> Vec<u32> {
    let mut ids = vec![BOS_ID; order - 1];
    ids.extend_from_slice(units);
    ids.push(EOS_ID);
    ids
}

/// Train an n-gram model. Sentences are scored with an implicit `</s>`.
pub fn train_ngram_lm<S: AsRef<str>>(corpus: &[Vec<S>], order: usize, smoothing: Smoothing) -> Result<NgramLm> {
    if order == 0 {
        return Err(Error::InvalidArgument("n-gram order must be at least 1".into()));
    }
    if corpus.is_empty() {
        return Err(Error::Empty("language model training corpus".into()));
    }
    let mut vocab = Vocab::new();
    let mut ngram_counts: HashMap<Vec<u32>, u64> = HashMap::new();
    for sentence in corpus {
        let units: Vec<u32> = sentence.iter().map(|u| vocab.insert(u.as_ref())).collect();
        let ids = padded(order, &units);
        for end in order - 1..ids.len() {
            *ngram_counts.entry(ids[end + 1 - order..=end].to_vec()).or_insert(0) += 1;
        }
    }

    // levels[k - 1] holds order-k statistics keyed by the (k - 1)-unit context.
    let mut levels: Vec<HashMap<Vec<u32>, ContextStats>> = vec![HashMap::new(); order];
    let add = |level: &mut HashMap<Vec<u32>, ContextStats>, gram: &[u32], a: u64| {
        let (ctx, w) = gram.split_at(gram.len() - 1);
        let stats = level.entry(ctx.to_vec()).or_default();
        stats.total += a;
        *stats.followers.entry(w[0]).or_insert(0) += a;
    };
    for (gram, &c) in &ngram_counts {
        add(&mut levels[order - 1], gram, c);
    }
    if smoothing == Smoothing::InterpolatedKneserNey {
        // Left-continuation counts: a_k(h w) = |{v : (v h w) is a seen (k+1)-gram}|.
        let mut higher: HashSet<Vec<u32>> = ngram_counts.keys().cloned().collect();
        for k in (1..order).rev() {
            let mut lower = HashSet::with_capacity(higher.len());
            for gram in &higher {
                add(&mut levels[k - 1], &gram[1..], 1);
                lower.insert(gram[1..].to_vec());
            }
            higher = lower;
        }
    }

    let discounts = levels
        .iter()
        .map(|level| {
            let (mut n1, mut n2) = (0u64, 0u64);
            for stats in level.values() {
                for &a in stats.followers.values() {
                    match a {
                        1 => n1 += 1,
                        2 => n2 += 1,
                        _ => {}
                    }
                }
            }
            kn_discount(n1, n2)
        })
        .collect();

    Ok(NgramLm {
        order,
        smoothing,
        vocab,
        levels,
        discounts,
    })
}

/// `n1 / (n1 + 2 n2)`, or 0.5 when either count-of-counts is zero.
pub(crate) fn kn_discount(n1: u64, n2: u64) -> f64 {
    if n1 == 0 || n2 == 0 {
        0.5
    } else {
        n1 as f64 / (n1 as f64 + 2.0 * n2 as f64)
    }
}

impl NgramLm {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    /// Discount used at each order (index 0 = unigrams).
    pub fn discounts(&self) -> &[f64] {
        &self.discounts
    }

    /// `history` holds the `order - 1` preceding ids (BOS-padded).
    pub(crate) fn prob_id(&self, history: &[u32], w: u32) -> f64 {
        debug_assert_eq!(history.len(), self.order - 1);
        match self.smoothing {
            Smoothing::Mle => self.levels[self.order - 1].get(history).map_or(0.0, |st| {
                st.followers.get(&w).copied().unwrap_or(0) as f64 / st.total as f64
            }),
            Smoothing::InterpolatedKneserNey => {
                let mut p = 1.0 / self.vocab.outcomes() as f64;
                for k in 1..=self.order {
                    let ctx = &history[history.len() + 1 - k..];
                    if let Some(st) = self.levels[k - 1].get(ctx) {
                        let d = self.discounts[k - 1];
                        let total = st.total as f64;
                        let a = st.followers.get(&w).copied().unwrap_or(0) as f64;
                        let backoff = d * st.followers.len() as f64 / total;
                        p = (a - d).max(0.0) / total + backoff * p;
                    }
                }
                p
            }
        }
    }

    pub(crate) fn ids<S: AsRef<str>>(&self, units: &[S]) -> Vec<u32> {
        units.iter().map(|u| self.vocab.id(u.as_ref())).collect()
    }

    pub(crate) fn history_ids<S: AsRef<str>>(&self, context: &[S]) -> Vec<u32> {
        let n = self.order - 1;
        let mut hist = vec![BOS_ID; n];
        let ids = self.ids(context);
        let take = ids.len().min(n);
        hist[n - take..].copy_from_slice(&ids[ids.len() - take..]);
        hist
    }

    /// Probability of `unit` after `context` (earlier units are ignored, missing
    /// ones are `<s>`). Unknown units are looked up as `<unk>`.
    pub fn probability<S: AsRef<str>>(&self, context: &[S], unit: &str) -> f64 {
        self.prob_id(&self.history_ids(context), self.vocab.id(unit))
    }

    /// Next-unit distribution over every predictable unit, in vocabulary order.
    pub fn distribution<S: AsRef<str>>(&self, context: &[S]) -> Vec<(String, f64)> {
        let hist = self.history_ids(context);
        (1..self.vocab.symbols.len() as u32)
            .map(|w| (self.vocab.symbol(w).to_string(), self.prob_id(&hist, w)))
            .collect()
    }

    /// Per-unit probabilities of `sentence` followed by `</s>`.
    pub fn unit_probabilities<S: AsRef<str>>(&self, sentence: &[S]) -> Vec<f64> {
        let ids = padded(self.order, &self.ids(sentence));
        (self.order - 1..ids.len())
            .map(|end| self.prob_id(&ids[end + 1 - self.order..end], ids[end]))
            .collect()
    }

    /// Total log2 probability of a sentence, `</s>` included.
    pub fn lm_logprob<S: AsRef<str>>(&self, sentence: &[S]) -> Result<SentenceScore> {
        let ids = padded(self.order, &self.ids(sentence));
        let mut bits = 0.0;
        for end in self.order - 1..ids.len() {
            let hist = &ids[end + 1 - self.order..end];
            let p = self.prob_id(hist, ids[end]);
            if p <= 0.0 {
                let pos = end + 1 - self.order;
                let unit = sentence.get(pos).map_or(EOS, |u| u.as_ref()).to_string();
                return Err(Error::ZeroProbability {
                    unit,
                    context: hist.iter().map(|&i| self.vocab.symbol(i).to_string()).collect(),
                });
            }
            bits += p.log2();
        }
        Ok(SentenceScore {
            logprob_bits: bits,
            n_units: sentence.len() + 1,
        })
    }
}

impl SentenceScorer for NgramLm {
    fn score(&self, target: &[String], _source: &[String]) -> Result<SentenceScore> {
        self.lm_logprob(target)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sents(lines: &[&str]) -> Vec<Vec<String>> {
        lines
            .iter()
            .map(|l| l.split_whitespace().map(String::from).collect())
            .collect()
    }

    #[test]
    fn unigram_mle_counts() {
        let lm = train_ngram_lm(&sents(&["a a b"]), 1, Smoothing::Mle).unwrap();
        let none: [&str; 0] = [];
        assert_abs_diff_eq!(lm.probability(&none, "a"), 2.0 / 4.0);
        assert_abs_diff_eq!(lm.probability(&none, "b"), 1.0 / 4.0);
        assert_abs_diff_eq!(lm.probability(&none, EOS), 1.0 / 4.0);
        // conditional on not ending: the raw 2/3, 1/3 split
        let not_eos = 1.0 - lm.probability(&none, EOS);
        assert_abs_diff_eq!(lm.probability(&none, "a") / not_eos, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(lm.probability(&none, "b") / not_eos, 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn mle_zero_probability_is_an_error() {
        let lm = train_ngram_lm(&sents(&["a b", "b a"]), 2, Smoothing::Mle).unwrap();
        let err = lm.lm_logprob(&["a", "a"]).unwrap_err();
        match err {
            Error::ZeroProbability { unit, context } => {
                assert_eq!(unit, "a");
                assert_eq!(context, vec!["a"]);
            }
            e => panic!("unexpected {e}"),
        }
        assert!(lm.lm_logprob(&["zzz"]).is_err());
    }

    #[test]
    fn hand_chain_rule_bigram_mle() {
        let lm = train_ngram_lm(&sents(&["a b", "a a b"]), 2, Smoothing::Mle).unwrap();
        // p(a|<s>) = 1, p(b|a) = 2/3, p(</s>|b) = 1
        let s = lm.lm_logprob(&["a", "b"]).unwrap();
        assert_abs_diff_eq!(s.logprob_bits, (2.0f64 / 3.0).log2(), epsilon = 1e-12);
        assert_eq!(s.n_units, 3);
    }

    #[test]
    fn empty_sentence_scores_eos_only() {
        let lm = train_ngram_lm(&sents(&["a b", ""]), 2, Smoothing::Mle).unwrap();
        let none: [&str; 0] = [];
        let s = lm.lm_logprob(&none).unwrap();
        assert_eq!(s.n_units, 1);
        assert_abs_diff_eq!(s.logprob_bits, 0.5f64.log2(), epsilon = 1e-12);
    }

    #[test]
    fn uniform_model_five_units() {
        // Every symbol follows every symbol equally often: a unigram MLE over
        // {a, b, c, </s>} with equal counts is uniform over 4 outcomes.
        let lm = train_ngram_lm(&sents(&["a b c"]), 1, Smoothing::Mle).unwrap();
        let s = lm.lm_logprob(&["a", "b", "c", "a"]).unwrap();
        assert_eq!(s.n_units, 5);
        assert_abs_diff_eq!(s.logprob_bits, -10.0, epsilon = 1e-12);
    }

    #[test]
    fn kn_distributions_normalize() {
        let corpus = sents(&[
            "the cat sat on the mat",
            "the dog sat on the log",
            "a cat saw a dog",
            "the mat was on the dog",
        ]);
        for order in 1..=4 {
            let lm = train_ngram_lm(&corpus, order, Smoothing::InterpolatedKneserNey).unwrap();
            for ctx in [
                vec![],
                vec!["the"],
                vec!["sat", "on"],
                vec!["zzz", "the", "cat"],
                vec!["on", "zzz"],
            ] {
                let total: f64 = lm.distribution(&ctx).iter().map(|(_, p)| p).sum();
                assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            }
            assert!(lm.probability(&["the"], "unseen-unit") > 0.0);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(train_ngram_lm::<String>(&[], 3, Smoothing::Mle).is_err());
        assert!(train_ngram_lm(&sents(&["a"]), 0, Smoothing::Mle).is_err());
    }

    #[test]
    fn discount_fallback() {
        assert_eq!(kn_discount(0, 3), 0.5);
        assert_eq!(kn_discount(4, 0), 0.5);
        assert_abs_diff_eq!(kn_discount(4, 2), 0.5);
        assert_abs_diff_eq!(kn_discount(6, 1), 0.75);
    }
}
