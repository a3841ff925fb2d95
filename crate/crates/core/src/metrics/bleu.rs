//! Corpus-level BLEU with exponential smoothing.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::tokenize_13a;
use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    #[default]
    Mixed,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BleuTokenizer {
    #[default]
    #[serde(rename = "13a")]
    Thirteen,
    /// Split on whitespace only.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BleuSmoothing {
    #[default]
    Exp,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BleuConfig {
    #[serde(default)]
    pub case: Case,
    #[serde(default)]
    pub tokenizer: BleuTokenizer,
    #[serde(default)]
    pub smoothing: BleuSmoothing,
}

impl BleuConfig {
    /// Provenance string in the `BLEU+c.mixed+#.1+s.exp+tok.13a` style.
    pub fn signature(&self) -> String {
        let case = match self.case {
            Case::Mixed => "mixed",
            Case::Lower => "lc",
        };
        let smooth = match self.smoothing {
            BleuSmoothing::Exp => "exp",
            BleuSmoothing::None => "none",
        };
        let tok = match self.tokenizer {
            BleuTokenizer::Thirteen => "13a",
            BleuTokenizer::None => "none",
        };
        format!(
            "BLEU+c.{case}+#.1+s.{smooth}+tok.{tok}+v.xmi-{}",
            env!("CARGO_PKG_VERSION")
        )
    }

    pub fn prepare(&self, raw: &str) -> Vec<String> {
        let text = match self.case {
            Case::Mixed => raw.to_string(),
            Case::Lower => raw.to_lowercase(),
        };
        match self.tokenizer {
            BleuTokenizer::Thirteen => tokenize_13a(&text),
            BleuTokenizer::None => text.split_whitespace().map(String::from).collect(),
        }
    }
}

/// Sufficient statistics of one candidate/reference pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SentenceStats {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub cand_len: u64,
    pub ref_len: u64,
}

impl std::ops::AddAssign<&SentenceStats> for SentenceStats {
    fn add_assign(&mut self, o: &SentenceStats) {
        for n in 0..MAX_ORDER {
            self.matches[n] += o.matches[n];
            self.totals[n] += o.totals[n];
        }
        self.cand_len += o.cand_len;
        self.ref_len += o.ref_len;
    }
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram matches and totals for one pair.
pub fn sentence_stats<S: AsRef<str>, T: AsRef<str>>(candidate: &[S], reference: &[T]) -> SentenceStats {
    let mut st = SentenceStats {
        cand_len: candidate.len() as u64,
        ref_len: reference.len() as u64,
        ..Default::default()
    };
    for n in 1..=MAX_ORDER {
        let cand = ngram_counts(candidate, n);
        let refs = ngram_counts(reference, n);
        st.totals[n - 1] = candidate.len().saturating_sub(n - 1) as u64;
        st.matches[n - 1] = cand
            .iter()
            .map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0)))
            .sum();
    }
    st
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    /// 0 to 100.
    pub score: f64,
    /// Per-order precisions in percent, after smoothing.
    pub precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub stats: SentenceStats,
}

impl fmt::Display for BleuScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.precisions;
        write!(
            f,
            "BLEU = {:.2} {:.1}/{:.1}/{:.1}/{:.1} (BP = {:.3} ratio = {:.3} hyp_len = {} ref_len = {})",
            self.score,
            p[0],
            p[1],
            p[2],
            p[3],
            self.brevity_penalty,
            self.stats.cand_len as f64 / self.stats.ref_len.max(1) as f64,
            self.stats.cand_len,
            self.stats.ref_len
        )
    }
}

/// BLEU from summed statistics.
///
/// With exponential smoothing the k-th order (counting from 1) that has no
/// matches gets precision `1 / (2^k * total_n)`. Corpora where some order has
/// no candidate n-grams at all are rejected.
pub fn bleu_from_stats<'a, I>(stats: I, smoothing: BleuSmoothing) -> Result<BleuScore>
where
    I: IntoIterator<Item = &'a SentenceStats>,
{
    let mut sum = SentenceStats::default();
    let mut n_sent = 0usize;
    for s in stats {
        sum += s;
        n_sent += 1;
    }
    if n_sent == 0 {
        return Err(Error::Empty("BLEU needs at least one candidate".into()));
    }
    if let Some(n) = sum.totals.iter().position(|&t| t == 0) {
        return Err(Error::InvalidArgument(format!(
            "degenerate corpus: no candidate {}-grams",
            n + 1
        )));
    }

    let mut precisions = [0.0; MAX_ORDER];
    let mut zero_orders = 0i32;
    let mut log_sum = 0.0;
    let mut any_zero = false;
    for (n, precision) in precisions.iter_mut().enumerate() {
        let total = sum.totals[n] as f64;
        let p = if sum.matches[n] > 0 {
            sum.matches[n] as f64 / total
        } else {
            match smoothing {
                BleuSmoothing::Exp => {
                    zero_orders += 1;
                    1.0 / (2f64.powi(zero_orders) * total)
                }
                BleuSmoothing::None => {
                    any_zero = true;
                    0.0
                }
            }
        };
        *precision = 100.0 * p;
        if p > 0.0 {
            log_sum += p.ln();
        }
    }
    let (c, r) = (sum.cand_len as f64, sum.ref_len as f64);
    let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    let score = if any_zero {
        0.0
    } else {
        100.0 * bp * (log_sum / MAX_ORDER as f64).exp()
    };
    Ok(BleuScore {
        score,
        precisions,
        brevity_penalty: bp,
        stats: sum,
    })
}

/// Corpus BLEU over pre-tokenized candidates and single references.
pub fn bleu<S: AsRef<str>, T: AsRef<str>>(
    candidates: &[Vec<S>],
    references: &[Vec<T>],
    smoothing: BleuSmoothing,
) -> Result<BleuScore> {
    if candidates.len() != references.len() {
        return Err(Error::LengthMismatch {
            what: "candidates vs references".into(),
            left: candidates.len(),
            right: references.len(),
        });
    }
    let stats: Vec<SentenceStats> = candidates
        .iter()
        .zip(references)
        .map(|(c, r)| sentence_stats(c, r))
        .collect();
    bleu_from_stats(&stats, smoothing)
}

/// Corpus BLEU over raw text, applying the configured case folding and tokenizer.
pub fn bleu_raw<S: AsRef<str>, T: AsRef<str>>(
    candidates: &[S],
    references: &[T],
    config: &BleuConfig,
) -> Result<BleuScore> {
    let c: Vec<Vec<String>> = candidates.iter().map(|s| config.prepare(s.as_ref())).collect();
    let r: Vec<Vec<String>> = references.iter().map(|s| config.prepare(s.as_ref())).collect();
    bleu(&c, &r, config.smoothing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn identity_is_100() {
        let c = vec![toks("the cat sat on the mat"), toks("a b c d e")];
        let s = bleu(&c, &c, BleuSmoothing::Exp).unwrap();
        assert_abs_diff_eq!(s.score, 100.0, epsilon = 1e-9);
    }

    #[test]
    fn brevity_penalty_example() {
        let s = bleu(&[toks("a b c d")], &[toks("a b c d e")], BleuSmoothing::Exp).unwrap();
        assert_abs_diff_eq!(s.score, 100.0 * (-0.25f64).exp(), epsilon = 1e-9);
        assert_abs_diff_eq!(s.score, 77.88, epsilon = 0.01);
    }

    #[test]
    fn exp_smoothing_example() {
        let s = bleu(&[toks("e f g h")], &[toks("a b c d")], BleuSmoothing::Exp).unwrap();
        // precisions 1/8, 1/12, 1/16, 1/16
        let expected = 100.0 * (1.0f64 / (8.0 * 12.0 * 16.0 * 16.0)).powf(0.25);
        assert_abs_diff_eq!(s.score, expected, epsilon = 1e-9);
        assert_abs_diff_eq!(s.score, 7.99, epsilon = 0.05);
        assert_eq!(s.brevity_penalty, 1.0);
    }

    #[test]
    fn no_smoothing_zero_order_gives_zero() {
        let s = bleu(&[toks("e f g h")], &[toks("a b c d")], BleuSmoothing::None).unwrap();
        assert_eq!(s.score, 0.0);
    }

    #[test]
    fn clipping() {
        let st = sentence_stats(&toks("the the the the"), &toks("the cat"));
        assert_eq!(st.matches[0], 1);
        assert_eq!(st.totals, [4, 3, 2, 1]);
    }

    #[test]
    fn errors() {
        let empty: Vec<Vec<String>> = vec![];
        assert!(bleu(&empty, &empty, BleuSmoothing::Exp).is_err());
        assert!(bleu(&[toks("a b")], &[toks("a b")], BleuSmoothing::Exp).is_err());
        assert!(bleu(&[toks("a b c d")], &Vec::<Vec<String>>::new(), BleuSmoothing::Exp).is_err());
    }

    #[test]
    fn raw_input_is_tokenized() {
        let cfg = BleuConfig::default();
        let s = bleu_raw(
            &["Hello, world! How are you?"],
            &["Hello , world ! How are you ?"],
            &cfg,
        )
        .unwrap();
        assert_abs_diff_eq!(s.score, 100.0, epsilon = 1e-9);
        assert!(cfg.signature().starts_with("BLEU+c.mixed+#.1+s.exp+tok.13a"));
        let lc = BleuConfig {
            case: Case::Lower,
            ..cfg
        };
        assert_abs_diff_eq!(
            bleu_raw(&["THE CAT SAT DOWN"], &["the cat sat down"], &lc)
                .unwrap()
                .score,
            100.0
        );
    }

    fn sentence() -> impl Strategy<Value = Vec<String>> {
        proptest::collection::vec("[a-e]", 4..12)
    }

    proptest! {
        #[test]
        fn bounded_and_permutation_invariant(
            pairs in proptest::collection::vec((sentence(), sentence()), 1..8),
            rot in 0usize..8,
        ) {
            let (c, r): (Vec<_>, Vec<_>) = pairs.iter().cloned().unzip();
            let s = bleu(&c, &r, BleuSmoothing::Exp).unwrap().score;
            prop_assert!((0.0..=100.0 + 1e-9).contains(&s));
            let k = rot % pairs.len();
            let (mut c2, mut r2) = (c.clone(), r.clone());
            c2.rotate_left(k);
            r2.rotate_left(k);
            let s2 = bleu(&c2, &r2, BleuSmoothing::Exp).unwrap().score;
            prop_assert!((s - s2).abs() < 1e-9);
        }

        #[test]
        fn matched_pair_never_hurts(
            pairs in proptest::collection::vec((sentence(), sentence()), 1..6),
            extra in sentence(),
        ) {
            let (mut c, mut r): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let before = bleu(&c, &r, BleuSmoothing::Exp).unwrap().score;
            c.push(extra.clone());
            r.push(extra);
            let after = bleu(&c, &r, BleuSmoothing::Exp).unwrap().score;
            prop_assert!(after >= before - 1e-9);
        }
    }
}
