//! Bootstrap confidence intervals by resampling sentences.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{bleu_from_stats, BleuSmoothing, SentenceStats};
use crate::scoring::{LexMixtureMt, ScoreSet, Smoothing};

pub const DEFAULT_REPLICATES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub point_estimate: f64,
    pub replicate_mean: f64,
    /// 2.5th percentile of the replicates.
    pub ci_low: f64,
    /// 97.5th percentile of the replicates.
    pub ci_high: f64,
    pub n_replicates: usize,
}

impl BootstrapResult {
    pub fn width(&self) -> f64 {
        self.ci_high - self.ci_low
    }
}

/// Positions of the 95% percentile interval in a sorted list of `b` replicates.
pub fn percentile_positions(b: usize) -> (usize, usize) {
    let lo = (0.025 * b as f64).floor() as usize;
    (lo, b - 1 - lo)
}

/// Recompute `metric` on `n_replicates` resamples (with replacement) of
/// `stats`.
///
/// Replicate `i` draws from a ChaCha8 stream seeded by `seed` with stream
/// number `i`, so results do not depend on the number of worker threads.
pub fn bootstrap_test<S, F>(stats: &[S], metric: F, n_replicates: usize, seed: u64) -> Result<BootstrapResult>
where
    S: Sync,
    F: Fn(&[&S]) -> Result<f64> + Sync,
{
    if stats.is_empty() {
        return Err(Error::Empty("bootstrap over no sentences".into()));
    }
    if stats.len() < 2 {
        return Err(Error::InvalidArgument("bootstrap needs at least two sentences".into()));
    }
    if n_replicates == 0 {
        return Err(Error::InvalidArgument("bootstrap needs at least one replicate".into()));
    }
    let all: Vec<&S> = stats.iter().collect();
    let point_estimate = metric(&all)?;
    let n = stats.len();
    let mut replicates = (0..n_replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let sample: Vec<&S> = (0..n).map(|_| &stats[rng.random_range(0..n)]).collect();
            metric(&sample)
        })
        .collect::<Result<Vec<f64>>>()?;
    if let Some(bad) = replicates.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("bootstrap metric returned {bad}")));
    }
    let replicate_mean = crate::metrics::stable_sum(replicates.iter().copied()) / n_replicates as f64;
    replicates.sort_by(f64::total_cmp);
    let (lo, hi) = percentile_positions(n_replicates);
    Ok(BootstrapResult {
        point_estimate,
        replicate_mean,
        ci_low: replicates[lo],
        ci_high: replicates[hi],
        n_replicates,
    })
}

/// Bootstrap of corpus BLEU over per-sentence sufficient statistics.
pub fn bootstrap_bleu(
    stats: &[SentenceStats],
    smoothing: BleuSmoothing,
    n_replicates: usize,
    seed: u64,
) -> Result<BootstrapResult> {
    bootstrap_test(
        stats,
        |sample| Ok(bleu_from_stats(sample.iter().copied(), smoothing)?.score),
        n_replicates,
        seed,
    )
}

/// Per-sentence `(log2 q_LM, log2 q_MT)` pairs joined on sentence id, in id order.
pub fn xmi_statistics(lm: &ScoreSet, mt: &ScoreSet) -> Result<Vec<(f64, f64)>> {
    // validates ids and target language
    crate::metrics::xmi(lm, mt)?;
    let lm_by_id: BTreeMap<u64, f64> = lm.records().iter().map(|r| (r.sentence_id, r.logprob_bits)).collect();
    let mt_by_id: BTreeMap<u64, f64> = mt.records().iter().map(|r| (r.sentence_id, r.logprob_bits)).collect();
    Ok(lm_by_id.iter().map(|(id, &l)| (l, mt_by_id[id])).collect())
}

fn xmi_of(sample: &[&(f64, f64)]) -> f64 {
    let diff = crate::metrics::stable_sum(sample.iter().map(|(l, m)| m - l));
    diff / sample.len() as f64
}

/// Bootstrap of XMI over the scored test sentences.
pub fn bootstrap_xmi(lm: &ScoreSet, mt: &ScoreSet, n_replicates: usize, seed: u64) -> Result<BootstrapResult> {
    let stats = xmi_statistics(lm, mt)?;
    bootstrap_test(&stats, |s| Ok(xmi_of(s)), n_replicates, seed)
}

/// Settings of the built-in scorers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuiltinScorer {
    pub order: usize,
    pub smoothing: Smoothing,
    pub lambda: f64,
    pub em_iterations: usize,
}

impl Default for BuiltinScorer {
    fn default() -> Self {
        BuiltinScorer {
            order: crate::scoring::DEFAULT_ORDER,
            smoothing: Smoothing::InterpolatedKneserNey,
            lambda: crate::scoring::DEFAULT_LAMBDA,
            em_iterations: 5,
        }
    }
}

impl BuiltinScorer {
    pub fn train(&self, pairs: &[(Vec<String>, Vec<String>)]) -> Result<LexMixtureMt> {
        LexMixtureMt::train(pairs, self.order, self.smoothing, self.lambda, self.em_iterations)
    }
}

/// Test-set XMI of a model trained on `train`, with the mixture's own n-gram
/// component as the language model.
pub fn builtin_xmi(
    scorer: &BuiltinScorer,
    train: &[(Vec<String>, Vec<String>)],
    test: &[(Vec<String>, Vec<String>)],
) -> Result<f64> {
    let mt = scorer.train(train)?;
    let mut diff = Vec::with_capacity(test.len());
    for (src, tgt) in test {
        let l = mt.language_model().lm_logprob(tgt)?.logprob_bits;
        let m = mt.mt_logprob(tgt, src)?.logprob_bits;
        diff.push(m - l);
    }
    Ok(crate::metrics::stable_sum(diff) / test.len() as f64)
}

/// Bootstrap over the training pairs: each replicate retrains the built-in
/// scorers on a resample and measures XMI on the fixed test pairs.
pub fn bootstrap_train_xmi(
    scorer: &BuiltinScorer,
    train: &[(Vec<String>, Vec<String>)],
    test: &[(Vec<String>, Vec<String>)],
    n_replicates: usize,
    seed: u64,
) -> Result<BootstrapResult> {
    if test.is_empty() {
        return Err(Error::Empty("test pairs".into()));
    }
    bootstrap_test(
        train,
        |sample| {
            let owned: Vec<(Vec<String>, Vec<String>)> = sample.iter().map(|&p| p.clone()).collect();
            builtin_xmi(scorer, &owned, test)
        },
        n_replicates,
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::sentence_stats;

    fn mean(s: &[&f64]) -> Result<f64> {
        Ok(s.iter().copied().sum::<f64>() / s.len() as f64)
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let data: Vec<f64> = (0..50).map(|i| (i * 7 % 13) as f64).collect();
        let a = bootstrap_test(&data, mean, 200, 11).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| bootstrap_test(&data, mean, 200, 11).unwrap());
        assert_eq!(a, b);
        let c = bootstrap_test(&data, mean, 200, 12).unwrap();
        assert_ne!(a, c);
        assert!(a.ci_low <= a.replicate_mean && a.replicate_mean <= a.ci_high);
    }

    #[test]
    fn constant_input_has_zero_width() {
        let s = sentence_stats(&["a", "b", "c", "d"], &["a", "b", "c", "e"]);
        let r = bootstrap_bleu(&vec![s; 30], BleuSmoothing::Exp, 100, 3).unwrap();
        assert_eq!(r.width(), 0.0);
        assert_eq!(r.point_estimate, r.ci_low);
    }

    #[test]
    fn percentiles() {
        assert_eq!(percentile_positions(1000), (25, 974));
        assert_eq!(percentile_positions(10), (0, 9));
        assert_eq!(percentile_positions(1), (0, 0));
    }

    #[test]
    fn rejections() {
        assert!(bootstrap_test::<f64, _>(&[], mean, 10, 0).is_err());
        assert!(bootstrap_test(&[1.0], mean, 10, 0).is_err());
        assert!(bootstrap_test(&[1.0, 2.0], mean, 0, 0).is_err());
        assert!(bootstrap_test(&[1.0, 2.0], |_| Ok(f64::NAN), 5, 0).is_err());
    }
}
