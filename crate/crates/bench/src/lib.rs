//! Synthetic inputs for the benchmarks.
//!
//! Word frequencies follow a Zipf-like law so the BPE and n-gram code sees a
//! realistic mix of frequent and rare types.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xmi_core::metrics::{sentence_stats, SentenceStats};
use xmi_core::scoring::{Direction, ScoreRecord, ScoreSet};

const LETTERS: &[u8] = b"abcdefghiklmnoprstuvz";

fn word(rng: &mut ChaCha8Rng) -> String {
    let len = rng.random_range(2..9);
    (0..len)
        .map(|_| LETTERS[rng.random_range(0..LETTERS.len())] as char)
        .collect()
}

/// A fixed vocabulary of `size` random words.
pub fn vocabulary(size: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size).map(|_| word(&mut rng)).collect()
}

fn zipf_index(rng: &mut ChaCha8Rng, n: usize) -> usize {
    // inverse-CDF draw for weights 1/(k+1)
    let h = (n as f64).ln() + 0.5772;
    let u: f64 = rng.random_range(0.0..h);
    ((u.exp() - 1.0) as usize).min(n - 1)
}

/// `n` sentences of 5 to 30 words drawn from `vocab`.
pub fn sentences(vocab: &[String], n: usize, seed: u64) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.random_range(5..30);
            (0..len)
                .map(|_| vocab[zipf_index(&mut rng, vocab.len())].clone())
                .collect()
        })
        .collect()
}

/// Source sentences with a word-by-word target: each source word maps to a
/// fixed target word, and a tenth of the target words are replaced at random.
pub fn parallel(n: usize, vocab_size: usize, seed: u64) -> Vec<(Vec<String>, Vec<String>)> {
    let src_vocab = vocabulary(vocab_size, seed);
    let tgt_vocab = vocabulary(vocab_size, seed ^ 0x5eed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    sentences(&src_vocab, n, seed.wrapping_add(2))
        .into_iter()
        .map(|src| {
            let tgt = src
                .iter()
                .map(|w| {
                    if rng.random_bool(0.1) {
                        tgt_vocab[rng.random_range(0..vocab_size)].clone()
                    } else {
                        let i = src_vocab.iter().position(|v| v == w).expect("word from vocab");
                        tgt_vocab[i].clone()
                    }
                })
                .collect();
            (src, tgt)
        })
        .collect()
}

/// Per-sentence BLEU statistics of noisy copies of reference sentences.
pub fn bleu_stats(n: usize, seed: u64) -> Vec<SentenceStats> {
    let vocab = vocabulary(2000, seed);
    let refs = sentences(&vocab, n, seed + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 2);
    refs.iter()
        .map(|r| {
            let hyp: Vec<&String> = r
                .iter()
                .map(|w| {
                    if rng.random_bool(0.3) {
                        &vocab[rng.random_range(0..vocab.len())]
                    } else {
                        w
                    }
                })
                .collect();
            sentence_stats(&hyp, r)
        })
        .collect()
}

/// Matching LM and MT score sets over `n` sentences.
pub fn score_sets(n: usize, seed: u64) -> (ScoreSet, ScoreSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lm, mut mt) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for id in 0..n as u64 {
        let n_units = rng.random_range(5..60);
        let l = -(n_units as f64) * rng.random_range(4.0..10.0);
        lm.push(ScoreRecord {
            sentence_id: id,
            n_units,
            logprob_bits: l,
        });
        mt.push(ScoreRecord {
            sentence_id: id,
            n_units,
            logprob_bits: l * rng.random_range(0.3..0.9),
        });
    }
    (
        ScoreSet::new("bench-lm", Direction::language_model("xx"), lm).expect("valid records"),
        ScoreSet::new("bench-mt", Direction::translation("yy", "xx"), mt).expect("valid records"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(parallel(20, 50, 1), parallel(20, 50, 1));
        assert_eq!(bleu_stats(10, 3), bleu_stats(10, 3));
        let (lm, mt) = score_sets(30, 4);
        assert_eq!(lm.len(), 30);
        assert!(xmi_core::metrics::xmi(&lm, &mt).unwrap().xmi > 0.0);
    }

    #[test]
    fn zipf_stays_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((0..10_000).all(|_| zipf_index(&mut rng, 7) < 7));
    }
}
