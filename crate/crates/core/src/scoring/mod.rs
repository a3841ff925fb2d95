//! Sentence-level probabilistic scoring.
//!
//! Built-in scorers ([`NgramLm`], [`LexMixtureMt`]) and external score files
//! all end up as a [`ScoreSet`]: one total log2 probability per sentence.

mod lexical;
mod mixture;
mod ngram;
mod scores;

use rayon::prelude::*;

use crate::error::Result;

pub use lexical::{train_lex_table, LexicalTable, NULL_WORD};
pub use mixture::{LexMixtureMt, DEFAULT_LAMBDA};
pub use ngram::{train_ngram_lm, NgramLm, Smoothing, Vocab, BOS, EOS, UNK};
pub use scores::{read_scores, write_scores, Direction, ScoreRecord, ScoreSet};

/// Default n-gram order of the built-in scorers.
pub const DEFAULT_ORDER: usize = 3;

/// Log-probability of one sentence in bits, with the number of scored units
/// (subwords plus end of sentence).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SentenceScore {
    pub logprob_bits: f64,
    pub n_units: usize,
}

/// Anything that assigns `log2 q(target | source)` to a sentence.
/// Unconditional models ignore `source`.
pub trait SentenceScorer: Sync {
    fn score(&self, target: &[String], source: &[String]) -> Result<SentenceScore>;
}

/// One item to score: sentence id, target units, source units.
pub type ScoreItem<'a> = (u64, &'a [String], &'a [String]);

/// Score every item in parallel; records keep the input order.
pub fn score_corpus<M: SentenceScorer + ?Sized>(
    scorer: &M,
    model_tag: &str,
    direction: Direction,
    items: &[ScoreItem<'_>],
) -> Result<ScoreSet> {
    let records = items
        .par_iter()
        .map(|&(id, target, source)| {
            scorer.score(target, source).map(|s| ScoreRecord {
                sentence_id: id,
                n_units: s.n_units,
                logprob_bits: s.logprob_bits,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ScoreSet::new(model_tag, direction, records)
}
