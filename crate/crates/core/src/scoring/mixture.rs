use super::lexical::{train_lex_table, LexicalTable};
use super::ngram::{train_ngram_lm, NgramLm, Smoothing, EOS, UNK};
use super::{SentenceScore, SentenceScorer};
use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 0.5;

/// Conditional model `q(t | s)` interpolating a target-side n-gram model with
/// a bag-of-source lexical model:
///
/// `p(u | history, s) = lambda * p_ngram(u | history) + (1 - lambda) * p_lex(u | s)`
///
/// where `p_lex(u | s)` averages `t(u | e)` over the source words and NULL.
/// Source words the lexical table has never seen contribute a uniform
/// distribution over the n-gram vocabulary.
#[derive(Debug, Clone)]
pub struct LexMixtureMt {
    lm: NgramLm,
    lex: LexicalTable,
    lambda: f64,
}

impl LexMixtureMt {
    pub fn new(lm: NgramLm, lex: LexicalTable, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidArgument(format!("lambda {lambda} outside [0, 1]")));
        }
        if let Some(bad) = lex.target_vocab().find(|t| !lm.vocab().contains(t)) {
            return Err(Error::InvalidArgument(format!(
                "lexical target {bad:?} is not in the language model vocabulary"
            )));
        }
        Ok(LexMixtureMt { lm, lex, lambda })
    }

    /// Train both components on (source, target) unit sequences.
    ///
    /// The lexical table sees each target with `</s>` appended, so the end of
    /// the sentence is predicted by both components.
    pub fn train(
        pairs: &[(Vec<String>, Vec<String>)],
        order: usize,
        smoothing: Smoothing,
        lambda: f64,
        em_iterations: usize,
    ) -> Result<Self> {
        let targets: Vec<Vec<String>> = pairs.iter().map(|(_, t)| t.clone()).collect();
        let lm = train_ngram_lm(&targets, order, smoothing)?;
        let lex_pairs: Vec<(Vec<&str>, Vec<&str>)> = pairs
            .iter()
            .map(|(s, t)| {
                (
                    s.iter().map(String::as_str).collect(),
                    t.iter().map(String::as_str).chain([EOS]).collect(),
                )
            })
            .collect();
        let lex = train_lex_table(&lex_pairs, em_iterations)?;
        LexMixtureMt::new(lm, lex, lambda)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        LexMixtureMt::new(self.lm.clone(), self.lex.clone(), lambda)
    }

    pub fn language_model(&self) -> &NgramLm {
        &self.lm
    }

    pub fn lexical_table(&self) -> &LexicalTable {
        &self.lex
    }

    /// `p_lex(unit | source)`; units outside the n-gram vocabulary are looked up as `<unk>`.
    pub fn lexical_probability<S: AsRef<str>>(&self, unit: &str, source: &[S]) -> f64 {
        let unit = if self.lm.vocab().contains(unit) { unit } else { UNK };
        let uniform = 1.0 / self.lm.vocab().outcomes() as f64;
        let mut total = self.lex.prob(None, unit);
        for e in source {
            let e = e.as_ref();
            total += if self.lex.knows_source(e) {
                self.lex.prob(Some(e), unit)
            } else {
                uniform
            };
        }
        total / (source.len() + 1) as f64
    }

    fn mix(&self, p_ngram: f64, p_lex: f64) -> f64 {
        self.lambda * p_ngram + (1.0 - self.lambda) * p_lex
    }

    /// Next-unit distribution given the target prefix and the source sentence.
    pub fn distribution<S: AsRef<str>, T: AsRef<str>>(&self, context: &[T], source: &[S]) -> Vec<(String, f64)> {
        self.lm
            .distribution(context)
            .into_iter()
            .map(|(u, p)| {
                let q = self.lexical_probability(&u, source);
                (u, self.mix(p, q))
            })
            .collect()
    }

    /// Per-unit probabilities of `target` (then `</s>`) given `source`.
    pub fn unit_probabilities<S: AsRef<str>, T: AsRef<str>>(&self, target: &[T], source: &[S]) -> Vec<f64> {
        let ngram = self.lm.unit_probabilities(target);
        ngram
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                let unit = target.get(i).map_or(EOS, |u| u.as_ref());
                self.mix(p, self.lexical_probability(unit, source))
            })
            .collect()
    }

    /// Total log2 probability of `target` given `source`, `</s>` included.
    pub fn mt_logprob<S: AsRef<str>, T: AsRef<str>>(&self, target: &[T], source: &[S]) -> Result<SentenceScore> {
        let mut bits = 0.0;
        for (i, p) in self.unit_probabilities(target, source).into_iter().enumerate() {
            if p <= 0.0 {
                let ids = self.lm.history_ids(&target[..i.min(target.len())]);
                return Err(Error::ZeroProbability {
                    unit: target.get(i).map_or(EOS, |u| u.as_ref()).to_string(),
                    context: ids.iter().map(|&id| self.lm.vocab().symbol(id).to_string()).collect(),
                });
            }
            bits += p.log2();
        }
        Ok(SentenceScore {
            logprob_bits: bits,
            n_units: target.len() + 1,
        })
    }
}

impl SentenceScorer for LexMixtureMt {
    fn score(&self, target: &[String], source: &[String]) -> Result<SentenceScore> {
        self.mt_logprob(target, source)
    }
}
