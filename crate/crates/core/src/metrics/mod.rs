//! Cross-entropy, cross-mutual information and BLEU.

mod bleu;

pub use bleu::{
    bleu, bleu_from_stats, bleu_raw, sentence_stats, BleuConfig, BleuScore, BleuSmoothing, BleuTokenizer, Case,
    SentenceStats, MAX_ORDER,
};

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::{Direction, ScoreSet};

/// Compensated (Neumaier) summation.
pub fn stable_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossEntropy {
    /// Mean negative log2-probability per sentence.
    pub bits_per_sentence: f64,
    /// Total bits divided by total units. Informational only: not comparable
    /// across segmentations.
    pub bits_per_unit: f64,
    pub n_sentences: usize,
    pub n_units: usize,
}

/// `-(1/N) * sum log2 q(sentence)` over a score set.
///
/// Records are summed in sentence-id order so the result does not depend on
/// file order.
pub fn cross_entropy(scores: &ScoreSet) -> Result<CrossEntropy> {
    if scores.is_empty() {
        return Err(Error::Empty(format!("score set {:?}", scores.model_tag)));
    }
    let mut recs: Vec<_> = scores.records().iter().collect();
    recs.sort_by_key(|r| r.sentence_id);
    let total = stable_sum(recs.iter().map(|r| r.logprob_bits));
    let units: usize = recs.iter().map(|r| r.n_units).sum();
    let n = recs.len();
    Ok(CrossEntropy {
        bits_per_sentence: -total / n as f64,
        bits_per_unit: -total / units as f64,
        n_sentences: n,
        n_units: units,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XmiEstimate {
    pub direction: Direction,
    pub h_lm: f64,
    pub h_mt: f64,
    pub xmi: f64,
    pub n_sentences: usize,
}

fn check_ids(a: &ScoreSet, b: &ScoreSet) -> Result<()> {
    let ia: BTreeSet<u64> = a.records().iter().map(|r| r.sentence_id).collect();
    let ib: BTreeSet<u64> = b.records().iter().map(|r| r.sentence_id).collect();
    if ia != ib {
        return Err(Error::IdMismatch {
            only_first: ia.difference(&ib).copied().collect(),
            only_second: ib.difference(&ia).copied().collect(),
        });
    }
    Ok(())
}

/// `XMI = H_LM - H_MT` over identical sentence ids and target language.
///
/// The direction reported is the one of `mt`.
pub fn xmi(lm: &ScoreSet, mt: &ScoreSet) -> Result<XmiEstimate> {
    if lm.direction.target != mt.direction.target {
        return Err(Error::InvalidArgument(format!(
            "target languages differ: {} vs {}",
            lm.direction, mt.direction
        )));
    }
    check_ids(lm, mt)?;
    let h_lm = cross_entropy(lm)?;
    let h_mt = cross_entropy(mt)?;
    Ok(XmiEstimate {
        direction: mt.direction.clone(),
        h_lm: h_lm.bits_per_sentence,
        h_mt: h_mt.bits_per_sentence,
        xmi: h_lm.bits_per_sentence - h_mt.bits_per_sentence,
        n_sentences: h_lm.n_sentences,
    })
}

/// One row of the per-direction results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub direction: Direction,
    pub bleu: Option<f64>,
    pub xmi: f64,
    pub h_lm: f64,
    pub h_mt: f64,
    pub n_sentences: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bleu_signature: Option<String>,
}

impl MetricReport {
    pub fn new(est: XmiEstimate, bleu: Option<&BleuScore>, config: &BleuConfig) -> Self {
        MetricReport {
            direction: est.direction,
            bleu: bleu.map(|b| b.score),
            xmi: est.xmi,
            h_lm: est.h_lm,
            h_mt: est.h_mt,
            n_sentences: est.n_sentences,
            bleu_signature: bleu.map(|_| config.signature()),
        }
    }
}

const REPORT_HEADER: &str = "direction\tbleu\txmi\th_lm\th_mt\tn_sentences";

/// Results table, preceded by `# key=value` lines for each `meta` entry.
pub fn reports_to_tsv(rows: &[MetricReport], meta: &[(&str, &str)]) -> String {
    let mut s = String::new();
    for (k, v) in meta {
        let _ = writeln!(s, "# {k}={v}");
    }
    s.push_str(REPORT_HEADER);
    s.push('\n');
    for r in rows {
        let bleu = r.bleu.map(|b| b.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.direction, bleu, r.xmi, r.h_lm, r.h_mt, r.n_sentences
        );
    }
    s
}

/// Parse a results table. The `xmi` column is taken as written; leading
/// `#` lines are skipped.
pub fn reports_from_tsv(text: &str, origin: &str) -> Result<Vec<MetricReport>> {
    let mut lines = text.lines().enumerate().skip_while(|(_, l)| l.starts_with('#'));
    match lines.next() {
        Some((_, h)) if h == REPORT_HEADER => {}
        other => {
            let line = other.map_or(0, |(i, _)| i + 1);
            return Err(Error::format(
                origin,
                line,
                format!("expected header {REPORT_HEADER:?}"),
            ));
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        let c: Vec<&str> = line.split('\t').collect();
        if c.len() != 6 {
            return Err(Error::format(
                origin,
                lineno,
                format!("expected 6 columns, got {}", c.len()),
            ));
        }
        let num = |j: usize| -> Result<f64> {
            c[j].parse()
                .map_err(|_| Error::format(origin, lineno, format!("bad number {:?}", c[j])))
        };
        rows.push(MetricReport {
            direction: c[0]
                .parse()
                .map_err(|e: Error| Error::format(origin, lineno, e.to_string()))?,
            bleu: if c[1].is_empty() { None } else { Some(num(1)?) },
            xmi: num(2)?,
            h_lm: num(3)?,
            h_mt: num(4)?,
            n_sentences: c[5]
                .parse()
                .map_err(|_| Error::format(origin, lineno, "bad n_sentences"))?,
            bleu_signature: None,
        });
    }
    Ok(rows)
}

pub fn write_reports(rows: &[MetricReport], meta: &[(&str, &str)], tsv: &Path, json: Option<&Path>) -> Result<()> {
    if let Some(parent) = tsv.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(tsv, reports_to_tsv(rows, meta)).map_err(|e| Error::io(tsv, e))?;
    if let Some(json) = json {
        let text = serde_json::to_string_pretty(rows)?;
        fs::write(json, text + "\n").map_err(|e| Error::io(json, e))?;
    }
    Ok(())
}

pub fn read_reports(path: &Path) -> Result<Vec<MetricReport>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    reports_from_tsv(&text, &path.display().to_string())
}
