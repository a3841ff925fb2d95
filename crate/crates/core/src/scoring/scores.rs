//! Per-sentence score records and the TSV score-file format.
//!
//! ```text
//! # model_tag=kn3-mix0.5
//! # direction=en->fi
//! # vocab_hash=3f2a...
//! sentence_id  n_units  logprob_bits
//! 0  23  -61.25
//! ```
//!
//! Columns are tab-separated. Metadata lines start with `# ` and hold `key=value`. `model_tag` and
//! `direction` are required; a language model's direction has an empty source
//! side (`->fi`). `logprob_bits` is the total base-2 log-probability of the
//! sentence including the end-of-sentence unit, which `n_units` also counts.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const HEADER: &str = "sentence_id\tn_units\tlogprob_bits";

/// Translation direction, or a target language alone for language models.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Direction {
    pub source: Option<String>,
    pub target: String,
}

impl Direction {
    pub fn translation(source: impl Into<String>, target: impl Into<String>) -> Self {
        Direction {
            source: Some(source.into()),
            target: target.into(),
        }
    }

    pub fn language_model(target: impl Into<String>) -> Self {
        Direction {
            source: None,
            target: target.into(),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.source.as_deref().unwrap_or(""), self.target)
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (src, tgt) = s
            .split_once("->")
            .ok_or_else(|| Error::InvalidArgument(format!("direction {s:?} lacks `->`")))?;
        if tgt.is_empty() || tgt.contains("->") {
            return Err(Error::InvalidArgument(format!("bad direction {s:?}")));
        }
        Ok(Direction {
            source: (!src.is_empty()).then(|| src.to_string()),
            target: tgt.to_string(),
        })
    }
}

impl TryFrom<String> for Direction {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Direction> for String {
    fn from(d: Direction) -> String {
        d.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub sentence_id: u64,
    pub n_units: usize,
    pub logprob_bits: f64,
}

impl ScoreRecord {
    fn validate(&self) -> std::result::Result<(), String> {
        if !self.logprob_bits.is_finite() {
            return Err(format!("sentence {}: logprob is not finite", self.sentence_id));
        }
        if self.logprob_bits > 0.0 {
            return Err(format!(
                "sentence {}: positive logprob {}",
                self.sentence_id, self.logprob_bits
            ));
        }
        if self.n_units == 0 {
            return Err(format!("sentence {}: n_units must be at least 1", self.sentence_id));
        }
        Ok(())
    }
}

/// Scores of one model over one corpus side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub model_tag: String,
    pub direction: Direction,
    pub vocab_hash: Option<String>,
    /// Other metadata carried through unchanged.
    pub extra: BTreeMap<String, String>,
    records: Vec<ScoreRecord>,
}

impl ScoreSet {
    pub fn new(model_tag: impl Into<String>, direction: Direction, records: Vec<ScoreRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            r.validate().map_err(Error::InvalidArgument)?;
            if !seen.insert(r.sentence_id) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate sentence_id {}",
                    r.sentence_id
                )));
            }
        }
        let model_tag = model_tag.into();
        if model_tag.contains('\n') {
            return Err(Error::InvalidArgument("model tag must be a single line".into()));
        }
        Ok(ScoreSet {
            model_tag,
            direction,
            vocab_hash: None,
            extra: BTreeMap::new(),
            records,
        })
    }

    pub fn with_vocab_hash(mut self, hash: impl Into<String>) -> Self {
        self.vocab_hash = Some(hash.into());
        self
    }

    pub fn records(&self) -> &[ScoreRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# model_tag={}", self.model_tag);
        let _ = writeln!(s, "# direction={}", self.direction);
        if let Some(h) = &self.vocab_hash {
            let _ = writeln!(s, "# vocab_hash={h}");
        }
        for (k, v) in &self.extra {
            let _ = writeln!(s, "# {k}={v}");
        }
        let _ = writeln!(s, "{HEADER}");
        for r in &self.records {
            let _ = writeln!(s, "{}\t{}\t{}", r.sentence_id, r.n_units, r.logprob_bits);
        }
        s
    }

    pub fn from_tsv(text: &str, origin: &str) -> Result<Self> {
        let mut meta: BTreeMap<String, String> = BTreeMap::new();
        let mut records = Vec::new();
        let mut header_seen = false;
        let mut ids = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if let Some(rest) = line.strip_prefix('#') {
                if header_seen {
                    return Err(Error::format(origin, lineno, "metadata after the column header"));
                }
                let rest = rest.trim_start();
                let (k, v) = rest
                    .split_once('=')
                    .ok_or_else(|| Error::format(origin, lineno, "metadata must be `# key=value`"))?;
                if meta.insert(k.trim().to_string(), v.to_string()).is_some() {
                    return Err(Error::format(origin, lineno, format!("repeated metadata key {k}")));
                }
                continue;
            }
            if !header_seen {
                if line != HEADER {
                    return Err(Error::format(
                        origin,
                        lineno,
                        format!("expected column header {HEADER:?}"),
                    ));
                }
                header_seen = true;
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::format(
                    origin,
                    lineno,
                    format!("expected 3 columns, got {}", cols.len()),
                ));
            }
            let parse_err = |what: &str| Error::format(origin, lineno, format!("unparsable {what}"));
            let rec = ScoreRecord {
                sentence_id: cols[0].parse().map_err(|_| parse_err("sentence_id"))?,
                n_units: cols[1].parse().map_err(|_| parse_err("n_units"))?,
                logprob_bits: cols[2].parse().map_err(|_| parse_err("logprob_bits"))?,
            };
            rec.validate().map_err(|m| Error::format(origin, lineno, m))?;
            if !ids.insert(rec.sentence_id) {
                return Err(Error::format(
                    origin,
                    lineno,
                    format!("duplicate sentence_id {}", rec.sentence_id),
                ));
            }
            records.push(rec);
        }
        if !header_seen {
            return Err(Error::format(origin, 0, "missing column header"));
        }
        let model_tag = meta
            .remove("model_tag")
            .ok_or_else(|| Error::format(origin, 0, "missing model_tag metadata"))?;
        let direction = meta
            .remove("direction")
            .ok_or_else(|| Error::format(origin, 0, "missing direction metadata"))?
            .parse()
            .map_err(|e: Error| Error::format(origin, 0, e.to_string()))?;
        let vocab_hash = meta.remove("vocab_hash");
        Ok(ScoreSet {
            model_tag,
            direction,
            vocab_hash,
            extra: meta,
            records,
        })
    }
}

pub fn write_scores(set: &ScoreSet, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, set.to_tsv()).map_err(|e| Error::io(path, e))
}

pub fn read_scores(path: &Path) -> Result<ScoreSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ScoreSet::from_tsv(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set() -> ScoreSet {
        ScoreSet::new(
            "kn3",
            Direction::translation("en", "fi"),
            vec![
                ScoreRecord {
                    sentence_id: 3,
                    n_units: 12,
                    logprob_bits: -40.125,
                },
                ScoreRecord {
                    sentence_id: 1,
                    n_units: 1,
                    logprob_bits: -(0.1 + 0.2),
                },
                ScoreRecord {
                    sentence_id: 7,
                    n_units: 5,
                    logprob_bits: -0.0,
                },
            ],
        )
        .unwrap()
        .with_vocab_hash("abc123")
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.tsv");
        let mut s = set();
        s.extra.insert("toolkit".into(), "fairseq 0.9".into());
        write_scores(&s, &path).unwrap();
        assert_eq!(read_scores(&path).unwrap(), s);
    }

    #[test]
    fn lm_direction_roundtrip() {
        let d: Direction = "->fi".parse().unwrap();
        assert_eq!(d, Direction::language_model("fi"));
        assert_eq!(d.to_string(), "->fi");
        assert!("fi".parse::<Direction>().is_err());
        assert!("en->".parse::<Direction>().is_err());
    }

    #[test]
    fn rejects_positive_logprob() {
        let text = "# model_tag=x\n# direction=->en\nsentence_id\tn_units\tlogprob_bits\n0\t3\t0.5\n";
        let err = ScoreSet::from_tsv(text, "t").unwrap_err();
        assert!(err.to_string().contains("positive"), "{err}");
    }

    #[test]
    fn rejects_duplicate_ids() {
        let text = "# model_tag=x\n# direction=->en\nsentence_id\tn_units\tlogprob_bits\n0\t3\t-1\n0\t2\t-2\n";
        let err = ScoreSet::from_tsv(text, "t").unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn rejects_schema_violations() {
        let ok_meta = "# model_tag=x\n# direction=->en\n";
        for bad in [
            format!("{ok_meta}id\tn\tlp\n"),
            format!("{ok_meta}sentence_id\tn_units\tlogprob_bits\n0\t3\n"),
            format!("{ok_meta}sentence_id\tn_units\tlogprob_bits\n0\t0\t-1\n"),
            format!("{ok_meta}sentence_id\tn_units\tlogprob_bits\n0\t2\tNaN\n"),
            format!("{ok_meta}sentence_id\tn_units\tlogprob_bits\nx\t2\t-1\n"),
            "# direction=->en\nsentence_id\tn_units\tlogprob_bits\n".to_string(),
            "# model_tag=x\nsentence_id\tn_units\tlogprob_bits\n".to_string(),
            ok_meta.to_string(),
        ] {
            assert!(ScoreSet::from_tsv(&bad, "t").is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn constructor_validates() {
        let d = Direction::language_model("en");
        let r = |id, lp| ScoreRecord {
            sentence_id: id,
            n_units: 2,
            logprob_bits: lp,
        };
        assert!(ScoreSet::new("m", d.clone(), vec![r(0, 0.5)]).is_err());
        assert!(ScoreSet::new("m", d.clone(), vec![r(0, -1.0), r(0, -2.0)]).is_err());
        assert!(ScoreSet::new("m", d, vec![r(0, -1.0), r(1, -2.0)]).is_ok());
    }
}
