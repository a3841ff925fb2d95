//! Corpus features and the per-direction feature table.

use std::collections::{BTreeMap, HashSet};
use std::hash::Hash;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{ParallelCorpus, Side};
use crate::error::{Error, Result};
use crate::scoring::Direction;

/// Type-to-token ratio.
pub fn ttr<S: AsRef<str>>(tokens: &[S]) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::Empty("type-token ratio of no tokens".into()));
    }
    let types: HashSet<&str> = tokens.iter().map(AsRef::as_ref).collect();
    Ok(types.len() as f64 / tokens.len() as f64)
}

/// `(1 - ttr_src / ttr_tgt)^2`.
pub fn d_ttr(ttr_src: f64, ttr_tgt: f64) -> Result<f64> {
    if ttr_tgt.is_nan() || ttr_tgt <= 0.0 || ttr_src < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "TTR distance needs positive ratios, got ({ttr_src}, {ttr_tgt})"
        )));
    }
    Ok((1.0 - ttr_src / ttr_tgt).powi(2))
}

/// Shared types over the union of types.
pub fn word_overlap_ratio<T: Eq + Hash>(src_types: &HashSet<T>, tgt_types: &HashSet<T>) -> Result<f64> {
    let union = src_types.union(tgt_types).count();
    if union == 0 {
        return Err(Error::Empty("word overlap of two empty type sets".into()));
    }
    Ok(src_types.intersection(tgt_types).count() as f64 / union as f64)
}

/// Source tokens over target tokens.
pub fn word_number_ratio(src_tokens: usize, tgt_tokens: usize) -> Result<f64> {
    if tgt_tokens == 0 {
        return Err(Error::InvalidArgument("word number ratio with no target tokens".into()));
    }
    Ok(src_tokens as f64 / tgt_tokens as f64)
}

pub const COMPUTED_FEATURES: [&str; 5] = ["word_number_ratio", "ttr_src", "ttr_tgt", "d_ttr", "word_overlap"];

/// The computed features of one translation direction, in [`COMPUTED_FEATURES`] order.
pub fn corpus_features(corpus: &ParallelCorpus) -> Result<[f64; 5]> {
    let collect = |side| -> Vec<&str> {
        corpus
            .side(side)
            .flat_map(|s| s.tokens.iter().map(String::as_str))
            .collect()
    };
    let src = collect(Side::Source);
    let tgt = collect(Side::Target);
    let ttr_src = ttr(&src)?;
    let ttr_tgt = ttr(&tgt)?;
    let src_types: HashSet<&str> = src.iter().copied().collect();
    let tgt_types: HashSet<&str> = tgt.iter().copied().collect();
    Ok([
        word_number_ratio(src.len(), tgt.len())?,
        ttr_src,
        ttr_tgt,
        d_ttr(ttr_src, ttr_tgt)?,
        word_overlap_ratio(&src_types, &tgt_types)?,
    ])
}

/// Per-direction predictor values; cells may be missing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    features: Vec<String>,
    rows: BTreeMap<Direction, Vec<Option<f64>>>,
}

fn parse_direction(s: &str) -> Result<Direction> {
    s.trim().replace('→', "->").parse()
}

impl FeatureTable {
    pub fn new<S: Into<String>>(features: impl IntoIterator<Item = S>) -> Result<Self> {
        let features: Vec<String> = features.into_iter().map(Into::into).collect();
        let mut seen = HashSet::new();
        for f in &features {
            if f.is_empty() || !seen.insert(f) {
                return Err(Error::InvalidArgument(format!("bad or repeated feature name {f:?}")));
            }
        }
        Ok(FeatureTable {
            features,
            rows: BTreeMap::new(),
        })
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn directions(&self) -> impl Iterator<Item = &Direction> {
        self.rows.keys()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn insert_row(&mut self, direction: Direction, values: Vec<Option<f64>>) -> Result<()> {
        if values.len() != self.features.len() {
            return Err(Error::LengthMismatch {
                what: format!("feature row {direction}"),
                left: values.len(),
                right: self.features.len(),
            });
        }
        if self.rows.contains_key(&direction) {
            return Err(Error::InvalidArgument(format!("repeated direction {direction}")));
        }
        self.rows.insert(direction, values);
        Ok(())
    }

    pub fn get(&self, direction: &Direction, feature: &str) -> Option<f64> {
        let j = self.features.iter().position(|f| f == feature)?;
        self.rows.get(direction)?[j]
    }

    /// Every direction's value of `feature`, or `None` if no such column exists.
    pub fn column(&self, feature: &str) -> Option<Vec<(&Direction, Option<f64>)>> {
        let j = self.features.iter().position(|f| f == feature)?;
        Some(self.rows.iter().map(|(d, v)| (d, v[j])).collect())
    }

    /// Outer join on direction. Columns present in both tables must agree
    /// where both have a value.
    pub fn merge(&self, other: &FeatureTable) -> Result<FeatureTable> {
        let mut features = self.features.clone();
        for f in &other.features {
            if !features.contains(f) {
                features.push(f.clone());
            }
        }
        let mut out = FeatureTable::new(features.clone())?;
        let dirs: std::collections::BTreeSet<&Direction> = self.rows.keys().chain(other.rows.keys()).collect();
        for d in dirs {
            let mut row = Vec::with_capacity(features.len());
            for f in &features {
                let (a, b) = (self.get(d, f), other.get(d, f));
                if let (Some(a), Some(b)) = (a, b) {
                    if a != b {
                        return Err(Error::InvalidArgument(format!("conflicting {f} for {d}: {a} vs {b}")));
                    }
                }
                row.push(a.or(b));
            }
            out.rows.insert(d.clone(), row);
        }
        Ok(out)
    }

    /// Table with the computed features of every corpus, keyed by its direction.
    pub fn from_corpora<'a>(corpora: impl IntoIterator<Item = &'a ParallelCorpus>) -> Result<Self> {
        let mut table = FeatureTable::new(COMPUTED_FEATURES)?;
        for c in corpora {
            let values = corpus_features(c)?;
            table.insert_row(
                Direction::translation(&c.src_lang, &c.tgt_lang),
                values.iter().map(|&v| Some(v)).collect(),
            )?;
        }
        Ok(table)
    }

    /// Read a CSV whose header is `direction,feature1,...`. Empty cells are missing.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file, &path.display().to_string())
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R, origin: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("direction") {
            return Err(Error::format(origin, 1, "first column must be `direction`"));
        }
        let mut table = FeatureTable::new(header.iter().skip(1))?;
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let lineno = i + 2;
            let direction = parse_direction(&rec[0]).map_err(|e| Error::format(origin, lineno, e.to_string()))?;
            let values = rec
                .iter()
                .skip(1)
                .map(|cell| {
                    if cell.is_empty() {
                        Ok(None)
                    } else {
                        cell.parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .map(Some)
                            .ok_or_else(|| Error::format(origin, lineno, format!("bad value {cell:?}")))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            table
                .insert_row(direction, values)
                .map_err(|e| Error::format(origin, lineno, e.to_string()))?;
        }
        Ok(table)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(std::iter::once("direction").chain(self.features.iter().map(String::as_str)))?;
        for (d, row) in &self.rows {
            let mut rec = vec![d.to_string()];
            rec.extend(row.iter().map(|v| v.map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
