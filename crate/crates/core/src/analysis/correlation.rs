//! Pearson and Spearman correlation with t-test p-values, and the
//! feature-vs-XMI correlation table.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::features::FeatureTable;
use crate::error::{Error, Result};
use crate::scoring::Direction;

/// A coefficient and its two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub coefficient: f64,
    pub p_value: f64,
}

fn check_inputs(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            what: "correlation inputs".into(),
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "correlation needs at least 3 points, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("correlation inputs must be finite".into()));
    }
    Ok(())
}

/// Two-sided p-value of a correlation coefficient over `n` points, from
/// `t = r * sqrt((n - 2) / (1 - r^2))` with `n - 2` degrees of freedom.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let r = r.clamp(-1.0, 1.0);
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df is positive");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

fn coefficient(x: &[f64], y: &[f64]) -> Result<f64> {
    // tested on the values: the mean of equal values can be off by an ulp
    let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
    if constant(x) || constant(y) {
        return Err(Error::InvalidArgument("correlation with a constant vector".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InvalidArgument("correlation with a constant vector".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    check_inputs(x, y)?;
    let r = coefficient(x, y)?;
    Ok(Correlation {
        coefficient: r,
        p_value: correlation_p_value(r, x.len()),
    })
}

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation> {
    check_inputs(x, y)?;
    let rho = coefficient(&average_ranks(x), &average_ranks(y))?;
    Ok(Correlation {
        coefficient: rho,
        p_value: correlation_p_value(rho, x.len()),
    })
}

pub fn bonferroni_threshold(alpha: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument("Bonferroni correction over zero tests".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside [0, 1]")));
    }
    Ok(alpha / m as f64)
}

/// Which directions enter a correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionFilter {
    /// Target is the pivot.
    IntoPivot,
    /// Source is the pivot.
    FromPivot,
    /// Either side is the pivot; rows are pooled.
    #[default]
    Both,
}

impl DirectionFilter {
    pub const ALL: [DirectionFilter; 3] = [Self::IntoPivot, Self::FromPivot, Self::Both];

    pub fn accepts(self, d: &Direction, pivot: &str) -> bool {
        let into = d.target == pivot;
        let from = d.source.as_deref() == Some(pivot);
        match self {
            Self::IntoPivot => into,
            Self::FromPivot => from,
            Self::Both => into || from,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::IntoPivot => "into_pivot",
            Self::FromPivot => "from_pivot",
            Self::Both => "both",
        }
    }
}

impl fmt::Display for DirectionFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DirectionFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown direction filter {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub feature: String,
    pub n: usize,
    pub pearson_r: f64,
    pub pearson_p: f64,
    pub spearman_rho: f64,
    pub spearman_p: f64,
    /// Pearson p below 0.05.
    pub significant_05: bool,
    /// Pearson p below the Bonferroni threshold.
    pub significant_bonferroni: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedFeature {
    pub feature: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    pub filter: DirectionFilter,
    pub pivot: String,
    /// Number of features actually tested.
    pub m: usize,
    pub bonferroni_threshold: Option<f64>,
    pub results: Vec<CorrelationResult>,
    pub skipped: Vec<SkippedFeature>,
}

pub const ALPHA: f64 = 0.05;

/// Correlate XMI with every feature over the directions the filter admits.
///
/// Missing cells are dropped per feature. Features left with fewer than three
/// rows, or constant on the rows that remain, are skipped with a warning.
pub fn correlate_features(
    xmi: &[(Direction, f64)],
    features: &FeatureTable,
    filter: DirectionFilter,
    pivot: &str,
) -> Result<CorrelationTable> {
    let mut by_dir = BTreeMap::new();
    for (d, v) in xmi {
        if by_dir.insert(d, *v).is_some() {
            return Err(Error::InvalidArgument(format!("repeated XMI direction {d}")));
        }
    }

    let mut tested = Vec::new();
    let mut skipped = Vec::new();
    for name in features.features() {
        let column = features.column(name).expect("listed feature exists");
        let (xs, ys): (Vec<f64>, Vec<f64>) = column
            .into_iter()
            .filter(|(d, _)| filter.accepts(d, pivot))
            .filter_map(|(d, v)| Some((*by_dir.get(d)?, v?)))
            .unzip();
        let outcome = if xs.len() < 3 {
            Err(format!("only {} overlapping rows", xs.len()))
        } else {
            pearson(&xs, &ys)
                .and_then(|p| Ok((p, spearman(&xs, &ys)?)))
                .map_err(|e| e.to_string())
        };
        match outcome {
            Ok((p, s)) => tested.push((name.clone(), xs.len(), p, s)),
            Err(reason) => {
                log::warn!("skipping feature {name} ({filter}): {reason}");
                skipped.push(SkippedFeature {
                    feature: name.clone(),
                    reason,
                });
            }
        }
    }

    let m = tested.len();
    let threshold = if m > 0 {
        Some(bonferroni_threshold(ALPHA, m)?)
    } else {
        None
    };
    let results = tested
        .into_iter()
        .map(|(feature, n, p, s)| CorrelationResult {
            feature,
            n,
            pearson_r: p.coefficient,
            pearson_p: p.p_value,
            spearman_rho: s.coefficient,
            spearman_p: s.p_value,
            significant_05: p.p_value < ALPHA,
            significant_bonferroni: threshold.is_some_and(|t| p.p_value < t),
        })
        .collect();
    Ok(CorrelationTable {
        filter,
        pivot: pivot.to_string(),
        m,
        bonferroni_threshold: threshold,
        results,
        skipped,
    })
}

impl CorrelationTable {
    /// TSV with `# key=value` metadata. With `parenthesized`, each coefficient
    /// and its p-value share one cell as `r (p)`.
    pub fn to_tsv(&self, parenthesized: bool) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# filter={}", self.filter);
        let _ = writeln!(s, "# pivot={}", self.pivot);
        let _ = writeln!(s, "# m={}", self.m);
        if let Some(t) = self.bonferroni_threshold {
            let _ = writeln!(s, "# bonferroni_threshold={t}");
        }
        for sk in &self.skipped {
            let _ = writeln!(s, "# skipped={}: {}", sk.feature, sk.reason);
        }
        if parenthesized {
            s.push_str("feature\tn\tpearson\tspearman\tsignificant_05\tsignificant_bonferroni\n");
        } else {
            s.push_str(
                "feature\tn\tpearson_r\tpearson_p\tspearman_rho\tspearman_p\tsignificant_05\tsignificant_bonferroni\n",
            );
        }
        for r in &self.results {
            if parenthesized {
                let _ = writeln!(
                    s,
                    "{}\t{}\t{:.2} ({:.4})\t{:.2} ({:.4})\t{}\t{}",
                    r.feature,
                    r.n,
                    r.pearson_r,
                    r.pearson_p,
                    r.spearman_rho,
                    r.spearman_p,
                    r.significant_05,
                    r.significant_bonferroni
                );
            } else {
                let _ = writeln!(
                    s,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.feature,
                    r.n,
                    r.pearson_r,
                    r.pearson_p,
                    r.spearman_rho,
                    r.spearman_p,
                    r.significant_05,
                    r.significant_bonferroni
                );
            }
        }
        s
    }
}
