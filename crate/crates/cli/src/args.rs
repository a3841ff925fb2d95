//! Command-line flags and how they override a [`RunConfig`].

use std::path::PathBuf;

use clap::Args;
use xmi_core::metrics::{BleuSmoothing, BleuTokenizer, Case};
use xmi_core::report::{CorpusSpec, Hypotheses, RunConfig, ScoreFiles, ScorerConfig};
use xmi_core::scoring::{Direction, Smoothing};
use xmi_core::{Error, Result};

/// Flags shared by every pipeline stage. Each one overrides the matching
/// field of the configuration file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML or JSON run configuration.
    #[arg(short, long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output directory (the XMI_OUTPUT_DIR variable takes precedence).
    #[arg(short, long, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,

    #[arg(long, value_name = "LANG")]
    pub pivot: Option<String>,

    /// Language paired with the pivot: LANG=TEXT,PIVOT_TEXT. Repeatable; replaces configured corpora.
    #[arg(long = "corpus", value_name = "SPEC", value_parser = parse_corpus)]
    pub corpora: Vec<CorpusSpec>,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, value_name = "N")]
    pub n_valid: Option<usize>,

    #[arg(long, value_name = "N")]
    pub n_test: Option<usize>,

    /// Longest training sentence kept, in tokens.
    #[arg(long, value_name = "N")]
    pub max_len: Option<usize>,

    #[arg(long, value_name = "N")]
    pub bpe_merges: Option<usize>,

    /// N-gram order of the built-in scorers.
    #[arg(long)]
    pub order: Option<usize>,

    /// kneser-ney or mle.
    #[arg(long, value_parser = parse_smoothing)]
    pub smoothing: Option<Smoothing>,

    /// Weight of the n-gram component in the translation mixture.
    #[arg(long)]
    pub lambda: Option<f64>,

    #[arg(long, value_name = "N")]
    pub em_iterations: Option<usize>,

    /// Corpus whose segmentation is used for the pivot language model.
    #[arg(long, value_name = "LANG")]
    pub pivot_lm_pair: Option<String>,

    /// External scores: SRC->TGT=MT_FILE,LM_FILE. Repeatable; switches off the built-in scorers.
    #[arg(long = "score-files", value_name = "SPEC", value_parser = parse_score_files)]
    pub score_files: Vec<ScoreFiles>,

    /// System output for BLEU: SRC->TGT=FILE. Repeatable.
    #[arg(long = "hypotheses", value_name = "SPEC", value_parser = parse_hypotheses)]
    pub hypotheses: Vec<Hypotheses>,

    /// Extra feature table (CSV). Repeatable.
    #[arg(long = "features", value_name = "FILE")]
    pub features: Vec<PathBuf>,

    /// Test-side bootstrap replicates; 0 disables.
    #[arg(long, value_name = "N")]
    pub replicates: Option<usize>,

    /// Train-side bootstrap replicates of the built-in scorer; 0 disables.
    #[arg(long, value_name = "N")]
    pub train_replicates: Option<usize>,

    /// mixed or lower.
    #[arg(long, value_parser = parse_case)]
    pub bleu_case: Option<Case>,

    /// 13a or none.
    #[arg(long, value_parser = parse_tokenizer)]
    pub bleu_tokenize: Option<BleuTokenizer>,

    /// exp or none.
    #[arg(long, value_parser = parse_bleu_smoothing)]
    pub bleu_smoothing: Option<BleuSmoothing>,
}

fn split_spec(s: &str) -> std::result::Result<(&str, &str), String> {
    s.split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got {s:?}"))
}

fn two_paths(s: &str) -> std::result::Result<(PathBuf, PathBuf), String> {
    match s.split_once(',') {
        Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok((a.into(), b.into())),
        _ => Err(format!("expected two comma-separated paths, got {s:?}")),
    }
}

fn parse_corpus(s: &str) -> std::result::Result<CorpusSpec, String> {
    let (lang, files) = split_spec(s)?;
    let (text, pivot_text) = two_paths(files)?;
    Ok(CorpusSpec {
        lang: lang.to_string(),
        text,
        pivot_text,
    })
}

fn parse_direction(s: &str) -> std::result::Result<Direction, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_score_files(s: &str) -> std::result::Result<ScoreFiles, String> {
    let (d, files) = split_spec(s)?;
    let (mt, lm) = two_paths(files)?;
    Ok(ScoreFiles {
        direction: parse_direction(d)?,
        mt,
        lm,
    })
}

fn parse_hypotheses(s: &str) -> std::result::Result<Hypotheses, String> {
    let (d, path) = split_spec(s)?;
    Ok(Hypotheses {
        direction: parse_direction(d)?,
        path: path.into(),
    })
}

fn parse_smoothing(s: &str) -> std::result::Result<Smoothing, String> {
    match s {
        "kneser-ney" | "kn" | "interpolated-kneser-ney" => Ok(Smoothing::InterpolatedKneserNey),
        "mle" => Ok(Smoothing::Mle),
        _ => Err(format!("unknown smoothing {s:?} (kneser-ney, mle)")),
    }
}

fn parse_case(s: &str) -> std::result::Result<Case, String> {
    match s {
        "mixed" => Ok(Case::Mixed),
        "lower" => Ok(Case::Lower),
        _ => Err(format!("unknown case {s:?} (mixed, lower)")),
    }
}

fn parse_tokenizer(s: &str) -> std::result::Result<BleuTokenizer, String> {
    match s {
        "13a" => Ok(BleuTokenizer::Thirteen),
        "none" => Ok(BleuTokenizer::None),
        _ => Err(format!("unknown tokenizer {s:?} (13a, none)")),
    }
}

fn parse_bleu_smoothing(s: &str) -> std::result::Result<BleuSmoothing, String> {
    match s {
        "exp" => Ok(BleuSmoothing::Exp),
        "none" => Ok(BleuSmoothing::None),
        _ => Err(format!("unknown BLEU smoothing {s:?} (exp, none)")),
    }
}

impl RunArgs {
    /// The configuration file (or defaults) with every given flag applied.
    pub fn to_config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field {
                    c.$field = v.clone();
                })*
            };
        }
        set!(output_dir, pivot, seed, n_valid, n_test, max_len, bpe_merges);
        if !self.corpora.is_empty() {
            c.corpora = self.corpora.clone();
        }
        if !self.hypotheses.is_empty() {
            c.hypotheses = self.hypotheses.clone();
        }
        c.features.extend(self.features.iter().cloned());
        if let Some(n) = self.replicates {
            c.bootstrap.replicates = n;
        }
        if let Some(n) = self.train_replicates {
            c.bootstrap.train_replicates = n;
        }
        if let Some(v) = self.bleu_case {
            c.bleu.case = v;
        }
        if let Some(v) = self.bleu_tokenize {
            c.bleu.tokenizer = v;
        }
        if let Some(v) = self.bleu_smoothing {
            c.bleu.smoothing = v;
        }

        let builtin_flags = self.order.is_some()
            || self.smoothing.is_some()
            || self.lambda.is_some()
            || self.em_iterations.is_some()
            || self.pivot_lm_pair.is_some();
        if !self.score_files.is_empty() {
            if builtin_flags {
                return Err(Error::Config(
                    "built-in scorer flags conflict with --score-files".into(),
                ));
            }
            c.scorer = ScorerConfig::ScoreFiles {
                files: self.score_files.clone(),
            };
        } else if builtin_flags {
            let ScorerConfig::Builtin {
                settings,
                pivot_lm_pair,
            } = &mut c.scorer
            else {
                return Err(Error::Config(
                    "built-in scorer flags given but the configuration uses score files".into(),
                ));
            };
            if let Some(v) = self.order {
                settings.order = v;
            }
            if let Some(v) = self.smoothing {
                settings.smoothing = v;
            }
            if let Some(v) = self.lambda {
                settings.lambda = v;
            }
            if let Some(v) = self.em_iterations {
                settings.em_iterations = v;
            }
            if let Some(v) = &self.pivot_lm_pair {
                *pivot_lm_pair = Some(v.clone());
            }
        }
        Ok(c)
    }
}
