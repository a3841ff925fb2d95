//! Declarative run configuration.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::BuiltinScorer;
use crate::corpus::{SplitSpec, DEFAULT_MAX_LEN};
use crate::error::{Error, Result};
use crate::metrics::BleuConfig;
use crate::scoring::Direction;
use crate::subword::DEFAULT_MERGES;

/// Overrides [`RunConfig::output_dir`] when set.
pub const OUTPUT_DIR_ENV: &str = "XMI_OUTPUT_DIR";

/// One language paired with the pivot: two line-aligned text files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub lang: String,
    /// Sentences in `lang`.
    pub text: PathBuf,
    /// The aligned pivot-language sentences.
    pub pivot_text: PathBuf,
}

/// Externally produced scores of one direction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreFiles {
    pub direction: Direction,
    pub mt: PathBuf,
    pub lm: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScorerConfig {
    Builtin {
        #[serde(flatten)]
        settings: BuiltinScorer,
        /// Language whose joint BPE segments the pivot language model.
        /// Defaults to the first corpus.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pivot_lm_pair: Option<String>,
    },
    ScoreFiles {
        files: Vec<ScoreFiles>,
    },
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig::Builtin {
            settings: BuiltinScorer::default(),
            pivot_lm_pair: None,
        }
    }
}

/// System output for the test split, one line per test sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hypotheses {
    pub direction: Direction,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    /// Test-side replicates; 0 disables.
    pub replicates: usize,
    /// Train-side replicates for the built-in scorer; 0 disables.
    pub train_replicates: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            replicates: crate::analysis::DEFAULT_REPLICATES,
            train_replicates: 0,
        }
    }
}

fn default_pivot() -> String {
    "en".into()
}

fn default_merges() -> usize {
    DEFAULT_MERGES
}

fn default_max_len() -> usize {
    DEFAULT_MAX_LEN
}

fn default_seed() -> u64 {
    SplitSpec::default().seed
}

fn default_output() -> PathBuf {
    PathBuf::from("xmi-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_pivot")]
    pub pivot: String,
    #[serde(default)]
    pub corpora: Vec<CorpusSpec>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Master seed; drives the split and every bootstrap.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_valid")]
    pub n_valid: usize,
    #[serde(default = "default_test")]
    pub n_test: usize,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[serde(default = "default_merges")]
    pub bpe_merges: usize,
    #[serde(default)]
    pub scorer: ScorerConfig,
    #[serde(default)]
    pub bleu: BleuConfig,
    #[serde(default)]
    pub hypotheses: Vec<Hypotheses>,
    /// Feature tables to merge with the computed corpus features.
    #[serde(default)]
    pub features: Vec<PathBuf>,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
}

fn default_valid() -> usize {
    SplitSpec::default().n_valid
}

fn default_test() -> usize {
    SplitSpec::default().n_test
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            pivot: default_pivot(),
            corpora: Vec::new(),
            output_dir: default_output(),
            seed: default_seed(),
            n_valid: default_valid(),
            n_test: default_test(),
            max_len: default_max_len(),
            bpe_merges: default_merges(),
            scorer: ScorerConfig::default(),
            bleu: BleuConfig::default(),
            hypotheses: Vec::new(),
            features: Vec::new(),
            bootstrap: BootstrapConfig::default(),
        }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    /// Load a TOML or JSON (by extension) config; relative paths are taken
    /// relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for c in &mut self.corpora {
            resolve(base, &mut c.text);
            resolve(base, &mut c.pivot_text);
        }
        if let ScorerConfig::ScoreFiles { files } = &mut self.scorer {
            for f in files {
                resolve(base, &mut f.mt);
                resolve(base, &mut f.lm);
            }
        }
        for h in &mut self.hypotheses {
            resolve(base, &mut h.path);
        }
        for f in &mut self.features {
            resolve(base, f);
        }
        resolve(base, &mut self.output_dir);
    }

    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            self.output_dir = PathBuf::from(dir);
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            n_valid: self.n_valid,
            n_test: self.n_test,
            seed: self.seed,
        }
    }

    pub fn langs(&self) -> impl Iterator<Item = &str> {
        self.corpora.iter().map(|c| c.lang.as_str())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the configuration with `output_dir` cleared, so relocating
    /// the outputs keeps the hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Translation directions in run order: for each language, into the
    /// pivot then out of it.
    pub fn directions(&self) -> Vec<Direction> {
        match &self.scorer {
            ScorerConfig::ScoreFiles { files } => files.iter().map(|f| f.direction.clone()).collect(),
            ScorerConfig::Builtin { .. } => self
                .langs()
                .flat_map(|l| {
                    [
                        Direction::translation(l, &self.pivot),
                        Direction::translation(&self.pivot, l),
                    ]
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.pivot.is_empty() || self.pivot.contains(['-', '>', '/', ' ']) {
            return bad(format!("bad pivot language {:?}", self.pivot));
        }
        let mut langs = BTreeSet::new();
        for c in &self.corpora {
            if c.lang.is_empty() || c.lang.contains(['-', '>', '/', ' ']) || c.lang == self.pivot {
                return bad(format!("bad corpus language {:?}", c.lang));
            }
            if !langs.insert(c.lang.as_str()) {
                return bad(format!("language {} listed twice", c.lang));
            }
            for p in [&c.text, &c.pivot_text] {
                if !p.is_file() {
                    return bad(format!("corpus file {} does not exist", p.display()));
                }
            }
        }
        match &self.scorer {
            ScorerConfig::Builtin {
                settings,
                pivot_lm_pair,
            } => {
                if self.corpora.is_empty() {
                    return bad("the builtin scorer needs at least one corpus".into());
                }
                if settings.order == 0 {
                    return bad("n-gram order must be at least 1".into());
                }
                if !(0.0..=1.0).contains(&settings.lambda) {
                    return bad(format!("lambda {} outside [0, 1]", settings.lambda));
                }
                if settings.em_iterations == 0 {
                    return bad("at least one EM iteration is needed".into());
                }
                if let Some(l) = pivot_lm_pair {
                    if !langs.contains(l.as_str()) {
                        return bad(format!("pivot_lm_pair {l} is not a configured corpus"));
                    }
                }
            }
            ScorerConfig::ScoreFiles { files } => {
                if files.is_empty() {
                    return bad("score-files scorer lists no files".into());
                }
                let mut seen = BTreeSet::new();
                for f in files {
                    if f.direction.source.is_none() {
                        return bad(format!("score files need a translation direction, got {}", f.direction));
                    }
                    if !seen.insert(&f.direction) {
                        return bad(format!("direction {} listed twice", f.direction));
                    }
                    for p in [&f.mt, &f.lm] {
                        if !p.is_file() {
                            return bad(format!("score file {} does not exist", p.display()));
                        }
                    }
                }
            }
        }
        let directions: BTreeSet<Direction> = self.directions().into_iter().collect();
        for h in &self.hypotheses {
            if !directions.contains(&h.direction) {
                return bad(format!("hypotheses for unknown direction {}", h.direction));
            }
            let known = |l: &str| l == self.pivot || langs.contains(l);
            if !h.direction.source.as_deref().is_some_and(known) || !known(&h.direction.target) {
                return bad(format!("hypotheses for {} need its corpus", h.direction));
            }
            if !h.path.is_file() {
                return bad(format!("hypothesis file {} does not exist", h.path.display()));
            }
        }
        for f in &self.features {
            if !f.is_file() {
                return bad(format!("feature table {} does not exist", f.display()));
            }
        }
        if !self.corpora.is_empty() && self.n_test == 0 {
            return bad("n_test must be positive".into());
        }
        Ok(())
    }
}
