//! Stage-by-stage orchestration with every artifact persisted under the
//! output directory.
//!
//! ```text
//! run.json                         resolved config and its hash
//! prepare/manifest.json            shared size, duplicates, split ids
//! prepare/<l>-<pivot>/<split>.<lang>
//! bpe/<l>-<pivot>.bpe
//! scores/<src>-<tgt>.mt.tsv, scores/<tgt>.lm.tsv
//! metrics/metrics.tsv, metrics/metrics.json
//! analysis/features.csv, analysis/correlation.<filter>.tsv,
//! analysis/metric_correlation.<filter>.tsv, analysis/bootstrap.{tsv,json}
//! plots/stack.{svg,tsv}, plots/bleu_xmi.<filter>.{svg,tsv}
//! report.json
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{RunConfig, ScorerConfig};
use super::plot::{render_scatter, render_stack};
use crate::analysis::{
    bootstrap_bleu, bootstrap_train_xmi, bootstrap_xmi, correlate_features, BootstrapResult, BuiltinScorer,
    CorrelationTable, DirectionFilter, FeatureTable,
};
use crate::corpus::{
    drop_empty, filter_by_length, intersect_ids, intersect_multiway, make_splits, read_lines, ParallelCorpus, Side,
};
use crate::error::{Error, Result};
use crate::metrics::{bleu_raw, read_reports, reports_to_tsv, sentence_stats, xmi, MetricReport};
use crate::scoring::{read_scores, score_corpus, write_scores, Direction, ScoreItem, ScoreSet, Smoothing};
use crate::subword::{bpe_train, word_frequencies, BpeModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Prepare,
    Bpe,
    Score,
    Metrics,
    Correlate,
    Bootstrap,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Prepare,
        Stage::Bpe,
        Stage::Score,
        Stage::Metrics,
        Stage::Correlate,
        Stage::Bootstrap,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Prepare => "prepare",
            Stage::Bpe => "bpe",
            Stage::Score => "score",
            Stage::Metrics => "metrics",
            Stage::Correlate => "correlate",
            Stage::Bootstrap => "bootstrap",
            Stage::Report => "report",
        }
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown stage {s:?}")))
    }
}

/// Sizes and ids shared by every language pair after preparation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepareManifest {
    pub config_hash: String,
    pub pivot: String,
    pub langs: Vec<String>,
    /// Pairs per language after intersection on the pivot.
    pub shared: usize,
    /// Duplicate pivot sentences dropped per language.
    pub duplicates: BTreeMap<String, usize>,
    pub seed: u64,
    pub n_train: usize,
    pub train_ids: Vec<u64>,
    pub valid_ids: Vec<u64>,
    pub test_ids: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapRow {
    pub direction: Direction,
    /// `xmi`, `bleu` or `xmi_train`.
    pub metric: String,
    pub result: BootstrapResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub config_hash: String,
    pub reports: Vec<MetricReport>,
    pub correlations: Vec<CorrelationTable>,
    pub metric_correlations: Vec<CorrelationTable>,
    pub bootstrap: Vec<BootstrapRow>,
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    config_hash: &'a str,
    #[serde(flatten)]
    body: T,
}

/// Source and target units of each sentence pair.
type Pairs = Vec<(Vec<String>, Vec<String>)>;

const SPLITS: [&str; 3] = ["train", "valid", "test"];

/// A validated configuration bound to its output directory.
#[derive(Debug, Clone)]
pub struct Pipeline {
    config: RunConfig,
    hash: String,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// A 64-bit seed for one labelled consumer of the master seed.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let digest = Sha256::digest(format!("{master}/{label}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

fn as_items(v: &[(u64, Vec<String>, Vec<String>)]) -> Vec<ScoreItem<'_>> {
    v.iter().map(|(id, t, s)| (*id, t.as_slice(), s.as_slice())).collect()
}

fn model_tag(s: &BuiltinScorer) -> String {
    let sm = match s.smoothing {
        Smoothing::Mle => "mle",
        Smoothing::InterpolatedKneserNey => "kn",
    };
    format!("{sm}{}-lex{}-em{}", s.order, s.lambda, s.em_iterations)
}

fn encoded(bpe: &BpeModel, corpus: &ParallelCorpus, side: Side) -> Vec<Vec<String>> {
    let tokens: Vec<&[String]> = corpus.side(side).map(|s| s.tokens.as_slice()).collect();
    tokens.iter().map(|t| bpe.encode(t)).collect()
}

impl Pipeline {
    /// Validate `config` after applying the output-directory override.
    pub fn new(mut config: RunConfig) -> Result<Self> {
        config.apply_env();
        config.validate()?;
        let hash = config.hash();
        Ok(Pipeline { config, hash })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn output_dir(&self) -> &Path {
        &self.config.output_dir
    }

    fn path(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.config.output_dir.join(rel)
    }

    fn pair_dir(&self, lang: &str) -> PathBuf {
        self.path(format!("prepare/{lang}-{}", self.config.pivot))
    }

    fn bpe_path(&self, lang: &str) -> PathBuf {
        self.path(format!("bpe/{lang}-{}.bpe", self.config.pivot))
    }

    fn need_corpora(&self, stage: &str) -> Result<()> {
        if self.config.corpora.is_empty() {
            return Err(Error::Config(format!("stage {stage} needs at least one corpus")));
        }
        Ok(())
    }

    /// Run one stage, wrapping any failure with the stage name.
    pub fn run_stage(&self, stage: Stage) -> Result<()> {
        log::info!("stage {}", stage.name());
        let r = match stage {
            Stage::Prepare => self.prepare().map(drop),
            Stage::Bpe => self.bpe(),
            Stage::Score => self.score(),
            Stage::Metrics => self.metrics().map(drop),
            Stage::Correlate => self.correlate().map(drop),
            Stage::Bootstrap => self.bootstrap().map(drop),
            Stage::Report => self.report().map(drop),
        };
        r.map_err(|e| e.in_stage(stage.name()))
    }

    fn write_run_record(&self) -> Result<()> {
        #[derive(Serialize)]
        struct Run<'a> {
            config: &'a RunConfig,
        }
        write_json(
            &self.path("run.json"),
            &Stamped {
                config_hash: &self.hash,
                body: Run { config: &self.config },
            },
        )
    }

    /// Read, tokenize, intersect on the pivot, split, and length-filter the
    /// training portion.
    pub fn prepare(&self) -> Result<PrepareManifest> {
        self.need_corpora("prepare")?;
        self.write_run_record()?;
        let pivot = &self.config.pivot;
        let mut corpora = BTreeMap::new();
        for c in &self.config.corpora {
            let corpus = ParallelCorpus::read(&c.lang, pivot, &c.text, &c.pivot_text)?;
            let before = corpus.len();
            let corpus = drop_empty(&corpus);
            log::info!("{}-{pivot}: {before} pairs read, {} non-empty", c.lang, corpus.len());
            corpora.insert(c.lang.clone(), corpus);
        }
        let inter = intersect_multiway(&corpora, pivot)?;
        let shared = inter.shared_len();
        log::info!("{shared} pairs shared across {} languages", corpora.len());

        let spec = self.config.split_spec();
        let mut trains = BTreeMap::new();
        let mut held_out = BTreeMap::new();
        for (lang, corpus) in &inter.corpora {
            let splits = make_splits(corpus, &spec)?;
            trains.insert(lang.clone(), filter_by_length(&splits.train, self.config.max_len));
            held_out.insert(lang.clone(), (splits.valid, splits.test));
        }
        let trains = intersect_ids(&trains);

        let mut manifest = PrepareManifest {
            config_hash: self.hash.clone(),
            pivot: pivot.clone(),
            langs: inter.corpora.keys().cloned().collect(),
            shared,
            duplicates: inter.duplicates.clone(),
            seed: spec.seed,
            n_train: 0,
            train_ids: Vec::new(),
            valid_ids: Vec::new(),
            test_ids: Vec::new(),
        };
        for (lang, train) in &trains {
            let (valid, test) = &held_out[lang];
            let dir = self.pair_dir(lang);
            for (name, part) in SPLITS.iter().zip([train, valid, test]) {
                part.write(
                    &dir.join(format!("{name}.{lang}")),
                    &dir.join(format!("{name}.{pivot}")),
                )?;
            }
            manifest.n_train = train.len();
            manifest.train_ids = train.ids();
            manifest.valid_ids = valid.ids();
            manifest.test_ids = test.ids();
        }
        log::info!(
            "{} training pairs per language after length filtering",
            manifest.n_train
        );
        write_json(&self.path("prepare/manifest.json"), &manifest)?;
        Ok(manifest)
    }

    pub fn load_manifest(&self) -> Result<PrepareManifest> {
        let m: PrepareManifest = read_json(&self.path("prepare/manifest.json"))?;
        if m.config_hash != self.hash {
            return Err(Error::Config(format!(
                "prepared data was made with config {}, current config is {}; rerun prepare",
                m.config_hash, self.hash
            )));
        }
        Ok(m)
    }

    /// One prepared split of `lang`-pivot, oriented `lang -> pivot`.
    pub fn load_split(&self, manifest: &PrepareManifest, lang: &str, split: &str) -> Result<ParallelCorpus> {
        let ids = match split {
            "train" => &manifest.train_ids,
            "valid" => &manifest.valid_ids,
            "test" => &manifest.test_ids,
            other => return Err(Error::InvalidArgument(format!("unknown split {other}"))),
        };
        let dir = self.pair_dir(lang);
        let pivot = &self.config.pivot;
        ParallelCorpus::read_with_ids(
            lang,
            pivot,
            &dir.join(format!("{split}.{lang}")),
            &dir.join(format!("{split}.{pivot}")),
            ids,
        )
    }

    /// Learn one joint BPE model per language pair on its training split.
    pub fn bpe(&self) -> Result<()> {
        self.need_corpora("bpe")?;
        let manifest = self.load_manifest()?;
        for lang in &manifest.langs {
            let train = self.load_split(&manifest, lang, "train")?;
            let freqs = word_frequencies(
                train
                    .side(Side::Source)
                    .chain(train.side(Side::Target))
                    .map(|s| s.tokens.as_slice()),
            );
            let model = bpe_train(&freqs, self.config.bpe_merges)?;
            log::info!(
                "{lang}-{}: {} merges, vocab {}",
                self.config.pivot,
                model.merges().len(),
                model.vocab().len()
            );
            model.save(&self.bpe_path(lang))?;
        }
        Ok(())
    }

    fn mt_path(&self, d: &Direction) -> PathBuf {
        match &self.config.scorer {
            ScorerConfig::ScoreFiles { files } => files
                .iter()
                .find(|f| &f.direction == d)
                .map(|f| f.mt.clone())
                .expect("direction comes from the config"),
            ScorerConfig::Builtin { .. } => self.path(format!(
                "scores/{}-{}.mt.tsv",
                d.source.as_deref().unwrap_or(""),
                d.target
            )),
        }
    }

    fn lm_path(&self, d: &Direction) -> PathBuf {
        match &self.config.scorer {
            ScorerConfig::ScoreFiles { files } => files
                .iter()
                .find(|f| &f.direction == d)
                .map(|f| f.lm.clone())
                .expect("direction comes from the config"),
            ScorerConfig::Builtin { .. } => self.path(format!("scores/{}.lm.tsv", d.target)),
        }
    }

    fn pivot_lm_pair(&self) -> &str {
        match &self.config.scorer {
            ScorerConfig::Builtin {
                pivot_lm_pair: Some(l), ..
            } => l,
            _ => &self.config.corpora[0].lang,
        }
    }

    /// Train the built-in scorers and score the test split, or check the
    /// configured score files.
    pub fn score(&self) -> Result<()> {
        let settings = match &self.config.scorer {
            ScorerConfig::ScoreFiles { files } => {
                for f in files {
                    let mt = read_scores(&f.mt)?;
                    let lm = read_scores(&f.lm)?;
                    if mt.direction != f.direction {
                        return Err(Error::Config(format!(
                            "{} holds {} scores, configured as {}",
                            f.mt.display(),
                            mt.direction,
                            f.direction
                        )));
                    }
                    xmi(&lm, &mt)?;
                }
                return Ok(());
            }
            ScorerConfig::Builtin { settings, .. } => *settings,
        };
        let manifest = self.load_manifest()?;
        let pivot = self.config.pivot.as_str();
        let tag = model_tag(&settings);
        for lang in &manifest.langs {
            let bpe = BpeModel::load(&self.bpe_path(lang))?;
            let vocab_hash = bpe.hash();
            let train = self.load_split(&manifest, lang, "train")?;
            let test = self.load_split(&manifest, lang, "test")?;
            let (tr_l, tr_p) = (encoded(&bpe, &train, Side::Source), encoded(&bpe, &train, Side::Target));
            let (te_l, te_p) = (encoded(&bpe, &test, Side::Source), encoded(&bpe, &test, Side::Target));
            let ids = test.ids();

            let save = |set: ScoreSet, path: PathBuf| -> Result<()> {
                let mut set = set.with_vocab_hash(vocab_hash.clone());
                set.extra.insert("config_hash".into(), self.hash.clone());
                write_scores(&set, &path)
            };
            let items = |tgt: &'_ [Vec<String>], src: &'_ [Vec<String>]| -> Vec<(u64, Vec<String>, Vec<String>)> {
                ids.iter()
                    .zip(tgt.iter().zip(src))
                    .map(|(&id, (t, s))| (id, t.clone(), s.clone()))
                    .collect()
            };

            for (src, tgt, tr_s, tr_t, te_s, te_t) in [
                (lang.as_str(), pivot, &tr_l, &tr_p, &te_l, &te_p),
                (pivot, lang.as_str(), &tr_p, &tr_l, &te_p, &te_l),
            ] {
                let pairs: Vec<(Vec<String>, Vec<String>)> = tr_s.iter().cloned().zip(tr_t.iter().cloned()).collect();
                let mt = settings.train(&pairs)?;
                let dir = Direction::translation(src, tgt);
                let test_items = items(te_t, te_s);
                let set = score_corpus(&mt, &tag, dir.clone(), &as_items(&test_items))?;
                save(set, self.mt_path(&dir))?;
                let is_pivot_lm = tgt == pivot && lang == self.pivot_lm_pair();
                if tgt != pivot || is_pivot_lm {
                    let lm_tag = format!("{}{}", tag.split('-').next().unwrap_or("lm"), "-lm");
                    let set = score_corpus(
                        mt.language_model(),
                        &lm_tag,
                        Direction::language_model(tgt),
                        &as_items(&test_items),
                    )?;
                    save(set, self.lm_path(&dir))?;
                }
            }
            log::info!("{lang}-{pivot}: scored {} test sentences in both directions", ids.len());
        }
        Ok(())
    }

    fn references(&self, manifest: &PrepareManifest, d: &Direction) -> Result<Vec<String>> {
        let pivot = &self.config.pivot;
        let lang = if &d.target == pivot {
            d.source.as_deref().unwrap_or_default()
        } else {
            d.target.as_str()
        };
        let test = self.load_split(manifest, lang, "test")?;
        let side = if &d.target == pivot { Side::Target } else { Side::Source };
        Ok(test.side(side).map(|s| s.raw.clone()).collect())
    }

    fn hypotheses(&self, manifest: &PrepareManifest, d: &Direction) -> Result<Option<(Vec<String>, Vec<String>)>> {
        let Some(h) = self.config.hypotheses.iter().find(|h| &h.direction == d) else {
            return Ok(None);
        };
        let hyps = read_lines(&h.path)?;
        let refs = self.references(manifest, d)?;
        if hyps.len() != refs.len() {
            return Err(Error::LengthMismatch {
                what: format!("{d} hypotheses vs test references"),
                left: hyps.len(),
                right: refs.len(),
            });
        }
        Ok(Some((hyps, refs)))
    }

    /// Cross-entropies, XMI and (where hypotheses are given) BLEU per direction.
    pub fn metrics(&self) -> Result<Vec<MetricReport>> {
        let manifest = if self.config.hypotheses.is_empty() {
            None
        } else {
            Some(self.load_manifest()?)
        };
        let mut rows = Vec::new();
        for d in self.config.directions() {
            let mt = read_scores(&self.mt_path(&d))?;
            let lm = read_scores(&self.lm_path(&d))?;
            let est = xmi(&lm, &mt)?;
            let bleu = match &manifest {
                Some(m) => match self.hypotheses(m, &d)? {
                    Some((hyps, refs)) => Some(bleu_raw(&hyps, &refs, &self.config.bleu)?),
                    None => None,
                },
                None => None,
            };
            rows.push(MetricReport::new(est, bleu.as_ref(), &self.config.bleu));
        }
        let signature = self.config.bleu.signature();
        let meta = [
            ("config_hash", self.hash.as_str()),
            ("bleu_signature", signature.as_str()),
        ];
        write_text(&self.path("metrics/metrics.tsv"), &reports_to_tsv(&rows, &meta))?;
        #[derive(Serialize)]
        struct Body<'a> {
            bleu_signature: &'a str,
            rows: &'a [MetricReport],
        }
        write_json(
            &self.path("metrics/metrics.json"),
            &Stamped {
                config_hash: &self.hash,
                body: Body {
                    bleu_signature: &signature,
                    rows: &rows,
                },
            },
        )?;
        Ok(rows)
    }

    fn load_metrics(&self) -> Result<Vec<MetricReport>> {
        read_reports(&self.path("metrics/metrics.tsv"))
    }

    /// Computed corpus features merged with the configured feature tables.
    pub fn feature_table(&self) -> Result<FeatureTable> {
        let mut table = FeatureTable::default();
        if !self.config.corpora.is_empty() {
            let manifest = self.load_manifest()?;
            let mut trains = Vec::new();
            for lang in &manifest.langs {
                let train = self.load_split(&manifest, lang, "train")?;
                trains.push(train.reversed());
                trains.push(train);
            }
            table = FeatureTable::from_corpora(&trains)?;
        }
        for path in &self.config.features {
            table = table.merge(&FeatureTable::read_csv(path)?)?;
        }
        Ok(table)
    }

    /// XMI against every feature, and against the other metrics, per filter.
    pub fn correlate(&self) -> Result<(Vec<CorrelationTable>, Vec<CorrelationTable>)> {
        let rows = self.load_metrics()?;
        let features = self.feature_table()?;
        write_text(
            &self.path("analysis/features.csv"),
            &format!("# config_hash={}\n{}", self.hash, features.to_csv()?),
        )?;
        let xmi_by_dir: Vec<(Direction, f64)> = rows.iter().map(|r| (r.direction.clone(), r.xmi)).collect();
        let mut metric_table = FeatureTable::new(["bleu", "h_lm", "h_mt"])?;
        for r in &rows {
            metric_table.insert_row(r.direction.clone(), vec![r.bleu, Some(r.h_lm), Some(r.h_mt)])?;
        }
        let pivot = &self.config.pivot;
        let mut feature_tables = Vec::new();
        let mut metric_tables = Vec::new();
        for filter in DirectionFilter::ALL {
            for (table, stem, out) in [
                (&features, "correlation", &mut feature_tables),
                (&metric_table, "metric_correlation", &mut metric_tables),
            ] {
                let t = correlate_features(&xmi_by_dir, table, filter, pivot)?;
                write_text(
                    &self.path(format!("analysis/{stem}.{filter}.tsv")),
                    &format!("# config_hash={}\n{}", self.hash, t.to_tsv(false)),
                )?;
                out.push(t);
            }
        }
        Ok((feature_tables, metric_tables))
    }

    fn builtin_pairs(&self, manifest: &PrepareManifest, d: &Direction) -> Result<(Pairs, Pairs)> {
        let pivot = &self.config.pivot;
        let into = &d.target == pivot;
        let lang = if into {
            d.source.as_deref().unwrap_or_default()
        } else {
            d.target.as_str()
        };
        let bpe = BpeModel::load(&self.bpe_path(lang))?;
        let mut out = Vec::new();
        for split in ["train", "test"] {
            let c = self.load_split(manifest, lang, split)?;
            let c = if into { c } else { c.reversed() };
            let s = encoded(&bpe, &c, Side::Source);
            let t = encoded(&bpe, &c, Side::Target);
            out.push(s.into_iter().zip(t).collect::<Vec<_>>());
        }
        let test = out.pop().expect("two splits");
        let train = out.pop().expect("two splits");
        Ok((train, test))
    }

    /// Percentile intervals of test-side XMI and BLEU, and of train-side XMI
    /// for the built-in scorer when enabled.
    pub fn bootstrap(&self) -> Result<Vec<BootstrapRow>> {
        let b = self.config.bootstrap;
        let seed = self.config.seed;
        let needs_manifest = !self.config.hypotheses.is_empty()
            || (b.train_replicates > 0 && matches!(self.config.scorer, ScorerConfig::Builtin { .. }));
        let manifest = if needs_manifest {
            Some(self.load_manifest()?)
        } else {
            None
        };
        let mut rows = Vec::new();
        for d in self.config.directions() {
            if b.replicates > 0 {
                let mt = read_scores(&self.mt_path(&d))?;
                let lm = read_scores(&self.lm_path(&d))?;
                let result = bootstrap_xmi(&lm, &mt, b.replicates, derive_seed(seed, &format!("xmi/{d}")))?;
                rows.push(BootstrapRow {
                    direction: d.clone(),
                    metric: "xmi".into(),
                    result,
                });
                if let Some(m) = &manifest {
                    if let Some((hyps, refs)) = self.hypotheses(m, &d)? {
                        let stats: Vec<_> = hyps
                            .iter()
                            .zip(&refs)
                            .map(|(h, r)| sentence_stats(&self.config.bleu.prepare(h), &self.config.bleu.prepare(r)))
                            .collect();
                        let result = bootstrap_bleu(
                            &stats,
                            self.config.bleu.smoothing,
                            b.replicates,
                            derive_seed(seed, &format!("bleu/{d}")),
                        )?;
                        rows.push(BootstrapRow {
                            direction: d.clone(),
                            metric: "bleu".into(),
                            result,
                        });
                    }
                }
            }
            if let (ScorerConfig::Builtin { settings, .. }, Some(m), true) =
                (&self.config.scorer, &manifest, b.train_replicates > 0)
            {
                let (train, test) = self.builtin_pairs(m, &d)?;
                let result = bootstrap_train_xmi(
                    settings,
                    &train,
                    &test,
                    b.train_replicates,
                    derive_seed(seed, &format!("xmi_train/{d}")),
                )?;
                rows.push(BootstrapRow {
                    direction: d.clone(),
                    metric: "xmi_train".into(),
                    result,
                });
            }
        }
        let mut tsv = format!("# config_hash={}\n", self.hash);
        tsv.push_str("direction\tmetric\tpoint_estimate\treplicate_mean\tci_low\tci_high\tn_replicates\n");
        for r in &rows {
            let x = &r.result;
            let _ = writeln!(
                tsv,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.direction, r.metric, x.point_estimate, x.replicate_mean, x.ci_low, x.ci_high, x.n_replicates
            );
        }
        write_text(&self.path("analysis/bootstrap.tsv"), &tsv)?;
        #[derive(Serialize)]
        struct Body<'a> {
            rows: &'a [BootstrapRow],
        }
        write_json(
            &self.path("analysis/bootstrap.json"),
            &Stamped {
                config_hash: &self.hash,
                body: Body { rows: &rows },
            },
        )?;
        Ok(rows)
    }

    /// Figures from the metrics table.
    pub fn report(&self) -> Result<()> {
        let rows = self.load_metrics()?;
        let plots = self.path("plots");
        let labels: Vec<String> = rows.iter().map(|r| r.direction.to_string()).collect();
        let h_mt: Vec<f64> = rows.iter().map(|r| r.h_mt).collect();
        let xmis: Vec<f64> = rows.iter().map(|r| r.xmi).collect();
        match render_stack(&h_mt, &xmis, &labels) {
            Ok(mut doc) => {
                doc.annotate("config_hash", &self.hash);
                doc.write(&plots, "stack")?;
            }
            Err(Error::InvalidArgument(msg)) => log::warn!("no stack plot: {msg}"),
            Err(e) => return Err(e),
        }
        for filter in DirectionFilter::ALL {
            let pts: Vec<&MetricReport> = rows
                .iter()
                .filter(|r| r.bleu.is_some() && filter.accepts(&r.direction, &self.config.pivot))
                .collect();
            if pts.is_empty() {
                continue;
            }
            let xs: Vec<f64> = pts.iter().filter_map(|r| r.bleu).collect();
            let ys: Vec<f64> = pts.iter().map(|r| r.xmi).collect();
            let ls: Vec<String> = pts.iter().map(|r| r.direction.to_string()).collect();
            let mut doc = render_scatter(&xs, &ys, &ls, "BLEU", "XMI (bits per sentence)")?;
            doc.annotate("config_hash", &self.hash);
            doc.write(&plots, &format!("bleu_xmi.{filter}"))?;
        }
        Ok(())
    }
}

/// Run every stage in order and collect the results.
pub fn run_pipeline(config: RunConfig) -> Result<PipelineOutput> {
    let p = Pipeline::new(config)?;
    let stage = |s: Stage| p.run_stage(s);
    if !p.config.corpora.is_empty() {
        stage(Stage::Prepare)?;
        if matches!(p.config.scorer, ScorerConfig::Builtin { .. }) {
            stage(Stage::Bpe)?;
        }
    } else {
        p.write_run_record().map_err(|e| e.in_stage("prepare"))?;
    }
    stage(Stage::Score)?;
    let reports = p.metrics().map_err(|e| e.in_stage("metrics"))?;
    let (correlations, metric_correlations) = p.correlate().map_err(|e| e.in_stage("correlate"))?;
    let bootstrap = if p.config.bootstrap.replicates > 0 || p.config.bootstrap.train_replicates > 0 {
        p.bootstrap().map_err(|e| e.in_stage("bootstrap"))?
    } else {
        Vec::new()
    };
    stage(Stage::Report)?;
    let out = PipelineOutput {
        config_hash: p.hash.clone(),
        reports,
        correlations,
        metric_correlations,
        bootstrap,
    };
    write_json(&p.path("report.json"), &out).map_err(|e| e.in_stage("report"))?;
    Ok(out)
}
