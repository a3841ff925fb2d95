mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use xmi_core::report::{run_pipeline, Hypotheses, Pipeline, ScoreFiles, ScorerConfig, Stage};
use xmi_core::scoring::{read_scores, Direction};
use xmi_core::Error;

fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, root, out);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn dir(d: &str) -> Direction {
    d.parse().unwrap()
}

#[test]
fn toy_run_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let config = common::toy_config(tmp.path(), out.clone());
    let result = run_pipeline(config.clone()).unwrap();

    let got: Vec<String> = result.reports.iter().map(|r| r.direction.to_string()).collect();
    assert_eq!(got, ["de->en", "en->de", "fi->en", "en->fi"]);
    for r in &result.reports {
        assert_eq!(r.xmi, r.h_lm - r.h_mt, "{}", r.direction);
        assert_eq!(r.n_sentences, config.n_test);
        assert!(r.bleu.is_none());
    }

    let p = Pipeline::new(config).unwrap();
    let manifest = p.load_manifest().unwrap();
    assert_eq!(manifest.shared, common::toy_shared());
    assert_eq!(manifest.duplicates["fi"], 2);
    assert_eq!(manifest.duplicates["de"], 0);
    assert_eq!(manifest.test_ids.len(), 40);
    assert_eq!(manifest.valid_ids.len(), 20);
    assert_eq!(manifest.n_train, common::toy_shared() - 60);

    // both into-English directions share one English language model
    let lm = read_scores(&out.join("scores/en.lm.tsv")).unwrap();
    assert_eq!(lm.direction, Direction::language_model("en"));
    let into: Vec<f64> = result
        .reports
        .iter()
        .filter(|r| r.direction.target == "en")
        .map(|r| r.h_lm)
        .collect();
    assert_eq!(into[0], into[1]);

    assert_eq!(result.bootstrap.len(), 4);
    for b in &result.bootstrap {
        assert_eq!(b.metric, "xmi");
        assert_eq!(b.result.n_replicates, 50);
        assert!(b.result.ci_low <= b.result.ci_high);
    }
    // the stacked bars need non-negative segments
    let stackable = result.reports.iter().all(|r| r.xmi >= 0.0 && r.h_mt >= 0.0);
    assert_eq!(out.join("plots/stack.svg").exists(), stackable);
    assert!(out.join("report.json").exists());
}

#[test]
fn every_artifact_carries_the_config_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let result = run_pipeline(common::toy_config(tmp.path(), out.clone())).unwrap();
    let files = snapshot(&out);
    let mut checked = 0;
    for (path, bytes) in &files {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if matches!(ext, "tsv" | "json" | "svg" | "csv") {
            let text = String::from_utf8(bytes.clone()).unwrap();
            assert!(
                text.contains(&result.config_hash),
                "{} lacks the config hash",
                path.display()
            );
            checked += 1;
        }
    }
    assert!(checked >= 15, "only {checked} artifacts checked");
}

#[test]
fn rerun_into_same_directory_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let config = common::toy_config(tmp.path(), out.clone());
    run_pipeline(config.clone()).unwrap();
    let first = snapshot(&out);
    run_pipeline(config).unwrap();
    let second = snapshot(&out);
    assert_eq!(first.keys().collect::<Vec<_>>(), second.keys().collect::<Vec<_>>());
    for (path, bytes) in &first {
        assert!(bytes == &second[path], "{} changed between runs", path.display());
    }
}

#[test]
fn score_files_reproduce_builtin_xmi() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let builtin = run_pipeline(common::toy_config(tmp.path(), out.clone())).unwrap();

    let files = builtin
        .reports
        .iter()
        .map(|r| {
            let d = &r.direction;
            ScoreFiles {
                direction: d.clone(),
                mt: out.join(format!("scores/{}-{}.mt.tsv", d.source.as_deref().unwrap(), d.target)),
                lm: out.join(format!("scores/{}.lm.tsv", d.target)),
            }
        })
        .collect();
    let out2 = tmp.path().join("external");
    let mut config = common::toy_config(tmp.path(), out2.clone());
    config.corpora.clear();
    config.scorer = ScorerConfig::ScoreFiles { files };
    let external = run_pipeline(config).unwrap();

    assert_eq!(external.reports.len(), builtin.reports.len());
    for (a, b) in external.reports.iter().zip(&builtin.reports) {
        assert_eq!(a.direction, b.direction);
        assert_eq!(a.xmi, b.xmi);
    }
    assert!(!out2.join("prepare").exists());
    assert!(!out2.join("bpe").exists());
    assert!(out2.join("metrics/metrics.tsv").exists());
}

#[test]
fn stage_failures_name_the_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let p = Pipeline::new(common::toy_config(tmp.path(), tmp.path().join("out"))).unwrap();
    let err = p.run_stage(Stage::Score).unwrap_err();
    assert!(matches!(err, Error::Stage { .. }), "{err:?}");
    assert!(err.to_string().contains("score"), "{err}");

    p.run_stage(Stage::Prepare).unwrap();
    let err = p.run_stage(Stage::Score).unwrap_err();
    assert!(err.to_string().contains("score"), "{err}");
    p.run_stage(Stage::Bpe).unwrap();
    p.run_stage(Stage::Score).unwrap();
    p.run_stage(Stage::Metrics).unwrap();
}

#[test]
fn invalid_config_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = common::toy_config(tmp.path(), tmp.path().join("out"));
    config.corpora[1].lang = "de".into();
    let err = Pipeline::new(config).unwrap_err();
    assert!(err.is_validation(), "{err:?}");

    let mut config = common::toy_config(tmp.path(), tmp.path().join("out"));
    config.corpora[0].text = tmp.path().join("missing.txt");
    assert!(Pipeline::new(config).unwrap_err().is_validation());
}

#[test]
fn hypotheses_add_bleu() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    run_pipeline(common::toy_config(tmp.path(), out.clone())).unwrap();

    // perfect output into English, lossy output into the toy language
    let refs_en = fs::read_to_string(out.join("prepare/de-en/test.en")).unwrap();
    let refs_de = fs::read_to_string(out.join("prepare/de-en/test.de")).unwrap();
    let lossy: String = refs_de
        .lines()
        .map(|l| l.split_once(' ').map_or(l, |(_, rest)| rest).to_string() + "\n")
        .collect();
    let hyp_en = tmp.path().join("hyp.en");
    let hyp_de = tmp.path().join("hyp.de");
    fs::write(&hyp_en, refs_en).unwrap();
    fs::write(&hyp_de, lossy).unwrap();

    let out2 = tmp.path().join("with-bleu");
    let mut config = common::toy_config(tmp.path(), out2.clone());
    config.hypotheses = vec![
        Hypotheses {
            direction: dir("de->en"),
            path: hyp_en,
        },
        Hypotheses {
            direction: dir("en->de"),
            path: hyp_de,
        },
    ];
    let result = run_pipeline(config).unwrap();
    let bleu = |d: &str| result.reports.iter().find(|r| r.direction == dir(d)).unwrap().bleu;
    assert_eq!(bleu("de->en"), Some(100.0));
    let lossy = bleu("en->de").unwrap();
    assert!(lossy > 0.0 && lossy < 100.0, "{lossy}");
    assert_eq!(bleu("fi->en"), None);

    let sig = result.reports[0].bleu_signature.clone().unwrap();
    assert!(sig.starts_with("BLEU+c.mixed+#.1+s.exp+tok.13a"), "{sig}");
    assert_eq!(result.bootstrap.iter().filter(|b| b.metric == "bleu").count(), 2);
    assert!(out2.join("plots/bleu_xmi.both.svg").exists());
    assert!(out2.join("plots/bleu_xmi.both.tsv").exists());
}

#[test]
fn short_hypothesis_file_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let hyp = tmp.path().join("hyp.en");
    fs::write(&hyp, "only one line\n").unwrap();
    let mut config = common::toy_config(tmp.path(), tmp.path().join("out"));
    config.hypotheses = vec![Hypotheses {
        direction: dir("de->en"),
        path: hyp,
    }];
    let err = run_pipeline(config).unwrap_err();
    assert!(err.to_string().contains("metrics"), "{err}");
}
