use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const NOUNS: &[&str] = &[
    "house", "tree", "river", "boat", "garden", "road", "door", "village", "market", "bridge",
];
const VERBS: &[&str] = &["sees", "finds", "paints", "follows", "likes", "hears"];
const PEOPLE: &[&str] = &[
    "the cat",
    "my friend",
    "a farmer",
    "the doctor",
    "her brother",
    "our teacher",
];

fn toy_lang(word: &str, lang: &str) -> String {
    match lang {
        "de" => format!("{}en", word.chars().rev().collect::<String>()),
        _ => word.replace('a', "aa").replace('e', "ee"),
    }
}

/// Writes `<lang>-en.<lang>` and `<lang>-en.en` for two toy languages and
/// returns the `--corpus` flag values.
fn write_corpora(dir: &Path) -> Vec<String> {
    let mut en = Vec::new();
    for i in 0..150usize {
        en.push(format!(
            "{} {} the {} near the {} .",
            PEOPLE[i % PEOPLE.len()],
            VERBS[(i / 6) % VERBS.len()],
            NOUNS[(i / 36 + i) % NOUNS.len()],
            NOUNS[(i * 7) % NOUNS.len()]
        ));
    }
    en.sort();
    en.dedup();
    let mut flags = Vec::new();
    for lang in ["de", "fi"] {
        let other: Vec<String> = en
            .iter()
            .map(|s| {
                s.split(' ')
                    .map(|w| if w == "." { ".".into() } else { toy_lang(w, lang) })
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        let text = dir.join(format!("{lang}-en.{lang}"));
        let pivot = dir.join(format!("{lang}-en.en"));
        fs::write(&text, other.join("\n") + "\n").unwrap();
        fs::write(&pivot, en.join("\n") + "\n").unwrap();
        flags.push(format!("{lang}={},{}", text.display(), pivot.display()));
    }
    flags
}

fn xmi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xmi"))
        .args(args)
        .env_remove("XMI_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn small_run_args(tmp: &Path, out: &Path) -> Vec<String> {
    let mut args = Vec::new();
    for c in write_corpora(tmp) {
        args.push("--corpus".to_string());
        args.push(c);
    }
    for (flag, value) in [
        ("--output-dir", out.display().to_string()),
        ("--n-valid", "10".into()),
        ("--n-test", "20".into()),
        ("--bpe-merges", "60".into()),
        ("--replicates", "20".into()),
    ] {
        args.push(flag.into());
        args.push(value);
    }
    args
}

fn with<'a>(cmd: &'a str, rest: &'a [String]) -> Vec<&'a str> {
    std::iter::once(cmd).chain(rest.iter().map(String::as_str)).collect()
}

#[test]
fn run_prints_one_row_per_direction() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let args = small_run_args(tmp.path(), &out);
    let o = xmi(&with("run", &args));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "direction\tbleu\txmi\th_lm\th_mt\tn_sentences");
    let dirs: Vec<&str> = lines[1..].iter().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(dirs, ["de->en", "en->de", "fi->en", "en->fi"]);
    assert!(out.join("report.json").exists());
    assert!(out.join("analysis/correlation.both.tsv").exists());
}

#[test]
fn stages_run_one_at_a_time() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let args = small_run_args(tmp.path(), &out);
    for stage in ["prepare", "bpe", "score", "metrics", "correlate", "bootstrap", "report"] {
        let o = xmi(&with(stage, &args));
        assert_eq!(code(&o), 0, "{stage}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(out.join("analysis/bootstrap.tsv").exists());

    // external scores enter at the metrics stage
    let ext = tmp.path().join("external");
    let score_files = format!(
        "de->en={},{}",
        out.join("scores/de-en.mt.tsv").display(),
        out.join("scores/en.lm.tsv").display()
    );
    let o = xmi(&[
        "metrics",
        "--score-files",
        &score_files,
        "--output-dir",
        ext.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 2);
    assert!(stdout.contains("de->en"));
    assert!(!ext.join("prepare").exists());
}

#[test]
fn output_dir_variable_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let corpora = write_corpora(tmp.path());
    let (lang, files) = corpora[0].split_once('=').unwrap();
    let (text, pivot) = files.split_once(',').unwrap();
    let config = tmp.path().join("run.toml");
    fs::write(
        &config,
        format!(
            "output_dir = \"from-config\"\nn_valid = 10\nn_test = 20\n\n[[corpora]]\nlang = \"{lang}\"\ntext = \"{text}\"\npivot_text = \"{pivot}\"\n"
        ),
    )
    .unwrap();
    let env_out: PathBuf = tmp.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_xmi"))
        .args(["prepare", "--config", config.to_str().unwrap()])
        .env("XMI_OUTPUT_DIR", &env_out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(env_out.join("prepare/manifest.json").exists());
    assert!(!tmp.path().join("from-config").exists());

    // without the variable, the relative path resolves against the config file
    let o = xmi(&["prepare", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(tmp.path().join("from-config/prepare/manifest.json").exists());
}

#[test]
fn validation_failures_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let mut args = small_run_args(tmp.path(), &out);
    args.extend(["--lambda".to_string(), "1.5".to_string()]);
    assert_eq!(code(&xmi(&with("run", &args))), 1);

    assert_eq!(code(&xmi(&["prepare", "--corpus", "de=missing.de,missing.en"])), 1);
    assert_eq!(code(&xmi(&["prepare", "--corpus", "de-only-one-file"])), 1);
    assert_eq!(code(&xmi(&["bogus"])), 1);

    let config = tmp.path().join("bad.toml");
    fs::write(&config, "no_such_key = 3\n").unwrap();
    assert_eq!(code(&xmi(&["config", "--config", config.to_str().unwrap()])), 1);

    let scores = tmp.path().join("broken.tsv");
    fs::write(&scores, "sentence_id\tn_units\tlogprob_bits\n0\t3\t-1.0\n").unwrap();
    let spec = format!("de->en={},{}", scores.display(), scores.display());
    let o = xmi(&["score", "--score-files", &spec, "--output-dir", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn runtime_failures_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let args = small_run_args(tmp.path(), &out);
    // scoring before preparing finds no manifest
    let o = xmi(&with("score", &args));
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("score"));
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(code(&xmi(&["--help"])), 0);
    assert_eq!(code(&xmi(&["--version"])), 0);
}

#[test]
fn config_prints_effective_settings() {
    let o = xmi(&["config", "--seed", "5", "--lambda", "0.25", "--bleu-case", "lower"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("seed = 5"), "{text}");
    assert!(text.contains("lambda = 0.25"), "{text}");
    assert!(text.contains("case = \"lower\""), "{text}");
}

#[test]
fn bpe_learn_and_apply() {
    let tmp = tempfile::tempdir().unwrap();
    let corpora = write_corpora(tmp.path());
    let en = corpora[0].split_once(',').unwrap().1;
    let model = tmp.path().join("en.bpe");
    let o = xmi(&["bpe", "learn", "--merges", "40", "-o", model.to_str().unwrap(), en]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let o = xmi(&["bpe", "apply", "--model", model.to_str().unwrap(), en]);
    assert_eq!(code(&o), 0);
    let segmented = String::from_utf8(o.stdout).unwrap();
    let original = fs::read_to_string(en).unwrap();
    assert_eq!(segmented.lines().count(), original.lines().count());
    for (seg, orig) in segmented.lines().zip(original.lines()) {
        let joined: Vec<String> = seg
            .replace(' ', "")
            .split("</w>")
            .filter(|w| !w.is_empty())
            .map(String::from)
            .collect();
        let tokens: Vec<&str> = orig.split(' ').collect();
        assert_eq!(joined, tokens);
    }
}
