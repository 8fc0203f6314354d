//! End-to-end tests of the command-line tool.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use anchorvec::RunConfig;
use clap::Args;

fn anchorvec(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anchorvec"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = anchorvec(dir, args);
    assert!(
        out.status.success(),
        "anchorvec {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("UTF-8 output")
}

fn only_run(dir: &Path) -> PathBuf {
    let runs: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(
        runs.len(),
        1,
        "expected one run directory in {}",
        dir.display()
    );
    runs.into_iter().next().unwrap()
}

/// A small synthetic corpus with its cache.
fn prepared(slices: usize) -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    let slices = slices.to_string();
    ok(
        tmp.path(),
        &[
            "synth",
            "--out-dir",
            "syn",
            "--synth-docs",
            "200",
            "--synth-slices",
            &slices,
            "--seed",
            "4",
        ],
    );
    ok(
        tmp.path(),
        &[
            "preprocess",
            "--manifest",
            "syn/manifest.toml",
            "--cache-dir",
            "cache",
            "--subsample",
            "false",
        ],
    );
    tmp
}

#[test]
fn missing_corpus_file_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("manifest.toml"),
        "[[slice]]\nlabel = \"a\"\nfiles = \"nowhere.txt\"\n",
    )
    .unwrap();
    let out = anchorvec(
        tmp.path(),
        &[
            "preprocess",
            "--manifest",
            "manifest.toml",
            "--cache-dir",
            "cache",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nowhere.txt"), "stderr: {stderr}");
}

#[test]
fn missing_manifest_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let out = anchorvec(
        tmp.path(),
        &[
            "preprocess",
            "--manifest",
            "absent.toml",
            "--cache-dir",
            "cache",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.toml"));
}

#[test]
fn preprocess_cache_is_reproducible_and_ordered() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("late.txt"), "the cat sat on the mat. The cat ran!").unwrap();
    fs::write(dir.join("early-1.txt"), "A dog barked at 42 cats.").unwrap();
    fs::write(dir.join("early-2.txt"), "The dog slept.").unwrap();
    // slices keep manifest order, not alphabetical order
    fs::write(
        dir.join("manifest.toml"),
        "[[slice]]\nlabel = \"1990\"\nfiles = \"early-*.txt\"\n\n\
         [[slice]]\nlabel = \"1980\"\nfiles = [\"late.txt\"]\n",
    )
    .unwrap();
    let run = |cache: &str| {
        ok(
            dir,
            &[
                "preprocess",
                "--manifest",
                "manifest.toml",
                "--cache-dir",
                cache,
                "--seed",
                "3",
                "--subsample-threshold",
                "0.05",
            ],
        );
        let mut files = Vec::new();
        for name in [
            "vocab.tsv",
            "slices.tsv",
            "preprocess.toml",
            "slice-0000.tokens",
            "slice-0001.tokens",
        ] {
            files.push(fs::read(dir.join(cache).join(name)).unwrap());
        }
        files
    };
    let a = run("cache-a");
    let b = run("cache-b");
    assert_eq!(a, b);
    let slices = String::from_utf8(a[1].clone()).unwrap();
    let labels: Vec<&str> = slices
        .lines()
        .skip(1)
        .map(|l| l.split('\t').nth(1).unwrap())
        .collect();
    assert_eq!(labels, ["1990", "1980"]);
    let vocab = String::from_utf8(a[0].clone()).unwrap();
    assert!(
        vocab.lines().any(|l| l.starts_with("X\t")),
        "numbers map to X"
    );
}

#[test]
fn help_documents_every_key() {
    let keys: Vec<String> = RunConfig::augment_args(clap::Command::new("probe"))
        .get_arguments()
        .map(|a| a.get_id().to_string().replace('_', "-"))
        .collect();
    assert!(keys.len() > 40);
    let tmp = tempfile::tempdir().unwrap();
    for sub in [
        "preprocess",
        "train",
        "train-dynamic",
        "eval",
        "eval-sota",
        "trajectory",
        "synth",
    ] {
        let help = ok(tmp.path(), &[sub, "--help"]);
        for key in &keys {
            assert!(
                help.contains(&format!("--{key} ")),
                "{sub} --help lacks --{key}"
            );
        }
    }
}

#[test]
fn config_echo_reproduces_the_run() {
    let tmp = prepared(1);
    let dir = tmp.path();
    ok(
        dir,
        &[
            "train",
            "--cache-dir",
            "cache",
            "--anchors",
            "syn/anchors.toml",
            "--dims",
            "6",
            "--epochs",
            "2",
            "--seed",
            "9",
            "--out-dir",
            "first",
        ],
    );
    let first = only_run(&dir.join("first"));
    let echo = first.join("config.toml");
    ok(
        dir,
        &[
            "train",
            "--config",
            echo.to_str().unwrap(),
            "--out-dir",
            "second",
        ],
    );
    let second = only_run(&dir.join("second"));
    for name in ["model.txt", "objective.tsv", "anchors.tsv"] {
        assert_eq!(
            fs::read(first.join(name)).unwrap(),
            fs::read(second.join(name)).unwrap(),
            "{name} differs"
        );
    }
    let a = fs::read_to_string(first.join("config.toml")).unwrap();
    let b = fs::read_to_string(second.join("config.toml")).unwrap();
    assert_eq!(a.replace("first", "X"), b.replace("second", "X"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), "learning_rat = 0.1\n").unwrap();
    let out = anchorvec(tmp.path(), &["train", "--config", "c.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("learning_rat"));
}

#[test]
fn divergence_exits_with_code_3() {
    let tmp = prepared(1);
    let out = anchorvec(
        tmp.path(),
        &[
            "train",
            "--cache-dir",
            "cache",
            "--anchors",
            "syn/anchors.toml",
            "--dims",
            "4",
            "--epochs",
            "3",
            "--learning-rate",
            "1e300",
            "--divergence-check-every",
            "1",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn dynamic_training_sota_and_trajectories() {
    let tmp = prepared(3);
    let dir = tmp.path();
    ok(
        dir,
        &[
            "train-dynamic",
            "--cache-dir",
            "cache",
            "--anchors",
            "syn/anchors.toml",
            "--dims",
            "6",
            "--epochs",
            "2",
            "--out-dir",
            "runs",
        ],
    );
    let run = only_run(&dir.join("runs"));
    let model = run.join("model.txt");
    let model = model.to_str().unwrap();

    // first planted word of each pool, as listed in the ground truth
    let truth = fs::read_to_string(dir.join("syn/truth.tsv")).unwrap();
    let first = |polarity: &str| {
        truth
            .lines()
            .skip(1)
            .find(|l| l.split('\t').nth(2) == Some(polarity))
            .map(|l| l.split('\t').next().unwrap().to_string())
            .unwrap()
    };
    let (pos, neg) = (first("positive"), first("negative"));
    fs::write(dir.join("pairs.tsv"), format!("{pos}\t{neg}\n")).unwrap();

    ok(
        dir,
        &[
            "eval-sota",
            "--model",
            model,
            "--holdout",
            "syn/holdout.toml",
            "--pairs",
            "pairs.tsv",
            "--eval-slice",
            "2",
        ],
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("eval_sota.json")).unwrap()).unwrap();
    assert_eq!(report["slice"], "slice2");
    assert!(report["n"].as_u64().unwrap() > 0);
    assert!(run.join("eval_sota_words.tsv").exists());

    ok(
        dir,
        &[
            "trajectory",
            "--model",
            model,
            "--words",
            &format!("{pos},nonexistentword"),
        ],
    );
    let traj = fs::read_to_string(run.join(format!("trajectory_{pos}.tsv"))).unwrap();
    let labels: Vec<&str> = traj
        .lines()
        .skip(1)
        .map(|l| l.split('\t').next().unwrap())
        .collect();
    assert_eq!(labels, ["slice0", "slice1", "slice2"]);

    // a missing model file is an input error
    let out = anchorvec(dir, &["trajectory", "--model", "nope.txt", "--words", "x"]);
    assert_eq!(out.status.code(), Some(2));
}
