use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use bondchain::cli::run;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

fn fixture(rel: &str) -> String {
    format!("{FIXTURES}/{rel}")
}

fn bc(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("bondchain").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small training file: the first 20 documents of the synthetic corpus.
fn small_corpus(dir: &Path) -> PathBuf {
    let text = fs::read_to_string(fixture("synthetic.conll")).unwrap();
    let cut = text.match_indices("-DOCSTART-").nth(20).unwrap().0;
    let path = dir.join("small.conll");
    fs::write(&path, &text[..cut]).unwrap();
    path
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_bondchain");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(status(&["stats", "--input", &fixture("chains/docs.conll")]), Some(0));
    assert_eq!(status(&["stats", "--bogus"]), Some(1));
    assert_eq!(status(&["tag", "--input", &fixture("chains/docs.conll")]), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conll");
    fs::write(&bad, "phenol\tB-CMP-XX\n").unwrap();
    assert_eq!(status(&["stats", "--input", path_str(&bad)]), Some(2));
}

#[test]
fn chains_subcommand_writes_golden_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("chains.jsonl");
    let (code, _, err) = bc(&[
        "chains",
        "--text",
        &fixture("chains/docs.conll"),
        "--tables",
        &fixture("chains/chdoc2.csv"),
        "--lexicon",
        &fixture("lexicon"),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("incomplete: chdoc3"));
    assert_eq!(
        fs::read_to_string(out).unwrap(),
        fs::read_to_string(fixture("chains/expected_chains.jsonl")).unwrap()
    );
}

#[test]
fn mask_writes_alignment_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("masked.conll");
    let (code, _, err) = bc(&[
        "mask",
        "--input",
        &fixture("chains/docs.conll"),
        "--lexicon",
        &fixture("lexicon"),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0, "{err}");
    let masked = fs::read_to_string(&out).unwrap();
    assert!(masked.contains("$CMP$\tB-CMP-CE"));
    let align = fs::read_to_string(dir.path().join("masked.conll.align")).unwrap();
    assert!(align.lines().any(|l| l == "1\t3\t3\t4\tphenol"));
    assert!(align.lines().any(|l| l == "4\t3\t3\t5\tacetic acid"));
}

#[test]
fn tables_and_eval_subcommands() {
    let (code, out, _) = bc(&["tables", "--input", &fixture("chains/chdoc2.csv"), "--lexicon", &fixture("lexicon")]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 2);

    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("summary.txt");
    let gold = fixture("chains/docs.conll");
    let (code, report, _) = bc(&["eval", "--gold", &gold, "--pred", &gold, "--out", path_str(&summary)]);
    assert_eq!(code, 0);
    assert!(report.contains("macro F1"));
    assert!(fs::read_to_string(summary).unwrap().contains("relation.micro.f1=1.000000"));
}

#[test]
fn train_is_deterministic_and_tagging_ignores_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path());
    let lex = fixture("lexicon");
    let config = dir.path().join("run.cfg");
    fs::write(&config, "epochs = 2\nseed = 11\nlr = 0.5\n").unwrap();
    let train = |name: &str| {
        let out = dir.path().join(name);
        let (code, _, err) = bc(&[
            "train",
            "--config",
            path_str(&config),
            "--input",
            path_str(&corpus),
            "--lexicon",
            &lex,
            "--lr",
            "0.05",
            "--out",
            path_str(&out),
        ]);
        assert_eq!(code, 0, "{err}");
        out
    };
    let (a, b) = (train("a.bcn"), train("b.bcn"));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let log = fs::read_to_string(dir.path().join("a.bcn.log")).unwrap();
    assert_eq!(log.lines().count(), 2);
    // flags override the config file
    let echo = bondchain::model::load_checkpoint(&a).unwrap().config;
    assert_eq!((echo.learning_rate, echo.seed, echo.epochs), (0.05, 11, 2));

    let tag = |threads: &str| {
        let out = dir.path().join(format!("tagged{threads}.conll"));
        let (code, _, err) = bc(&[
            "tag",
            "--model",
            path_str(&a),
            "--lexicon",
            &lex,
            "--input",
            &fixture("synthetic.conll"),
            "--threads",
            threads,
            "--out",
            path_str(&out),
        ]);
        assert_eq!(code, 0, "{err}");
        fs::read_to_string(out).unwrap()
    };
    assert_eq!(tag("1"), tag("4"));
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.cfg");
    fs::write(&config, "learning_speed = 3\n").unwrap();
    let (code, _, err) = bc(&["stats", "--config", path_str(&config), "--input", &fixture("chains/docs.conll")]);
    assert_eq!(code, 1);
    assert!(err.contains("learning_speed"));
}
