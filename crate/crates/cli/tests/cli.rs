use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn chainsent(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chainsent"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

/// Fixture config with the work directory moved into `dir`.
fn fixture_config(dir: &Path) -> PathBuf {
    let f = fixtures().canonicalize().unwrap();
    let text = std::fs::read_to_string(f.join("config.toml"))
        .unwrap()
        .replace("work_dir = \"out\"", &format!("work_dir = {:?}", dir.join("out")));
    let text = [
        "transactions.ndjson",
        "prices_btc.csv",
        "prices_eth.csv",
        "grid.toml",
    ]
    .iter()
    .fold(text, |t, name| {
        t.replace(&format!("\"{name}\""), &format!("{:?}", f.join(name)))
    });
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn version() {
    let dir = tempfile::tempdir().unwrap();
    let out = chainsent(&["--version"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("chainsent "));
}

#[test]
fn decode_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.ndjson"), "").unwrap();
    let out = chainsent(
        &["decode", "--in", "empty.ndjson", "--out", "texts.ndjson"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read(dir.path().join("texts.ndjson")).unwrap(), b"");
}

#[test]
fn missing_lexicon_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("texts.ndjson"), "").unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        "[lexicons]\nfinancial = \"missing.txt\"\n",
    )
    .unwrap();
    let out = chainsent(
        &[
            "clean",
            "--config",
            "c.toml",
            "--in",
            "texts.ndjson",
            "--out",
            "corpus.ndjson",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.txt"));
    assert!(!dir.path().join("corpus.ndjson").exists());
}

#[test]
fn unknown_config_key_fails() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[train]\nfolds = 5\nfoldz = 3\n").unwrap();
    let out = chainsent(&["report", "--config", "c.toml"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn full_run_then_stagewise_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture_config(dir.path());
    let cfg = cfg.to_str().unwrap();
    let out = chainsent(&["run", "--config", cfg, "--seed", "7"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let work = dir.path().join("out");
    let report = std::fs::read_to_string(work.join("report.txt")).unwrap();
    for header in [
        "Bitcoin Results",
        "Ethereum Results",
        "Random Guess",
        "Lucky Guess",
    ] {
        assert!(report.contains(header), "{header} missing:\n{report}");
    }
    assert_eq!(report.lines().filter(|l| l.contains('+')).count(), 10);
    let leftovers: Vec<_> = std::fs::read_dir(&work)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".partial"))
        .collect();
    assert!(leftovers.is_empty());

    // The same stages one by one reproduce the artifacts byte for byte.
    let first: Vec<(String, Vec<u8>)> = std::fs::read_dir(&work)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    for stage in [
        "decode",
        "clean",
        "sentiment",
        "topics",
        "dataset",
        "train",
        "report",
    ] {
        let out = chainsent(&[stage, "--config", cfg, "--seed", "7"], dir.path());
        assert!(
            out.status.success(),
            "{stage}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for (name, bytes) in first {
        assert_eq!(std::fs::read(work.join(&name)).unwrap(), bytes, "{name} changed");
    }
}

#[test]
fn explicit_paths_without_config() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures().canonicalize().unwrap();
    let tx = f.join("transactions.ndjson");
    let steps: Vec<Vec<String>> = vec![
        vec![
            "decode".into(),
            "--in".into(),
            tx.display().to_string(),
            "--out".into(),
            "t.ndjson".into(),
            "--chain".into(),
            "btc".into(),
        ],
        vec![
            "clean".into(),
            "--in".into(),
            "t.ndjson".into(),
            "--out".into(),
            "fin.ndjson".into(),
            "--financial".into(),
        ],
        vec![
            "sentiment".into(),
            "--in".into(),
            "fin.ndjson".into(),
            "--out".into(),
            "features.csv".into(),
        ],
        vec![
            "topics".into(),
            "--in".into(),
            "fin.ndjson".into(),
            "--k".into(),
            "2".into(),
            "--iters".into(),
            "50".into(),
            "--out".into(),
            "topics".into(),
        ],
        vec![
            "dataset".into(),
            "--prices-btc".into(),
            f.join("prices_btc.csv").display().to_string(),
            "--corpus".into(),
            "fin.ndjson".into(),
            "--out".into(),
            "ds.csv".into(),
            "--target".into(),
            "btc".into(),
        ],
        vec![
            "train".into(),
            "--dataset".into(),
            "ds.csv".into(),
            "--target".into(),
            "btc".into(),
            "--grid".into(),
            f.join("grid.toml").display().to_string(),
            "--out".into(),
            "reports".into(),
        ],
        vec![
            "report".into(),
            "--in".into(),
            "reports/report_btc.json".into(),
            "--out".into(),
            "table.txt".into(),
        ],
    ];
    for args in &steps {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = chainsent(&args, dir.path());
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let texts = std::fs::read_to_string(dir.path().join("t.ndjson")).unwrap();
    assert!(texts.lines().all(|l| l.contains("\"chain\":\"btc\"")));
    let header = std::fs::read_to_string(dir.path().join("features.csv")).unwrap();
    assert!(header.starts_with("date,compound,neg,neu,pos,polarity,subjectivity\n"));
    assert!(dir.path().join("topics/topics_btc.csv").exists());
    assert!(!dir.path().join("topics/topics_eth.csv").exists());
    let table = std::fs::read_to_string(dir.path().join("table.txt")).unwrap();
    assert!(table.starts_with("Bitcoin Results"));
}

#[test]
fn failed_stage_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = chainsent(&["train", "--dataset", "nope.csv", "--target", "btc"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.csv"));
}
