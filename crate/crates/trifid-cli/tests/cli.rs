//! End-to-end tests against the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_trifid"));
    // Keep host environment variables from leaking into assertions.
    cmd.env_remove("TRIFID_BACKEND").env_remove("TRIFID_CACHE_DIR");
    cmd
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../trifid/tests/fixtures")
}

fn corpus5(name: &str) -> PathBuf {
    fixtures().join("corpus5").join(name)
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON: {e}\n{}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

#[test]
fn score_identity_pair_exits_zero() {
    let out = bin()
        .args(["score"])
        .arg(corpus5("identity.orig.md"))
        .arg(corpus5("identity.trans.md"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let json = stdout_json(&out);
    assert_eq!(json["aggregate"], serde_json::json!(100.0));
    assert_eq!(json["url"]["total"], serde_json::json!(100));
}

#[test]
fn score_threshold_violation_exits_one() {
    let out = bin()
        .args(["score", "--min-url", "95"])
        .arg(corpus5("urls_nine_of_ten.orig.md"))
        .arg(corpus5("urls_nine_of_ten.trans.md"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let json = stdout_json(&out);
    assert_eq!(json["url"]["total"], serde_json::json!(93));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("below minimum"), "stderr: {stderr}");

    let ok = bin()
        .args(["score", "--min-url", "90"])
        .arg(corpus5("urls_nine_of_ten.orig.md"))
        .arg(corpus5("urls_nine_of_ten.trans.md"))
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn missing_file_exits_two() {
    let out = bin()
        .args(["score", "/nonexistent/a.md", "/nonexistent/b.md"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn inspect_output_is_byte_stable() {
    let run = || {
        bin()
            .arg("inspect")
            .arg(fixtures().join("readmes/cli-tool.md"))
            .output()
            .unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let json = stdout_json(&a);
    assert!(json["element_counts"]["headers"].as_u64().unwrap() >= 3);
    assert_eq!(json["code_blocks"].as_array().unwrap().len(), 2);

    let human = bin()
        .arg("inspect")
        .arg(fixtures().join("readmes/cli-tool.md"))
        .args(["--format", "human"])
        .output()
        .unwrap();
    assert_eq!(human.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&human.stdout).contains("code blocks: 2"));
}

#[test]
fn batch_manifest_summary_and_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let entries = tmp.path().join("entries.jsonl");
    let correlations = tmp.path().join("corr.csv");
    let out = bin()
        .arg("batch")
        .arg("--manifest")
        .arg(corpus5("manifest.csv"))
        .arg("--entries")
        .arg(&entries)
        .arg("--correlations")
        .arg(&correlations)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json = stdout_json(&out);
    assert_eq!(json["n_pairs"], serde_json::json!(5));
    assert_eq!(json["mean_url"], serde_json::json!(95.6));
    assert_eq!(json["mean_markdown"], serde_json::json!(99.43));
    assert_eq!(json["mean_code"], serde_json::json!(87.5));

    let lines: Vec<String> = std::fs::read_to_string(&entries)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(lines.len(), 5);
    for line in &lines {
        let entry: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(entry["status"], serde_json::json!("ok"));
    }

    let corr = std::fs::read_to_string(&correlations).unwrap();
    assert!(corr.starts_with("metric,spearman\n"), "{corr}");
    assert!(corr.contains("url,"));
}

#[test]
fn batch_per_entry_thresholds_exit_one() {
    let out = bin()
        .arg("batch")
        .arg("--manifest")
        .arg(corpus5("manifest.csv"))
        .args(["--min-code", "50"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("code-lost"), "stderr: {stderr}");
}

#[test]
fn batch_directory_pairing() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("guide.md"), "# Guide\n\nSee <https://x.example/a>.\n")
        .unwrap();
    std::fs::write(
        tmp.path().join("guide.es.md"),
        "# Guia\n\nMira <https://x.example/a>.\n",
    )
    .unwrap();
    let out = bin()
        .arg("batch")
        .arg("--dir")
        .arg(tmp.path())
        .args(["--lang", "es", "--format", "human"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("pairs:     1 scored"), "{stdout}");
}

#[test]
fn translate_identity_roundtrip() {
    let input = fixtures().join("readmes/autolinks.md");
    let expected = std::fs::read_to_string(&input).unwrap();

    let out = bin()
        .arg("translate")
        .arg(&input)
        .args(["--target", "de", "--backend", "identity"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout), expected);

    // Backend can come from the environment instead of a flag.
    let via_env = bin()
        .arg("translate")
        .arg(&input)
        .args(["--target", "fr"])
        .env("TRIFID_BACKEND", "identity")
        .output()
        .unwrap();
    assert_eq!(via_env.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&via_env.stdout), expected);
}

#[test]
fn translate_rejects_same_language_and_bad_backend() {
    let input = fixtures().join("readmes/minimal.md");
    let same = bin()
        .arg("translate")
        .arg(&input)
        .args(["--source", "en", "--target", "en", "--backend", "identity"])
        .output()
        .unwrap();
    assert_eq!(same.status.code(), Some(2));

    let bad = bin()
        .arg("translate")
        .arg(&input)
        .args(["--target", "de", "--backend", "carrier-pigeon"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown backend"));
}

#[test]
fn translate_writes_cache_entries() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    let input = fixtures().join("readmes/minimal.md");
    let run = || {
        bin()
            .arg("translate")
            .arg(&input)
            .args(["--target", "ja", "--backend", "identity"])
            .arg("--cache-dir")
            .arg(&cache)
            .output()
            .unwrap()
    };
    assert_eq!(run().status.code(), Some(0));
    let n = std::fs::read_dir(&cache).unwrap().count();
    assert_eq!(n, 1);
    assert_eq!(run().status.code(), Some(0));
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), 1);
}

#[test]
fn config_file_sets_thresholds_and_flags_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("trifid.toml");
    std::fs::write(&cfg, "[score]\nmin_url = 95.0\n").unwrap();

    let from_config = bin()
        .arg("--config")
        .arg(&cfg)
        .arg("score")
        .arg(corpus5("urls_nine_of_ten.orig.md"))
        .arg(corpus5("urls_nine_of_ten.trans.md"))
        .output()
        .unwrap();
    assert_eq!(from_config.status.code(), Some(1));

    let overridden = bin()
        .arg("--config")
        .arg(&cfg)
        .arg("score")
        .args(["--min-url", "90"])
        .arg(corpus5("urls_nine_of_ten.orig.md"))
        .arg(corpus5("urls_nine_of_ten.trans.md"))
        .output()
        .unwrap();
    assert_eq!(overridden.status.code(), Some(0));

    let bad_cfg = tmp.path().join("typo.toml");
    std::fs::write(&bad_cfg, "[score]\nmin_ur = 95.0\n").unwrap();
    let rejected = bin()
        .arg("--config")
        .arg(&bad_cfg)
        .arg("score")
        .arg(corpus5("identity.orig.md"))
        .arg(corpus5("identity.trans.md"))
        .output()
        .unwrap();
    assert_eq!(rejected.status.code(), Some(2));
}

#[test]
fn mine_formats() {
    let tmp = tempfile::tempdir().unwrap();
    let records = tmp.path().join("activity.jsonl");
    let lines = [
        r#"{"repo":"big/app","stars":20000,"forks":900,"kind":"pull_request","title":"Translate README to Korean","state":"merged","created_at":"2023-10-05T00:00:00Z","merged_at":"2023-10-06T00:00:00Z"}"#,
        r#"{"repo":"big/app","stars":20000,"forks":900,"kind":"pull_request","title":"translate readme (es)","state":"closed","created_at":"2023-11-01T00:00:00Z"}"#,
        r#"{"repo":"mid/tool","stars":7500,"forks":120,"kind":"issue","title":"Please translate README","state":"open","created_at":"2023-02-01T00:00:00Z"}"#,
        r#"{"repo":"tiny/lib","stars":50,"forks":2,"kind":"pull_request","title":"Translate README","state":"merged","created_at":"2023-03-01T00:00:00Z","merged_at":"2023-03-02T00:00:00Z"}"#,
    ];
    std::fs::write(&records, lines.join("\n")).unwrap();

    let json_out = bin().arg("mine").arg(&records).output().unwrap();
    assert_eq!(json_out.status.code(), Some(0), "{}", String::from_utf8_lossy(&json_out.stderr));
    let json = stdout_json(&json_out);
    assert_eq!(json["n_records"], serde_json::json!(4));
    assert_eq!(json["scale"]["large"]["prs"], serde_json::json!(2));
    assert_eq!(json["scale"]["out_of_band"]["repos"], serde_json::json!(1));
    assert_eq!(json["adoption"]["n_merged"], serde_json::json!(2));

    let csv_out = bin()
        .arg("mine")
        .arg(&records)
        .args(["--format", "csv"])
        .output()
        .unwrap();
    let csv = String::from_utf8_lossy(&csv_out.stdout);
    assert!(csv.starts_with("scale,repos,prs,issues\n"), "{csv}");
    assert!(csv.contains("month,share"));

    let filtered = bin()
        .arg("mine")
        .arg(&records)
        .arg("--filter-translations")
        .output()
        .unwrap();
    let json = stdout_json(&filtered);
    assert_eq!(json["n_records"], serde_json::json!(4));

    let garbage = tmp.path().join("bad.jsonl");
    std::fs::write(&garbage, "not json\n").unwrap();
    let bad = bin().arg("mine").arg(&garbage).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

fn sh(dir: &Path, args: &[&str], envs: &[(&str, String)]) {
    let mut cmd = Command::new(args[0]);
    cmd.args(&args[1..]).current_dir(dir);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("spawn");
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn commit_at(dir: &Path, name: &str, content: &str, unix: i64) {
    std::fs::write(dir.join(name), content).unwrap();
    sh(dir, &["git", "add", name], &[]);
    let stamp = format!("{unix} +0000");
    sh(
        dir,
        &["git", "commit", "-q", "-m", &format!("update {name}")],
        &[("GIT_AUTHOR_DATE", stamp.clone()), ("GIT_COMMITTER_DATE", stamp)],
    );
}

#[test]
fn gap_reports_drift() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    sh(dir, &["git", "init", "-q"], &[]);
    sh(dir, &["git", "config", "user.name", "t"], &[]);
    sh(dir, &["git", "config", "user.email", "t@example.com"], &[]);
    sh(dir, &["git", "config", "commit.gpgsign", "false"], &[]);
    let start = 1_690_000_000;
    commit_at(dir, "README.md", "v0", start);
    commit_at(dir, "README.de.md", "hallo", start);
    for i in 1..=3 {
        commit_at(dir, "README.md", &format!("v{i}"), start + i * 86_400);
    }

    let anchor = "2023-07-22T05:06:40+00:00";
    let survival = dir.join("survival.csv");
    let out = bin()
        .arg("gap")
        .arg(dir)
        .args(["--merge-ref", anchor, "--window-days", "30", "--summarize"])
        .arg("--survival-csv")
        .arg(&survival)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json = stdout_json(&out);
    assert_eq!(json["files"][0]["lag"], serde_json::json!(3));
    assert_eq!(json["files"][0]["lang"], serde_json::json!("de"));
    assert_eq!(json["summary"]["median"], serde_json::json!(3.0));
    let csv = std::fs::read_to_string(&survival).unwrap();
    assert!(csv.starts_with("lag,share_ge\n"));

    let jsonl = bin()
        .arg("gap")
        .arg(dir)
        .args(["--merge-ref", anchor, "--window-days", "30", "--format", "jsonl"])
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&jsonl.stdout);
    assert_eq!(text.lines().count(), 1, "{text}");

    let bad_repo = bin()
        .arg("gap")
        .arg("/nonexistent")
        .args(["--merge-ref", anchor])
        .output()
        .unwrap();
    assert_eq!(bad_repo.status.code(), Some(2));
}
