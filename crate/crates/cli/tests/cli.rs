use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/bilingual").join(name)
}

fn polyalign(args: &[&str], extra: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_polyalign"));
    cmd.args(args).env("RUST_LOG", "error").env_remove("POLYALIGN_EMBED_ENDPOINT");
    for (flag, path) in extra {
        cmd.arg(flag).arg(path);
    }
    cmd.output().unwrap()
}

#[test]
fn fixture_run_with_gold_writes_alignment_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("align.rdf");
    let (en, de, gold) = (fixture("en.ttl"), fixture("de.ttl"), fixture("gold.rdf"));
    let paths = [("--out", out.as_path()), ("--source", &en), ("--target", &de), ("--gold", &gold)];
    let o = polyalign(&["--src-lang", "en", "--tgt-lang", "de"], &paths);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&out).unwrap().matches("<Cell>").count(), 6);
    let metrics = fs::read_to_string(dir.path().join("align.metrics.jsonl")).unwrap();
    let row: serde_json::Value = serde_json::from_str(metrics.lines().next().unwrap()).unwrap();
    assert_eq!((row["precision"].as_f64(), row["recall"].as_f64()), (Some(1.0), Some(1.0)));
}

#[test]
fn ablation_emits_one_row_per_arm() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("align.rdf");
    let (en, de, gold) = (fixture("en.ttl"), fixture("de.ttl"), fixture("gold.tsv"));
    let paths = [("--out", out.as_path()), ("--source", &en), ("--target", &de), ("--gold", &gold)];
    let o = polyalign(&["--src-lang", "en", "--tgt-lang", "de", "--ablation", "full,no_verbalization"], &paths);
    assert!(o.status.success());
    let metrics = fs::read_to_string(dir.path().join("align.metrics.jsonl")).unwrap();
    let arms: Vec<String> = metrics
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["arm"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(arms, ["full", "no_verbalization"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("no_verbalization"));
}

#[test]
fn missing_source_is_a_config_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("align.rdf");
    let (missing, de) = (dir.path().join("nope.ttl"), fixture("de.ttl"));
    let o = polyalign(&[], &[("--source", &missing), ("--target", &de), ("--out", &out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ttl");
    fs::write(&bad, "@prefix : <http://e/> .\n:a :b [ :c :d ] .\n").unwrap();
    let out = dir.path().join("align.rdf");
    let o = polyalign(&[], &[("--source", &bad), ("--target", &fixture("de.ttl")), ("--out", &out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2:"), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());
}

#[test]
fn unreachable_service_is_a_provider_error() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("align.rdf");
    let endpoint = format!("http://127.0.0.1:{port}");
    let o = polyalign(
        &["--provider", "remote", "--endpoint", &endpoint],
        &[("--source", &fixture("en.ttl")), ("--target", &fixture("de.ttl")), ("--out", &out)],
    );
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());
}

#[test]
fn dry_run_validates_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("align.rdf");
    let o = polyalign(&["--dry-run"], &[("--source", &fixture("en.ttl")), ("--target", &fixture("de.ttl")), ("--out", &out)]);
    assert!(o.status.success());
    assert!(!out.exists());
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "source = {:?}\ntarget = {:?}\nsource_languages = [\"en\"]\ntarget_languages = [\"de\"]\nout = \"from-file.rdf\"\n[matcher]\ntheta = 0.99\n",
            fixture("en.ttl"),
            fixture("de.ttl")
        ),
    )
    .unwrap();
    let o = polyalign(&[], &[("--config", &cfg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let from_file = fs::read_to_string(dir.path().join("from-file.rdf")).unwrap();
    assert_eq!(from_file.matches("<Cell>").count(), 2);

    let o = polyalign(&["--theta", "0.5"], &[("--config", &cfg)]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(dir.path().join("from-file.rdf")).unwrap().matches("<Cell>").count(), 6);

    fs::write(&cfg, "tresh = 1\n").unwrap();
    assert_eq!(polyalign(&[], &[("--config", &cfg)]).status.code(), Some(2));
}
