//! The `claimpipe` binary end to end with the scripted backend.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use claimpipe::eval::EvalReport;
use claimpipe::VerificationReport;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_claimpipe"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn scripted(script: &str) -> Vec<String> {
    vec![
        "--backend".into(),
        "scripted".into(),
        "--script".into(),
        s(&fixture(script)).into(),
    ]
}

fn run_owned(args: Vec<String>) -> Output {
    run(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn verify_prints_report() {
    let mut args = vec![
        "verify".to_owned(),
        "--claim".into(),
        claimpipe::fixtures::SPAM_CLAIM.into(),
        "--evidence".into(),
        s(&fixture("spam_evidence.json")).into(),
    ];
    args.extend(scripted("six_claims.script.jsonl"));
    let out = run_owned(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: VerificationReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.final_verdict, claimpipe::Verdict::False);
    assert_eq!(report.subclaims.len(), 2);
}

#[test]
fn verify_exit_codes() {
    let mut args: Vec<String> = [
        "verify",
        "--claim",
        "c",
        "--evidence",
        "/no/such/evidence.json",
    ]
    .map(String::from)
    .into();
    args.extend(scripted("six_claims.script.jsonl"));
    let out = run_owned(args);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/evidence.json"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "max_retries = 0\n").unwrap();
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let endpoint = format!("http://127.0.0.1:{port}/v1/chat/completions");
    let out = run(&[
        "verify",
        "--claim",
        "Some claim.",
        "--evidence",
        s(&fixture("spam_evidence.json")),
        "--endpoint",
        &endpoint,
        "--model",
        "m",
        "--no-cache",
        "--config",
        s(&cfg),
    ]);
    assert_eq!(
        out.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let out = run(&[
        "verify",
        "--claim",
        "c",
        "--evidence",
        s(&fixture("spam_evidence.json")),
        "--backend",
        "scripted",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_hover_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut bodies = Vec::new();
    for i in 0..2 {
        let out_dir = dir.path().join(format!("run{i}"));
        let mut args: Vec<String> = ["eval", "--dataset", "hover", "--hops", "2", "--data-path"]
            .map(String::from)
            .into();
        args.push(s(&fixture("hover_sample.json")).into());
        args.extend(scripted("hover2.script.jsonl"));
        args.extend(["--out".into(), s(&out_dir).into()]);
        let out = run_owned(args);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let report: EvalReport =
            serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
                .unwrap();
        assert_eq!(report.claims, 4);
        assert!(report.config.with_claim_context);
        assert!((report.macro_f1 - 220.0 / 3.0).abs() < 1e-9);
        assert_eq!(
            std::fs::read_dir(out_dir.join("traces")).unwrap().count(),
            4
        );
        assert!(out_dir.join("table.txt").exists());
        let settings = report.settings.clone().unwrap();
        assert_eq!(settings["dataset"]["hops"], 2);
        assert_eq!(settings["temperature"], 0.05);
        bodies.push(report.body_json());
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn eval_records_overrides_and_feverous_context() {
    let mut args: Vec<String> = [
        "eval",
        "--dataset",
        "feverous",
        "--json",
        "--t1",
        "70",
        "--t2",
        "70",
        "--data-path",
    ]
    .map(String::from)
    .into();
    args.push(s(&fixture("feverous_sample.jsonl")).into());
    args.extend(scripted("six_claims.script.jsonl"));
    let out = run_owned(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: EvalReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!((report.config.t1, report.config.t2), (70.0, 70.0));
    assert!(!report.config.with_claim_context);
    assert_eq!(report.claims, 2);
}

#[test]
fn ablate_tables_and_errors() {
    let base = |variants: &str| {
        let mut args: Vec<String> = vec!["ablate".into(), "--variants".into(), variants.into()];
        args.extend(["--dataset", "generic", "--data-path"].map(String::from));
        args.push(s(&fixture("six_claims.jsonl")).into());
        args.extend(scripted("six_claims.script.jsonl"));
        run_owned(args)
    };
    let out = base("none,no-cd,no-ea");
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<_> = table
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().next().unwrap())
        .collect();
    assert_eq!(rows, ["none", "no-cd", "no-ea"]);

    let out = base("no-keyword,no-selection,no-raw");
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table.lines().count(), 4);

    let out = base("with-claim,without-claim");
    assert_eq!(out.status.code(), Some(0));

    assert_eq!(base("").status.code(), Some(2));
    assert_eq!(base("none,w/o-everything").status.code(), Some(2));
}

#[test]
fn help_lists_documented_flags() {
    let out = run(&["eval", "--help"]);
    let help = String::from_utf8(out.stdout).unwrap();
    for flag in [
        "--dataset",
        "--data-path",
        "--hops",
        "--backend",
        "--endpoint",
        "--model",
        "--abstraction-model",
        "--api-key-env",
        "--script",
        "--t1",
        "--t2",
        "--min-keywords",
        "--with-claim-context",
        "--workers",
        "--cache-dir",
        "--prompts-dir",
        "--out",
        "--temperature",
        "--max-tokens",
        "--short-circuit",
        "--config",
    ] {
        assert!(help.contains(flag), "eval --help lacks {flag}");
    }
    let help = String::from_utf8(run(&["ablate", "--help"]).stdout).unwrap();
    assert!(help.contains("--variants"));
}

#[test]
fn cache_stats_and_clear() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let mut args: Vec<String> = ["eval", "--dataset", "generic", "--data-path"]
        .map(String::from)
        .into();
    args.push(s(&fixture("six_claims.jsonl")).into());
    args.extend(scripted("six_claims.script.jsonl"));
    args.extend(["--cache-dir".into(), s(&cache).into()]);
    assert_eq!(run_owned(args).status.code(), Some(0));

    let stats =
        String::from_utf8(run(&["cache", "stats", "--cache-dir", s(&cache)]).stdout).unwrap();
    assert!(!stats.contains(" 0 entries"), "{stats}");
    let cleared = run(&["cache", "clear", "--cache-dir", s(&cache)]);
    assert_eq!(cleared.status.code(), Some(0));
    let stats =
        String::from_utf8(run(&["cache", "stats", "--cache-dir", s(&cache)]).stdout).unwrap();
    assert!(stats.contains(" 0 entries"), "{stats}");
}
