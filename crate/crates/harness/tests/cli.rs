use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pseudolabel"))
}

#[test]
fn stage_commands_chain_together() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("spec.json"),
        r#"{"labeled_per_domain": 120, "unlabeled_total": 240, "test_per_domain": 45, "seed": 3}"#,
    )
    .unwrap();
    fs::write(
        d.join("settings.json"),
        r#"{"model": {"embed_dim": 8, "lstm_hidden_per_dir": 8, "max_len": 16},
            "teacher": {"max_epochs": 2, "patience": 1, "learning_rate": 0.003},
            "student": {"max_epochs": 1, "patience": 1}}"#,
    )
    .unwrap();
    let ok = |args: &[&str]| {
        let out = bin().args(args).current_dir(d).env("RUST_LOG", "warn").output().unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    ok(&["synth-data", "--spec", "spec.json", "--out", "data"]);
    ok(&[
        "train-teacher", "--train", "data/domain_0/labeled.jsonl", "--unlabeled", "data/unlabeled.jsonl",
        "--config", "settings.json", "--out", "teacher.model", "--seed", "1", "--trace-out", "teacher.trace",
    ]);
    assert!(fs::read_to_string(d.join("teacher.trace")).unwrap().contains("\"phase\":\"7:all\""));
    ok(&["pseudolabel", "--model", "teacher.model", "--input", "data/unlabeled.jsonl", "--out", "pseudo.jsonl"]);
    assert_eq!(fs::read_to_string(d.join("pseudo.jsonl")).unwrap().lines().count(), 240);
    ok(&[
        "pseudolabel", "--model", "teacher.model", "--input", "data/unlabeled.jsonl", "--out", "strict.jsonl",
        "--threshold", "0.99",
    ]);
    assert!(fs::read_to_string(d.join("strict.jsonl")).unwrap().lines().count() < 240);
    ok(&[
        "train-student", "--mode", "noisy", "--teacher", "teacher.model", "--pseudo", "pseudo.jsonl",
        "--train", "data/domain_0/labeled.jsonl", "--config", "settings.json", "--out", "noisy.model",
    ]);
    let table = ok(&[
        "evaluate", "--model", "Teacher=teacher.model", "--model", "noisy.model", "--data",
        "D1=data/domain_1/test.jsonl", "--json-out", "eval.json",
    ]);
    assert!(table.starts_with("| **Dataset Name** | **Accuracy of Teacher** | **Accuracy of noisy** |"), "{table}");
    assert!(fs::read_to_string(d.join("eval.json")).unwrap().contains("\"D1\""));
}

#[test]
fn errors_exit_nonzero_with_one_line() {
    let out = bin()
        .args(["train-student", "--mode", "noisy", "--teacher", "nope.model", "--pseudo", "p", "--train", "t", "--out", "o"])
        .env("RUST_LOG", "off")
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with("error: "), "{err}");

    let out = bin().args(["train-student", "--mode", "sideways"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn serve_answers_over_tcp() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("spec.json"), r#"{"labeled_per_domain": 60, "unlabeled_total": 30, "test_per_domain": 3}"#).unwrap();
    fs::write(d.join("s.json"), r#"{"model": {"embed_dim": 4, "lstm_hidden_per_dir": 4, "max_len": 8}, "teacher": {"max_epochs": 1}}"#).unwrap();
    for args in [
        &["synth-data", "--spec", "spec.json", "--out", "data"][..],
        &["train-teacher", "--train", "data/domain_0/labeled.jsonl", "--config", "s.json", "--out", "m.model"],
    ] {
        assert!(bin().args(args).current_dir(d).env("RUST_LOG", "off").status().unwrap().success());
    }
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let addr = format!("127.0.0.1:{port}");
    let mut child = bin()
        .args(["serve", "--model", "m.model", "--addr", &addr])
        .current_dir(d)
        .env("RUST_LOG", "off")
        .stdout(Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);
    let mut stream = loop {
        match TcpStream::connect(&addr) {
            Ok(s) => break s,
            Err(_) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(50)),
            Err(e) => panic!("server did not start: {e}"),
        }
    };
    let body = r#"{"text": "hello there"}"#;
    write!(
        stream,
        "POST /sentiment HTTP/1.1\r\nHost: x\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut reader = BufReader::new(stream);
    let mut status = String::new();
    reader.read_line(&mut status).unwrap();
    let mut rest = String::new();
    reader.read_to_string(&mut rest).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(status.contains("200"), "{status}");
    let json: serde_json::Value = serde_json::from_str(rest.split("\r\n\r\n").nth(1).unwrap()).unwrap();
    let sum: f64 = ["negative", "neutral", "positive"].iter().map(|k| json["probabilities"][k].as_f64().unwrap()).sum();
    assert!((sum - 1.0).abs() < 1e-6);
    assert!(json["label"].is_string());
}
