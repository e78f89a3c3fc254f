use std::process::Command;
use std::sync::Arc;

use ecoq_api::http::spawn;
use ecoq_api::{Config, Service};

fn ecoq(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ecoq"))
        .args(args)
        .env_remove("ECOQ_ADDR")
        .env_remove("ECOQ_ORGANIZER_TOKEN")
        .env_remove("ECOQ_PARTICIPANT_TOKEN_SEED")
        .output()
        .unwrap()
}

fn server() -> (ecoq_api::http::Background, String) {
    let service = Service::open(Config::default()).unwrap();
    let bg = spawn(Arc::new(service), "127.0.0.1:0".parse().unwrap()).unwrap();
    let addr = bg.addr.to_string();
    (bg, addr)
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(ecoq(&[]).status.code(), Some(2));
    assert_eq!(ecoq(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(ecoq(&["simulate-bins", "--count", "x"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_1() {
    let out = ecoq(&["--addr", "127.0.0.1:1", "export", "--event", "e1", "--out", "/dev/null"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("ecoq: "));

    let (_bg, addr) = server();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("none.csv");
    let r = ecoq(&["--addr", &addr, "export", "--event", "e9", "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    assert!(!out.exists());

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"method\":\"GET\"}\n").unwrap();
    assert_eq!(ecoq(&["--addr", &addr, "seed", "--file", bad.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn seed_then_export_matches_golden() {
    let (_bg, addr) = server();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e1.csv");
    let scenario = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/test_event.jsonl");
    assert!(ecoq(&["--addr", &addr, "seed", "--file", scenario]).status.success());
    assert!(ecoq(&["--addr", &addr, "export", "--event", "e1", "--out", out.to_str().unwrap()]).status.success());
    let golden = std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/test_event.csv")).unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), golden);
}

#[test]
fn simulate_rejects_bad_params() {
    let (_bg, addr) = server();
    assert_eq!(ecoq(&["--addr", &addr, "simulate-bins", "--count", "0", "--drops", "5", "--seed", "1"]).status.code(), Some(1));
    assert_eq!(
        ecoq(&["--addr", &addr, "simulate-bins", "--count", "1", "--drops", "10001", "--seed", "1"]).status.code(),
        Some(1)
    );
}
