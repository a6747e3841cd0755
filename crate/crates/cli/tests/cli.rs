use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn drawdash(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drawdash"))
        .args(args)
        .env_remove("DRAWDASH_MODEL_URL")
        .output()
        .unwrap()
}

fn fixture(case: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join(format!("../../fixtures/{case}.trace"))
        .to_string_lossy()
        .into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("drawdash-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn bad_flags_exit_2() {
    assert_eq!(drawdash(&["replay"]).status.code(), Some(2));
    assert_eq!(drawdash(&["replay", "--trace", "x", "--provider", "oracle"]).status.code(), Some(2));
}

#[test]
fn missing_or_corrupt_trace_exits_4() {
    assert_eq!(drawdash(&["replay", "--trace", "/nonexistent.trace"]).status.code(), Some(4));
    let bad = scratch("bad.trace");
    std::fs::write(&bad, "{\"t_ms\":0,\"kind\":\"canvas_edit\"}\n").unwrap();
    assert_eq!(drawdash(&["replay", "--trace", bad.to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn remote_without_url_exits_5() {
    let out = drawdash(&["replay", "--trace", &fixture("case1"), "--provider", "remote"]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn taken_port_exits_3() {
    let held = TcpListener::bind("0.0.0.0:0").unwrap();
    let port = held.local_addr().unwrap().port().to_string();
    assert_eq!(drawdash(&["serve", "--port", &port]).status.code(), Some(3));
}

#[test]
fn without_accepting_nothing_is_added() {
    let out = drawdash(&["replay", "--trace", &fixture("case1")]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "proposals=1 accepted=0 rejected=0 elements=1");
}

#[test]
fn journal_verifies_and_exports() {
    let journal = scratch("case2.ndjson");
    let scene = scratch("case2.json");
    let svg = scratch("case2.svg");
    let live = drawdash(&[
        "replay",
        "--trace",
        &fixture("case2"),
        "--auto-accept",
        "--journal-out",
        journal.to_str().unwrap(),
        "--out",
        scene.to_str().unwrap(),
    ]);
    assert!(live.status.success());
    let verified = drawdash(&["verify", "--journal", journal.to_str().unwrap(), "--svg", svg.to_str().unwrap()]);
    assert!(verified.status.success(), "{}", String::from_utf8_lossy(&verified.stderr));
    assert_eq!(verified.stdout, live.stdout);
    let exported = drawdash(&["export-svg", "--scene", scene.to_str().unwrap()]);
    assert_eq!(exported.stdout, std::fs::read(&svg).unwrap());

    let mut text = std::fs::read_to_string(&journal).unwrap();
    text = text.replacen("\"seq\":1,", "\"seq\":7,", 1);
    std::fs::write(&journal, text).unwrap();
    assert_eq!(drawdash(&["verify", "--journal", journal.to_str().unwrap()]).status.code(), Some(4));
}
