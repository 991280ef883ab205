use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn geodoc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geodoc"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn validate_exit_codes() {
    let ok = geodoc(&[
        "validate",
        fixture("four_modalities.scene.json").to_str().unwrap(),
    ]);
    assert_eq!(ok.status.code(), Some(0), "{ok:?}");
    assert!(stdout(&ok).ends_with(": ok\n"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"id": "x", "title": "t", "documents": [{"id": "a", "kind": "pdf", "source": ""}]}"#,
    )
    .unwrap();
    let out = geodoc(&["validate", "--json", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["valid"], false);
    assert_eq!(report["findings"][0]["code"], "empty_source");

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, b"{\"id\": ").unwrap();
    let out = geodoc(&["validate", "--json", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["parse_error"]["kind"], "syntax");

    let missing = geodoc(&["validate", dir.path().join("nope.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn import_legacy_reproduces_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("scene.json");
    let out = geodoc(&[
        "import-legacy",
        fixture("legacy_fig_entry.json").to_str().unwrap(),
        "-o",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    assert_eq!(
        std::fs::read(&out_path).unwrap(),
        std::fs::read(fixture("legacy_fig_entry.scene.json")).unwrap()
    );

    let renamed = geodoc(&[
        "import-legacy",
        fixture("legacy_two_episodes.json").to_str().unwrap(),
        "--id",
        "chimie",
    ]);
    assert!(renamed.status.success());
    let scene: serde_json::Value = serde_json::from_slice(&renamed.stdout).unwrap();
    assert_eq!(scene["id"], "chimie");
    assert_eq!(scene["documents"].as_array().unwrap().len(), 3);
}

#[test]
fn inspect_counts_entities() {
    let out = geodoc(&[
        "inspect",
        "--json",
        fixture("four_modalities.scene.json").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["documents"], 5);
    assert_eq!(summary["document_kinds"]["image"], 3);
    assert_eq!(summary["entities"]["slideshows"], 1);
    assert_eq!(summary["guidance"]["mode"], "conditional");

    let text = stdout(&geodoc(&[
        "inspect",
        fixture("four_modalities.scene.json").to_str().unwrap(),
    ]));
    assert!(text.contains("guidance: conditional"), "{text}");
}

#[test]
fn serve_rejects_a_bad_listen_address() {
    let out = geodoc(&[
        "serve",
        "--scene-dir",
        fixture("minimal.scene.json").to_str().unwrap(),
        "--listen",
        "not-an-address",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid listen address"));
}

fn http_get(addr: &str, path: &str) -> String {
    let mut stream = std::net::TcpStream::connect(addr).unwrap();
    write!(
        stream,
        "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n"
    )
    .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    response
}

#[cfg(unix)]
#[test]
fn serve_answers_and_stops_on_sigterm() {
    let data = tempfile::tempdir().unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_geodoc"))
        .args(["serve", "--listen", "127.0.0.1:0"])
        .env("GEODOC_SCENE_DIR", fixture("minimal.scene.json"))
        .env("GEODOC_DATA_DIR", data.path())
        .env("RUST_LOG", "warn")
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();

    let mut stderr = BufReader::new(child.stderr.take().unwrap());
    let deadline = Instant::now() + Duration::from_secs(10);
    let addr = loop {
        let mut line = String::new();
        assert!(
            stderr.read_line(&mut line).unwrap() > 0,
            "server exited early"
        );
        if let Some(addr) = line.trim().strip_prefix("listening on ") {
            break addr.to_string();
        }
        assert!(Instant::now() < deadline, "no listening line");
    };

    let reply = http_get(&addr, "/scenes/minimal");
    assert!(reply.starts_with("HTTP/1.1 200"), "{reply}");
    assert!(reply.contains("\"title\": \"Empty scene\""), "{reply}");

    let killed = Command::new("kill")
        .args(["-TERM", &child.id().to_string()])
        .status()
        .unwrap();
    assert!(killed.success());
    let status = child.wait().unwrap();
    assert!(status.success(), "{status:?}");
    assert!(data.path().join("sessions.jsonl").exists());
}
