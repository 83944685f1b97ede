use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use moirebench_core::ImageU8;
use serde_json::{json, Value};

const BIN: &str = env!("CARGO_BIN_EXE_moirebench");

fn desk_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.toml")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("MOIREBENCH_JOBS").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Desk {
    _tmp: tempfile::TempDir,
    src: PathBuf,
    ds: PathBuf,
}

/// Sample sources plus one desk build, shared by the tests that only read it.
fn desk() -> &'static Desk {
    static DESK: OnceLock<Desk> = OnceLock::new();
    DESK.get_or_init(|| {
        let tmp = tempfile::tempdir().unwrap();
        let src = tmp.path().join("src");
        let ds = tmp.path().join("ds");
        let o = run(&["samples", "--out", p(&src), "--per-class", "7", "--size", "96"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let o = run(&["generate", "--config", p(&desk_config()), "--source", p(&src), "--out", p(&ds), "--seed", "5"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        Desk { _tmp: tmp, src, ds }
    })
}

fn write_png(path: &Path, w: usize, h: usize, channels: usize, value: u8) {
    let img = ImageU8::new(w, h, channels, vec![value; w * h * channels]).unwrap();
    moirebench_core::io::write_png(path, &img).unwrap();
}

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn help_documents_every_subcommand() {
    for sub in [
        vec!["generate"],
        vec!["evaluate"],
        vec!["leaderboard"],
        vec!["classify"],
        vec!["verify"],
        vec!["samples"],
        vec!["mos", "create"],
        vec!["mos", "serve"],
        vec!["mos", "export"],
    ] {
        let mut args = sub.clone();
        args.push("--help");
        let o = run(&args);
        assert_eq!(code(&o), 0, "{sub:?}");
        assert!(stdout(&o).contains("Usage:"), "{sub:?}");
    }
    let o = run(&["generate", "--help"]);
    for flag in ["--config", "--source", "--out", "--seed", "--jobs", "MOIREBENCH_JOBS"] {
        assert!(stdout(&o).contains(flag), "generate --help lacks {flag}");
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["bogus"])), 1);
    assert_eq!(code(&run(&["classify", "--image", "a.png", "--frobnicate"])), 1);
    assert_eq!(code(&run(&["classify", "--image", "a.png", "--pattern", "b.png"])), 1);
    assert_eq!(code(&run(&["evaluate", "--results", "r", "--gt", "g", "--manifest", "m", "--format", "xml"])), 1);
}

#[test]
fn generate_writes_desk_dataset_and_verifies() {
    let d = desk();
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(d.ds.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["entries"].as_array().unwrap().len(), 18);
    for split in ["train", "val", "test"] {
        for kind in ["clean", "moire", "pattern"] {
            assert!(d.ds.join(split).join(kind).is_dir());
        }
    }
    let pngs = tree(&d.ds).iter().filter(|(n, _)| n.ends_with(".png")).count();
    assert_eq!(pngs, 54);
    let o = run(&["verify", "--dataset", p(&d.ds), "--regenerate", "every:6"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("0 violation(s)"));
}

#[test]
fn generate_is_byte_identical_per_seed() {
    let d = desk();
    let tmp = tempfile::tempdir().unwrap();
    let again = tmp.path().join("ds");
    let o = Command::new(BIN)
        .args(["generate", "--config", p(&desk_config()), "--source", p(&d.src), "--out", p(&again), "--seed", "5"])
        .env("MOIREBENCH_JOBS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(tree(&d.ds) == tree(&again));
}

#[test]
fn generate_missing_source_names_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("no-such-sources");
    let o = run(&["generate", "--source", p(&missing), "--out", p(&tmp.path().join("o")), "--seed", "1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no-such-sources"));
}

#[test]
fn generate_rejects_unknown_config_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    std::fs::write(&cfg, "[pipeline]\nwarp_mode = \"fast\"\n").unwrap();
    let o = run(&["generate", "--config", p(&cfg), "--source", ".", "--out", p(&tmp.path().join("o")), "--seed", "1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("warp_mode"));
}

#[test]
fn classify_labels() {
    let tmp = tempfile::tempdir().unwrap();
    let white = tmp.path().join("white.png");
    let gray = tmp.path().join("gray.png");
    let flat = tmp.path().join("flat.png");
    write_png(&white, 32, 32, 3, 255);
    write_png(&gray, 32, 32, 3, 128);
    write_png(&flat, 32, 32, 1, 90);
    let o = run(&["classify", "--image", p(&white)]);
    assert_eq!((code(&o), stdout(&o).trim()), (0, "TextOnly"));
    let o = run(&["classify", "--image", p(&gray)]);
    assert_eq!((code(&o), stdout(&o).trim()), (0, "FigureOnly"));
    let o = run(&["classify", "--pattern", p(&flat)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("degenerate"));
    let o = run(&["classify", "--pattern", p(&desk().ds.join("test/pattern/test_00000.png"))]);
    assert_eq!(code(&o), 0);
    assert!(["Low", "Mid", "High"].contains(&stdout(&o).trim()));
}

#[test]
fn evaluate_ground_truth_copies() {
    let d = desk();
    let gt = d.ds.join("test/clean");
    let manifest = d.ds.join("manifest.json");
    let o = run(&["evaluate", "--results", p(&gt), "--gt", p(&gt), "--manifest", p(&manifest)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = stdout(&o);
    for class in ["T ", "F ", "M ", "All"] {
        let row = table.lines().find(|l| l.starts_with(class)).unwrap_or_else(|| panic!("no {class} row"));
        assert!(row.contains("100.00") && row.contains("1.0000"), "{row}");
    }
    let o = run(&["evaluate", "--results", p(&gt), "--gt", p(&gt), "--manifest", p(&manifest), "--format", "machine"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["overall"]["psnr"], 100.0);
    assert_eq!(v["overall"]["ssim"], 1.0);
}

#[test]
fn evaluate_lists_missing_results() {
    let d = desk();
    let tmp = tempfile::tempdir().unwrap();
    let results = tmp.path().join("r");
    std::fs::create_dir(&results).unwrap();
    for id in ["test_00000", "test_00002"] {
        std::fs::copy(d.ds.join(format!("test/clean/{id}.png")), results.join(format!("{id}.png"))).unwrap();
    }
    let o = run(&[
        "evaluate",
        "--results",
        p(&results),
        "--gt",
        p(&d.ds.join("test/clean")),
        "--manifest",
        p(&d.ds.join("manifest.json")),
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("test_00001"));
}

#[test]
fn verify_reports_a_deleted_file() {
    let d = desk();
    let tmp = tempfile::tempdir().unwrap();
    let copy = tmp.path().join("ds");
    for (rel, bytes) in tree(&d.ds) {
        let path = copy.join(rel);
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, bytes).unwrap();
    }
    std::fs::remove_file(copy.join("val/moire/val_00001.png")).unwrap();
    let o = run(&["verify", "--dataset", p(&copy), "--format", "machine"]);
    assert_eq!(code(&o), 2);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let violations = v["violations"].as_array().unwrap();
    assert_eq!(violations.len(), 1);
    assert_eq!(violations[0]["kind"], "missing_file");
}

/// Two judges, two images, one method, nothing flipped.
fn hand_built_study(root: &Path) -> PathBuf {
    let gt = root.join("gt");
    let m = root.join("m");
    for dir in [&gt, &m] {
        std::fs::create_dir_all(dir).unwrap();
        for id in ["test_00000", "test_00001"] {
            write_png(&dir.join(format!("{id}.png")), 8, 8, 3, 60);
        }
    }
    let queries = |first: &str, second: &str| {
        json!([
            {"method": 0, "image_id": first, "flipped": false},
            {"method": 0, "image_id": second, "flipped": false},
        ])
    };
    let study = json!({
        "version": "moirebench/1",
        "seed": 1,
        "methods": [{"name": "solo", "dir": p(&m)}],
        "gt_dir": p(&gt),
        "image_ids": ["test_00000", "test_00001"],
        "judges": ["a", "b"],
        "queries": {"a": queries("test_00000", "test_00001"), "b": queries("test_00001", "test_00000")},
    });
    let path = root.join("study.json");
    std::fs::write(&path, serde_json::to_string_pretty(&study).unwrap()).unwrap();
    let mut log = String::new();
    for (judge, idx, score) in [("a", 0, 3), ("a", 1, 4), ("b", 0, 1), ("b", 1, 2)] {
        log.push_str(&format!(
            "{}\n",
            json!({"judge": judge, "query_index": idx, "score": score, "timestamp": 0})
        ));
    }
    std::fs::write(root.join("study.json.ratings.jsonl"), log).unwrap();
    path
}

#[test]
fn mos_export_sums_hand_built_study() {
    let tmp = tempfile::tempdir().unwrap();
    let study = hand_built_study(tmp.path());
    let o = run(&["mos", "export", "--study", p(&study), "--format", "machine"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["ranking"][0]["method"], "solo");
    assert_eq!(v["ranking"][0]["mos"], 10);
    assert_eq!(v["completeness"], 1.0);
    let out = tmp.path().join("export.json");
    assert_eq!(code(&run(&["mos", "export", "--study", p(&study), "--out", p(&out)])), 0);
    let first = std::fs::read(&out).unwrap();
    assert_eq!(code(&run(&["mos", "export", "--study", p(&study), "--out", p(&out)])), 0);
    assert_eq!(first, std::fs::read(&out).unwrap());
}

#[test]
fn mos_create_builds_blinded_queries() {
    let d = desk();
    let tmp = tempfile::tempdir().unwrap();
    let study = tmp.path().join("study.json");
    let gt = d.ds.join("test/clean");
    let moire = d.ds.join("test/moire");
    let o = run(&[
        "mos",
        "create",
        "--manifest",
        p(&d.ds.join("manifest.json")),
        "--gt",
        p(&gt),
        "--method",
        &format!("identity={}", p(&gt)),
        "--method",
        &format!("raw={}", p(&moire)),
        "--count",
        "3",
        "--judge-count",
        "4",
        "--seed",
        "11",
        "--out",
        p(&study),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&study).unwrap()).unwrap();
    assert_eq!(v["judges"].as_array().unwrap().len(), 4);
    for qs in v["queries"].as_object().unwrap().values() {
        assert_eq!(qs.as_array().unwrap().len(), 6);
    }
    let o = run(&["mos", "create", "--manifest", p(&d.ds.join("manifest.json")), "--gt", p(&gt),
        "--method", "x=/nonexistent", "--images", "test_00000", "--seed", "1", "--out", p(&study)]);
    assert_eq!(code(&o), 2);
}

fn http_get(port: u16, path: &str) -> Option<String> {
    let mut s = TcpStream::connect(("127.0.0.1", port)).ok()?;
    s.set_read_timeout(Some(Duration::from_secs(5))).ok()?;
    write!(s, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").ok()?;
    let mut body = String::new();
    s.read_to_string(&mut body).ok()?;
    Some(body)
}

#[test]
fn mos_serve_answers_study_metadata() {
    let tmp = tempfile::tempdir().unwrap();
    let study = hand_built_study(tmp.path());
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut child = Command::new(BIN)
        .args(["mos", "serve", "--study", p(&study), "--port", &port.to_string()])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);
    let response = loop {
        if let Some(r) = http_get(port, "/api/study") {
            break r;
        }
        assert!(Instant::now() < deadline, "server did not come up");
        std::thread::sleep(Duration::from_millis(100));
    };
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    let body = &response[response.find("\r\n\r\n").unwrap() + 4..];
    let v: Value = serde_json::from_str(body).unwrap();
    assert_eq!(v["total_queries"], 4);
    assert!(!body.contains("flipped") && !body.contains("solo") && !body.contains("gt_dir"));
}

#[test]
fn mos_serve_refuses_missing_images() {
    let tmp = tempfile::tempdir().unwrap();
    let study = hand_built_study(tmp.path());
    std::fs::remove_file(tmp.path().join("m/test_00001.png")).unwrap();
    let o = run(&["mos", "serve", "--study", p(&study), "--port", "0"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("test_00001"));
}
