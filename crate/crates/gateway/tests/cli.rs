use std::io::Write;
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_taskbot"))
}

fn run_ok(args: &[&str]) -> String {
    let out = bin().args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn chat_stop_says_goodbye() {
    let mut child = bin().arg("chat").stdin(Stdio::piped()).stdout(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(b"how to change a tire\nstop\nnext\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3, "{text}");
    assert!(lines[2].contains("Goodbye"), "{text}");
}

#[test]
fn corpus_gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        run_ok(&["corpus-gen", "--n", "10", "--seed", "7", "--out", d.to_str().unwrap()]);
    }
    let (fa, fb) = (read_dir_sorted(&a), read_dir_sorted(&b));
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["pairs.jsonl", "prompts.txt", "test.jsonl", "train.jsonl", "valid.jsonl"]);
    assert_eq!(fa, fb);
    let train = std::fs::read_to_string(a.join("train.jsonl")).unwrap();
    assert_eq!(train.lines().count(), 8);
}

#[test]
fn corpus_gen_options() {
    let dir = tempfile::tempdir().unwrap();
    let boosts = dir.path().join("boost.json");
    std::fs::write(&boosts, r#"[{"from": "NEXT_STEP", "to": "QUESTION", "factor": 3.0}]"#).unwrap();
    let out = dir.path().join("c");
    let args = [
        "corpus-gen",
        "--n",
        "20",
        "--seed",
        "3",
        "--tone",
        "very_polite",
        "--format",
        "turn_tagged",
        "--split",
        "0.5,0.25,0.25",
        "--policy-overrides",
        boosts.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    let report = run_ok(&args);
    assert!(report.contains("(10/5/5)"), "{report}");
    let train = std::fs::read_to_string(out.join("train.jsonl")).unwrap();
    assert!(train.lines().all(|l| l.contains(r#""tone":"VERY_POLITE""#)));
    let bad = bin().args(["corpus-gen", "--split", "0.5,0.5"]).output().unwrap();
    assert!(!bad.status.success());
}

#[test]
fn simulate_replay_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let report = run_ok(&["simulate", "--seeds", "0..3", "--max-turns", "20", "--out", out]);
    assert_eq!(report.lines().count(), 3);
    let t = dir.path().join("sim-1.json");
    let diff: serde_json::Value = serde_json::from_str(&run_ok(&["replay", "--in", t.to_str().unwrap()])).unwrap();
    assert_eq!(diff["diffs"], serde_json::json!([]));

    let model = dir.path().join("model.json");
    let rated: serde_json::Value = serde_json::from_str(&run_ok(&[
        "rate",
        "--transcript",
        t.to_str().unwrap(),
        "--save-model",
        model.to_str().unwrap(),
    ]))
    .unwrap();
    let score = rated["prediction"]["score"].as_f64().unwrap();
    assert!((1.0..=5.0).contains(&score));
    let again: serde_json::Value = serde_json::from_str(&run_ok(&[
        "rate",
        "--transcript",
        t.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
    ]))
    .unwrap();
    assert_eq!(again, rated);
}

#[test]
fn replay_divergence_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["simulate", "--seeds", "1..2", "--out", dir.path().to_str().unwrap()]);
    let path = dir.path().join("sim-1.json");
    let mut t: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    t["turns"][0]["state"] = "TASK_COMPLETED".into();
    std::fs::write(&path, t.to_string()).unwrap();
    let out = bin().args(["replay", "--in", path.to_str().unwrap()]).output().unwrap();
    assert!(!out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["first_divergence"], 0);
}

#[test]
fn video_commands() {
    let frames = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/assets/video_frames.jsonl");
    let listing = run_ok(&["video-index", "--in", frames]);
    assert!(listing.contains("vid-apple-crumble: 7 frames"), "{listing}");
    assert!(listing.ends_with("indexed 6 videos\n"));
    let hit: serde_json::Value = serde_json::from_str(&run_ok(&[
        "video-query",
        "--video-id",
        "vid-apple-crumble",
        "--q",
        "when did they preheat the oven",
    ]))
    .unwrap();
    assert_eq!(hit["timestamp_s"], 0.0);
    let missing = bin().args(["video-query", "--video-id", "nope", "--q", "x"]).output().unwrap();
    assert!(!missing.status.success());
}

#[test]
fn serve_on_taken_port_fails() {
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let out = bin().args(["serve", "--port", &port]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("binding"));
}

#[test]
fn usage_errors() {
    assert!(!bin().output().unwrap().status.success());
    assert!(!bin().args(["simulate", "--seeds", "5..5"]).output().unwrap().status.success());
    assert!(!bin().args(["rate", "--transcript", "/nonexistent.json"]).output().unwrap().status.success());
}
